#pragma once

// Periodic spatial grids, complex fields on them, the physically normalized
// Fourier pair, and coherent states.
//
// Conventions used everywhere in this library:
//   spatial transform   f^(xi) = int e^{-i x xi} f(x) dx
//   inversion           f(x)   = (2 pi)^{-d} int e^{+i x xi} f^(xi) dxi
// The discrete pair below matches these with Riemann quadrature weights.

#include <cmath>
#include <vector>

#include "wavepacket/common.hpp"
#include "wavepacket/fft.hpp"
#include "wavepacket/geometry.hpp"

namespace wp {

struct SpatialGrid {
  int d = 1;
  double L = 0.0;  // box is [-L, L)^d, periodic
  int N = 0;       // points per axis, power of two

  SpatialGrid() = default;
  SpatialGrid(int d_, double L_, int N_) : d(d_), L(L_), N(N_) {
    if (d < 1 || d > 2) throw ParameterError("SpatialGrid: d in {1,2}");
    if (N < 64 || (N & (N - 1)) != 0)
      throw ParameterError("SpatialGrid: N must be a power of two, >= 64");
    if (!(L > 0.0)) throw ParameterError("SpatialGrid: L must be positive");
  }

  double dx() const { return 2.0 * L / N; }
  double x(int j) const { return -L + j * dx(); }
  // Frequency of DFT index k (0-based, wrapped to [-N/2, N/2)).
  double xi(int k) const {
    int kk = (k < N / 2) ? k : k - N;
    return pi * kk / L;
  }
  double xi_max() const { return pi / dx(); }
  size_t size() const { return d == 1 ? static_cast<size_t>(N) : static_cast<size_t>(N) * N; }
  // Displacement wrapped to the nearest periodic image in [-L, L).
  double wrap(double u) const {
    double two_l = 2.0 * L;
    u = std::fmod(u + L, two_l);
    if (u < 0) u += two_l;
    return u - L;
  }
  bool operator==(const SpatialGrid& o) const { return d == o.d && L == o.L && N == o.N; }
};

struct SpatialField {
  SpatialGrid grid;
  std::vector<cplx> v;

  SpatialField() = default;
  explicit SpatialField(const SpatialGrid& g) : grid(g), v(g.size(), cplx(0.0)) {}

  cplx& at(int j) { return v[static_cast<size_t>(j)]; }
  cplx at(int j) const { return v[static_cast<size_t>(j)]; }
  cplx& at(int j0, int j1) { return v[static_cast<size_t>(j0) * grid.N + j1]; }
  cplx at(int j0, int j1) const { return v[static_cast<size_t>(j0) * grid.N + j1]; }

  double l2_norm() const {
    double s = 0.0;
    for (const cplx& z : v) s += std::norm(z);
    return std::sqrt(s * std::pow(grid.dx(), grid.d));
  }
  double linf_norm() const {
    double m = 0.0;
    for (const cplx& z : v) m = std::max(m, std::abs(z));
    return m;
  }
  SpatialField& operator+=(const SpatialField& o) {
    for (size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    return *this;
  }
  SpatialField& operator-=(const SpatialField& o) {
    for (size_t i = 0; i < v.size(); ++i) v[i] -= o.v[i];
    return *this;
  }
  SpatialField& operator*=(cplx c) {
    for (cplx& z : v) z *= c;
    return *this;
  }
};

inline SpatialField operator-(SpatialField a, const SpatialField& b) { return a -= b; }
inline SpatialField operator+(SpatialField a, const SpatialField& b) { return a += b; }
inline SpatialField operator*(cplx c, SpatialField a) { return a *= c; }

inline cplx inner(const SpatialField& a, const SpatialField& b) {
  // <a, b> = int a conj(b)
  cplx s = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * std::conj(b.v[i]);
  return s * std::pow(a.grid.dx(), a.grid.d);
}

// Physically normalized transforms. fourier_forward(u)[k] approximates
// u^(xi_k); fourier_inverse undoes it exactly on the grid.
inline std::vector<cplx> fourier_forward(const SpatialField& u) {
  std::vector<cplx> data = u.v;
  if (u.grid.d == 1)
    FftEngine::instance().transform_1d(data, FFTW_FORWARD);
  else
    FftEngine::instance().transform_2d(data, u.grid.N, FFTW_FORWARD);
  // Grid starts at x = -L: DFT assumes x_0 = 0, so each mode picks up
  // e^{+i xi L} per axis; fold that and the dx weight in.
  double w = std::pow(u.grid.dx(), u.grid.d);
  const SpatialGrid& g = u.grid;
  if (g.d == 1) {
    for (int k = 0; k < g.N; ++k)
      data[k] *= w * std::polar(1.0, g.xi(k) * g.L);
  } else {
    for (int k0 = 0; k0 < g.N; ++k0)
      for (int k1 = 0; k1 < g.N; ++k1)
        data[static_cast<size_t>(k0) * g.N + k1] *=
            w * std::polar(1.0, (g.xi(k0) + g.xi(k1)) * g.L);
  }
  return data;
}

inline SpatialField fourier_inverse(const SpatialGrid& g, std::vector<cplx> hat) {
  if (g.d == 1) {
    for (int k = 0; k < g.N; ++k)
      hat[k] *= std::polar(1.0, -g.xi(k) * g.L);
  } else {
    for (int k0 = 0; k0 < g.N; ++k0)
      for (int k1 = 0; k1 < g.N; ++k1)
        hat[static_cast<size_t>(k0) * g.N + k1] *=
            std::polar(1.0, -(g.xi(k0) + g.xi(k1)) * g.L);
  }
  if (g.d == 1)
    FftEngine::instance().transform_1d(hat, FFTW_BACKWARD);
  else
    FftEngine::instance().transform_2d(hat, g.N, FFTW_BACKWARD);
  SpatialField u(g);
  double w = 1.0 / (std::pow(g.dx(), g.d) * g.size());
  for (size_t i = 0; i < hat.size(); ++i) u.v[i] = hat[i] * w;
  return u;
}

// phi_{x0,xi0}(y) = e^{i xi0 (y - x0)} e^{-|y - x0|^2 / (2R)}, sampled with
// nearest-image displacements. The phase sign is chosen so the state's
// instantaneous frequency is +xi0, matching the analyzing states of the
// phase-space transform (whose kernel is the complex conjugate).
// If the Gaussian tail at the box boundary
// exceeds 1e-12 the relative tail mass is written to *boundary_tail (and the
// state is still returned).
inline SpatialField coherent_state(const Vec& x0, const Vec& xi0, double R,
                                   const SpatialGrid& grid,
                                   double* boundary_tail = nullptr) {
  if (!(R >= 1.0)) throw ParameterError("coherent_state: R must be >= 1");
  if (x0.dim != grid.d || xi0.dim != grid.d)
    throw ParameterError("coherent_state: dimension mismatch");
  SpatialField f(grid);
  if (grid.d == 1) {
    for (int j = 0; j < grid.N; ++j) {
      double u = grid.wrap(grid.x(j) - x0[0]);
      f.at(j) = std::polar(std::exp(-u * u / (2.0 * R)), xi0[0] * u);
    }
  } else {
    for (int j0 = 0; j0 < grid.N; ++j0)
      for (int j1 = 0; j1 < grid.N; ++j1) {
        double u0 = grid.wrap(grid.x(j0) - x0[0]);
        double u1 = grid.wrap(grid.x(j1) - x0[1]);
        double q = u0 * u0 + u1 * u1;
        f.at(j0, j1) = std::polar(std::exp(-q / (2.0 * R)), xi0[0] * u0 + xi0[1] * u1);
      }
  }
  if (boundary_tail) {
    // Fraction of squared mass a 1d Gaussian of width sqrt(R) leaves beyond
    // the worst-case distance L to the seam.
    double tail = std::erfc(grid.L / std::sqrt(R));
    *boundary_tail = (tail > 1e-12) ? tail : 0.0;
  }
  return f;
}

}  // namespace wp
