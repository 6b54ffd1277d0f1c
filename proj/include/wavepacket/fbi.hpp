#pragma once

// The Gaussian-windowed phase-space transform at scale R,
//   (T_R f)(x, xi) = C_R int e^{i xi (x-y)} e^{-(x-y)^2/(2R)} f(y) dy,
// its adjoint/inversion, anti-Wick localization to a phase-space region, and
// packet coefficients. d = 1 only. The normalization is derived from the
// isometry requirement under Lebesgue measure dx dxi:
//   C_R^2 (2 pi) (pi R)^{1/2} = 1, i.e. C_R = 2^{-1/2} pi^{-3/4} R^{-1/4}.

#include <vector>

#include "wavepacket/common.hpp"
#include "wavepacket/geometry.hpp"
#include "wavepacket/grid.hpp"

namespace wp {

inline double fbi_normalization(double R, int d = 1) {
  return std::pow(2.0, -0.5 * d) * std::pow(pi, -0.75 * d) * std::pow(R, -0.25 * d);
}

struct PhaseSpaceGrid {
  std::vector<double> xs;   // x centers, uniform over the torus
  std::vector<double> xis;  // xi centers, uniform over the window
  double hx = 0.0;
  double hxi = 0.0;

  size_t size() const { return xs.size() * xis.size(); }
};

// x centers at spacing ~ sqrt(R)/4 tiling the torus exactly; xi window
// [band_lo, band_hi] padded by pad_widths transform widths R^{-1/2}, spacing
// ~ 1/(4 sqrt(R)).
inline PhaseSpaceGrid make_ps_grid(const SpatialGrid& grid, double R, double band_lo,
                                   double band_hi, double pad_widths = 10.0) {
  if (grid.d != 1) throw ParameterError("make_ps_grid: d = 1 only");
  if (!(band_hi >= band_lo)) throw ParameterError("make_ps_grid: empty band");
  PhaseSpaceGrid ps;
  int nx = std::max(1, static_cast<int>(std::lround(2.0 * grid.L / (std::sqrt(R) / 4.0))));
  ps.hx = 2.0 * grid.L / nx;
  for (int j = 0; j < nx; ++j) ps.xs.push_back(-grid.L + j * ps.hx);
  double lo = band_lo - pad_widths / std::sqrt(R);
  double hi = band_hi + pad_widths / std::sqrt(R);
  int nxi = std::max(2, static_cast<int>(std::ceil((hi - lo) * 4.0 * std::sqrt(R))) + 1);
  ps.hxi = (hi - lo) / (nxi - 1);
  for (int k = 0; k < nxi; ++k) ps.xis.push_back(lo + k * ps.hxi);
  return ps;
}

struct PhaseSpaceField {
  PhaseSpaceGrid psgrid;
  double R = 1.0;
  SpatialGrid source_grid;
  std::vector<cplx> v;  // row-major: [ix * nxi + ik]

  cplx& at(size_t ix, size_t ik) { return v[ix * psgrid.xis.size() + ik]; }
  cplx at(size_t ix, size_t ik) const { return v[ix * psgrid.xis.size() + ik]; }

  double l2_norm() const {
    double s = 0.0;
    for (const cplx& z : v) s += std::norm(z);
    return std::sqrt(s * psgrid.hx * psgrid.hxi);
  }
};

namespace detail {
// Gaussian window half-width: e^{-u^2/(2R)} at u = 12 sqrt(R) is ~ 5e-32.
inline double fbi_window(double R, double L) { return std::min(12.0 * std::sqrt(R), L); }
}  // namespace detail

inline PhaseSpaceField fbi_forward(const SpatialField& f, double R,
                                   const PhaseSpaceGrid& psgrid) {
  const SpatialGrid& g = f.grid;
  if (g.d != 1) throw ParameterError("fbi_forward: d = 1 only");
  if (!(std::sqrt(R) <= g.L / 4.0))
    throw ResolutionError("fbi_forward: need sqrt(R) <= L/4");
  double xi_need = 0.0;
  for (double q : psgrid.xis) xi_need = std::max(xi_need, std::abs(q));
  if (xi_need > g.xi_max() / 2.0)
    throw ResolutionError("fbi_forward: psgrid window exceeds half the grid Nyquist");

  PhaseSpaceField F;
  F.psgrid = psgrid;
  F.R = R;
  F.source_grid = g;
  F.v.assign(psgrid.size(), cplx(0.0));

  const double dx = g.dx();
  const double W = detail::fbi_window(R, g.L);
  const int jw = static_cast<int>(W / dx);
  const double c_r = fbi_normalization(R);
  const size_t nxi = psgrid.xis.size();

  parallel_for(psgrid.xs.size(), [&](size_t ix) {
    double xc = psgrid.xs[ix];
    int j0 = static_cast<int>(std::llround((xc + g.L) / dx));
    // Windowed samples g_m = f(y_m) e^{-u^2/(2R)} dy, u = y_m - xc.
    std::vector<cplx> win(static_cast<size_t>(2 * jw + 1));
    std::vector<double> us(win.size());
    for (int m = -jw; m <= jw; ++m) {
      int j = ((j0 + m) % g.N + g.N) % g.N;
      double u = g.wrap(g.x(j) - xc);
      us[static_cast<size_t>(m + jw)] = u;
      win[static_cast<size_t>(m + jw)] = f.at(j) * std::exp(-u * u / (2.0 * R)) * dx;
    }
    for (size_t ik = 0; ik < nxi; ++ik) {
      double xi = psgrid.xis[ik];
      // sum_m win_m e^{-i xi u_m}; u is uniform so use a phase recurrence.
      cplx rot = std::polar(1.0, -xi * dx);
      cplx ph = std::polar(1.0, -xi * us[0]);
      cplx acc = 0.0;
      for (size_t m = 0; m < win.size(); ++m) {
        acc += win[m] * ph;
        ph *= rot;
      }
      F.at(ix, ik) = c_r * acc;
    }
  });
  return F;
}

inline SpatialField fbi_adjoint(const PhaseSpaceField& F, double R,
                                const SpatialGrid& grid) {
  if (grid.d != 1) throw ParameterError("fbi_adjoint: d = 1 only");
  if (!(F.source_grid == grid))
    throw ResolutionError("fbi_adjoint: grid mismatch with the transform grid");
  const PhaseSpaceGrid& ps = F.psgrid;
  const double W = detail::fbi_window(R, grid.L);
  const double c_r = fbi_normalization(R);
  const size_t nxi = ps.xis.size();

  SpatialField f(grid);
  parallel_for(static_cast<size_t>(grid.N), [&](size_t jj) {
    int j = static_cast<int>(jj);
    double y = grid.x(j);
    cplx acc = 0.0;
    for (size_t ix = 0; ix < ps.xs.size(); ++ix) {
      double u = grid.wrap(ps.xs[ix] - y);  // x - y
      if (std::abs(u) > W) continue;
      double env = std::exp(-u * u / (2.0 * R));
      // sum_k F(x, xi_k) e^{-i xi_k u}
      cplx rot = std::polar(1.0, -ps.hxi * u);
      cplx ph = std::polar(1.0, -ps.xis[0] * u);
      cplx inner_acc = 0.0;
      const cplx* row = &F.v[ix * nxi];
      for (size_t k = 0; k < nxi; ++k) {
        inner_acc += row[k] * ph;
        ph *= rot;
      }
      acc += env * inner_acc;
    }
    f.at(j) = c_r * acc * ps.hx * ps.hxi;
  });
  return f;
}

// ---------------------------------------------------------------------------
// Anti-Wick localization: T_r^* (mask) T_r. The mask is 1 on the core region,
// decays smoothly across the thickening margins, and vanishes beyond them.

inline double region_mask(const PhaseSpaceRegion& region, double x, double xi) {
  Vec xv(x), xiv(xi);
  auto step = [](double excess, double margin) {
    if (margin <= 0.0) return excess <= 0.0 ? 1.0 : 0.0;
    if (excess <= 0.0) return 1.0;
    if (excess >= margin) return 0.0;
    return bump(1.0 + excess / margin);
  };
  // Excess past the core (margin-free) boundary.
  double ex_x = norm(xv - region.x_center) - region.x_radius;
  PhaseSpaceRegion bare = region;
  bare.margin_xi = 0.0;
  double ex_xi = bare.xi_excess(xiv);
  return step(ex_x, region.margin_x) * step(ex_xi, region.margin_xi);
}

struct LocalizeInfo {
  double band_mass = 0.0;    // quadrature L2 mass of (1 - mask) T_r f
  double mask_min = 1.0;     // mask range actually hit
  double mask_max = 0.0;
};

inline SpatialField localize(const SpatialField& f, const PhaseSpaceRegion& region,
                             double r, LocalizeInfo* info = nullptr) {
  if (f.grid.d != 1) throw ParameterError("localize: d = 1 only");
  // Window: region frequency extent plus margins and transform tails.
  double lo, hi;
  if (!region.sector) {
    lo = region.xi_center[0] - region.xi_radius - region.margin_xi;
    hi = region.xi_center[0] + region.xi_radius + region.margin_xi;
  } else {
    lo = -2.0 - region.margin_xi;
    hi = 2.0 + region.margin_xi;
  }
  // Clamp to the resolvable band (the data cannot carry frequencies there
  // anyway; oversized regions act as "no constraint" in xi).
  double pad = 10.0 / std::sqrt(r);
  double cap = f.grid.xi_max() / 2.0 - pad;
  lo = std::clamp(lo, -cap, cap);
  hi = std::clamp(hi, -cap, cap);
  PhaseSpaceGrid ps = make_ps_grid(f.grid, r, lo, hi);
  PhaseSpaceField F = fbi_forward(f, r, ps);
  double band = 0.0, mmin = 1.0, mmax = 0.0;
  for (size_t ix = 0; ix < ps.xs.size(); ++ix)
    for (size_t ik = 0; ik < ps.xis.size(); ++ik) {
      double m = region_mask(region, ps.xs[ix], ps.xis[ik]);
      mmin = std::min(mmin, m);
      mmax = std::max(mmax, m);
      band += (1.0 - m) * (1.0 - m) * std::norm(F.at(ix, ik));
      F.at(ix, ik) *= m;
    }
  if (info) {
    info->band_mass = std::sqrt(band * ps.hx * ps.hxi);
    info->mask_min = mmin;
    info->mask_max = mmax;
  }
  return fbi_adjoint(F, r, f.grid);
}

// alpha_T = || psi_T T_r f ||_{L^2} over the lattice cells.
inline std::vector<double> packet_coefficients(const SpatialField& f, const Lattice& lattice,
                                               double r) {
  if (lattice.points.empty()) return {};
  double lo = lattice.points[0].xi[0], hi = lo;
  for (const auto& p : lattice.points) {
    lo = std::min(lo, p.xi[0]);
    hi = std::max(hi, p.xi[0]);
  }
  PhaseSpaceGrid ps = make_ps_grid(f.grid, r, lo, hi);
  PhaseSpaceField F = fbi_forward(f, r, ps);
  PartitionWeights part(r, 1);

  std::vector<double> alpha(lattice.points.size(), 0.0);
  parallel_for(lattice.points.size(), [&](size_t i) {
    const PhasePoint& c = lattice.points[i];
    double hx_lat = std::sqrt(r);
    double acc = 0.0;
    for (size_t ix = 0; ix < ps.xs.size(); ++ix) {
      if (std::abs(f.grid.wrap(ps.xs[ix] - c.x[0])) > hx_lat) continue;
      for (size_t ik = 0; ik < ps.xis.size(); ++ik) {
        PhasePoint p{Vec(ps.xs[ix]), Vec(ps.xis[ik])};
        double w = part.weight(c, p);
        if (w == 0.0) continue;
        acc += w * w * std::norm(F.at(ix, ik));
      }
    }
    alpha[i] = std::sqrt(acc * ps.hx * ps.hxi);
  });
  return alpha;
}

}  // namespace wp
