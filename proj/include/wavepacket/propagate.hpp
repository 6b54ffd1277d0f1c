#pragma once

// Weyl quantization on the periodic grid and reference propagators for the
// cutoff evolution d_t u = -i a^w u, plus frozen-Gaussian wave packets, their
// defect against the true equation, and the phase-space decomposition of
// initial data into packets with a propagated remainder.
//
// Operator paths, chosen automatically:
//   multiplier  x-independent symbol: a^w = a(D), evolution solved exactly
//   modal       a(x,xi) = sum_k c_k e^{ikx} b(xi) with every k a (half-)grid
//               mode: Weyl(e^{ikx} b) = e^{ikx/2} b(D) e^{ikx/2} exactly, so
//               one FFT pair per apply
//   dense       midpoint-kernel quadrature, O(N^2) per apply, d = 1 only
//
// Time stepping is explicit 4th-order (a^w is bounded thanks to the frequency
// cutoff); the step obeys ||a^w|| h <= 1/4 for stability and a tighter bound
// chosen so the end-to-end norm drift stays below the requested tolerance.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "wavepacket/common.hpp"
#include "wavepacket/fbi.hpp"
#include "wavepacket/flow.hpp"
#include "wavepacket/grid.hpp"
#include "wavepacket/symbols.hpp"

namespace wp {

// Smooth frequency cutoff attached to a symbol: 1 on the declared ball or
// annulus, supported in twice it. Symbols with cutoff_outer = infinity are
// used as-is (the caller guarantees grid resolution).
inline double symbol_cutoff(const SymbolModel& sym, double absxi) {
  if (std::isinf(sym.cutoff_outer)) return 1.0;
  double c = cutoff_profile(absxi, sym.cutoff_outer);
  if (sym.cutoff_inner > 0.0) c *= 1.0 - cutoff_profile(absxi, sym.cutoff_inner / 2.0);
  return c;
}

struct WeylOperator {
  enum class Path { multiplier, modal, dense };
  Path path = Path::multiplier;
  SpatialGrid grid;
  double t = 0.0;

  // multiplier / modal: symbol values on the frequency grid. For the modal
  // path, term k contributes c_k b(xi - k/2) uhat(xi - k); shifts are stored
  // as (even) frequency-grid index offsets.
  std::vector<double> bvals;
  std::vector<long long> shift_idx;
  std::vector<cplx> coeff;

  // dense: kernel K[i * N + j], apply is dx * K u.
  std::vector<cplx> kernel;

  double norm_bound = 0.0;  // power-iteration estimate of ||a^w||

  SpatialField apply(const SpatialField& u) const {
    if (!(u.grid == grid)) throw ResolutionError("WeylOperator: grid mismatch");
    if (path == Path::dense) {
      SpatialField out(grid);
      int N = grid.N;
      double dx = grid.dx();
      parallel_for(static_cast<size_t>(N), [&](size_t i) {
        cplx acc = 0.0;
        const cplx* row = &kernel[i * static_cast<size_t>(N)];
        for (int j = 0; j < N; ++j) acc += row[j] * u.at(j);
        out.at(static_cast<int>(i)) = acc * dx;
      });
      return out;
    }
    std::vector<cplx> uh = fourier_forward(u);
    std::vector<cplx> oh(uh.size(), cplx(0.0));
    if (path == Path::multiplier) {
      for (size_t m = 0; m < uh.size(); ++m) oh[m] = bvals[m] * uh[m];
    } else {
      int N = grid.N;
      for (size_t term = 0; term < shift_idx.size(); ++term) {
        long long s = shift_idx[term];
        long long half = s / 2;
        cplx c = coeff[term];
        for (int m = 0; m < N; ++m) {
          int mb = static_cast<int>((((m - half) % N) + N) % N);
          int mu = static_cast<int>((((m - s) % N) + N) % N);
          oh[static_cast<size_t>(m)] += c * bvals[static_cast<size_t>(mb)] *
                                        uh[static_cast<size_t>(mu)];
        }
      }
    }
    return fourier_inverse(grid, std::move(oh));
  }
};

namespace detail {

inline double power_iteration_norm(const WeylOperator& op) {
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> n(0.0, 1.0);
  SpatialField v(op.grid);
  for (cplx& z : v.v) z = cplx(n(rng), n(rng));
  double nv = v.l2_norm();
  v *= cplx(1.0 / nv);
  double lam = 0.0;
  for (int it = 0; it < 40; ++it) {
    SpatialField w = op.apply(v);
    lam = w.l2_norm();
    if (lam == 0.0) return 0.0;
    w *= cplx(1.0 / lam);
    v = std::move(w);
  }
  return lam;
}

// Fourier modes of f(x) on the metric's period, truncated at machine noise.
// Returns pairs (mode index j relative to base pi/Lbox, coefficient).
inline std::vector<std::pair<int, cplx>> periodic_modes(
    const std::function<double(double)>& f, double Lbox, int max_mode) {
  const int M = 4096;
  std::vector<cplx> samp(M);
  double period = 2.0 * Lbox;
  for (int j = 0; j < M; ++j) samp[j] = f(j * period / M);
  FftEngine::instance().transform_1d(samp, FFTW_FORWARD);
  double peak = 0.0;
  for (const cplx& z : samp) peak = std::max(peak, std::abs(z) / M);
  std::vector<std::pair<int, cplx>> out;
  for (int j = -max_mode; j <= max_mode; ++j) {
    cplx c = samp[static_cast<size_t>((j + M) % M)] / static_cast<double>(M);
    if (std::abs(c) > 1e-14 * peak) out.emplace_back(j, c);
  }
  return out;
}

}  // namespace detail

// Builds the grid realization of a^w at time t. Symbols built from constant
// metrics use the multiplier path; Fourier-series metrics on a box whose side
// divides the grid evenly (grid L a multiple of Lbox, ratio even) use the
// modal path; anything else in d = 1 falls back to the dense kernel.
inline WeylOperator make_weyl(const SymbolModel& sym, const SpatialGrid& grid,
                              double t = 0.0) {
  WeylOperator op;
  op.grid = grid;
  op.t = t;
  if (!std::isinf(sym.cutoff_outer) && 2.0 * sym.cutoff_outer > grid.xi_max())
    throw ResolutionError("make_weyl: symbol cutoff support exceeds the grid Nyquist");

  auto xi_factor = [&](double absxi) {
    double c = symbol_cutoff(sym, absxi);
    if (c == 0.0) return 0.0;
    if (sym.homogeneity == 2) return absxi * absxi * c;
    if (sym.homogeneity == 1) return absxi * c;
    return c;
  };

  if (sym.homogeneity != 0 && sym.metric.constant) {
    op.path = WeylOperator::Path::multiplier;
    Mat g = sym.metric.eval(zero_vec(sym.d), t);
    double scale = (sym.homogeneity == 1) ? std::sqrt(g(0, 0)) : g(0, 0);
    op.bvals.resize(grid.size());
    if (grid.d == 1) {
      for (int k = 0; k < grid.N; ++k)
        op.bvals[static_cast<size_t>(k)] = scale * xi_factor(std::abs(grid.xi(k)));
    } else {
      for (int k0 = 0; k0 < grid.N; ++k0)
        for (int k1 = 0; k1 < grid.N; ++k1) {
          double a = std::hypot(grid.xi(k0), grid.xi(k1));
          op.bvals[static_cast<size_t>(k0) * grid.N + k1] = scale * xi_factor(a);
        }
    }
    op.norm_bound = detail::power_iteration_norm(op);
    return op;
  }

  if (grid.d != 1)
    throw UnsupportedRepresentationError("make_weyl: d = 2 needs a constant metric");

  double ratio = sym.metric.has_fourier ? grid.L / sym.metric.Lbox : 0.0;
  bool commensurable = sym.metric.has_fourier &&
                       std::abs(ratio - std::llround(ratio)) < 1e-9 &&
                       std::llround(ratio) % 2 == 0;
  if (sym.homogeneity != 0 && commensurable) {
    op.path = WeylOperator::Path::modal;
    long long stride = std::llround(ratio);  // grid index per metric mode, even
    std::vector<std::pair<int, cplx>> modes;
    if (sym.homogeneity == 2) {
      for (int k = -sym.metric.K; k <= sym.metric.K; ++k) {
        cplx c = sym.metric.modes[static_cast<size_t>(k + sym.metric.K)];
        if (c != cplx(0.0)) modes.emplace_back(k, c);
      }
    } else {
      // Half-wave: the x factor is sqrt(g); expand it numerically (analytic
      // coefficient, so the series truncates at machine precision).
      const MetricField& m = sym.metric;
      modes = detail::periodic_modes(
          [&](double x) {
            Vec xv(x);
            return std::sqrt(m.eval(xv, t)(0, 0));
          },
          m.Lbox, 96);
    }
    for (auto& [j, c] : modes) {
      op.shift_idx.push_back(j * stride);
      op.coeff.push_back(c);
    }
    op.bvals.resize(grid.size());
    for (int k = 0; k < grid.N; ++k)
      op.bvals[static_cast<size_t>(k)] = xi_factor(std::abs(grid.xi(k)));
    op.norm_bound = detail::power_iteration_norm(op);
    return op;
  }

  // Dense midpoint kernel. K(x, y) = (1/2L) sum_q a((x+y)/2, xi_q) e^{i(x-y)xi_q};
  // the torus midpoint is taken in [-L, L) (the symbol varies on scale R >> L
  // ambiguity only matters for incommensurable oscillatory symbols).
  if (grid.N > 2048)
    throw ResolutionError(
        "make_weyl: dense path capped at N = 2048; use a commensurable grid");
  op.path = WeylOperator::Path::dense;
  int N = grid.N;
  op.kernel.assign(static_cast<size_t>(N) * N, cplx(0.0));
  // Row transforms per midpoint: mid_s = -L + s dx/2, s = 0 .. 2N-2.
  std::vector<std::vector<cplx>> rows(static_cast<size_t>(2 * N - 1));
  parallel_for(rows.size(), [&](size_t s) {
    double mid = -grid.L + 0.5 * s * grid.dx();
    std::vector<cplx> row(static_cast<size_t>(N));
    Vec xv(mid);
    for (int q = 0; q < N; ++q) {
      double xi = grid.xi(q);
      Vec xiv(xi);
      double c = symbol_cutoff(sym, std::abs(xi));
      row[static_cast<size_t>(q)] = (c == 0.0) ? 0.0 : sym.p(xv, t, xiv) * c;
    }
    FftEngine::instance().transform_1d(row, FFTW_BACKWARD);  // sum_q e^{+2pi i nq/N}
    rows[s] = std::move(row);
  });
  double w = 1.0 / (2.0 * grid.L);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      int diff = ((i - j) % N + N) % N;
      op.kernel[static_cast<size_t>(i) * N + j] =
          w * rows[static_cast<size_t>(i + j)][static_cast<size_t>(diff)];
    }
  op.norm_bound = detail::power_iteration_norm(op);
  return op;
}

inline SpatialField weyl_apply(const SymbolModel& sym, const SpatialField& u,
                               double t = 0.0) {
  return make_weyl(sym, u.grid, t).apply(u);
}

// ---------------------------------------------------------------------------

struct FieldTrajectory {
  std::vector<double> ts;
  std::vector<SpatialField> us;
  long long steps = 0;
  std::string method;
  double norm_drift = 0.0;  // max relative deviation of ||u(t)|| from ||u(t0)||

  const SpatialField& at_time(double t) const {
    for (size_t i = 0; i < ts.size(); ++i)
      if (std::abs(ts[i] - t) < 1e-9 * (1.0 + std::abs(t))) return us[i];
    throw ParameterError("FieldTrajectory: time not on the sample grid");
  }
};

struct PropagateOptions {
  double max_step = 0.0;   // 0 = automatic
  bool force_stepper = false;
  double norm_tol = 1e-7;  // end-to-end norm-drift budget for the stepper
};

namespace detail {

// One 4th-order step of u' = -i A u (Taylor form; A is time-independent here).
inline void rk4_field_step(const WeylOperator& op, SpatialField& u, double h) {
  cplx z = cplx(0.0, -h);
  SpatialField v1 = op.apply(u);
  SpatialField v2 = op.apply(v1);
  SpatialField v3 = op.apply(v2);
  SpatialField v4 = op.apply(v3);
  cplx c1 = z, c2 = z * z / 2.0, c3 = z * z * z / 6.0, c4 = z * z * z * z / 24.0;
  for (size_t i = 0; i < u.v.size(); ++i)
    u.v[i] += c1 * v1.v[i] + c2 * v2.v[i] + c3 * v3.v[i] + c4 * v4.v[i];
}

inline long long stepper_advance(const WeylOperator& op, SpatialField& u, double ta,
                                 double tb, double theta) {
  double span = std::abs(tb - ta);
  if (span == 0.0) return 0;
  long long n = std::max<long long>(
      1, static_cast<long long>(std::ceil(span * std::max(op.norm_bound, 1e-12) / theta)));
  double h = (tb - ta) / static_cast<double>(n);
  for (long long k = 0; k < n; ++k) rk4_field_step(op, u, h);
  return n;
}

inline void multiplier_advance(const WeylOperator& op, SpatialField& u, double dt) {
  if (dt == 0.0) return;
  std::vector<cplx> uh = fourier_forward(u);
  for (size_t m = 0; m < uh.size(); ++m)
    uh[m] *= std::polar(1.0, -dt * op.bvals[m]);
  u = fourier_inverse(u.grid, std::move(uh));
}

}  // namespace detail

// Evolves u0, given at time t0 (default: the first grid time), across the
// sample times. t0 may sit anywhere inside the grid; both directions are
// integrated outward from it.
inline FieldTrajectory propagate_reference(
    const SymbolModel& sym, const SpatialField& u0, const std::vector<double>& t_grid,
    double t0 = std::numeric_limits<double>::quiet_NaN(),
    const PropagateOptions& opts = {}) {
  if (t_grid.empty()) throw ParameterError("propagate_reference: empty time grid");
  for (size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw ParameterError("propagate_reference: time grid must increase");
  if (std::isnan(t0)) t0 = t_grid.front();
  if (t0 < t_grid.front() - 1e-12 || t0 > t_grid.back() + 1e-12)
    throw ParameterError("propagate_reference: t0 outside the time grid");

  WeylOperator op = make_weyl(sym, u0.grid, t0);
  bool exact = (op.path == WeylOperator::Path::multiplier) && !opts.force_stepper;

  double span = t_grid.back() - t_grid.front();
  double theta = 0.0;
  if (!exact) {
    double tn = std::max(op.norm_bound, 1e-12);
    double load = std::max(span * tn, 1e-12);
    // Per-mode step phase theta = lambda h: amplitude drift accumulates like
    // (span ||A||) theta^5 / 144, phase error like (span ||A||) theta^4 / 120.
    // Bound both by the norm tolerance.
    theta = std::min({0.25, std::pow(144.0 * opts.norm_tol / load, 0.2),
                      std::pow(120.0 * opts.norm_tol / load, 0.25)});
    if (opts.max_step > 0.0) {
      if (opts.max_step * tn > 0.25)
        throw StabilityError("propagate_reference: step violates ||a^w|| h <= 1/4; use h <= " +
                             std::to_string(0.25 / tn));
      theta = std::min(theta, opts.max_step * tn);
    }
  }

  FieldTrajectory traj;
  traj.ts = t_grid;
  traj.us.resize(t_grid.size());
  traj.method = exact ? "multiplier" : "rk4";

  // Index range split at t0.
  size_t first_after = 0;
  while (first_after < t_grid.size() && t_grid[first_after] < t0 - 1e-12) ++first_after;

  auto advance = [&](SpatialField& u, double ta, double tb) {
    if (exact)
      detail::multiplier_advance(op, u, tb - ta);
    else
      traj.steps += detail::stepper_advance(op, u, ta, tb, theta);
  };

  SpatialField u = u0;
  double cur = t0;
  for (size_t i = first_after; i < t_grid.size(); ++i) {
    advance(u, cur, t_grid[i]);
    cur = t_grid[i];
    traj.us[i] = u;
  }
  u = u0;
  cur = t0;
  for (size_t i = first_after; i-- > 0;) {
    advance(u, cur, t_grid[i]);
    cur = t_grid[i];
    traj.us[i] = u;
  }

  double n0 = u0.l2_norm();
  if (n0 > 0.0)
    for (const SpatialField& f : traj.us)
      traj.norm_drift = std::max(traj.norm_drift, std::abs(f.l2_norm() - n0) / n0);
  return traj;
}

// ---------------------------------------------------------------------------

struct WavePacket {
  PhasePoint label;       // lattice cell (x0, xi0)
  double alpha = 1.0;     // nonnegative coefficient
  double r = 1.0;         // envelope scale, rho = 1/r
  Bicharacteristic traj;  // flow through the label
  double normalization = 1.0;  // L2 normalization of the frozen envelope
  // Decomposition packets carry their windowed initial slice (unit norm);
  // synthesized packets start from the coherent state at the label.
  SpatialField initial;
  bool has_initial = false;

  double rho() const { return 1.0 / r; }
};

inline WavePacket make_packet(const SymbolModel& sym, const PhasePoint& label, double r,
                              double t_min, double t_max, double alpha = 1.0,
                              int steps = 256) {
  WavePacket p;
  p.label = label;
  p.alpha = alpha;
  p.r = r;
  FlowOptions opt;
  opt.steps = steps;
  p.traj = integrate_bicharacteristic(sym, label, t_min, t_max, opt);
  p.normalization = std::pow(pi * r, -0.25);  // 1d unit-L2 Gaussian factor
  return p;
}

enum class PacketMode { frozen, exact };

namespace detail {

inline SpatialField frozen_field(const WavePacket& packet, const SpatialGrid& grid,
                                 const PhasePoint& z, double psi) {
  SpatialField f = coherent_state(z.x, z.xi, packet.r, grid);
  double n = f.l2_norm();
  f *= std::polar(1.0 / n, psi);
  return f;
}

}  // namespace detail

inline SpatialField packet_evolve(const WavePacket& packet, const SymbolModel& sym,
                                  double t, const SpatialGrid& grid, PacketMode mode) {
  if (t < packet.traj.t.front() - 1e-9 || t > packet.traj.t.back() + 1e-9)
    throw ParameterError("packet_evolve: time outside the packet trajectory");
  if (mode == PacketMode::frozen)
    return detail::frozen_field(packet, grid, packet.traj.state_at(t),
                                packet.traj.psi_at(t));
  SpatialField u0 = packet.has_initial
                        ? packet.initial
                        : detail::frozen_field(packet, grid, packet.traj.start(), 0.0);
  if (t == 0.0) return u0;
  double lo = std::min(0.0, t), hi = std::max(0.0, t);
  FieldTrajectory tr = propagate_reference(sym, u0, {lo, hi}, 0.0);
  return tr.at_time(t);
}

// ---------------------------------------------------------------------------
// Phase-space decomposition: u0 = sum_T alpha_T phi_T(0) + delta0 with
// phi_T(0) = T_r^*(psi_T T_r u0) / alpha_T, then evolve. The evolution is
// linear and the exact-mode packets evolve with the same reference propagator,
// so the remainder trajectory is the propagation of delta0 itself.

struct Decomposition {
  std::vector<WavePacket> packets;
  FieldTrajectory remainder;
  std::vector<double> remainder_l2;
  std::vector<double> remainder_linf;
  double alpha_sq_total = 0.0;
};

struct DecomposeOptions {
  bool build_packets = true;  // skip per-packet slices/flows when only the
                              // remainder trajectory is needed
  int packet_steps = 256;
};

inline Decomposition wavepacket_decompose(const SpatialField& u0, const SymbolModel& sym,
                                          double r, const PhaseSpaceRegion& region,
                                          const std::vector<double>& t_grid,
                                          const ScaleParams* params = nullptr,
                                          const DecomposeOptions& dopts = {}) {
  if (u0.grid.d != 1) throw ParameterError("wavepacket_decompose: d = 1 only");
  if (params) {
    double rmin = std::pow(params->nu, -2.0 - params->delta0);
    if (!(r >= rmin * (1.0 - 1e-12) && r <= params->R * (1.0 + 1e-12)))
      throw ParameterError("wavepacket_decompose: r outside [nu^{-2-delta0}, R]");
  }
  Lattice lat = lattice_points(r, region);

  Decomposition dec;
  double u_norm = u0.l2_norm();
  if (u_norm == 0.0 || lat.points.empty()) {
    dec.remainder = propagate_reference(sym, u0, t_grid,
                                        t_grid.front() <= 0.0 && t_grid.back() >= 0.0
                                            ? 0.0
                                            : t_grid.front());
    for (const SpatialField& f : dec.remainder.us) {
      dec.remainder_l2.push_back(f.l2_norm());
      dec.remainder_linf.push_back(f.linf_norm());
    }
    return dec;
  }

  double lo = lat.points[0].xi[0], hi = lo;
  for (const auto& p : lat.points) {
    lo = std::min(lo, p.xi[0]);
    hi = std::max(hi, p.xi[0]);
  }
  PhaseSpaceGrid ps = make_ps_grid(u0.grid, r, lo, hi);
  PhaseSpaceField F = fbi_forward(u0, r, ps);
  PartitionWeights part(r, 1);

  // Pass 1: coefficients and the lattice coverage sum_T psi_T per grid point.
  std::vector<double> alpha(lat.points.size(), 0.0);
  std::vector<double> coverage(F.v.size(), 0.0);
  double hx_lat = std::sqrt(r);
  for (size_t i = 0; i < lat.points.size(); ++i) {
    const PhasePoint& c = lat.points[i];
    double acc = 0.0;
    for (size_t ix = 0; ix < ps.xs.size(); ++ix) {
      if (std::abs(u0.grid.wrap(ps.xs[ix] - c.x[0])) > hx_lat) continue;
      for (size_t ik = 0; ik < ps.xis.size(); ++ik) {
        PhasePoint p{Vec(ps.xs[ix]), Vec(ps.xis[ik])};
        double w = part.weight(c, p);
        if (w == 0.0) continue;
        coverage[ix * ps.xis.size() + ik] += w;
        acc += w * w * std::norm(F.at(ix, ik));
      }
    }
    alpha[i] = std::sqrt(acc * ps.hx * ps.hxi);
  }
  PhaseSpaceField masked = F;
  for (size_t q = 0; q < masked.v.size(); ++q) masked.v[q] *= coverage[q];

  // Pass 2: packets for the retained cells, each carrying its windowed slice.
  double amax = 0.0;
  for (double a : alpha) amax = std::max(amax, a);
  double thresh = 1e-8 * amax;
  for (size_t i = 0; i < lat.points.size(); ++i) {
    dec.alpha_sq_total += alpha[i] * alpha[i];
    if (alpha[i] <= thresh || !dopts.build_packets) continue;
    const PhasePoint& c = lat.points[i];
    PhaseSpaceField piece = F;
    for (cplx& z : piece.v) z = 0.0;
    for (size_t ix = 0; ix < ps.xs.size(); ++ix) {
      if (std::abs(u0.grid.wrap(ps.xs[ix] - c.x[0])) > hx_lat) continue;
      for (size_t ik = 0; ik < ps.xis.size(); ++ik) {
        PhasePoint p{Vec(ps.xs[ix]), Vec(ps.xis[ik])};
        double w = part.weight(c, p);
        if (w != 0.0) piece.at(ix, ik) = w * F.at(ix, ik);
      }
    }
    WavePacket p = make_packet(sym, lat.points[i], r, t_grid.front(), t_grid.back(),
                               alpha[i], dopts.packet_steps);
    p.initial = fbi_adjoint(piece, r, u0.grid);
    double sn = p.initial.l2_norm();
    if (sn > 0.0) p.initial *= cplx(1.0 / sn);
    p.has_initial = true;
    dec.packets.push_back(std::move(p));
  }

  SpatialField delta0 = u0 - fbi_adjoint(masked, r, u0.grid);
  double t0 = (t_grid.front() <= 0.0 && t_grid.back() >= 0.0) ? 0.0 : t_grid.front();
  dec.remainder = propagate_reference(sym, delta0, t_grid, t0);
  for (const SpatialField& f : dec.remainder.us) {
    dec.remainder_l2.push_back(f.l2_norm());
    dec.remainder_linf.push_back(f.linf_norm());
  }
  return dec;
}

// ---------------------------------------------------------------------------
// Defect of the frozen packet against d_t u = -i a^w u. The time derivative
// of the frozen field is analytic in the flow data:
//   d_t phi = [i psidot + i xidot.(y - x) - i xi.xdot + (y - x).xdot / r] phi
// with psidot = -p + xi . p_xi along the bicharacteristic.

struct DefectReport {
  std::vector<double> ts;
  std::vector<double> defect;  // ||d_t phi + i a^w phi||_2 per sample
  double max_defect = 0.0;
};

inline DefectReport parametrix_defect(const SymbolModel& sym, const WavePacket& packet,
                                      const std::vector<double>& t_grid,
                                      const SpatialGrid& grid) {
  WeylOperator op = make_weyl(sym, grid, 0.0);
  DefectReport rep;
  rep.ts = t_grid;
  for (double t : t_grid) {
    PhasePoint z = packet.traj.state_at(t);
    double psi = packet.traj.psi_at(t);
    SpatialField phi = detail::frozen_field(packet, grid, z, psi);
    double p = sym.p(z.x, t, z.xi);
    Vec pxi = sym.grad_xi(z.x, t, z.xi);
    Vec px = sym.grad_x(z.x, t, z.xi);
    double psidot = -p + dot(z.xi, pxi);
    SpatialField resid = op.apply(phi);  // a^w phi, then i * it below
    for (int j = 0; j < grid.N; ++j) {
      double u = grid.wrap(grid.x(j) - z.x[0]);
      cplx dt_phi = phi.at(j) * (cplx(0.0, psidot) + cplx(0.0, -px[0] * u) +
                                 cplx(0.0, -z.xi[0] * pxi[0]) + cplx(u * pxi[0] / packet.r));
      resid.at(j) = dt_phi + cplx(0.0, 1.0) * resid.at(j);
    }
    double d = resid.l2_norm();
    rep.defect.push_back(d);
    rep.max_defect = std::max(rep.max_defect, d);
  }
  return rep;
}

}  // namespace wp
