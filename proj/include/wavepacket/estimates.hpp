#pragma once

// Space-time norm engines and the measurement harness: dispersive decay fits,
// transversality functionals along flow pairs, energy-difference shells,
// conservation-law flags for packet quadruples, quadrilinear concentration
// integrals, bilinear sweeps over (R, nu), and packet localization reports.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "wavepacket/common.hpp"
#include "wavepacket/flow.hpp"
#include "wavepacket/propagate.hpp"

namespace wp {

struct SpaceTimeCube {
  Vec x_center;
  double t_center = 0.0;
  double side = 1.0;
  int resolution = 8;  // minimum samples per side

  void validate() const {
    if (!(side > 0.0)) throw ParameterError("SpaceTimeCube: side must be positive");
    if (resolution < 8) throw ParameterError("SpaceTimeCube: resolution >= 8");
  }
  double t_lo() const { return t_center - side / 2.0; }
  double t_hi() const { return t_center + side / 2.0; }
  // Half-open box [c - s/2, c + s/2) per axis so adjoining cubes tile without
  // double counting a shared face of grid points.
  bool contains_x(const Vec& x) const {
    for (int i = 0; i < x.dim; ++i) {
      double dxi = x[i] - x_center[i];
      if (dxi < -side / 2.0 || dxi >= side / 2.0) return false;
    }
    return true;
  }
  // Uniform time samples covering the cube at its resolution.
  std::vector<double> time_samples() const {
    std::vector<double> ts;
    for (int k = 0; k < resolution; ++k)
      ts.push_back(t_lo() + side * k / (resolution - 1));
    return ts;
  }
};

// (int int_cube |u|^p dx dt)^{1/p}, trapezoid in time over the trajectory
// samples inside the cube, Riemann in space.
inline double lp_spacetime_norm(const FieldTrajectory& traj, double p,
                                const SpaceTimeCube& cube) {
  cube.validate();
  if (!(p >= 1.0)) throw ParameterError("lp_spacetime_norm: p >= 1 required");
  std::vector<size_t> in;
  for (size_t i = 0; i < traj.ts.size(); ++i)
    if (traj.ts[i] >= cube.t_lo() - 1e-12 && traj.ts[i] <= cube.t_hi() + 1e-12)
      in.push_back(i);
  if (static_cast<int>(in.size()) < cube.resolution)
    throw ResolutionError("lp_spacetime_norm: trajectory undersamples the cube in time");

  auto slab = [&](const SpatialField& u) {
    const SpatialGrid& g = u.grid;
    double acc = 0.0;
    if (g.d == 1) {
      for (int j = 0; j < g.N; ++j)
        if (cube.contains_x(Vec(g.x(j)))) acc += std::pow(std::abs(u.at(j)), p);
    } else {
      for (int j0 = 0; j0 < g.N; ++j0)
        for (int j1 = 0; j1 < g.N; ++j1) {
          Vec x(g.x(j0), g.x(j1));
          if (cube.contains_x(x)) acc += std::pow(std::abs(u.at(j0, j1)), p);
        }
    }
    return acc * std::pow(g.dx(), g.d);
  };

  double acc = 0.0;
  for (size_t k = 0; k + 1 < in.size(); ++k) {
    double dt = traj.ts[in[k + 1]] - traj.ts[in[k]];
    acc += 0.5 * dt * (slab(traj.us[in[k]]) + slab(traj.us[in[k + 1]]));
  }
  return std::pow(acc, 1.0 / p);
}

// ---------------------------------------------------------------------------

struct DispersiveFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
  std::vector<double> ts;
  std::vector<double> linf;  // per-time table, t = 0 row is the normalization
};

// Least-squares slope of log ||u(t)||_inf against log(1 + t) over the given
// times (nonpositive times are recorded in the table but excluded from the fit).
inline DispersiveFit dispersive_fit(const SymbolModel& sym, const SpatialField& u0,
                                    const std::vector<double>& times,
                                    const PropagateOptions& opts = {}) {
  int positive = 0;
  for (double t : times) {
    if (t < 0.0) throw ParameterError("dispersive_fit: times must be nonnegative");
    if (t > 0.0) ++positive;
  }
  if (positive < 4) throw FitError("dispersive_fit: need at least 4 positive times");
  // The data is given at t = 0; anchor the integration there even when the
  // first requested sample is later.
  std::vector<double> t_grid = times;
  if (t_grid.empty() || t_grid.front() > 0.0) t_grid.insert(t_grid.begin(), 0.0);
  FieldTrajectory traj = propagate_reference(sym, u0, t_grid, 0.0, opts);
  DispersiveFit fit;
  fit.ts = times;
  std::vector<double> xs, ys;
  for (double t : times) {
    double v = traj.at_time(t).linf_norm();
    fit.linf.push_back(v);
    if (t > 0.0) {
      xs.push_back(std::log1p(t));
      ys.push_back(std::log(v));
    }
  }
  LineFit lf = fit_line(xs, ys);
  fit.slope = lf.slope;
  fit.intercept = lf.intercept;
  fit.max_residual = lf.max_residual;
  return fit;
}

// ---------------------------------------------------------------------------

struct TransversalityReport {
  Vec delta_v;
  double abs_delta_v = 0.0;
  // <Delta_v, (hess_xi p_j)^{-1} Delta_v> at the two flow states
  double quad1 = 0.0, quad2 = 0.0;
  bool quad1_valid = false, quad2_valid = false;
  // <xi_j / |xi_j|, Delta_v>
  double proj1 = 0.0, proj2 = 0.0;
  // averaged-Hessian variants over each trajectory's span
  double avg_quad1 = 0.0, avg_quad2 = 0.0;
  bool avg1_valid = false, avg2_valid = false;
};

inline TransversalityReport transversality_check(const SymbolModel& sym1,
                                                 const SymbolModel& sym2,
                                                 const Bicharacteristic& b1,
                                                 const Bicharacteristic& b2, double t) {
  PhasePoint z1 = b1.state_at(t), z2 = b2.state_at(t);
  TransversalityReport rep;
  Vec v1 = sym1.grad_xi(z1.x, t, z1.xi);
  Vec v2 = sym2.grad_xi(z2.x, t, z2.xi);
  rep.delta_v = v1 - v2;
  rep.abs_delta_v = norm(rep.delta_v);

  auto quad = [&](const SymbolModel& s, const PhasePoint& z, double& out) {
    Mat h = s.hess_xi(z.x, t, z.xi);
    if (sym_condition(h) > 1e12) return false;
    out = dot(inverse(h) * rep.delta_v, rep.delta_v);
    return true;
  };
  rep.quad1_valid = quad(sym1, z1, rep.quad1);
  rep.quad2_valid = quad(sym2, z2, rep.quad2);

  double n1 = norm(z1.xi), n2 = norm(z2.xi);
  if (n1 > 0.0) rep.proj1 = dot(z1.xi * (1.0 / n1), rep.delta_v);
  if (n2 > 0.0) rep.proj2 = dot(z2.xi * (1.0 / n2), rep.delta_v);

  auto avg_quad = [&](const SymbolModel& s, const Bicharacteristic& b, double& out) {
    AveragedHessian ah = averaged_hessian(s, b, b.t.front(), b.t.back());
    if (!ah.invertible) return false;
    out = dot(inverse(ah.A) * rep.delta_v, rep.delta_v);
    return true;
  };
  rep.avg1_valid = avg_quad(sym1, b1, rep.avg_quad1);
  rep.avg2_valid = avg_quad(sym2, b2, rep.avg_quad2);
  return rep;
}

// ---------------------------------------------------------------------------
// Energy-difference function and its near-zero shell on a frequency grid.

inline double energy_difference(const SymbolModel& sym1, const SymbolModel& sym2,
                                const Vec& x, double t, const Vec& xi1, const Vec& xi2p,
                                const Vec& eta) {
  return sym1.p(x, t, xi1) + sym2.p(x, t, eta + xi2p - xi1) - sym1.p(x, t, eta) -
         sym2.p(x, t, xi2p);
}

// All frequency-grid points eta with |F(eta)| <= tol; sound and complete on
// the grid by construction.
inline std::vector<Vec> energy_shell_sample(const SymbolModel& sym1,
                                            const SymbolModel& sym2, const Vec& x,
                                            double t, const Vec& xi1, const Vec& xi2p,
                                            double tol, const SpatialGrid& grid) {
  if (!(tol > 0.0)) throw ParameterError("energy_shell_sample: tol must be positive");
  std::vector<Vec> shell;
  auto test = [&](const Vec& eta) {
    if (std::abs(energy_difference(sym1, sym2, x, t, xi1, xi2p, eta)) <= tol)
      shell.push_back(eta);
  };
  if (grid.d == 1) {
    for (int k = 0; k < grid.N; ++k) test(Vec(grid.xi(k)));
  } else {
    for (int k0 = 0; k0 < grid.N; ++k0)
      for (int k1 = 0; k1 < grid.N; ++k1) test(Vec(grid.xi(k0), grid.xi(k1)));
  }
  return shell;
}

// ---------------------------------------------------------------------------
// Conservation flags for a packet quadruple (T1, T2, T1', T2'); T1, T1' ride
// sym1 and T2, T2' ride sym2.

struct ConservationFlags {
  bool position_ok = false;
  bool momentum_ok = false;
  bool energy_ok = false;
  double position_worst = 0.0;  // worst pairwise |x_T - x_T'| at t_q
  double momentum_defect = 0.0;
  double energy_defect = 0.0;
  bool all() const { return position_ok && momentum_ok && energy_ok; }
};

inline ConservationFlags conservation_flags(const SymbolModel& sym1,
                                            const SymbolModel& sym2,
                                            const std::array<WavePacket, 4>& quad,
                                            const SpaceTimeCube& cube,
                                            const ScaleParams& params) {
  double tq = cube.t_center;
  std::array<PhasePoint, 4> z;
  for (int i = 0; i < 4; ++i) z[i] = quad[i].traj.state_at(tq);

  ConservationFlags f;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      f.position_worst = std::max(f.position_worst, norm(z[i].x - z[j].x));
  f.position_ok = f.position_worst <= std::pow(params.R, 0.5 + params.delta);

  Vec mom = z[0].xi + z[1].xi - z[2].xi - z[3].xi;
  f.momentum_defect = norm(mom);
  double small = std::pow(params.R, -0.5 + params.delta);
  f.momentum_ok = f.momentum_defect <= small;

  const Vec& xq = cube.x_center;
  f.energy_defect = std::abs(sym1.p(xq, tq, z[0].xi) + sym2.p(xq, tq, z[1].xi) -
                             sym1.p(xq, tq, z[2].xi) - sym2.p(xq, tq, z[3].xi));
  f.energy_ok = f.energy_defect <= small;
  return f;
}

// ---------------------------------------------------------------------------
// chi_q: tensor smooth bump, 1 on q, >= 1/2 well inside, supported in 2q.

inline double cube_weight(const SpaceTimeCube& cube, const Vec& x, double t) {
  double w = bump(2.0 * std::abs(t - cube.t_center) / cube.side);
  for (int i = 0; i < x.dim; ++i)
    w *= bump(2.0 * std::abs(x[i] - cube.x_center[i]) / cube.side);
  return w;
}

// int int chi_q^4 u1 conj(u2) u3 conj(u4) dx dt over the trajectories' shared
// sample times inside the cube.
inline cplx quadrilinear_integral(const std::array<const FieldTrajectory*, 4>& trajs,
                                  const SpaceTimeCube& cube) {
  cube.validate();
  const FieldTrajectory& a = *trajs[0];
  for (int i = 1; i < 4; ++i) {
    if (trajs[i]->ts != a.ts || !(trajs[i]->us[0].grid == a.us[0].grid))
      throw ResolutionError("quadrilinear_integral: trajectories disagree on sampling");
  }
  std::vector<size_t> in;
  for (size_t i = 0; i < a.ts.size(); ++i)
    if (a.ts[i] >= cube.t_lo() - 1e-12 && a.ts[i] <= cube.t_hi() + 1e-12) in.push_back(i);
  if (static_cast<int>(in.size()) < cube.resolution)
    throw ResolutionError("quadrilinear_integral: cube undersampled in time");

  const SpatialGrid& g = a.us[0].grid;
  auto slab = [&](size_t i) {
    double t = a.ts[i];
    cplx acc = 0.0;
    auto term = [&](size_t flat, const Vec& x) {
      double w = cube_weight(cube, x, t);
      if (w == 0.0) return;
      cplx prod = trajs[0]->us[i].v[flat] * std::conj(trajs[1]->us[i].v[flat]) *
                  trajs[2]->us[i].v[flat] * std::conj(trajs[3]->us[i].v[flat]);
      acc += w * w * w * w * prod;
    };
    if (g.d == 1) {
      for (int j = 0; j < g.N; ++j) term(static_cast<size_t>(j), Vec(g.x(j)));
    } else {
      for (int j0 = 0; j0 < g.N; ++j0)
        for (int j1 = 0; j1 < g.N; ++j1)
          term(static_cast<size_t>(j0) * g.N + j1, Vec(g.x(j0), g.x(j1)));
    }
    return acc * std::pow(g.dx(), g.d);
  };

  std::vector<cplx> vals(in.size());
  for (size_t k = 0; k < in.size(); ++k) vals[k] = slab(in[k]);

  // Composite Simpson when the retained samples are uniform with an even
  // interval count (the oscillatory defect cases need the extra order);
  // trapezoid otherwise.
  double h0 = a.ts[in[1]] - a.ts[in[0]];
  bool uniform = true;
  for (size_t k = 1; k + 1 < in.size(); ++k)
    if (std::abs(a.ts[in[k + 1]] - a.ts[in[k]] - h0) > 1e-9 * (std::abs(h0) + 1e-12))
      uniform = false;
  cplx acc = 0.0;
  if (uniform && in.size() >= 3 && in.size() % 2 == 1) {
    acc = vals.front() + vals.back();
    for (size_t k = 1; k + 1 < in.size(); ++k) acc += (k % 2 ? 4.0 : 2.0) * vals[k];
    acc *= h0 / 3.0;
  } else {
    for (size_t k = 0; k + 1 < in.size(); ++k) {
      double dt = a.ts[in[k + 1]] - a.ts[in[k]];
      acc += 0.5 * dt * (vals[k] + vals[k + 1]);
    }
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Bilinear sweep over (R, nu): two localized unit-L2 inputs with frequency
// separation nu, evolved over the cube Q_R, product measured in L^p.

struct BilinearDataSpec {
  enum class Kind { paraboloid, halfwave };
  Kind kind = Kind::paraboloid;
  double base_frequency = 0.5;   // center frequency (paraboloid) or common
                                 // direction frequency (halfwave, ~1)
  double metric_eps = 0.0;       // cosine perturbation amplitude
};

struct BilinearPoint {
  double R = 0.0;
  double nu = 0.0;
  double norm = 0.0;
};

struct BilinearSweep {
  std::vector<BilinearPoint> points;
  double nu_slope = 0.0;  // fitted at the largest R
  double R_slope = 0.0;   // fitted at the smallest nu
  double p = 2.0;
};

namespace detail {

struct BilinearPair {
  SymbolModel sym1, sym2;
  SpatialField u1, u2;
};

inline BilinearPair bilinear_data(const BilinearDataSpec& spec, double R, double nu,
                                  const SpatialGrid& g) {
  BilinearPair out;
  if (spec.kind == BilinearDataSpec::Kind::paraboloid) {
    MetricField m = spec.metric_eps == 0.0 ? metric_constant(1, 1.0)
                                           : metric_cosine(1, 1.0, spec.metric_eps, R);
    out.sym1 = make_schrodinger(m);
    out.sym2 = out.sym1;
    out.u1 = coherent_state(Vec(0.0), Vec(spec.base_frequency - nu / 2.0), R, g);
    out.u2 = coherent_state(Vec(0.0), Vec(spec.base_frequency + nu / 2.0), R, g);
  } else {
    // Two half-waves with different sound speeds; the data share a frequency,
    // transversality comes from |sqrt(g1) - sqrt(g2)| = nu.
    double s1 = 1.0, s2 = (1.0 + nu) * (1.0 + nu);
    out.sym1 = make_halfwave(metric_constant(1, s1));
    out.sym2 = make_halfwave(metric_constant(1, s2));
    out.u1 = coherent_state(Vec(0.0), Vec(spec.base_frequency), R, g);
    out.u2 = coherent_state(Vec(0.0), Vec(spec.base_frequency), R, g);
  }
  out.u1 *= cplx(1.0 / out.u1.l2_norm());
  out.u2 *= cplx(1.0 / out.u2.l2_norm());
  return out;
}

}  // namespace detail

inline double bilinear_norm(const BilinearDataSpec& spec, double R, double nu, double p,
                            int resolution = 16) {
  // Grid sized so packets moving at speed O(1) stay inside over [-R/2, R/2].
  // A perturbed metric lives on the torus of half-length pi R, so the grid
  // must span an even multiple of that box for the modal quantization path.
  double L = (spec.metric_eps == 0.0) ? 2.0 * R : 2.0 * pi * R;
  int N = 64;
  while (2.0 * L / N > 0.25 && N < 65536) N *= 2;
  SpatialGrid g(1, L, N);
  detail::BilinearPair pair = detail::bilinear_data(spec, R, nu, g);

  SpaceTimeCube q;
  q.x_center = Vec(0.0);
  q.t_center = 0.0;
  q.side = R;
  q.resolution = resolution;
  std::vector<double> ts = q.time_samples();
  FieldTrajectory t1 = propagate_reference(pair.sym1, pair.u1, ts, 0.0);
  FieldTrajectory t2 = propagate_reference(pair.sym2, pair.u2, ts, 0.0);

  FieldTrajectory prod;
  prod.ts = ts;
  for (size_t i = 0; i < ts.size(); ++i) {
    SpatialField f = t1.us[i];
    for (size_t j = 0; j < f.v.size(); ++j) f.v[j] *= t2.us[i].v[j];
    prod.us.push_back(std::move(f));
  }
  return lp_spacetime_norm(prod, p, q);
}

inline BilinearSweep bilinear_sweep(const BilinearDataSpec& spec,
                                    const std::vector<double>& R_list,
                                    const std::vector<double>& nu_list, double p,
                                    int resolution = 16) {
  if (R_list.size() < 3 || nu_list.size() < 3)
    throw FitError("bilinear_sweep: need at least 3 sweep points per axis");
  BilinearSweep sweep;
  sweep.p = p;
  for (double R : R_list)
    for (double nu : nu_list)
      sweep.points.push_back({R, nu, bilinear_norm(spec, R, nu, p, resolution)});

  double Rmax = *std::max_element(R_list.begin(), R_list.end());
  double numin = *std::min_element(nu_list.begin(), nu_list.end());
  std::vector<double> xs, ys;
  for (const BilinearPoint& pt : sweep.points)
    if (pt.R == Rmax) {
      xs.push_back(std::log(pt.nu));
      ys.push_back(std::log(pt.norm));
    }
  sweep.nu_slope = fit_line(xs, ys).slope;
  xs.clear();
  ys.clear();
  for (const BilinearPoint& pt : sweep.points)
    if (pt.nu == numin) {
      xs.push_back(std::log(pt.R));
      ys.push_back(std::log(pt.norm));
    }
  sweep.R_slope = fit_line(xs, ys).slope;
  return sweep;
}

// ---------------------------------------------------------------------------
// Localization report: tail masses outside the three Assumption-style
// neighborhoods for an exact-mode evolved packet.

struct LocalizationRow {
  double t = 0.0;
  double space_tail = 0.0;      // mass outside |x - x^t| <= r^{1/2+delta}
  double freq_tail = 0.0;       // mass outside |xi - xi^t| <= r^{-1/2+delta}
  double tf_tail = 0.0;         // windowed-in-time mass outside
                                // |tau + p(x^t, t, xi^t)| <= r^{-1/2+delta}
  double tf_peak_offset = 0.0;  // |tau_peak + p| in tau bins
};

struct LocalizationReport {
  std::vector<LocalizationRow> rows;
  double worst_space = 0.0, worst_freq = 0.0, worst_tf = 0.0;
};

inline LocalizationReport localization_report(const WavePacket& packet,
                                              const SymbolModel& sym, double r,
                                              double delta,
                                              const std::vector<double>& t_grid,
                                              const SpatialGrid& grid,
                                              const PropagateOptions& popts = {}) {
  LocalizationReport rep;
  double xrad = std::pow(r, 0.5 + delta);
  double xirad = std::pow(r, -0.5 + delta);

  // Time window for the tau transform: duration ~ 2 pi r^{1/2} resolves the
  // r^{-1/2+delta} neighborhood with ~ r^delta bins.
  const int M = 64;
  double W = 2.0 * pi * std::sqrt(r);
  double ds = W / M;

  // One propagation pass from the initial slice across all requested times
  // (per-time packet_evolve would re-integrate from t = 0 every time).
  for (size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw ParameterError("localization_report: time grid must increase");
  SpatialField u0 = packet.has_initial
                        ? packet.initial
                        : detail::frozen_field(packet, grid, packet.traj.start(), 0.0);
  std::vector<double> base_ts = t_grid;
  if (base_ts.front() > 0.0) base_ts.insert(base_ts.begin(), 0.0);
  if (base_ts.back() < 0.0) base_ts.push_back(0.0);
  FieldTrajectory base = propagate_reference(sym, u0, base_ts, 0.0, popts);

  for (double t : t_grid) {
    LocalizationRow row;
    row.t = t;
    PhasePoint z = packet.traj.state_at(t);
    const SpatialField& u = base.at_time(t);

    double out_x = 0.0, tot = 0.0;
    for (int j = 0; j < grid.N; ++j) {
      double m = std::norm(u.at(j));
      tot += m;
      if (std::abs(grid.wrap(grid.x(j) - z.x[0])) > xrad) out_x += m;
    }
    row.space_tail = (tot > 0.0) ? out_x / tot : 0.0;

    std::vector<cplx> hat = fourier_forward(u);
    double out_xi = 0.0, tot_xi = 0.0;
    for (int k = 0; k < grid.N; ++k) {
      double m = std::norm(hat[static_cast<size_t>(k)]);
      tot_xi += m;
      if (std::abs(grid.xi(k) - z.xi[0]) > xirad) out_xi += m;
    }
    row.freq_tail = (tot_xi > 0.0) ? out_xi / tot_xi : 0.0;

    // Windowed time transform: series u(t + s_m, x), Gaussian window, FFT in
    // s with kernel e^{-i tau s} (same sign as the spatial transform), so a
    // factor e^{-i a s} lands at tau = -a.
    std::vector<double> offsets;
    for (int m = 0; m < M; ++m) offsets.push_back(-W / 2.0 + m * ds);
    std::vector<double> ts;
    for (double s : offsets) ts.push_back(t + s);
    FieldTrajectory win = propagate_reference(sym, u, ts, t, popts);
    // tau bins of the length-M series at spacing ds
    double p_here = sym.p(z.x, t, z.xi);
    std::vector<double> tau_mass(static_cast<size_t>(M), 0.0);
    std::vector<cplx> series(static_cast<size_t>(M));
    double sigma = W / 6.0;
    for (int j = 0; j < grid.N; ++j) {
      for (int m = 0; m < M; ++m) {
        double s = offsets[static_cast<size_t>(m)];
        double wgt = std::exp(-s * s / (2.0 * sigma * sigma));
        series[static_cast<size_t>(m)] = wgt * win.us[static_cast<size_t>(m)].at(j);
      }
      FftEngine::instance().transform_1d(series, FFTW_FORWARD);
      for (int m = 0; m < M; ++m)
        tau_mass[static_cast<size_t>(m)] += std::norm(series[static_cast<size_t>(m)]);
    }
    // The forward DFT kernel e^{-2 pi i m m'/M} samples the e^{-i tau s}
    // transform at tau = +2 pi m'/W (m' wrapped), so a factor e^{-i a s}
    // lands in the bin with tau = -a.
    auto tau_of = [&](int m) {
      int mm = (m < M / 2) ? m : m - M;
      return 2.0 * pi * mm / W;
    };
    double out_tf = 0.0, tot_tf = 0.0, best = 0.0;
    int best_m = 0;
    for (int m = 0; m < M; ++m) {
      double mass = tau_mass[static_cast<size_t>(m)];
      tot_tf += mass;
      if (std::abs(tau_of(m) + p_here) > xirad) out_tf += mass;
      if (mass > best) {
        best = mass;
        best_m = m;
      }
    }
    row.tf_tail = (tot_tf > 0.0) ? out_tf / tot_tf : 0.0;
    row.tf_peak_offset = std::abs(tau_of(best_m) + p_here) / (2.0 * pi / W);

    rep.worst_space = std::max(rep.worst_space, row.space_tail);
    rep.worst_freq = std::max(rep.worst_freq, row.freq_tail);
    rep.worst_tf = std::max(rep.worst_tf, row.tf_tail);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace wp
