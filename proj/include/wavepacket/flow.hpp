#pragma once

// Hamiltonian bicharacteristics: xdot = dp/dxi, xidot = -dp/dx, the phase
// shift psi with dpsi/dt = -p + xi . dp/dxi (closed form (h-1) int p ds for
// homogeneity h in {1,2}), the linearized (variational) flow integrated along
// the same Runge-Kutta stages, and the flow-regularity diagnostics.

#include <optional>
#include <sstream>
#include <vector>

#include "wavepacket/common.hpp"
#include "wavepacket/geometry.hpp"
#include "wavepacket/symbols.hpp"

namespace wp {

struct Bicharacteristic {
  std::vector<double> t;
  std::vector<PhasePoint> state;
  std::vector<double> psi;
  std::vector<SqMat> variational;  // empty unless requested
  double richardson_error = 0.0;   // state discrepancy vs half-resolution run
  double psi_crosscheck = 0.0;     // |psi_ode - psi_closed| max (h in {1,2})

  const PhasePoint& start() const { return state[index_of(0.0)]; }

  size_t index_of(double time) const {
    for (size_t i = 0; i < t.size(); ++i)
      if (std::abs(t[i] - time) < 1e-9 * (1.0 + std::abs(time))) return i;
    throw ParameterError("Bicharacteristic: time not on the sample grid");
  }

  // Linear interpolation of the state at an arbitrary time in the span.
  PhasePoint state_at(double time) const {
    if (time < t.front() - 1e-9 || time > t.back() + 1e-9)
      throw ParameterError("Bicharacteristic: time outside span");
    if (time <= t.front()) return state.front();
    if (time >= t.back()) return state.back();
    size_t hi = 1;
    while (t[hi] < time) ++hi;
    double w = (time - t[hi - 1]) / (t[hi] - t[hi - 1]);
    PhasePoint p;
    p.x = (1.0 - w) * state[hi - 1].x + w * state[hi].x;
    p.xi = (1.0 - w) * state[hi - 1].xi + w * state[hi].xi;
    return p;
  }

  double psi_at(double time) const {
    if (time <= t.front()) return psi.front();
    if (time >= t.back()) return psi.back();
    size_t hi = 1;
    while (t[hi] < time) ++hi;
    double w = (time - t[hi - 1]) / (t[hi] - t[hi - 1]);
    return (1.0 - w) * psi[hi - 1] + w * psi[hi];
  }
};

struct FlowOptions {
  int steps = 256;  // steps per direction over the requested span
  bool with_variational = false;
  const PhaseSpaceRegion* escape_region = nullptr;
};

namespace detail {

struct FlowState {
  PhasePoint z;
  double psi_ode = 0.0;  // integral of (-p + xi . p_xi)
  double int_p = 0.0;    // integral of p (for the closed form)
  SqMat M;
};

inline SqMat variational_rhs_matrix(const SymbolModel& sym, const PhasePoint& z, double t) {
  int d = sym.d;
  Mat C = sym.cross(z.x, t, z.xi);    // C(i,j) = d_{x_i} d_{xi_j} p
  Mat Hxi = sym.hess_xi(z.x, t, z.xi);
  Mat Hx = sym.hess_x(z.x, t, z.xi);
  SqMat A = SqMat::zero(2 * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      A(i, j) = C(j, i);            // d(xdot)/dx = C^T
      A(i, d + j) = Hxi(i, j);      // d(xdot)/dxi
      A(d + i, j) = -Hx(i, j);      // d(xidot)/dx
      A(d + i, d + j) = -C(i, j);   // d(xidot)/dxi
    }
  return A;
}

inline FlowState flow_rhs(const SymbolModel& sym, const FlowState& s, double t,
                          bool with_var) {
  FlowState r;
  r.z.x = sym.grad_xi(s.z.x, t, s.z.xi);
  r.z.xi = -1.0 * sym.grad_x(s.z.x, t, s.z.xi);
  double p = sym.p(s.z.x, t, s.z.xi);
  r.psi_ode = -p + dot(s.z.xi, r.z.x);
  r.int_p = p;
  if (with_var) r.M = variational_rhs_matrix(sym, s.z, t) * s.M;
  return r;
}

inline FlowState axpy(const FlowState& s, double h, const FlowState& k, bool with_var) {
  FlowState r = s;
  r.z.x += h * k.z.x;
  r.z.xi += h * k.z.xi;
  r.psi_ode += h * k.psi_ode;
  r.int_p += h * k.int_p;
  if (with_var) r.M = r.M + h * k.M;
  return r;
}

// One classical RK4 step of size h at time t.
inline FlowState rk4_step(const SymbolModel& sym, const FlowState& s, double t, double h,
                          bool with_var) {
  FlowState k1 = flow_rhs(sym, s, t, with_var);
  FlowState k2 = flow_rhs(sym, axpy(s, h / 2, k1, with_var), t + h / 2, with_var);
  FlowState k3 = flow_rhs(sym, axpy(s, h / 2, k2, with_var), t + h / 2, with_var);
  FlowState k4 = flow_rhs(sym, axpy(s, h, k3, with_var), t + h, with_var);
  FlowState r = s;
  r.z.x += (h / 6) * (k1.z.x + 2.0 * k2.z.x + 2.0 * k3.z.x + k4.z.x);
  r.z.xi += (h / 6) * (k1.z.xi + 2.0 * k2.z.xi + 2.0 * k3.z.xi + k4.z.xi);
  r.psi_ode += (h / 6) * (k1.psi_ode + 2 * k2.psi_ode + 2 * k3.psi_ode + k4.psi_ode);
  r.int_p += (h / 6) * (k1.int_p + 2 * k2.int_p + 2 * k3.int_p + k4.int_p);
  if (with_var)
    r.M = r.M + (h / 6) * (k1.M + 2.0 * (k2.M + k3.M) + k4.M);
  return r;
}

// Integrate from time 0 to signed time T in `steps` steps; appends samples
// after the initial one.
inline std::vector<FlowState> run_direction(const SymbolModel& sym, FlowState s, double T,
                                            int steps, bool with_var,
                                            const PhaseSpaceRegion* region,
                                            std::vector<double>* times) {
  std::vector<FlowState> out;
  double h = T / steps;
  double t = 0.0;
  for (int k = 0; k < steps; ++k) {
    s = rk4_step(sym, s, t, h, with_var);
    t = (k + 1) * h;
    if (region) {
      PhasePoint z = s.z;
      if (!region->contains(z))
        throw FlowEscapeError("bicharacteristic left the flow-out region", t);
    }
    out.push_back(s);
    times->push_back(t);
  }
  return out;
}

}  // namespace detail

// Integrates over t_span = [t0, t1] with t0 <= 0 <= t1; the start state is
// given at time 0. `opt.steps` is used per direction; the sample grid contains
// t = 0 exactly.
inline Bicharacteristic integrate_bicharacteristic(const SymbolModel& sym,
                                                   const PhasePoint& start, double t0,
                                                   double t1, FlowOptions opt = {}) {
  if (opt.steps < 16) throw ParameterError("integrate_bicharacteristic: steps >= 16");
  if (!(t0 <= 0.0 && t1 >= 0.0 && t1 > t0))
    throw ParameterError("integrate_bicharacteristic: span must contain 0");

  detail::FlowState init;
  init.z = start;
  init.M = SqMat::identity(2 * sym.d);

  auto run_with = [&](int steps) {
    std::vector<double> t_fwd, t_bwd;
    std::vector<detail::FlowState> fwd, bwd;
    if (t1 > 0.0)
      fwd = detail::run_direction(sym, init, t1, steps, opt.with_variational,
                                  opt.escape_region, &t_fwd);
    if (t0 < 0.0)
      bwd = detail::run_direction(sym, init, t0, steps, opt.with_variational,
                                  opt.escape_region, &t_bwd);
    Bicharacteristic b;
    for (size_t i = bwd.size(); i-- > 0;) {
      b.t.push_back(t_bwd[i]);
      b.state.push_back(bwd[i].z);
      double psi_closed = (sym.homogeneity == 1 || sym.homogeneity == 2)
                              ? (sym.homogeneity - 1) * bwd[i].int_p
                              : bwd[i].psi_ode;
      b.psi.push_back(psi_closed);
      b.psi_crosscheck = std::max(b.psi_crosscheck, std::abs(psi_closed - bwd[i].psi_ode));
      if (opt.with_variational) b.variational.push_back(bwd[i].M);
    }
    b.t.push_back(0.0);
    b.state.push_back(start);
    b.psi.push_back(0.0);
    if (opt.with_variational) b.variational.push_back(SqMat::identity(2 * sym.d));
    for (size_t i = 0; i < fwd.size(); ++i) {
      b.t.push_back(t_fwd[i]);
      b.state.push_back(fwd[i].z);
      double psi_closed = (sym.homogeneity == 1 || sym.homogeneity == 2)
                              ? (sym.homogeneity - 1) * fwd[i].int_p
                              : fwd[i].psi_ode;
      b.psi.push_back(psi_closed);
      b.psi_crosscheck = std::max(b.psi_crosscheck, std::abs(psi_closed - fwd[i].psi_ode));
      if (opt.with_variational) b.variational.push_back(fwd[i].M);
    }
    return b;
  };

  Bicharacteristic fine = run_with(opt.steps);
  // Richardson estimate against a half-resolution run (endpoints only).
  int coarse_steps = std::max(16, opt.steps / 2);
  FlowOptions copt = opt;
  copt.with_variational = false;
  Bicharacteristic coarse;
  {
    std::vector<double> tf, tb;
    std::vector<detail::FlowState> fwd, bwd;
    if (t1 > 0.0)
      fwd = detail::run_direction(sym, init, t1, coarse_steps, false, nullptr, &tf);
    if (t0 < 0.0)
      bwd = detail::run_direction(sym, init, t0, coarse_steps, false, nullptr, &tb);
    double err = 0.0;
    if (!fwd.empty())
      err = std::max(err, norm(fwd.back().z.x - fine.state.back().x) +
                              norm(fwd.back().z.xi - fine.state.back().xi));
    if (!bwd.empty())
      err = std::max(err, norm(bwd.back().z.x - fine.state.front().x) +
                              norm(bwd.back().z.xi - fine.state.front().xi));
    fine.richardson_error = err / 15.0;  // order-4 extrapolation factor
  }
  return fine;
}

// Per spec: linearized flow along an existing trajectory (re-integrated on the
// same grid so the stage states are exact).
inline std::vector<SqMat> variational_flow(const SymbolModel& sym,
                                           const Bicharacteristic& bichar) {
  size_t i0 = bichar.index_of(0.0);
  int steps_fwd = static_cast<int>(bichar.t.size() - 1 - i0);
  int steps_bwd = static_cast<int>(i0);
  FlowOptions opt;
  opt.steps = std::max({16, steps_fwd, steps_bwd});
  opt.with_variational = true;
  Bicharacteristic b = integrate_bicharacteristic(
      sym, bichar.state[i0], bichar.t.front(), bichar.t.back(), opt);
  // Resample onto the caller's grid (grids agree when steps matched).
  std::vector<SqMat> out;
  for (double time : bichar.t) out.push_back(b.variational[b.index_of(time)]);
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics.

struct BiLipschitzRow {
  size_t pair = 0;
  double t = 0.0;
  double ratio = 0.0;
  double envelope = 0.0;
  bool violated = false;
};

struct BiLipschitzReport {
  std::vector<BiLipschitzRow> rows;
  size_t skipped = 0;
  size_t violations = 0;
};

inline BiLipschitzReport bilipschitz_report(
    const SymbolModel& sym, const std::vector<std::pair<PhasePoint, PhasePoint>>& pairs,
    double R, double T, double C2, int steps = 256, int sample_times = 17) {
  if (std::abs(T) > R * (1.0 + 1e-12))
    throw ParameterError("bilipschitz_report: |T| must be <= R");
  BiLipschitzReport rep;
  for (size_t k = 0; k < pairs.size(); ++k) {
    double d0 = d_r_metric(pairs[k].first, pairs[k].second, R);
    if (d0 == 0.0) {
      ++rep.skipped;
      continue;
    }
    FlowOptions opt;
    opt.steps = steps;
    auto b1 = integrate_bicharacteristic(sym, pairs[k].first, -T, T, opt);
    auto b2 = integrate_bicharacteristic(sym, pairs[k].second, -T, T, opt);
    for (int j = 0; j < sample_times; ++j) {
      double t = -T + 2.0 * T * j / (sample_times - 1);
      PhasePoint z1 = b1.state_at(t);
      PhasePoint z2 = b2.state_at(t);
      BiLipschitzRow row;
      row.pair = k;
      row.t = t;
      row.ratio = d_r_metric(z1, z2, R) / d0;
      row.envelope = std::exp(2.0 * C2 * std::abs(t) / R);
      row.violated = row.ratio > row.envelope * (1.0 + 1e-9);
      if (row.violated) ++rep.violations;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

struct SeparationReport {
  double ratio_min = std::numeric_limits<double>::infinity();
  double ratio_max = 0.0;
  std::vector<std::array<double, 3>> rows;  // (t, pair index, ratio)
  size_t skipped = 0;
};

// Ratios |x1(t) - x2(t)| / (|t| |dxi|) over t in [t_min, T] for all pairs of
// starting frequencies; angular mode divides by the angle between the
// frequencies instead of |dxi|.
inline SeparationReport separation_report(const SymbolModel& sym, const Vec& x0,
                                          const std::vector<Vec>& xis, double t_min,
                                          double T, bool angular = false,
                                          int steps = 256, int sample_times = 9) {
  SeparationReport rep;
  std::vector<Bicharacteristic> flows;
  for (const Vec& xi : xis) {
    FlowOptions opt;
    opt.steps = steps;
    flows.push_back(integrate_bicharacteristic(sym, PhasePoint{x0, xi}, 0.0, T, opt));
  }
  size_t pair_idx = 0;
  for (size_t i = 0; i < xis.size(); ++i)
    for (size_t j = i + 1; j < xis.size(); ++j, ++pair_idx) {
      double denom_base;
      if (angular) {
        double c = dot(xis[i], xis[j]) / (norm(xis[i]) * norm(xis[j]));
        denom_base = std::acos(std::clamp(c, -1.0, 1.0));
      } else {
        denom_base = norm(xis[i] - xis[j]);
      }
      if (denom_base == 0.0) {
        ++rep.skipped;
        continue;
      }
      for (int k = 0; k < sample_times; ++k) {
        double t = t_min + (T - t_min) * k / (sample_times - 1);
        double dx = norm(flows[i].state_at(t).x - flows[j].state_at(t).x);
        double ratio = dx / (std::abs(t) * denom_base);
        rep.ratio_min = std::min(rep.ratio_min, ratio);
        rep.ratio_max = std::max(rep.ratio_max, ratio);
        rep.rows.push_back({t, static_cast<double>(pair_idx), ratio});
      }
    }
  return rep;
}

struct AveragedHessian {
  Mat A;
  double condition = 0.0;
  bool invertible = true;
};

// Trapezoid average of hess_xi p along the trajectory over [t_q, t].
inline AveragedHessian averaged_hessian(const SymbolModel& sym,
                                        const Bicharacteristic& bichar, double t_q,
                                        double t) {
  if (t == t_q) throw ParameterError("averaged_hessian: empty time window");
  double lo = std::min(t_q, t), hi = std::max(t_q, t);
  if (lo < bichar.t.front() - 1e-9 || hi > bichar.t.back() + 1e-9)
    throw ParameterError("averaged_hessian: window outside trajectory span");

  // Integration nodes: window ends plus interior samples.
  std::vector<double> nodes{lo};
  for (double s : bichar.t)
    if (s > lo + 1e-12 && s < hi - 1e-12) nodes.push_back(s);
  nodes.push_back(hi);

  Mat acc = Mat::zero(sym.d);
  for (size_t k = 0; k + 1 < nodes.size(); ++k) {
    double h = nodes[k + 1] - nodes[k];
    PhasePoint za = bichar.state_at(nodes[k]);
    PhasePoint zb = bichar.state_at(nodes[k + 1]);
    Mat ha = sym.hess_xi(za.x, nodes[k], za.xi);
    Mat hb = sym.hess_xi(zb.x, nodes[k + 1], zb.xi);
    acc = acc + (h / 2.0) * (ha + hb);
  }
  AveragedHessian out;
  out.A = (1.0 / (hi - lo)) * acc;
  out.condition = sym_condition(out.A);
  out.invertible = out.condition <= 1e12;
  return out;
}

// CSV export: t, x components, xi components, psi.
inline std::string to_csv(const Bicharacteristic& b, int d) {
  std::ostringstream os;
  os.precision(17);
  os << "t";
  for (int i = 0; i < d; ++i) os << ",x" << i;
  for (int i = 0; i < d; ++i) os << ",xi" << i;
  os << ",psi\n";
  for (size_t k = 0; k < b.t.size(); ++k) {
    os << b.t[k];
    for (int i = 0; i < d; ++i) os << "," << b.state[k].x[i];
    for (int i = 0; i < d; ++i) os << "," << b.state[k].xi[i];
    os << "," << b.psi[k] << "\n";
  }
  return os.str();
}

}  // namespace wp
