#pragma once

// Named experiments behind the command-line driver. Each one reads its
// parameters from a parsed config, runs the corresponding checks, and returns
// a report bundle: a JSON summary with pass/fail verdicts, CSV tables, a
// gnuplot script over those tables, and a byte-exact echo of the input config.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "wavepacket/budget.hpp"
#include "wavepacket/config.hpp"
#include "wavepacket/estimates.hpp"
#include "wavepacket/fbi.hpp"
#include "wavepacket/flow.hpp"
#include "wavepacket/io.hpp"
#include "wavepacket/propagate.hpp"
#include "wavepacket/tubes.hpp"

namespace wp {

struct ReportBundle {
  std::string experiment;
  bool pass = true;
  json summary;
  std::vector<std::pair<std::string, CsvTable>> tables;
  Config config;

  // Writes <out_root>/<experiment>/{summary.json, config.toml, plot.gp, *.csv}
  // and returns that directory.
  std::filesystem::path write(const std::filesystem::path& out_root) const {
    std::filesystem::path dir = out_root / experiment;
    std::filesystem::create_directories(dir);
    json full = summary;
    full["experiment"] = experiment;
    full["pass"] = pass;
    full["overrides"] = config.overrides;
    std::vector<std::string> names;
    for (const auto& [name, table] : tables) names.push_back(name + ".csv");
    full["tables"] = names;
    write_text(dir / "summary.json", full.dump(2) + "\n");
    write_text(dir / "config.toml", config.raw);
    for (const auto& [name, table] : tables)
      write_text(dir / (name + ".csv"), table.to_string());
    write_text(dir / "plot.gp", plot_script());
    return dir;
  }

  std::string plot_script() const {
    std::string s = "set datafile separator \",\"\nset key autotitle columnhead\n";
    for (const auto& [name, table] : tables) {
      if (table.columns.size() < 2) continue;
      s += "set title \"" + experiment + ": " + name + "\"\n";
      s += "plot";
      for (size_t c = 2; c <= table.columns.size(); ++c)
        s += std::string(c > 2 ? "," : "") + " \"" + name + ".csv\" using 1:" +
             std::to_string(c) + " with linespoints";
      s += "\npause -1\n";
    }
    return s;
  }
};

inline std::filesystem::path default_output_root() {
  const char* env = std::getenv("WPLAB_OUT");
  return (env && *env) ? std::filesystem::path(env) : std::filesystem::path("wplab-out");
}

namespace detail {

inline SymbolModel free_schrodinger(int d = 1) {
  return make_schrodinger(metric_constant(d, 1.0));
}

inline SpatialField unit_coherent(const Vec& x0, const Vec& xi0, double scale,
                                  const SpatialGrid& g) {
  SpatialField f = coherent_state(x0, xi0, scale, g);
  double n = f.l2_norm();
  if (n > 0.0) f *= cplx(1.0 / n);
  return f;
}

inline SpatialField random_bandlimited(const SpatialGrid& g, double band,
                                       std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<cplx> hat(g.size(), cplx(0.0));
  for (int k = 0; k < g.N; ++k)
    if (std::abs(g.xi(k)) <= band) hat[static_cast<size_t>(k)] = cplx(n(rng), n(rng));
  return fourier_inverse(g, std::move(hat));
}

// Small-denominator rational matching a config double exactly (exponent
// parameters are simple fractions by construction).
inline Rational rational_of(double v) {
  for (long long den = 1; den <= 1024; ++den) {
    double scaled = v * static_cast<double>(den);
    long long num = std::llround(scaled);
    if (std::abs(scaled - static_cast<double>(num)) < 1e-9) return Rational(num, den);
  }
  throw ConfigError("value is not a simple rational: " + format_double(v));
}

inline std::vector<double> dyadic_times(double tmax) {
  std::vector<double> ts;
  for (double t = 1.0; t <= tmax * (1.0 + 1e-12); t *= 2.0) ts.push_back(t);
  return ts;
}

// grid side as the smallest even multiple of the metric box that reaches
// the requested length (the modal propagator needs commensurability)
inline double commensurate_length(double need, double Lbox) {
  double L = 2.0 * Lbox;
  while (L < need) L += 2.0 * Lbox;
  return L;
}

inline int pow2_at_least(double x) {
  int n = 16;
  while (n < x && n < (1 << 20)) n *= 2;
  return n;
}

}  // namespace detail

// --------------------------------------------------------------------------
// isometry: Plancherel ratio and inversion error of the phase-space transform
// on random band-limited data, per scale R.

inline ReportBundle run_isometry(const Config& cfg) {
  ReportBundle rep;
  rep.experiment = "isometry";
  rep.config = cfg;
  std::vector<double> Rs = cfg.get_list("scale.R", {16.0, 64.0, 256.0});
  long trials = cfg.get_int("trials", 20);
  double band = cfg.get_number("band", 0.8);
  double tol = cfg.get_number("tol", 1e-6);
  uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  int N = static_cast<int>(cfg.get_int("grid.N", 512));

  CsvTable table;
  table.columns = {"R", "trial", "ratio", "recon_error"};
  double worst_ratio = 0.0, worst_recon = 0.0;
  std::mt19937_64 rng(seed);
  for (double R : Rs) {
    double L = cfg.get_number("grid.L", 16.0 * std::sqrt(R));
    SpatialGrid g(1, L, N);
    PhaseSpaceGrid ps = make_ps_grid(g, R, -band, band);
    for (long k = 0; k < trials; ++k) {
      SpatialField f = detail::random_bandlimited(g, band, rng);
      PhaseSpaceField F = fbi_forward(f, R, ps);
      double ratio = F.l2_norm() / f.l2_norm();
      double recon = (fbi_adjoint(F, R, g) - f).l2_norm() / f.l2_norm();
      worst_ratio = std::max(worst_ratio, std::abs(ratio - 1.0));
      worst_recon = std::max(worst_recon, recon);
      table.add_row({cell(R), cell(static_cast<double>(k)), cell(ratio), cell(recon)});
    }
  }
  rep.tables.emplace_back("isometry", std::move(table));
  rep.summary["worst_ratio_error"] = worst_ratio;
  rep.summary["worst_recon_error"] = worst_recon;
  rep.summary["tol"] = tol;
  rep.pass = worst_ratio <= tol && worst_recon <= tol;
  return rep;
}

// --------------------------------------------------------------------------
// flow: closed forms for constant metrics, Richardson order ratios on
// variable metrics, and the symplectic volume of the variational flow.

inline ReportBundle run_flow(const Config& cfg) {
  ReportBundle rep;
  rep.experiment = "flow";
  rep.config = cfg;
  double T = cfg.get_number("span.T", 16.0);
  long trials = cfg.get_int("trials", 10);
  uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  double tol_closed = cfg.get_number("tol.closed", 1e-10);
  double ratio_lo = cfg.get_number("tol.ratio_lo", 12.0);
  double ratio_hi = cfg.get_number("tol.ratio_hi", 20.0);
  double tol_det = cfg.get_number("tol.det", 1e-6);
  int base_steps = static_cast<int>(cfg.get_int("steps", 24));
  double metric_R = cfg.get_number("metric.R", 64.0);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-8.0, 8.0), uxi(0.3, 1.0);

  // Constant metrics against the closed-form flow.
  CsvTable closed;
  closed.columns = {"case", "trial", "err_state", "err_psi"};
  double worst_closed = 0.0;
  SymbolModel free_s = detail::free_schrodinger();
  SymbolModel free_h = make_halfwave(metric_constant(1, 1.0));
  for (long k = 0; k < trials; ++k) {
    double x0 = ux(rng), xi0 = uxi(rng) * (k % 2 ? 1.0 : -1.0);
    FlowOptions opt;
    opt.steps = 128;
    auto bs = integrate_bicharacteristic(free_s, {Vec(x0), Vec(xi0)}, -T, T, opt);
    auto bh = integrate_bicharacteristic(free_h, {Vec(x0), Vec(xi0)}, -T, T, opt);
    double es = 0.0, eps_s = 0.0, eh = 0.0, eps_h = 0.0;
    for (double t : {-T, T}) {
      // Schroedinger: x = x0 + 2 xi t, psi = xi^2 t.
      PhasePoint zs = bs.state_at(t);
      es = std::max(es, std::abs(zs.x[0] - (x0 + 2.0 * xi0 * t)) +
                            std::abs(zs.xi[0] - xi0));
      eps_s = std::max(eps_s, std::abs(bs.psi_at(t) - xi0 * xi0 * t));
      // Half-wave: x = x0 + sign(xi) t, psi = 0.
      PhasePoint zh = bh.state_at(t);
      double sgn = xi0 > 0.0 ? 1.0 : -1.0;
      eh = std::max(eh, std::abs(zh.x[0] - (x0 + sgn * t)) + std::abs(zh.xi[0] - xi0));
      eps_h = std::max(eps_h, std::abs(bh.psi_at(t)));
    }
    closed.add_row({cell("schrodinger"), cell(static_cast<double>(k)), cell(es), cell(eps_s)});
    closed.add_row({cell("halfwave"), cell(static_cast<double>(k)), cell(eh), cell(eps_h)});
    worst_closed = std::max({worst_closed, es, eps_s, eh, eps_h});
  }
  rep.tables.emplace_back("closed_form", std::move(closed));

  // Three variable-metric cases, order check by step halving against a fine
  // reference (4th-order stepper: error ratio near 16).
  struct Case {
    std::string name;
    SymbolModel sym;
    PhasePoint start;
  };
  std::vector<Case> cases;
  cases.push_back({"schrodinger_eps05",
                   make_schrodinger(metric_cosine(1, 1.0, 0.05, metric_R)),
                   {Vec(3.0), Vec(0.7)}});
  cases.push_back({"schrodinger_eps20",
                   make_schrodinger(metric_cosine(1, 1.0, 0.2, metric_R)),
                   {Vec(3.0), Vec(0.7)}});
  cases.push_back({"halfwave_eps05",
                   make_halfwave(metric_cosine(1, 1.0, 0.05, metric_R)),
                   {Vec(3.0), Vec(0.9)}});

  CsvTable rich;
  rich.columns = {"case", "err_coarse", "err_mid", "ratio"};
  CsvTable symp;
  symp.columns = {"case", "max_det_err"};
  bool ratios_ok = true;
  double worst_det = 0.0;
  for (const Case& c : cases) {
    auto endpoint_error = [&](int steps, const Bicharacteristic& ref) {
      FlowOptions opt;
      opt.steps = steps;
      auto b = integrate_bicharacteristic(c.sym, c.start, -T, T, opt);
      double e = 0.0;
      for (double t : {-T, T}) {
        PhasePoint z = b.state_at(t), zr = ref.state_at(t);
        e = std::max(e, norm(z.x - zr.x) + norm(z.xi - zr.xi));
      }
      return e;
    };
    FlowOptions fine;
    fine.steps = 16 * base_steps;
    auto ref = integrate_bicharacteristic(c.sym, c.start, -T, T, fine);
    double e1 = endpoint_error(base_steps, ref);
    double e2 = endpoint_error(2 * base_steps, ref);
    double ratio = (e2 > 0.0) ? e1 / e2 : 0.0;
    if (!(ratio >= ratio_lo && ratio <= ratio_hi)) ratios_ok = false;
    rich.add_row({cell(c.name), cell(e1), cell(e2), cell(ratio)});

    FlowOptions vopt;
    vopt.steps = 256;
    vopt.with_variational = true;
    auto bv = integrate_bicharacteristic(c.sym, c.start, -T, T, vopt);
    double de = 0.0;
    for (const SqMat& M : bv.variational) de = std::max(de, std::abs(det(M) - 1.0));
    worst_det = std::max(worst_det, de);
    symp.add_row({cell(c.name), cell(de)});
  }
  rep.tables.emplace_back("richardson", std::move(rich));
  rep.tables.emplace_back("symplectic", std::move(symp));

  rep.summary["worst_closed_form_error"] = worst_closed;
  rep.summary["ratio_window"] = {ratio_lo, ratio_hi};
  rep.summary["ratios_ok"] = ratios_ok;
  rep.summary["worst_det_error"] = worst_det;
  rep.pass = worst_closed <= tol_closed && ratios_ok && worst_det <= tol_det;
  return rep;
}

// --------------------------------------------------------------------------
// localization: packet tails in space, frequency, and windowed time-frequency
// against the r^{1/2+delta} / r^{-1/2+delta} neighborhoods.

inline ReportBundle run_localization(const Config& cfg) {
  ReportBundle rep;
  rep.experiment = "localization";
  rep.config = cfg;
  std::vector<double> rs = cfg.get_list("scale.r", {64.0});
  double delta = cfg.get_number("delta", 0.1);
  double eps = cfg.get_number("metric.eps", 0.01);
  double metric_R = cfg.get_number("metric.R", 32.0);
  double x0 = cfg.get_number("packet.x0", 0.0);
  double xi0 = cfg.get_number("packet.xi0", 0.5);
  double tol = cfg.get_number("tol", 1e-4);
  double norm_tol = cfg.get_number("propagate.norm_tol", 1e-5);

  CsvTable table;
  table.columns = {"r", "t", "space_tail", "freq_tail", "tf_tail", "tf_peak_offset"};
  double w_space = 0.0, w_freq = 0.0, w_tf = 0.0, w_peak = 0.0;
  for (double r : rs) {
    std::vector<double> t_grid =
        cfg.get_list("times.t", {-0.25 * r, 0.0, 0.25 * r});
    SymbolModel sym = (eps == 0.0)
                          ? detail::free_schrodinger()
                          : make_schrodinger(metric_cosine(1, 1.0, eps, metric_R));
    double need = 16.0 * std::sqrt(r);
    double L = (eps == 0.0) ? need
                            : detail::commensurate_length(need, pi * metric_R);
    int N = static_cast<int>(cfg.get_int("grid.N", detail::pow2_at_least(L / 0.2)));
    SpatialGrid g(1, L, N);
    double lo = std::min(0.0, t_grid.front()) - 1.0;
    double hi = std::max(0.0, t_grid.back()) + 1.0;
    WavePacket packet = make_packet(sym, {Vec(x0), Vec(xi0)}, r, lo, hi);
    PropagateOptions popts;
    popts.norm_tol = norm_tol;
    LocalizationReport loc =
        localization_report(packet, sym, r, delta, t_grid, g, popts);
    for (const LocalizationRow& row : loc.rows) {
      table.add_row({cell(r), cell(row.t), cell(row.space_tail), cell(row.freq_tail),
                     cell(row.tf_tail), cell(row.tf_peak_offset)});
      w_peak = std::max(w_peak, std::abs(row.tf_peak_offset));
    }
    w_space = std::max(w_space, loc.worst_space);
    w_freq = std::max(w_freq, loc.worst_freq);
    w_tf = std::max(w_tf, loc.worst_tf);
  }
  rep.tables.emplace_back("localization", std::move(table));
  rep.summary["worst_space_tail"] = w_space;
  rep.summary["worst_freq_tail"] = w_freq;
  rep.summary["worst_tf_tail"] = w_tf;
  rep.summary["worst_tf_peak_offset_bins"] = w_peak;
  rep.summary["tol"] = tol;
  rep.pass = w_space <= tol && w_freq <= tol && w_tf <= tol && w_peak <= 1.0;
  return rep;
}

// --------------------------------------------------------------------------
// decompose: phase-space decomposition of localized data; the remainder stays
// small across the requested times.

inline ReportBundle run_decompose(const Config& cfg) {
  ReportBundle rep;
  rep.experiment = "decompose";
  rep.config = cfg;
  double r = cfg.get_number("scale.r", 64.0);
  long count = cfg.get_int("data.count", 3);
  uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  double tol = cfg.get_number("tol", 1e-3);
  std::vector<double> t_grid = cfg.get_list("times.t", {-0.25 * r, 0.0, 0.25 * r});
  bool build_packets = cfg.get_bool("packets", true);

  double L = cfg.get_number("grid.L", std::max(128.0, 16.0 * std::sqrt(r)));
  int N = static_cast<int>(cfg.get_int("grid.N", detail::pow2_at_least(L / 0.2)));
  SpatialGrid g(1, L, N);
  SymbolModel sym = detail::free_schrodinger();

  PhaseSpaceRegion region;
  region.x_center = Vec(0.0);
  region.x_radius = 0.42 * L;
  region.xi_center = Vec(0.0);
  region.xi_radius = 1.0;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-L / 8.0, L / 8.0), uxi(-0.5, 0.5),
      uph(0.0, 2.0 * pi);
  SpatialField u0(g);
  for (long k = 0; k < count; ++k) {
    SpatialField piece = detail::unit_coherent(Vec(ux(rng)), Vec(uxi(rng)), r, g);
    piece *= std::polar(1.0, uph(rng));
    u0 += piece;
  }
  double n0 = u0.l2_norm();
  if (n0 > 0.0) u0 *= cplx(1.0 / n0);

  DecomposeOptions dopts;
  dopts.build_packets = build_packets;
  Decomposition dec = wavepacket_decompose(u0, sym, r, region, t_grid, nullptr, dopts);

  CsvTable table;
  table.columns = {"t", "remainder_l2", "remainder_linf"};
  double worst = 0.0;
  for (size_t i = 0; i < t_grid.size(); ++i) {
    table.add_row({cell(t_grid[i]), cell(dec.remainder_l2[i]), cell(dec.remainder_linf[i])});
    worst = std::max(worst, dec.remainder_l2[i]);
  }
  rep.tables.emplace_back("remainder", std::move(table));
  rep.summary["packet_count"] = dec.packets.size();
  rep.summary["alpha_sq_total"] = dec.alpha_sq_total;
  rep.summary["worst_remainder_l2"] = worst;
  rep.summary["tol"] = tol;
  rep.pass = worst <= tol;  // data is unit L2
  return rep;
}

// --------------------------------------------------------------------------
// dispersive: sup-norm decay exponent over dyadic times.

inline ReportBundle run_dispersive(const Config& cfg) {
  ReportBundle rep;
  rep.experiment = "dispersive";
  rep.config = cfg;
  int d = static_cast<int>(cfg.get_int("dim", 1));
  double R = cfg.get_number("scale.R", 64.0);
  double s = cfg.get_number("data.s", 4.0);
  double eps = cfg.get_number("metric.eps", 0.0);
  double metric_R = cfg.get_number("metric.R", 32.0);
  double tol = cfg.get_number("tol", eps == 0.0 ? 0.05 : 0.1);
  double norm_tol = cfg.get_number("propagate.norm_tol", 1e-5);
  if (d != 1 && eps != 0.0)
    throw ConfigError("dispersive: variable metric is d = 1 only");

  std::vector<double> times = cfg.get_list("times.t", detail::dyadic_times(R));
  double T = *std::max_element(times.begin(), times.end());
  double sigma = std::sqrt(s / 4.0 + T * T / s);  // spread of the free packet
  double need = std::max(8.0 * sigma, 16.0 * std::sqrt(s));
  double L = cfg.get_number(
      "grid.L", eps == 0.0 ? need : detail::commensurate_length(need, pi * metric_R));
  int N = static_cast<int>(
      cfg.get_int("grid.N", d == 1 ? detail::pow2_at_least(L / 0.2) : 256));
  SpatialGrid g(d, L, N);

  SymbolModel sym = (eps == 0.0)
                        ? detail::free_schrodinger(d)
                        : make_schrodinger(metric_cosine(1, 1.0, eps, metric_R));
  SpatialField u0 = detail::unit_coherent(zero_vec(d), zero_vec(d), s, g);
  PropagateOptions popts;
  popts.norm_tol = norm_tol;
  DispersiveFit fit = dispersive_fit(sym, u0, times, popts);

  CsvTable table;
  table.columns = {"t", "linf"};
  for (size_t i = 0; i < fit.ts.size(); ++i)
    table.add_row({cell(fit.ts[i]), cell(fit.linf[i])});
  rep.tables.emplace_back("decay", std::move(table));
  double target = -0.5 * d;
  rep.summary["slope"] = fit.slope;
  rep.summary["target"] = target;
  rep.summary["max_residual"] = fit.max_residual;
  rep.summary["tol"] = tol;
  rep.pass = std::abs(fit.slope - target) <= tol;
  return rep;
}

// --------------------------------------------------------------------------
// bilinear: product norms over (R, nu) and the fitted exponents.

inline ReportBundle run_bilinear(const Config& cfg) {
  ReportBundle rep;
  rep.experiment = "bilinear";
  rep.config = cfg;
  BilinearDataSpec spec;
  std::string kind = cfg.get_string("kind", "paraboloid");
  if (kind == "paraboloid")
    spec.kind = BilinearDataSpec::Kind::paraboloid;
  else if (kind == "halfwave")
    spec.kind = BilinearDataSpec::Kind::halfwave;
  else
    throw ConfigError("bilinear: kind must be paraboloid or halfwave");
  spec.base_frequency = cfg.get_number("base", kind == "halfwave" ? 1.0 : 0.5);
  spec.metric_eps = cfg.get_number("metric.eps", 0.0);
  std::vector<double> Rs = cfg.get_list("scale.R", {64.0, 128.0, 256.0});
  std::vector<double> nus = cfg.get_list("nu", {1.0, 0.5, 0.25});
  double p = cfg.get_number("p", 2.0);
  int resolution = static_cast<int>(cfg.get_int("resolution", 65));
  double tol_nu = cfg.get_number("tol.nu", 0.15);
  double tol_R = cfg.get_number("tol.R", 0.1);

  BilinearSweep sweep = bilinear_sweep(spec, Rs, nus, p, resolution);
  CsvTable table;
  table.columns = {"R", "nu", "norm"};
  for (const BilinearPoint& pt : sweep.points)
    table.add_row({cell(pt.R), cell(pt.nu), cell(pt.norm)});
  rep.tables.emplace_back("sweep", std::move(table));
  rep.summary["nu_slope"] = sweep.nu_slope;
  rep.summary["R_slope"] = sweep.R_slope;
  rep.summary["nu_target"] = -0.5;
  rep.summary["tol"] = {tol_nu, tol_R};
  rep.pass = std::abs(sweep.nu_slope + 0.5) <= tol_nu && std::abs(sweep.R_slope) <= tol_R;
  return rep;
}

// --------------------------------------------------------------------------
// conservation: quadrilinear integrals of conserving against violating
// frequency quadruples; reports the median suppression ratio.

inline ReportBundle run_conservation(const Config& cfg) {
  ReportBundle rep;
  rep.experiment = "conservation";
  rep.config = cfg;
  double R = cfg.get_number("scale.R", 256.0);
  long count = cfg.get_int("count", 10);
  uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  double tol_ratio = cfg.get_number("tol.ratio", 1e3);

  // Cube sized so the bump transition sits deep in the Gaussian envelope of
  // the four-fold product (width sqrt(R)/2): side/2 = 2 sqrt(R) puts the
  // envelope at e^{-8} where the transition starts.
  double side = 4.0 * std::sqrt(R);
  double dt = cfg.get_number("dt", 0.25);
  long nt = 2 * static_cast<long>(std::llround(side / dt)) + 1;  // odd, Simpson
  std::vector<double> ts(nt);
  for (long i = 0; i < nt; ++i) ts[i] = -side + dt * static_cast<double>(i);
  double L = cfg.get_number("grid.L", 8.0 * side);
  int N = static_cast<int>(cfg.get_int("grid.N", detail::pow2_at_least(L / 0.3)));
  SpatialGrid g(1, L, N);
  SymbolModel sym = detail::free_schrodinger();
  SpaceTimeCube cube;
  cube.x_center = Vec(0.0);
  cube.t_center = 0.0;
  cube.side = side;

  auto trajectory = [&](double xi) {
    SpatialField u = detail::unit_coherent(Vec(0.0), Vec(xi), R, g);
    return propagate_reference(sym, u, ts, 0.0);
  };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ua(-0.35, 0.35), uk(0.5, 0.55);
  CsvTable table;
  table.columns = {"trial", "xi_a", "xi_b", "defect", "conserving", "violating", "ratio"};
  std::vector<double> ratios;
  for (long trial = 0; trial < count; ++trial) {
    double a = ua(rng), b = ua(rng);
    while (std::abs(a - b) < 0.15) b = ua(rng);
    double k = uk(rng) * (rng() % 2 ? 1.0 : -1.0);
    FieldTrajectory ta = trajectory(a), tb = trajectory(b), tv = trajectory(b + k);
    cplx good = quadrilinear_integral({&ta, &ta, &tb, &tb}, cube);
    cplx bad = quadrilinear_integral({&ta, &ta, &tb, &tv}, cube);
    double ratio = std::abs(good) / std::max(std::abs(bad), 1e-300);
    ratios.push_back(ratio);
    table.add_row({cell(static_cast<double>(trial)), cell(a), cell(b), cell(k),
                   cell(std::abs(good)), cell(std::abs(bad)), cell(ratio)});
  }
  rep.tables.emplace_back("ratios", std::move(table));
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  double median = sorted[sorted.size() / 2];
  rep.summary["median_ratio"] = median;
  rep.summary["min_ratio"] = sorted.front();
  rep.summary["tol_ratio"] = tol_ratio;
  rep.pass = median >= tol_ratio;
  return rep;
}

// --------------------------------------------------------------------------
// tubes: incidence buckets of a random two-family ensemble plus the
// double-end counting sweep over nu.

inline ReportBundle run_tubes(const Config& cfg) {
  ReportBundle rep;
  rep.experiment = "tubes";
  rep.config = cfg;
  double R = cfg.get_number("scale.R", 256.0);
  double delta = cfg.get_number("delta", 0.3);
  std::vector<double> nus = cfg.get_list("nu", {1.0, 0.5});
  double v0 = cfg.get_number("v0", 0.5);
  uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 1));
  double tol_factor = cfg.get_number("tol.factor", 2.0);

  CubeGrid grid(1, R, delta);
  SymbolModel sym = detail::free_schrodinger();
  double half = R / 2.0;
  auto line_tube = [&](double x0, double t0, double xi, double tube_delta, double t_min,
                       double t_max, int family) {
    PhasePoint start{Vec(x0 + 2.0 * xi * (0.0 - t0)), Vec(xi)};
    return make_tube(sym, start, R, tube_delta, t_min, t_max, family);
  };

  // Bucket census of a random two-family ensemble of thin tubes.
  std::mt19937_64 rng(seed);
  // velocities capped so every core stays inside the spatial box over the span
  std::uniform_real_distribution<double> ux(-half / 2.0, half / 2.0), uxi(-0.2, 0.2);
  std::vector<Tube> ensemble;
  long family_size = cfg.get_int("family", 12);
  for (int fam = 1; fam <= 2; ++fam)
    for (long k = 0; k < family_size; ++k)
      ensemble.push_back(line_tube(ux(rng), 0.0, uxi(rng), 0.0, -half, half, fam));
  Incidence inc = incidences(ensemble, grid);
  Buckets buckets = pigeonhole_buckets(ensemble, inc);
  FocusingRelation focus = focusing_relation(buckets, inc, grid);
  CsvTable census;
  census.columns = {"mu1", "mu2", "cells"};
  for (const auto& [key, cells] : buckets.cells)
    census.add_row({cell(static_cast<double>(key.first)),
                    cell(static_cast<double>(key.second)),
                    cell(static_cast<double>(cells.size()))});
  rep.tables.emplace_back("buckets", std::move(census));
  rep.summary["bucket_count"] = buckets.cells.size();
  rep.summary["panel_count"] = buckets.tubes1.size();
  rep.summary["focusing_max_per_tube"] = focus.max_per_tube;

  // Double-end counting: anchor cell, a three-tube shell fanning out of it,
  // and a transverse tube crossing the central shell member.
  double xa = -0.22 * R, ta = -0.47 * R;
  long q = grid.flatten({grid.index_of(xa), grid.index_of(ta), 0});
  auto shell = [&]() {
    std::vector<Tube> s;
    for (int j = -1; j <= 1; ++j)
      s.push_back(line_tube(xa, ta, (v0 + 0.125 * j) / 2.0, 0.0, -half, half, 1));
    return s;
  };
  double t_star = cfg.get_number("t_star", 30.0 * R / 256.0);
  CsvTable table;
  table.columns = {"nu", "cells", "max_count", "time_extent", "predicted_extent"};
  std::vector<double> extents;
  long worst_count = 0;
  for (double nu : nus) {
    double xc = xa + v0 * (t_star - ta);
    Tube T2 = line_tube(xc, t_star, (v0 - nu) / 2.0, 0.0, -half, half - 10.0, 2);
    DoubleEndCounts c =
        double_end_count(q, shell(), T2, grid, make_scale_params(R, nu, delta, delta));
    long maxc = 0;
    for (const auto& [cell_id, n] : c.per_cell) maxc = std::max(maxc, static_cast<long>(n));
    worst_count = std::max(worst_count, maxc);
    extents.push_back(c.time_extent);
    table.add_row({cell(nu), cell(static_cast<double>(c.total_cells)),
                   cell(static_cast<double>(maxc)), cell(c.time_extent),
                   cell(c.predicted_extent)});
  }
  rep.tables.emplace_back("double_end", std::move(table));

  // Scaling check: extent * nu constant within the tolerance factor.
  bool scaling_ok = true;
  double base = extents.empty() ? 0.0 : extents[0] * nus[0];
  for (size_t i = 0; i < extents.size(); ++i) {
    double scaled = extents[i] * nus[i];
    if (!(scaled >= base / tol_factor && scaled <= base * tol_factor)) scaling_ok = false;
  }
  rep.summary["max_per_cell_count"] = worst_count;
  rep.summary["scaling_ok"] = scaling_ok;
  rep.pass = worst_count <= 2 && scaling_ok && !extents.empty() && extents[0] > 0.0;
  return rep;
}

// --------------------------------------------------------------------------
// budget: exact rational exponent bookkeeping.

inline ReportBundle run_budget(const Config& cfg) {
  ReportBundle rep;
  rep.experiment = "budget";
  rep.config = cfg;
  std::vector<double> ss = cfg.get_list("s", {0.0, 0.5, 1.0});
  long long d = cfg.get_int("d", 1);
  Rational q = detail::rational_of(cfg.get_number("q", 4.0));

  CsvTable table;
  table.columns = {"s", "sigma", "kappa0", "kappa1", "kappa"};
  json rows = json::array();
  bool ok = true;
  for (double sv : ss) {
    Rational s = detail::rational_of(sv);
    LossBudget b = loss_budget(s, d, q);
    table.add_row({cell(s.value()), cell(b.sigma.value()), cell(b.kappa0.value()),
                   cell(b.kappa1.value()), cell(b.kappa.value())});
    json row;
    row["s"] = s.str();
    row["sigma"] = {{"rational", b.sigma.str()}, {"value", b.sigma.value()}};
    row["kappa0"] = {{"rational", b.kappa0.str()}, {"value", b.kappa0.value()}};
    row["kappa1"] = {{"rational", b.kappa1.str()}, {"value", b.kappa1.value()}};
    row["kappa"] = {{"rational", b.kappa.str()}, {"value", b.kappa.value()}};
    row["bilinear_wave_loss"] = {{"rational", b.bilinear_wave_loss.str()},
                                 {"value", b.bilinear_wave_loss.value()}};
    row["interval_count_exponent"] = {{"rational", b.interval_count_exponent.str()},
                                      {"value", b.interval_count_exponent.value()}};
    rows.push_back(row);
    if (b.kappa != b.sigma - Rational(1, 2)) ok = false;
    if (s == Rational(1)) {
      if (b.sigma != Rational(1, 2) || b.kappa1 != Rational(0)) ok = false;
      rep.summary["sigma_at_s1"] = {{"rational", b.sigma.str()}, {"value", b.sigma.value()}};
      rep.summary["kappa1_at_s1"] = {{"rational", b.kappa1.str()},
                                     {"value", b.kappa1.value()}};
    }
  }
  rep.tables.emplace_back("budget", std::move(table));
  rep.summary["rows"] = rows;
  rep.pass = ok;
  return rep;
}

// --------------------------------------------------------------------------

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::vector<std::string> keys;  // "key (default)" one-liners
  ReportBundle (*run)(const Config&);
};

inline const std::vector<ExperimentInfo>& experiment_catalog() {
  static const std::vector<ExperimentInfo> catalog = {
      {"isometry", "Plancherel ratio and inversion error of the phase-space transform",
       {"scale.R ([16,64,256])", "trials (20)", "band (0.8)", "tol (1e-6)", "seed (1)",
        "grid.N (512)", "grid.L (16 sqrt R)"},
       &run_isometry},
      {"flow", "closed-form, order, and symplecticity checks of the bicharacteristic flow",
       {"span.T (16)", "trials (10)", "steps (24)", "metric.R (64)", "seed (1)",
        "tol.closed (1e-10)", "tol.ratio_lo (12)", "tol.ratio_hi (20)", "tol.det (1e-6)"},
       &run_flow},
      {"localization", "packet tails in space, frequency, and windowed time-frequency",
       {"scale.r ([64])", "delta (0.1)", "metric.eps (0.01)", "metric.R (32)",
        "packet.x0 (0)", "packet.xi0 (0.5)", "times.t ([-r/4,0,r/4])", "tol (1e-4)",
        "grid.N (auto)", "propagate.norm_tol (1e-5)"},
       &run_localization},
      {"decompose", "phase-space decomposition remainder across times",
       {"scale.r (64)", "data.count (3)", "seed (1)", "times.t ([-r/4,0,r/4])",
        "tol (1e-3)", "packets (true)", "grid.L (auto)", "grid.N (auto)"},
       &run_decompose},
      {"dispersive", "sup-norm decay exponent over dyadic times",
       {"dim (1)", "scale.R (64)", "data.s (4)", "metric.eps (0)", "metric.R (32)",
        "times.t (dyadic to R)", "tol (0.05 free, 0.1 perturbed)", "grid.L (auto)",
        "grid.N (auto)", "propagate.norm_tol (1e-5)"},
       &run_dispersive},
      {"bilinear", "product-norm exponents over frequency separation and scale",
       {"kind (paraboloid)", "scale.R ([64,128,256])", "nu ([1,0.5,0.25])", "p (2)",
        "base (0.5 or 1)", "metric.eps (0)", "resolution (65)", "tol.nu (0.15)",
        "tol.R (0.1)"},
       &run_bilinear},
      {"conservation", "quadrilinear suppression of violating frequency quadruples",
       {"scale.R (256)", "count (10)", "seed (1)", "dt (0.25)", "tol.ratio (1e3)",
        "grid.L (auto)", "grid.N (auto)"},
       &run_conservation},
      {"tubes", "incidence buckets and double-end tube counting",
       {"scale.R (256)", "delta (0.3)", "nu ([1,0.5])", "v0 (0.5)", "family (12)",
        "seed (1)", "t_star (30 R/256)", "tol.factor (2)"},
       &run_tubes},
      {"budget", "exact rational exponent bookkeeping",
       {"s ([0,0.5,1])", "d (1)", "q (4)"},
       &run_budget},
  };
  return catalog;
}

inline ReportBundle run_experiment(const Config& cfg) {
  std::string name = cfg.get_string("experiment");
  for (const ExperimentInfo& info : experiment_catalog())
    if (info.name == name) {
      auto start = std::chrono::steady_clock::now();
      ReportBundle rep = info.run(cfg);
      double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
      rep.summary["runtime_seconds"] = secs;
      return rep;
    }
  throw ConfigError("unknown experiment: " + name);
}

}  // namespace wp
