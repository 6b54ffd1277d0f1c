// Acceptance gate: one pass/fail line per criterion, exit 0 only if all pass.
//
// The checks run at desk scale through the same experiment runners the CLI
// uses, plus a few direct library calls where a criterion does not map onto a
// single experiment. Criterion 5 is expected to fail: the packet envelopes
// are Gaussian, so the three tail fractions have an irreducible floor of
// order erfc(r^delta) (about 3e-2 at r = 64 and 1.4e-2 at r = 256), far above
// the 1e-4 demanded. The measured tails and the floor are printed so the gap
// is visible; the criterion is reported red rather than weakened.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "wavepacket/experiments.hpp"

using namespace wp;

namespace {

struct Outcome {
  int id;
  std::string label;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

std::vector<Outcome> results;

template <typename Fn>
void criterion(int id, const std::string& label, Fn&& fn) {
  Outcome out;
  out.id = id;
  out.label = label;
  auto start = std::chrono::steady_clock::now();
  try {
    fn(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s  criterion %2d: %s  (%s)  [%.1fs]\n", out.pass ? "PASS" : "FAIL",
              out.id, out.label.c_str(), out.detail.c_str(), out.seconds);
  std::fflush(stdout);
  results.push_back(out);
}

std::string fmt(double v) { return format_double(v); }

ReportBundle run(const std::string& toml) { return run_experiment(parse_config(toml)); }

}  // namespace

int main() {
  criterion(1, "phase-space transform isometry and inversion", [](Outcome& out) {
    ReportBundle rep = run(
        "experiment = \"isometry\"\n"
        "trials = 20\n"
        "tol = 1e-6\n"
        "[scale]\nR = [16, 64, 256]\n");
    out.pass = rep.pass;
    out.detail = "worst ratio err " + fmt(rep.summary["worst_ratio_error"].get<double>()) +
                 ", worst recon err " +
                 fmt(rep.summary["worst_recon_error"].get<double>());
  });

  // One flow run feeds criteria 2 and 4.
  ReportBundle flow_rep;
  criterion(2, "constant-flow closed forms and 4th-order Richardson ratios",
            [&](Outcome& out) {
              flow_rep = run("experiment = \"flow\"\n");
              double closed = flow_rep.summary["worst_closed_form_error"].get<double>();
              bool ratios = flow_rep.summary["ratios_ok"].get<bool>();
              out.pass = closed <= 1e-10 && ratios;
              out.detail = "closed-form err " + fmt(closed) + ", ratios in [12,20]: " +
                           (ratios ? "yes" : "no");
            });

  criterion(3, "bi-Lipschitz envelope, 100 random pairs, eps = 0.01, R = 256",
            [](Outcome& out) {
              double R = 256.0;
              SymbolModel sym = make_schrodinger(metric_cosine(1, 1.0, 0.01, R));
              auto reg = regularity_constants(
                  sym, SampleBox{Vec(-R), Vec(R), Vec(-1.0), Vec(1.0), 0.0, 7}, R);
              std::mt19937_64 rng(42);
              std::uniform_real_distribution<double> ux(-R / 4.0, R / 4.0);
              std::uniform_real_distribution<double> uxi(-0.9, 0.9);
              std::vector<std::pair<PhasePoint, PhasePoint>> pairs;
              for (int i = 0; i < 100; ++i)
                pairs.push_back({PhasePoint{Vec(ux(rng)), Vec(uxi(rng))},
                                 PhasePoint{Vec(ux(rng)), Vec(uxi(rng))}});
              auto rep =
                  bilipschitz_report(sym, pairs, R, R, std::max(2.0, reg.c2_hat), 256, 17);
              out.pass = rep.violations == 0 && rep.rows.size() > 0;
              out.detail = std::to_string(rep.violations) + " violations over " +
                           std::to_string(rep.rows.size()) + " samples";
            });

  criterion(4, "symplectic volume of the variational flow", [&](Outcome& out) {
    double de = flow_rep.summary.contains("worst_det_error")
                    ? flow_rep.summary["worst_det_error"].get<double>()
                    : 1.0;
    out.pass = de <= 1e-6;
    out.detail = "worst |det - 1| = " + fmt(de);
  });

  criterion(5, "localization tails at 1e-4 for r in {64, 256} (Gaussian floor above)",
            [](Outcome& out) {
              double worst = 0.0, peak = 0.0;
              for (double r : {64.0, 256.0}) {
                std::string ts;
                for (double f : {-1.0, -0.5, 0.0, 0.5, 1.0})
                  ts += (ts.empty() ? "" : ", ") + fmt(f * r);
                ReportBundle rep = run(
                    "experiment = \"localization\"\n"
                    "delta = 0.1\n"
                    "tol = 1e-4\n"
                    "[scale]\nr = [" + fmt(r) + "]\n"
                    "[metric]\neps = 0.01\nR = 32\n"
                    "[times]\nt = [" + ts + "]\n");
                for (const char* key :
                     {"worst_space_tail", "worst_freq_tail", "worst_tf_tail"})
                  worst = std::max(worst, rep.summary[key].get<double>());
                peak = std::max(peak,
                                rep.summary["worst_tf_peak_offset_bins"].get<double>());
              }
              double floor64 = std::erfc(std::pow(64.0, 0.1));
              double floor256 = std::erfc(std::pow(256.0, 0.1));
              out.pass = worst <= 1e-4 && peak <= 1.0;
              out.detail = "worst tail " + fmt(worst) + " vs tol 1e-4 (envelope floor " +
                           fmt(floor64) + " / " + fmt(floor256) +
                           "), peak offset " + fmt(peak) + " bins";
            });

  criterion(6, "decomposition remainder <= 1e-3 over [-r, r], r = 256", [](Outcome& out) {
    ReportBundle rep = run(
        "experiment = \"decompose\"\n"
        "tol = 1e-3\n"
        "packets = false\n"  // remainder equals the propagated defect by linearity
        "[scale]\nr = 256\n"
        "[data]\ncount = 5\n"
        "[times]\nt = [-256, -128, 0, 128, 256]\n");
    out.pass = rep.pass;
    out.detail =
        "worst remainder " + fmt(rep.summary["worst_remainder_l2"].get<double>());
  });

  criterion(7, "dispersive decay slope, free and perturbed, R = 256", [](Outcome& out) {
    ReportBundle free_rep = run(
        "experiment = \"dispersive\"\n"
        "tol = 0.05\n"
        "[scale]\nR = 256\n");
    ReportBundle pert_rep = run(
        "experiment = \"dispersive\"\n"
        "tol = 0.1\n"
        "[scale]\nR = 256\n"
        "[metric]\neps = 0.01\nR = 32\n");
    out.pass = free_rep.pass && pert_rep.pass;
    out.detail = "free slope " + fmt(free_rep.summary["slope"].get<double>()) +
                 " (tol 0.05), perturbed slope " +
                 fmt(pert_rep.summary["slope"].get<double>()) + " (tol 0.1)";
  });

  criterion(8, "bilinear nu/R exponents, paraboloid pair, R up to 1024", [](Outcome& out) {
    ReportBundle rep = run(
        "experiment = \"bilinear\"\n"
        "resolution = 129\n"
        "nu = [1, 0.5, 0.25]\n"
        "[scale]\nR = [64, 256, 1024]\n"
        "[tol]\nnu = 0.15\nR = 0.1\n");
    out.pass = rep.pass;
    out.detail = "nu exponent " + fmt(rep.summary["nu_slope"].get<double>()) +
                 ", R exponent " + fmt(rep.summary["R_slope"].get<double>());
  });

  criterion(9, "conservation-law discrimination, 50 quadruples, R = 256",
            [](Outcome& out) {
              ReportBundle rep = run(
                  "experiment = \"conservation\"\n"
                  "count = 50\n"
                  "[scale]\nR = 256\n"
                  "[tol]\nratio = 1e3\n");
              out.pass = rep.pass;
              out.detail =
                  "median ratio " + fmt(rep.summary["median_ratio"].get<double>()) +
                  ", min " + fmt(rep.summary["min_ratio"].get<double>());
            });

  criterion(10, "double-end tube counts and nu^{-1} time extent, R = 256",
            [](Outcome& out) {
              ReportBundle rep = run(
                  "experiment = \"tubes\"\n"
                  "nu = [1, 0.5, 0.25]\n"
                  "[scale]\nR = 256\n");
              out.pass = rep.pass;
              out.detail = "max per-cell count " +
                           std::to_string(rep.summary["max_per_cell_count"].get<long>()) +
                           ", extent scaling within factor 2: " +
                           (rep.summary["scaling_ok"].get<bool>() ? "yes" : "no");
            });

  criterion(11, "exact rational exponent budget for s in {0, 1/2, 1}", [](Outcome& out) {
    bool ok = true;
    struct Expect {
      Rational s, sigma, kappa1;
    };
    std::vector<Expect> table = {{Rational(0), Rational(2, 3), Rational(1, 6)},
                                 {Rational(1, 2), Rational(4, 7), Rational(1, 14)},
                                 {Rational(1), Rational(1, 2), Rational(0)}};
    for (const Expect& e : table) {
      LossBudget b = loss_budget(e.s, 1, Rational(4));
      if (b.sigma != e.sigma || b.kappa1 != e.kappa1) ok = false;
      if (b.kappa0 != Rational(0) - Rational(1, 4)) ok = false;  // (d-1)/2 - d/q, d=1 q=4
      if (b.kappa != b.sigma - Rational(1, 2)) ok = false;
    }
    // Budget experiment must agree with the direct evaluation.
    ReportBundle rep = run("experiment = \"budget\"\n");
    if (!rep.pass) ok = false;
    if (rep.summary["sigma_at_s1"]["rational"] != "1/2") ok = false;
    if (rep.summary["kappa1_at_s1"]["rational"] != "0") ok = false;
    out.pass = ok;
    out.detail = ok ? "all rationals exact" : "mismatch against the closed forms";
  });

  int failed = 0;
  for (const Outcome& o : results)
    if (!o.pass) ++failed;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed,
              results.size());
  return failed == 0 ? 0 : 1;
}
