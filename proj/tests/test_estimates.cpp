#include <doctest.h>

#include <random>

#include "wavepacket/estimates.hpp"

using namespace wp;

namespace {

SymbolModel free_schrodinger() { return make_schrodinger(metric_constant(1, 1.0)); }

FieldTrajectory constant_trajectory(const SpatialGrid& g, cplx value,
                                    const std::vector<double>& ts) {
  SpatialField f(g);
  for (auto& v : f.v) v = value;
  FieldTrajectory traj;
  traj.ts = ts;
  traj.us.assign(ts.size(), f);
  return traj;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> ts;
  for (int i = 0; i < n; ++i) ts.push_back(a + (b - a) * i / (n - 1));
  return ts;
}

}  // namespace

TEST_CASE("space-time Lp norms on a cube") {
  SpatialGrid g(1, 8.0, 64);
  std::vector<double> ts = linspace(0.0, 1.0, 9);
  FieldTrajectory traj = constant_trajectory(g, cplx(1.0), ts);

  SpaceTimeCube q;
  q.x_center = Vec(0.0);
  q.t_center = 0.5;
  q.side = 1.0;

  SUBCASE("unit constant field has unit norm for every p") {
    // cube measure 1 x 1; the half-open spatial window and the aligned grid
    // make the Riemann sum exact
    for (double p : {1.0, 2.0, 4.0, 6.0})
      CHECK(lp_spacetime_norm(traj, p, q) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("scaling homogeneity") {
    FieldTrajectory traj3 = constant_trajectory(g, cplx(0.0, 3.0), ts);
    CHECK(lp_spacetime_norm(traj3, 2.0, q) == doctest::Approx(3.0).epsilon(1e-12));
  }

  SUBCASE("rejects p below 1") {
    CHECK_THROWS_AS(lp_spacetime_norm(traj, 0.5, q), ParameterError);
  }

  SUBCASE("rejects coarse cube resolution") {
    SpaceTimeCube bad = q;
    bad.resolution = 4;
    CHECK_THROWS_AS(lp_spacetime_norm(traj, 2.0, bad), ParameterError);
  }

  SUBCASE("undersampled time window") {
    FieldTrajectory sparse = constant_trajectory(g, cplx(1.0), linspace(0.0, 1.0, 5));
    CHECK_THROWS_AS(lp_spacetime_norm(sparse, 2.0, q), ResolutionError);
  }
}

TEST_CASE("dispersive decay fits") {
  std::vector<double> times = {8.0, 12.0, 16.0, 24.0, 32.0};

  SUBCASE("free evolution in one dimension decays like t^{-1/2}") {
    SpatialGrid g(1, 64.0, 512);
    SpatialField u0 = coherent_state(Vec(0.0), Vec(0.0), 8.0, g);
    DispersiveFit fit = dispersive_fit(free_schrodinger(), u0, times);
    CHECK(fit.slope == doctest::Approx(-0.5).epsilon(0.1));  // +-0.05 absolute
    CHECK(std::abs(fit.slope + 0.5) < 0.05);
    CHECK(fit.linf.size() == times.size());
    // sup norms themselves follow the closed form ((s/2)^2 + t^2)^{-1/4}
    for (size_t i = 0; i + 1 < times.size(); ++i) CHECK(fit.linf[i] > fit.linf[i + 1]);
  }

  SUBCASE("free evolution in two dimensions decays like t^{-1}") {
    SpatialGrid g(2, 64.0, 256);
    SpatialField u0 = coherent_state(Vec(0.0, 0.0), Vec(0.0, 0.0), 8.0, g);
    DispersiveFit fit = dispersive_fit(make_schrodinger(metric_constant(2, 1.0)), u0, times);
    CHECK(std::abs(fit.slope + 1.0) < 0.05);
  }

  SUBCASE("error paths") {
    SpatialGrid g(1, 64.0, 512);
    SpatialField u0 = coherent_state(Vec(0.0), Vec(0.0), 8.0, g);
    CHECK_THROWS_AS(dispersive_fit(free_schrodinger(), u0, {1.0, 2.0, 3.0}), FitError);
    CHECK_THROWS_AS(dispersive_fit(free_schrodinger(), u0, {-1.0, 1.0, 2.0, 3.0, 4.0}),
                    ParameterError);
  }
}

TEST_CASE("transversality report") {
  SUBCASE("paraboloid pair: group velocity gap and Hessian quadratic form") {
    SymbolModel sym = free_schrodinger();
    FlowOptions opt;
    Bicharacteristic b1 =
        integrate_bicharacteristic(sym, {Vec(0.0), Vec(0.4)}, -1.0, 1.0, opt);
    Bicharacteristic b2 =
        integrate_bicharacteristic(sym, {Vec(1.0), Vec(0.1)}, -1.0, 1.0, opt);
    TransversalityReport rep = transversality_check(sym, sym, b1, b2, 0.5);
    // grad_xi p = 2 xi, so Delta_v = 2 (0.4 - 0.1)
    CHECK(rep.abs_delta_v == doctest::Approx(0.6).epsilon(1e-9));
    // <Delta_v, (2I)^{-1} Delta_v> = |Delta_v|^2 / 2
    CHECK(rep.quad1_valid);
    CHECK(rep.quad2_valid);
    CHECK(rep.quad1 == doctest::Approx(0.18).epsilon(1e-9));
    CHECK(rep.quad2 == doctest::Approx(0.18).epsilon(1e-9));
    CHECK(rep.proj1 == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(rep.proj2 == doctest::Approx(0.6).epsilon(1e-9));
    // constant symbol: the averaged Hessian equals the pointwise one
    CHECK(rep.avg1_valid);
    CHECK(rep.avg_quad1 == doctest::Approx(0.18).epsilon(1e-9));
  }

  SUBCASE("half-wave pair: degenerate Hessian is flagged, not inverted") {
    double nu = 0.25;
    SymbolModel s1 = make_halfwave(metric_constant(1, 1.0));
    SymbolModel s2 = make_halfwave(metric_constant(1, (1.0 + nu) * (1.0 + nu)));
    FlowOptions opt;
    Bicharacteristic b1 =
        integrate_bicharacteristic(s1, {Vec(0.0), Vec(1.0)}, -1.0, 1.0, opt);
    Bicharacteristic b2 =
        integrate_bicharacteristic(s2, {Vec(0.0), Vec(1.0)}, -1.0, 1.0, opt);
    TransversalityReport rep = transversality_check(s1, s2, b1, b2, 0.0);
    // speeds 1 and 1 + nu along the same direction
    CHECK(rep.abs_delta_v == doctest::Approx(nu).epsilon(1e-9));
    // |xi| has identically vanishing second derivative in one dimension
    CHECK_FALSE(rep.quad1_valid);
    CHECK_FALSE(rep.quad2_valid);
    CHECK_FALSE(rep.avg1_valid);
    CHECK(rep.proj1 == doctest::Approx(-nu).epsilon(1e-9));
  }
}

TEST_CASE("energy difference and resonance shell") {
  SymbolModel par = free_schrodinger();
  SymbolModel hw = make_halfwave(metric_constant(1, 1.0));
  Vec x0(0.0);

  SUBCASE("paraboloid factorization F = 2 (xi1 - xi2') (xi1 - eta)") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 50; ++i) {
      double xi1 = u(rng), xi2p = u(rng), eta = u(rng);
      double F = energy_difference(par, par, x0, 0.0, Vec(xi1), Vec(xi2p), Vec(eta));
      CHECK(F == doctest::Approx(2.0 * (xi1 - xi2p) * (xi1 - eta)).epsilon(1e-12));
    }
  }

  SUBCASE("eta = xi1 is on the shell for any symbol pair") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.6, 1.8);
    for (int i = 0; i < 20; ++i) {
      double xi1 = u(rng), xi2p = u(rng);
      CHECK(std::abs(energy_difference(par, hw, x0, 0.0, Vec(xi1), Vec(xi2p), Vec(xi1))) <
            1e-12);
    }
  }

  SUBCASE("shell sampling is sound and complete on the grid") {
    SpatialGrid g(1, 16.0, 128);
    Vec xi1(0.5), xi2p(0.1);
    double tol = 0.1;
    std::vector<Vec> shell = energy_shell_sample(par, par, x0, 0.0, xi1, xi2p, tol, g);
    CHECK(!shell.empty());
    size_t expected = 0;
    for (int k = 0; k < g.N; ++k) {
      double F = energy_difference(par, par, x0, 0.0, xi1, xi2p, Vec(g.xi(k)));
      if (std::abs(F) <= tol) ++expected;
    }
    CHECK(shell.size() == expected);
    // shell width tol / (2 nu) around xi1 with nu = |xi1 - xi2'|
    double width = tol / (2.0 * std::abs(xi1[0] - xi2p[0]));
    for (const Vec& eta : shell) CHECK(std::abs(eta[0] - xi1[0]) <= width + 1e-12);
    CHECK_THROWS_AS(energy_shell_sample(par, par, x0, 0.0, xi1, xi2p, 0.0, g),
                    ParameterError);
  }
}

TEST_CASE("conservation flags for packet quadruples") {
  SymbolModel sym = free_schrodinger();
  ScaleParams params = make_scale_params(16.0, 1.0, 0.1, 0.1);
  SpaceTimeCube q;
  q.x_center = Vec(0.0);
  q.t_center = 0.0;
  q.side = 4.0;

  auto packet = [&](double x0, double xi0) {
    return make_packet(sym, {Vec(x0), Vec(xi0)}, 16.0, -1.0, 1.0, 1.0, 64);
  };

  SUBCASE("conserved quadruple raises every flag") {
    std::array<WavePacket, 4> quad = {packet(0.0, 0.3), packet(1.0, -0.2),
                                      packet(-1.0, 0.3), packet(0.5, -0.2)};
    ConservationFlags f = conservation_flags(sym, sym, quad, q, params);
    CHECK(f.position_ok);
    CHECK(f.momentum_ok);
    CHECK(f.energy_ok);
    CHECK(f.all());
    CHECK(f.momentum_defect == doctest::Approx(0.0).epsilon(1e-12));
  }

  SUBCASE("defects below the R-power thresholds still pass") {
    // momentum defect 0.1 and energy defect 0.03 against R^{-0.4} ~ 0.33
    std::array<WavePacket, 4> quad = {packet(0.0, 0.3), packet(0.0, -0.2),
                                      packet(0.0, 0.3), packet(0.0, -0.1)};
    ConservationFlags f = conservation_flags(sym, sym, quad, q, params);
    CHECK(f.momentum_defect == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(f.all());
  }

  SUBCASE("momentum and energy violations are caught") {
    std::array<WavePacket, 4> quad = {packet(0.0, 0.3), packet(0.0, -0.2),
                                      packet(0.0, 0.3), packet(0.0, 0.8)};
    ConservationFlags f = conservation_flags(sym, sym, quad, q, params);
    CHECK(f.position_ok);
    CHECK_FALSE(f.momentum_ok);
    CHECK_FALSE(f.energy_ok);
    CHECK_FALSE(f.all());
  }

  SUBCASE("pairwise position spread beyond R^{1/2+delta} fails") {
    std::array<WavePacket, 4> quad = {packet(0.0, 0.3), packet(10.0, -0.2),
                                      packet(0.0, 0.3), packet(0.0, -0.2)};
    ConservationFlags f = conservation_flags(sym, sym, quad, q, params);
    CHECK_FALSE(f.position_ok);
    CHECK(f.momentum_ok);
    CHECK(f.position_worst == doctest::Approx(10.0).epsilon(1e-9));
  }
}

TEST_CASE("quadrilinear concentration integral") {
  SymbolModel sym = free_schrodinger();
  SpatialGrid g(1, 64.0, 512);
  std::vector<double> ts = linspace(-12.0, 12.0, 97);
  double R = 32.0;

  auto evolve = [&](double xi0) {
    SpatialField u0 = coherent_state(Vec(0.0), Vec(xi0), R, g);
    u0 *= cplx(1.0 / u0.l2_norm());
    return propagate_reference(sym, u0, ts, 0.0);
  };

  // side chosen so the weight's transition zone sits deep in the Gaussian
  // tails; otherwise the shoulder, not the oscillation, limits cancellation
  SpaceTimeCube q;
  q.x_center = Vec(0.0);
  q.t_center = 0.0;
  q.side = 24.0;

  // array order {T1, T1', T2, T2'}: the integrand u1 conj(u2) u3 conj(u4)
  // oscillates at the momentum defect xi1 - xi1' + xi2 - xi2'
  FieldTrajectory a = evolve(0.5), b = evolve(-0.3);
  double baseline =
      std::abs(quadrilinear_integral({&a, &a, &b, &b}, q));
  CHECK(baseline > 0.0);

  SUBCASE("energy-violating quadruple collapses") {
    // momentum conserved, energy defect 2
    FieldTrajectory hi = evolve(1.0), lo = evolve(0.0), mi = evolve(-1.0);
    double v = std::abs(quadrilinear_integral({&hi, &lo, &mi, &lo}, q));
    CHECK(v <= 1e-3 * baseline);
  }

  SUBCASE("momentum-violating quadruple collapses") {
    FieldTrajectory t1 = evolve(0.8), t1p = evolve(-0.4), t2 = evolve(0.2),
                    t2p = evolve(-0.6);
    double v = std::abs(quadrilinear_integral({&t1, &t1p, &t2, &t2p}, q));
    CHECK(v <= 1e-3 * baseline);
  }

  SUBCASE("mismatched grids are rejected") {
    SpatialGrid g2(1, 64.0, 256);
    SpatialField u0 = coherent_state(Vec(0.0), Vec(0.5), R, g2);
    FieldTrajectory other = propagate_reference(sym, u0, ts, 0.0);
    CHECK_THROWS_AS(quadrilinear_integral({&a, &a, &other, &other}, q),
                    ResolutionError);
  }
}

TEST_CASE("bilinear sweep scaling") {
  BilinearDataSpec spec;
  spec.kind = BilinearDataSpec::Kind::paraboloid;
  spec.base_frequency = 0.5;

  SUBCASE("paraboloid pair: nu exponent -1/2, no R drift") {
    BilinearSweep sweep =
        bilinear_sweep(spec, {64.0, 128.0, 256.0}, {0.25, 0.5, 1.0}, 2.0, 129);
    CHECK(sweep.points.size() == 9);
    CHECK(std::abs(sweep.nu_slope + 0.5) < 0.15);
    CHECK(std::abs(sweep.R_slope) <= 0.1);
  }

  SUBCASE("half-wave pair: slower separation means a larger product") {
    BilinearDataSpec hw;
    hw.kind = BilinearDataSpec::Kind::halfwave;
    hw.base_frequency = 1.0;
    double n_half = bilinear_norm(hw, 64.0, 0.5, 2.0, 65);
    double n_one = bilinear_norm(hw, 64.0, 1.0, 2.0, 65);
    CHECK(n_half > 0.0);
    CHECK(n_half > n_one);
  }

  SUBCASE("short sweep axes are rejected") {
    CHECK_THROWS_AS(bilinear_sweep(spec, {64.0, 128.0}, {0.25, 0.5, 1.0}, 2.0),
                    FitError);
    CHECK_THROWS_AS(bilinear_sweep(spec, {64.0, 128.0, 256.0}, {0.5, 1.0}, 2.0),
                    FitError);
  }
}

TEST_CASE("packet localization report") {
  SymbolModel sym = free_schrodinger();
  double r = 64.0, delta = 0.1;
  WavePacket packet = make_packet(sym, {Vec(0.0), Vec(0.5)}, r, -1.0, 5.0, 1.0, 128);
  SpatialGrid g(1, 64.0, 512);

  LocalizationReport rep = localization_report(packet, sym, r, delta, {0.0, 2.0}, g);
  REQUIRE(rep.rows.size() == 2);
  // smooth-envelope tails behave like erfc(r^delta) ~ 3.2e-2 at r = 64
  CHECK(rep.worst_space < 0.1);
  CHECK(rep.worst_freq < 0.1);
  for (const LocalizationRow& row : rep.rows) {
    // the windowed time transform peaks at tau = -p(x^t, t, xi^t), within the
    // window's own frequency resolution
    CHECK(row.tf_peak_offset <= 2.0);
    CHECK(row.tf_tail < 0.6);
  }
}
