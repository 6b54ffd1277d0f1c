#include <doctest.h>

#include <random>

#include "wavepacket/symbols.hpp"

using namespace wp;

namespace {

// 4th-order central difference of a scalar function of one coordinate.
template <typename F>
double fd4(F&& f, double h) {
  return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
}

Vec perturb(Vec v, int comp, double s) {
  v[comp] += s;
  return v;
}

}  // namespace

TEST_CASE("schrodinger symbol, identity metric") {
  auto sym = make_schrodinger(metric_constant(1, 1.0));
  Vec x(0.7), xi(0.3);
  CHECK(sym.p(x, 0.0, xi) == doctest::Approx(0.09).epsilon(1e-14));
  CHECK(sym.grad_xi(x, 0.0, xi)[0] == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(sym.hess_xi(x, 0.0, xi)(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(sym.grad_x(x, 0.0, xi)[0] == 0.0);
  CHECK(sym.hess_x(x, 0.0, xi)(0, 0) == 0.0);
  CHECK(sym.homogeneity == 2);
  CHECK(sym.cutoff_outer == 1.0);
}

TEST_CASE("schrodinger symbol, cosine metric derivatives") {
  double R = 64.0, eps = 0.1;
  auto sym = make_schrodinger(metric_cosine(1, 1.0, eps, R));
  Vec x(0.0), xi(1.0);
  CHECK(sym.grad_x(x, 0.0, xi)[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(std::abs(sym.hess_x(x, 0.0, xi)(0, 0)) <= eps / (R * R) + 1e-15);
  // Fourier evaluation matches the closed form.
  Vec y(13.7);
  CHECK(sym.metric.eval(y, 0.0)(0, 0) ==
        doctest::Approx(1.0 + eps * std::cos(y[0] / R)).epsilon(1e-12));
}

TEST_CASE("halfwave symbol basics") {
  double nu = 0.49;
  auto sym = make_halfwave(metric_constant(1, nu));
  Vec x(0.0), xi(1.0);
  CHECK(sym.p(x, 0.0, xi) == doctest::Approx(std::sqrt(nu)).epsilon(1e-14));
  CHECK(sym.grad_xi(x, 0.0, xi)[0] == doctest::Approx(std::sqrt(nu)).epsilon(1e-14));
  CHECK(sym.homogeneity == 1);

  // 1-homogeneity on the annulus.
  auto sym2 = make_halfwave(metric_cosine(2, 1.0, 0.05, 32.0));
  for (double a : {0.6, 1.0, 1.7}) {
    Vec q(a * 0.8, a * 0.6);
    Vec q2(2.0 * q[0], 2.0 * q[1]);
    CHECK(std::abs(sym2.p(Vec(1.0, 2.0), 0.0, q2) - 2.0 * sym2.p(Vec(1.0, 2.0), 0.0, q)) <
          1e-12);
  }

  // Hessian of |xi| at e1 in d = 2 has eigenvalues {0, 1}.
  auto flat = make_halfwave(metric_constant(2, 1.0));
  Mat h = flat.hess_xi(zero_vec(2), 0.0, Vec(1.0, 0.0));
  auto ev = sym_eigenvalues(h);
  CHECK(ev[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(make_halfwave(metric_constant(1, 0.0)), ParameterError);
}

TEST_CASE("analytic derivatives match finite differences") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ux(-50.0, 50.0);
  std::uniform_real_distribution<double> uxi(0.5, 1.5);
  double R = 64.0;
  double hx = 7.4e-4 * R;  // eps_machine^{1/5} x characteristic scale
  double hxi = 7.4e-4;

  auto models = std::vector<SymbolModel>{
      make_schrodinger(metric_cosine(1, 1.0, 0.2, R)),
      make_halfwave(metric_cosine(1, 1.0, 0.2, R)),
  };
  for (const auto& sym : models) {
    for (int trial = 0; trial < 100; ++trial) {
      Vec x(ux(rng));
      Vec xi(uxi(rng) * (rng() % 2 ? 1.0 : -1.0));
      double t = 0.0;
      auto rel = [](double a, double b) {
        return std::abs(a - b) / std::max(1.0, std::abs(b));
      };
      double gxi = fd4([&](double s) { return sym.p(x, t, perturb(xi, 0, s)); }, hxi);
      CHECK(rel(gxi, sym.grad_xi(x, t, xi)[0]) < 1e-6);
      double gx = fd4([&](double s) { return sym.p(perturb(x, 0, s), t, xi); }, hx);
      CHECK(rel(gx, sym.grad_x(x, t, xi)[0]) < 1e-6);
      double hxx = fd4(
          [&](double s) { return sym.grad_x(perturb(x, 0, s), t, xi)[0]; }, hx);
      CHECK(rel(hxx, sym.hess_x(x, t, xi)(0, 0)) < 1e-6);
      double hxixi = fd4(
          [&](double s) { return sym.grad_xi(x, t, perturb(xi, 0, s))[0]; }, hxi);
      CHECK(rel(hxixi, sym.hess_xi(x, t, xi)(0, 0)) < 1e-6);
      double cx = fd4(
          [&](double s) { return sym.grad_xi(perturb(x, 0, s), t, xi)[0]; }, hx);
      CHECK(rel(cx, sym.cross(x, t, xi)(0, 0)) < 1e-6);
    }
  }
}

TEST_CASE("lowpass truncation") {
  double R = 16.0;
  auto metric = metric_cosine(1, 1.0, 0.1, R);  // mode at frequency 1/R

  SUBCASE("constant metric unchanged") {
    auto cm = metric_cosine(1, 2.0, 0.0, R);
    auto out = lowpass_metric(cm, 0.01);
    CHECK(out.eval(Vec(3.0), 0.0)(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("mode below cutoff unchanged") {
    auto out = lowpass_metric(metric, 2.0 / R);
    Vec y(5.0);
    CHECK(out.eval(y, 0.0)(0, 0) ==
          doctest::Approx(metric.eval(y, 0.0)(0, 0)).epsilon(1e-14));
  }
  SUBCASE("mode beyond twice the cutoff becomes the mean") {
    auto out = lowpass_metric(metric, 0.4 / R);
    Vec y(5.0);
    CHECK(out.eval(y, 0.0)(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("idempotent outside the transition band") {
    auto once = lowpass_metric(metric, 2.0 / R);
    auto twice = lowpass_metric(once, 2.0 / R);
    for (int k = 0; k <= 2 * once.K; ++k)
      CHECK(std::abs(once.modes[k] - twice.modes[k]) < 1e-15);
  }
  SUBCASE("analytic-only metric is rejected") {
    CHECK_THROWS_AS(lowpass_metric(metric_cosine(2, 1.0, 0.1, R), 1.0),
                    UnsupportedRepresentationError);
  }
}

TEST_CASE("regularity constants") {
  SampleBox box;
  box.x_lo = Vec(-20.0);
  box.x_hi = Vec(20.0);
  box.xi_lo = Vec(-1.0);
  box.xi_hi = Vec(1.0);
  box.n = 9;

  SUBCASE("free symbol") {
    auto sym = make_schrodinger(metric_constant(1, 1.0));
    auto rep = regularity_constants(sym, box, 64.0);
    CHECK(rep.eps_hat == 0.0);
    CHECK(rep.c2_hat >= 2.0);
    CHECK(rep.d1_hat == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(rep.d2_hat == doctest::Approx(2.0).epsilon(1e-10));
  }
  SUBCASE("perturbed symbol has eps_hat of order eps") {
    double eps = 0.01, R = 64.0;
    auto sym = make_schrodinger(metric_cosine(1, 1.0, eps, R));
    auto rep = regularity_constants(sym, box, R);
    CHECK(rep.eps_hat <= 2.0 * eps + 1e-12);
    CHECK(rep.eps_hat > 0.0);
  }
  SUBCASE("halfwave determinant degenerates in d = 2") {
    SampleBox b2;
    b2.x_lo = Vec(-5.0, -5.0);
    b2.x_hi = Vec(5.0, 5.0);
    b2.xi_lo = Vec(0.6, 0.1);
    b2.xi_hi = Vec(1.2, 0.4);
    b2.n = 5;
    auto sym = make_halfwave(metric_constant(2, 1.0));
    auto rep = regularity_constants(sym, b2, 64.0);
    CHECK(rep.d1_hat < 1e-12);
  }
}
