#pragma once

// Symbol models p(x,t,xi): metric coefficient fields (analytic callback or
// 1d Fourier-series data on a periodic box), the Schroedinger and half-wave
// constructors with analytic derivatives through second order, paradifferential
// low-pass truncation of Fourier metrics, and sampled regularity constants.

#include <functional>
#include <vector>

#include "wavepacket/common.hpp"
#include "wavepacket/geometry.hpp"

namespace wp {

struct MetricField {
  int d = 1;
  bool constant = false;  // x-independent (enables exact multiplier evolution)
  // Analytic representation: g and its x-derivatives up to order 3.
  // deriv_fn(x, t, order0, order1) = d^{order0}_{x0} d^{order1}_{x1} g.
  std::function<Mat(const Vec&, double, int, int)> deriv_fn;
  // Optional Fourier representation (d = 1, scalar g on a torus of side
  // 2*Lbox): g(x) = sum_k modes[k+K] e^{i k (pi/Lbox) x}, hermitian modes.
  bool has_fourier = false;
  double Lbox = 0.0;
  int K = 0;
  std::vector<cplx> modes;
  // Declared eigenvalue bounds on the test box.
  double bound_lo = 0.0;
  double bound_hi = 0.0;

  Mat eval(const Vec& x, double t) const { return deriv(x, t, 0, 0); }

  Mat deriv(const Vec& x, double t, int o0, int o1) const {
    if (has_fourier) {
      if (o1 != 0) throw ParameterError("MetricField: Fourier data is 1d");
      double base = pi / Lbox;
      cplx s = 0.0;
      for (int k = -K; k <= K; ++k) {
        cplx c = modes[static_cast<size_t>(k + K)];
        if (c == cplx(0.0)) continue;
        cplx ik = cplx(0.0, k * base);
        cplx fac = 1.0;
        for (int j = 0; j < o0; ++j) fac *= ik;
        s += c * fac * std::polar(1.0, k * base * x[0]);
      }
      Mat m = Mat::zero(1);
      m(0, 0) = s.real();
      return m;
    }
    return deriv_fn(x, t, o0, o1);
  }
};

inline MetricField metric_constant(int d, double scale) {
  MetricField m;
  m.d = d;
  m.constant = true;
  m.bound_lo = m.bound_hi = scale;
  m.deriv_fn = [d, scale](const Vec&, double, int o0, int o1) {
    if (o0 == 0 && o1 == 0) return scale * Mat::identity(d);
    return Mat::zero(d);
  };
  return m;
}

// g(x) = (base + eps cos(x0 / R)) * I as Fourier data when d = 1 (torus side
// 2 pi R m so the cosine is an exact grid mode), analytic otherwise.
inline MetricField metric_cosine(int d, double base, double eps, double R,
                                 int torus_multiple = 1) {
  MetricField m;
  m.d = d;
  m.bound_lo = base - std::abs(eps);
  m.bound_hi = base + std::abs(eps);
  if (d == 1) {
    m.has_fourier = true;
    m.Lbox = pi * R * torus_multiple;
    m.K = torus_multiple;
    m.modes.assign(static_cast<size_t>(2 * m.K + 1), cplx(0.0));
    m.modes[static_cast<size_t>(m.K)] = base;
    m.modes[static_cast<size_t>(2 * m.K)] = eps / 2.0;
    m.modes[0] = eps / 2.0;
  } else {
    m.deriv_fn = [d, base, eps, R](const Vec& x, double, int o0, int o1) {
      if (o1 != 0) return Mat::zero(d);
      double u = x[0] / R;
      double val;
      switch (o0 % 4) {
        case 0: val = std::cos(u); break;
        case 1: val = -std::sin(u); break;
        case 2: val = -std::cos(u); break;
        default: val = std::sin(u); break;
      }
      double f = eps * val / std::pow(R, o0);
      if (o0 == 0) f += base;
      return f * Mat::identity(d);
    };
  }
  return m;
}

// Smooth low-pass truncation of the Fourier modes at |k| in physical
// frequency; transition band [lambda_cut, 2 lambda_cut].
inline MetricField lowpass_metric(const MetricField& metric, double lambda_cut) {
  if (!(lambda_cut > 0.0)) throw ParameterError("lowpass_metric: cutoff must be positive");
  if (!metric.has_fourier)
    throw UnsupportedRepresentationError(
        "lowpass_metric: metric has no Fourier-series representation");
  MetricField out = metric;
  double base = pi / metric.Lbox;
  for (int k = -metric.K; k <= metric.K; ++k)
    out.modes[static_cast<size_t>(k + metric.K)] *= cutoff_profile(k * base, lambda_cut);
  // Keep the series hermitian (it already is; the multiplier is even).
  return out;
}

// ---------------------------------------------------------------------------

struct SymbolModel {
  int d = 1;
  int homogeneity = 0;  // 1, 2, or 0 for "none"
  MetricField metric;
  // Frequency-cutoff descriptor (region of validity): ball |xi| <= cutoff_outer
  // for homogeneity 2, annulus cutoff_inner <= |xi| <= cutoff_outer for 1.
  double cutoff_inner = 0.0;
  double cutoff_outer = 1.0;

  std::function<double(const Vec&, double, const Vec&)> p_fn;
  std::function<Vec(const Vec&, double, const Vec&)> grad_xi_fn;
  std::function<Vec(const Vec&, double, const Vec&)> grad_x_fn;
  std::function<Mat(const Vec&, double, const Vec&)> hess_xi_fn;
  std::function<Mat(const Vec&, double, const Vec&)> hess_x_fn;
  // cross(i, j) = d_{x_i} d_{xi_j} p
  std::function<Mat(const Vec&, double, const Vec&)> cross_fn;

  double p(const Vec& x, double t, const Vec& xi) const { return p_fn(x, t, xi); }
  Vec grad_xi(const Vec& x, double t, const Vec& xi) const { return grad_xi_fn(x, t, xi); }
  Vec grad_x(const Vec& x, double t, const Vec& xi) const { return grad_x_fn(x, t, xi); }
  Mat hess_xi(const Vec& x, double t, const Vec& xi) const { return hess_xi_fn(x, t, xi); }
  Mat hess_x(const Vec& x, double t, const Vec& xi) const { return hess_x_fn(x, t, xi); }
  Mat cross(const Vec& x, double t, const Vec& xi) const { return cross_fn(x, t, xi); }

  // Central 4th-order finite difference in one xi component of a scalar
  // functional of the symbol; used for third-order xi derivatives.
  template <typename F>
  double fd_xi(F&& f, const Vec& x, double t, Vec xi, int comp, double h) const {
    auto sh = [&](double s) {
      Vec q = xi;
      q[comp] += s;
      return f(x, t, q);
    };
    return (-sh(2 * h) + 8 * sh(h) - 8 * sh(-h) + sh(-2 * h)) / (12 * h);
  }
};

inline void check_symmetric(const MetricField& metric) {
  Mat g = metric.eval(zero_vec(metric.d), 0.0);
  if (metric.d == 2 && std::abs(g(0, 1) - g(1, 0)) > 1e-12)
    throw ParameterError("metric must be symmetric");
}

// p(x,t,xi) = g^{ij}(x,t) xi_i xi_j, homogeneity 2, cutoff = unit ball.
inline SymbolModel make_schrodinger(const MetricField& metric) {
  check_symmetric(metric);
  SymbolModel s;
  s.d = metric.d;
  s.homogeneity = 2;
  s.metric = metric;
  s.cutoff_inner = 0.0;
  s.cutoff_outer = 1.0;
  MetricField m = metric;
  int d = metric.d;
  s.p_fn = [m](const Vec& x, double t, const Vec& xi) {
    return dot(m.eval(x, t) * xi, xi);
  };
  s.grad_xi_fn = [m](const Vec& x, double t, const Vec& xi) {
    return 2.0 * (m.eval(x, t) * xi);
  };
  s.hess_xi_fn = [m](const Vec& x, double t, const Vec&) {
    return 2.0 * m.eval(x, t);
  };
  s.grad_x_fn = [m, d](const Vec& x, double t, const Vec& xi) {
    Vec g = zero_vec(d);
    g[0] = dot(m.deriv(x, t, 1, 0) * xi, xi);
    if (d == 2) g[1] = dot(m.deriv(x, t, 0, 1) * xi, xi);
    return g;
  };
  s.hess_x_fn = [m, d](const Vec& x, double t, const Vec& xi) {
    Mat h = Mat::zero(d);
    h(0, 0) = dot(m.deriv(x, t, 2, 0) * xi, xi);
    if (d == 2) {
      h(1, 1) = dot(m.deriv(x, t, 0, 2) * xi, xi);
      h(0, 1) = h(1, 0) = dot(m.deriv(x, t, 1, 1) * xi, xi);
    }
    return h;
  };
  s.cross_fn = [m, d](const Vec& x, double t, const Vec& xi) {
    Mat c = Mat::zero(d);
    Vec r0 = 2.0 * (m.deriv(x, t, 1, 0) * xi);
    for (int j = 0; j < d; ++j) c(0, j) = r0[j];
    if (d == 2) {
      Vec r1 = 2.0 * (m.deriv(x, t, 0, 1) * xi);
      for (int j = 0; j < d; ++j) c(1, j) = r1[j];
    }
    return c;
  };
  return s;
}

// p(x,t,xi) = (g^{ij} xi_i xi_j)^{1/2}, homogeneity 1, annulus cutoff.
inline SymbolModel make_halfwave(const MetricField& metric) {
  check_symmetric(metric);
  if (!(metric.bound_lo > 0.0))
    throw ParameterError("make_halfwave: metric must be elliptic");
  SymbolModel s;
  s.d = metric.d;
  s.homogeneity = 1;
  s.metric = metric;
  s.cutoff_inner = 0.5;
  s.cutoff_outer = 2.0;
  MetricField m = metric;
  int d = metric.d;

  auto q = [m](const Vec& x, double t, const Vec& xi) {
    return dot(m.eval(x, t) * xi, xi);
  };
  auto qx = [m, d](const Vec& x, double t, const Vec& xi) {
    Vec g = zero_vec(d);
    g[0] = dot(m.deriv(x, t, 1, 0) * xi, xi);
    if (d == 2) g[1] = dot(m.deriv(x, t, 0, 1) * xi, xi);
    return g;
  };

  s.p_fn = [q](const Vec& x, double t, const Vec& xi) { return std::sqrt(q(x, t, xi)); };
  s.grad_xi_fn = [m, q](const Vec& x, double t, const Vec& xi) {
    return (1.0 / std::sqrt(q(x, t, xi))) * (m.eval(x, t) * xi);
  };
  s.grad_x_fn = [q, qx](const Vec& x, double t, const Vec& xi) {
    return (0.5 / std::sqrt(q(x, t, xi))) * qx(x, t, xi);
  };
  s.hess_xi_fn = [m, q, d](const Vec& x, double t, const Vec& xi) {
    double p = std::sqrt(q(x, t, xi));
    Vec gx = m.eval(x, t) * xi;
    Mat h = (1.0 / p) * m.eval(x, t);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) h(i, j) -= gx[i] * gx[j] / (p * p * p);
    return h;
  };
  s.hess_x_fn = [m, q, qx, d](const Vec& x, double t, const Vec& xi) {
    double p = std::sqrt(q(x, t, xi));
    Vec gx = qx(x, t, xi);
    Mat qxx = Mat::zero(d);
    qxx(0, 0) = dot(m.deriv(x, t, 2, 0) * xi, xi);
    if (d == 2) {
      qxx(1, 1) = dot(m.deriv(x, t, 0, 2) * xi, xi);
      qxx(0, 1) = qxx(1, 0) = dot(m.deriv(x, t, 1, 1) * xi, xi);
    }
    Mat h = (0.5 / p) * qxx;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) h(i, j) -= gx[i] * gx[j] / (4.0 * p * p * p);
    return h;
  };
  s.cross_fn = [m, q, qx, d](const Vec& x, double t, const Vec& xi) {
    double p = std::sqrt(q(x, t, xi));
    Vec gx = qx(x, t, xi);           // q_x
    Vec gxi = 2.0 * (m.eval(x, t) * xi);  // q_xi
    Mat c = Mat::zero(d);
    Vec r0 = 2.0 * (m.deriv(x, t, 1, 0) * xi);
    for (int j = 0; j < d; ++j) c(0, j) = r0[j] / (2.0 * p) - gx[0] * gxi[j] / (4.0 * p * p * p);
    if (d == 2) {
      Vec r1 = 2.0 * (m.deriv(x, t, 0, 1) * xi);
      for (int j = 0; j < d; ++j)
        c(1, j) = r1[j] / (2.0 * p) - gx[1] * gxi[j] / (4.0 * p * p * p);
    }
    return c;
  };
  return s;
}

// ---------------------------------------------------------------------------
// Sampled regularity constants over a box of (x, xi) values at fixed t.

struct RegularityReport {
  double eps_hat = 0.0;  // max over 1 <= |alpha| <= 2, |alpha|+|beta| <= 2 of
                         // R^{|alpha|} |d_x^alpha d_xi^beta p|
  double c2_hat = 0.0;   // max over |beta| <= 3 of |d_xi^beta p|
  double d1_hat = 0.0;   // min |det hess_xi p|
  double d2_hat = 0.0;   // max |det hess_xi p|
};

struct SampleBox {
  Vec x_lo, x_hi;
  Vec xi_lo, xi_hi;
  double t = 0.0;
  int n = 8;  // samples per axis
};

inline RegularityReport regularity_constants(const SymbolModel& sym, const SampleBox& box,
                                             double R) {
  RegularityReport rep;
  rep.d1_hat = std::numeric_limits<double>::infinity();
  int d = sym.d;
  int n = std::max(2, box.n);
  double h3 = 1e-2;  // xi step for third-derivative differences

  auto max_abs = [](const Mat& m) {
    double v = 0.0;
    for (int i = 0; i < m.dim; ++i)
      for (int j = 0; j < m.dim; ++j) v = std::max(v, std::abs(m(i, j)));
    return v;
  };
  auto max_abs_v = [](const Vec& v) {
    double m = 0.0;
    for (int i = 0; i < v.dim; ++i) m = std::max(m, std::abs(v[i]));
    return m;
  };

  auto loop = [&](auto&& body) {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < (d == 2 ? n : 1); ++b)
        for (int c = 0; c < n; ++c)
          for (int e = 0; e < (d == 2 ? n : 1); ++e) {
            Vec x = zero_vec(d), xi = zero_vec(d);
            x[0] = box.x_lo[0] + (box.x_hi[0] - box.x_lo[0]) * a / (n - 1);
            xi[0] = box.xi_lo[0] + (box.xi_hi[0] - box.xi_lo[0]) * c / (n - 1);
            if (d == 2) {
              x[1] = box.x_lo[1] + (box.x_hi[1] - box.x_lo[1]) * b / (n - 1);
              xi[1] = box.xi_lo[1] + (box.xi_hi[1] - box.xi_lo[1]) * e / (n - 1);
            }
            body(x, xi);
          }
  };

  loop([&](const Vec& x, const Vec& xi) {
    double t = box.t;
    // |alpha| = 1, |beta| = 0 and 1; |alpha| = 2, |beta| = 0.
    double a1 = R * max_abs_v(sym.grad_x(x, t, xi));
    double a1b1 = R * max_abs(sym.cross(x, t, xi));
    double a2 = R * R * max_abs(sym.hess_x(x, t, xi));
    rep.eps_hat = std::max({rep.eps_hat, a1, a1b1, a2});

    Mat hxi = sym.hess_xi(x, t, xi);
    double third = 0.0;
    for (int i = 0; i < d; ++i)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          double v = sym.fd_xi(
              [&](const Vec& xx, double tt, const Vec& qq) {
                return sym.hess_xi(xx, tt, qq)(a, b);
              },
              x, t, xi, i, h3);
          third = std::max(third, std::abs(v));
        }
    rep.c2_hat = std::max({rep.c2_hat, std::abs(sym.p(x, t, xi)),
                           max_abs_v(sym.grad_xi(x, t, xi)), max_abs(hxi), third});

    double dd = std::abs(det(hxi));
    rep.d1_hat = std::min(rep.d1_hat, dd);
    rep.d2_hat = std::max(rep.d2_hat, dd);
  });
  return rep;
}

}  // namespace wp
