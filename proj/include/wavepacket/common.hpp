#pragma once

// Small shared vocabulary: low-dimensional vectors/matrices (d <= 2, so the
// variational system is at most 4x4), smooth bump profiles, exact rational
// arithmetic for the exponent bookkeeping, error taxonomy, and fit helpers.

#include <algorithm>
#include <array>
#include <atomic>
#include <thread>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace wp {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Errors. The CLI maps ParameterError/ConfigError -> exit 2 and the
// numerical/resolution family -> exit 3.

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedRepresentationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FlowEscapeError : std::runtime_error {
  double exit_time;
  explicit FlowEscapeError(const std::string& msg, double t)
      : std::runtime_error(msg), exit_time(t) {}
};

// ---------------------------------------------------------------------------
// Vec: runtime-dimensional vector, d in {1, 2}.

struct Vec {
  std::array<double, 2> c{0.0, 0.0};
  int dim = 1;

  Vec() = default;
  explicit Vec(double x) : c{x, 0.0}, dim(1) {}
  Vec(double x, double y) : c{x, y}, dim(2) {}

  double& operator[](int i) { return c[static_cast<size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<size_t>(i)]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < dim; ++i) c[i] += o.c[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < dim; ++i) c[i] -= o.c[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < dim; ++i) c[i] *= s;
    return *this;
  }
};

inline Vec operator+(Vec a, const Vec& b) { return a += b; }
inline Vec operator-(Vec a, const Vec& b) { return a -= b; }
inline Vec operator*(double s, Vec a) { return a *= s; }
inline Vec operator*(Vec a, double s) { return a *= s; }

inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (int i = 0; i < a.dim; ++i) s += a[i] * b[i];
  return s;
}
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec zero_vec(int d) {
  Vec v;
  v.dim = d;
  return v;
}

// ---------------------------------------------------------------------------
// Mat: d x d matrix, d in {1, 2}.

struct Mat {
  std::array<double, 4> m{0, 0, 0, 0};  // row-major
  int dim = 1;

  Mat() = default;
  static Mat identity(int d) {
    Mat a;
    a.dim = d;
    for (int i = 0; i < d; ++i) a(i, i) = 1.0;
    return a;
  }
  static Mat zero(int d) {
    Mat a;
    a.dim = d;
    return a;
  }

  double& operator()(int i, int j) { return m[static_cast<size_t>(i * dim + j)]; }
  double operator()(int i, int j) const { return m[static_cast<size_t>(i * dim + j)]; }
};

inline Mat operator+(const Mat& a, const Mat& b) {
  Mat r = a;
  for (int i = 0; i < a.dim * a.dim; ++i) r.m[i] += b.m[i];
  return r;
}
inline Mat operator*(double s, const Mat& a) {
  Mat r = a;
  for (int i = 0; i < a.dim * a.dim; ++i) r.m[i] *= s;
  return r;
}
inline Vec operator*(const Mat& a, const Vec& v) {
  Vec r = zero_vec(a.dim);
  for (int i = 0; i < a.dim; ++i)
    for (int j = 0; j < a.dim; ++j) r[i] += a(i, j) * v[j];
  return r;
}

inline double det(const Mat& a) {
  if (a.dim == 1) return a(0, 0);
  return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
}

inline Mat inverse(const Mat& a) {
  double d = det(a);
  if (d == 0.0) throw ParameterError("singular matrix");
  Mat r;
  r.dim = a.dim;
  if (a.dim == 1) {
    r(0, 0) = 1.0 / d;
  } else {
    r(0, 0) = a(1, 1) / d;
    r(1, 1) = a(0, 0) / d;
    r(0, 1) = -a(0, 1) / d;
    r(1, 0) = -a(1, 0) / d;
  }
  return r;
}

// Eigenvalues of a symmetric d x d matrix, ascending.
inline std::array<double, 2> sym_eigenvalues(const Mat& a) {
  if (a.dim == 1) return {a(0, 0), a(0, 0)};
  double tr = a(0, 0) + a(1, 1);
  double dd = det(a);
  double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - dd));
  return {tr / 2.0 - disc, tr / 2.0 + disc};
}

// Condition number of a symmetric matrix (|lambda|_max / |lambda|_min).
inline double sym_condition(const Mat& a) {
  auto ev = sym_eigenvalues(a);
  double lo = std::min(std::abs(ev[0]), std::abs(ev[1]));
  double hi = std::max(std::abs(ev[0]), std::abs(ev[1]));
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

// ---------------------------------------------------------------------------
// SqMat: small square matrix of runtime size n <= 4 (variational flow).

struct SqMat {
  std::array<double, 16> m{};
  int n = 2;

  static SqMat identity(int n) {
    SqMat a;
    a.n = n;
    for (int i = 0; i < n; ++i) a(i, i) = 1.0;
    return a;
  }
  static SqMat zero(int n) {
    SqMat a;
    a.n = n;
    return a;
  }
  double& operator()(int i, int j) { return m[static_cast<size_t>(i * n + j)]; }
  double operator()(int i, int j) const { return m[static_cast<size_t>(i * n + j)]; }
};

inline SqMat operator+(const SqMat& a, const SqMat& b) {
  SqMat r = a;
  for (int i = 0; i < a.n * a.n; ++i) r.m[i] += b.m[i];
  return r;
}
inline SqMat operator*(double s, const SqMat& a) {
  SqMat r = a;
  for (int i = 0; i < a.n * a.n; ++i) r.m[i] *= s;
  return r;
}
inline SqMat operator*(const SqMat& a, const SqMat& b) {
  SqMat r = SqMat::zero(a.n);
  for (int i = 0; i < a.n; ++i)
    for (int k = 0; k < a.n; ++k) {
      double aik = a(i, k);
      for (int j = 0; j < a.n; ++j) r(i, j) += aik * b(k, j);
    }
  return r;
}

// Determinant by Gaussian elimination with partial pivoting.
inline double det(const SqMat& a0) {
  SqMat a = a0;
  double d = 1.0;
  for (int col = 0; col < a.n; ++col) {
    int piv = col;
    for (int r = col + 1; r < a.n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (a(piv, col) == 0.0) return 0.0;
    if (piv != col) {
      for (int j = 0; j < a.n; ++j) std::swap(a(piv, j), a(col, j));
      d = -d;
    }
    d *= a(col, col);
    for (int r = col + 1; r < a.n; ++r) {
      double f = a(r, col) / a(col, col);
      for (int j = col; j < a.n; ++j) a(r, j) -= f * a(col, j);
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Smooth profiles.

namespace detail {
inline double expm_inv(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
}  // namespace detail

// C-infinity bump of one variable: 1 on |u| <= 1, 0 on |u| >= 2,
// strictly decreasing in between.
inline double bump(double u) {
  double a = std::abs(u);
  if (a <= 1.0) return 1.0;
  if (a >= 2.0) return 0.0;
  double f1 = detail::expm_inv(2.0 - a);
  double f2 = detail::expm_inv(a - 1.0);
  return f1 / (f1 + f2);
}

// Smooth radial cutoff profile on the transition band [lambda, 2 lambda]:
// 1 for |k| <= lambda, exp(1 - 1/(1-u^2)) with u = (|k|-lambda)/lambda in
// between, 0 for |k| >= 2 lambda.
inline double cutoff_profile(double k, double lambda) {
  double a = std::abs(k);
  if (a <= lambda) return 1.0;
  if (a >= 2.0 * lambda) return 0.0;
  double u = (a - lambda) / lambda;
  return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

// ---------------------------------------------------------------------------
// Exact rational arithmetic (loss-budget bookkeeping).

struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n) : num(n), den(1) {}
  Rational(long long n, long long d) : num(n), den(d) { normalize(); }

  void normalize() {
    if (den == 0) throw ParameterError("rational with zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const {
    if (den == 1) return std::to_string(num);
    return std::to_string(num) + "/" + std::to_string(den);
  }
};

inline Rational operator+(Rational a, Rational b) {
  return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
}
inline Rational operator-(Rational a, Rational b) {
  return Rational(a.num * b.den - b.num * a.den, a.den * b.den);
}
inline Rational operator*(Rational a, Rational b) {
  return Rational(a.num * b.num, a.den * b.den);
}
inline Rational operator/(Rational a, Rational b) {
  if (b.num == 0) throw ParameterError("rational division by zero");
  return Rational(a.num * b.den, a.den * b.num);
}
inline bool operator==(Rational a, Rational b) {
  return a.num == b.num && a.den == b.den;
}
inline bool operator!=(Rational a, Rational b) { return !(a == b); }

// ---------------------------------------------------------------------------
// Worker-pool knob and a deterministic parallel map over an index range.
// Results must be written to disjoint slots; the chunk split is independent
// of the thread count, so outputs are identical for any setting.

inline int& thread_count() {
  static int n = 1;
  return n;
}
inline void set_threads(int n) { thread_count() = std::max(1, n); }

template <typename F>
void parallel_for(size_t count, F&& body) {
  int n = std::min<size_t>(thread_count(), count ? count : 1);
  if (n <= 1) {
    for (size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<size_t> next{0};
  for (int w = 0; w < n; ++w)
    pool.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Least-squares line fit y = intercept + slope * x.

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double max_residual = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw FitError("fit_line needs at least two matched samples");
  double n = static_cast<double>(x.size());
  double sx = std::accumulate(x.begin(), x.end(), 0.0);
  double sy = std::accumulate(y.begin(), y.end(), 0.0);
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw FitError("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  for (size_t i = 0; i < x.size(); ++i)
    f.max_residual = std::max(f.max_residual, std::abs(y[i] - f.intercept - f.slope * x[i]));
  return f;
}

}  // namespace wp
