#pragma once

// Special functions used by the covariance families: log-gamma, the modified
// Bessel function of the second kind K_nu, and Tricomi's confluent
// hypergeometric function U(a, b, x).

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "chgp/errors.hpp"
#include "chgp/quadrature.hpp"

namespace chgp {

namespace detail {

inline double lgamma_signed(double x, int* sign) {
#if defined(__GLIBC__) || defined(__APPLE__)
  return ::lgamma_r(x, sign);
#else
  const double v = std::lgamma(x);
  *sign = (x > 0.0 || std::fmod(std::floor(x), 2.0) != 0.0) ? 1 : -1;
  return v;
#endif
}

inline bool near_integer(double v, double tol) { return std::abs(v - std::nearbyint(v)) < tol; }

inline bool nonpositive_integer(double v) { return v <= 0.0 && v == std::nearbyint(v); }

inline double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace detail

/// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw DomainError("log_gamma: argument must be finite and positive, got " + std::to_string(x));
  }
  int sign = 1;
  return detail::lgamma_signed(x, &sign);
}

namespace detail {

// Chebyshev expansions of Gamma1(mu) and Gamma2(mu) on |mu| <= 1/2 (Temme's
// auxiliary functions for K_mu near the origin).
inline double chebyshev_eval(const double* c, int m, double y) {
  const double y2 = 2.0 * y;
  double d = 0.0;
  double dd = 0.0;
  for (int j = m - 1; j >= 1; --j) {
    const double sv = d;
    d = y2 * d - dd + c[j];
    dd = sv;
  }
  return y * d - dd + 0.5 * c[0];
}

struct TemmeGammas {
  double gam1;
  double gam2;
  double gampl;  // 1 / Gamma(1 + mu)
  double gammi;  // 1 / Gamma(1 - mu)
};

inline TemmeGammas temme_gammas(double mu) {
  static constexpr double c1[] = {-1.142022680371168e0, 6.5165112670737e-3, 3.087090173086e-4,
                                  -3.4706269649e-6,     6.9437664e-9,       3.67795e-11,
                                  -1.356e-13};
  static constexpr double c2[] = {1.843740587300905e0, -7.68528408447867e-2, 1.2719271366546e-3,
                                  -4.9717367042e-6,    -3.31261198e-8,       2.423096e-10,
                                  -1.702e-13,          -1.49e-15};
  const double y = 8.0 * mu * mu - 1.0;
  TemmeGammas g{};
  g.gam1 = chebyshev_eval(c1, 7, y);
  g.gam2 = chebyshev_eval(c2, 8, y);
  g.gampl = g.gam2 - mu * g.gam1;
  g.gammi = g.gam2 + mu * g.gam1;
  return g;
}

// e^x K_nu(x) = value * exp(log_scale); log_scale is nonzero only when the
// forward recurrence would overflow.
struct ScaledBessel {
  double value;
  double log_scale;
};

// Temme's series for x < 2, Steed's continued fraction otherwise, then forward
// recurrence from the fractional order.
inline ScaledBessel bessel_k_scaled_parts(double nu, double x) {
  constexpr double eps = 1e-16;
  constexpr int max_iter = 100000;
  const int nl = static_cast<int>(nu + 0.5);
  const double mu = nu - nl;
  const double mu2 = mu * mu;
  const double xi = 1.0 / x;
  const double xi2 = 2.0 * xi;
  double k_mu = 0.0;
  double k_mu1 = 0.0;
  if (x < 2.0) {
    const double x2 = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < eps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(x2);
    double e = mu * d;
    const double fact2 = std::abs(e) < eps ? 1.0 : std::sinh(e) / e;
    const auto g = temme_gammas(mu);
    double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / g.gampl;
    double q = 0.5 / (e * g.gammi);
    double c = 1.0;
    d = x2 * x2;
    double sum1 = p;
    int i = 1;
    for (; i <= max_iter; ++i) {
      ff = (i * ff + p + q) / (i * static_cast<double>(i) - mu2);
      c *= d / i;
      p /= (i - mu);
      q /= (i + mu);
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - i * ff);
      if (std::abs(del) < std::abs(sum) * eps) break;
    }
    if (i > max_iter) throw ConvergenceError("bessel_k: Temme series failed to converge");
    const double scale = std::exp(x);
    k_mu = sum * scale;
    k_mu1 = sum1 * xi2 * scale;
  } else {
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    int i = 2;
    for (; i <= max_iter; ++i) {
      a -= 2 * (i - 1);
      c = -a * c / i;
      const double qnew = (q1 - b * q2) / a;
      q1 = q2;
      q2 = qnew;
      q += c * qnew;
      b += 2.0;
      d = 1.0 / (b + a * d);
      delh = (b * d - 1.0) * delh;
      h += delh;
      const double dels = q * delh;
      s += dels;
      if (std::abs(dels / s) < eps) break;
    }
    if (i > max_iter) throw ConvergenceError("bessel_k: Steed continued fraction failed to converge");
    h = a1 * h;
    k_mu = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
    k_mu1 = k_mu * (mu + x + 0.5 - h) * xi;
  }
  double log_scale = 0.0;
  for (int i = 1; i <= nl; ++i) {
    const double next = (mu + i) * xi2 * k_mu1 + k_mu;
    k_mu = k_mu1;
    k_mu1 = next;
    if (k_mu1 > 1e250) {
      k_mu *= 1e-250;
      k_mu1 *= 1e-250;
      log_scale += 250.0 * std::numbers::ln10;
    }
  }
  return {k_mu, log_scale};
}

inline double bessel_k_scaled_impl(double nu, double x) {
  const auto p = bessel_k_scaled_parts(nu, x);
  return p.log_scale == 0.0 ? p.value : p.value * std::exp(p.log_scale);
}

inline void check_bessel_args(double nu, double x) {
  if (!(std::isfinite(nu) && nu > 0.0) || !(std::isfinite(x) && x > 0.0)) {
    throw DomainError("bessel_k: order and argument must be positive and finite (nu=" +
                      std::to_string(nu) + ", x=" + std::to_string(x) + ")");
  }
}

}  // namespace detail

/// e^x K_nu(x); finite for all x > 0 where K_nu itself underflows.
inline double bessel_k_scaled(double nu, double x) {
  detail::check_bessel_args(nu, x);
  return detail::bessel_k_scaled_impl(nu, x);
}

/// Modified Bessel function of the second kind K_nu(x). Overflows to +inf for
/// large orders at tiny arguments.
inline double bessel_k(double nu, double x) {
  detail::check_bessel_args(nu, x);
  return detail::bessel_k_scaled_impl(nu, x) * std::exp(-x);
}

/// ln K_nu(x) without overflow or underflow of the intermediate.
inline double log_bessel_k(double nu, double x) {
  detail::check_bessel_args(nu, x);
  const auto p = detail::bessel_k_scaled_parts(nu, x);
  return std::log(p.value) + p.log_scale - x;
}

// ---------------------------------------------------------------------------
// Confluent hypergeometric function of the second kind.
// ---------------------------------------------------------------------------

/// Which evaluation route produced a value of U (exposed for tests and timing).
enum class HypergURoute { identity, asymptotic, series, recurrence, quadrature };

struct HypergUValue {
  double log_value;
  HypergURoute route;
};

namespace detail {

inline constexpr double kHypergSeriesMaxX = 5.0;
inline constexpr double kHypergAsymptoticMinX = 8.0;

// Large-x expansion x^{-a} sum_k (a)_k (a-b+1)_k / k! (-x)^{-k}; accepted only
// when the terms fall below double precision before they start to grow.
inline bool hyperg_u_asymptotic(double a, double b, double x, double* log_u) {
  const double c = a - b + 1.0;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < 200; ++k) {
    const double factor = -(a + k) * (c + k) / ((k + 1.0) * x);
    const double next = term * factor;
    if (factor == 0.0) {  // (a-b+1) is a nonpositive integer: the series terminates
      if (!(sum > 0.0)) return false;
      *log_u = -a * std::log(x) + std::log(sum);
      return true;
    }
    if (std::abs(next) > std::abs(term)) return false;
    sum += next;
    term = next;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) {
      if (!(sum > 0.0)) return false;
      *log_u = -a * std::log(x) + std::log(sum);
      return true;
    }
  }
  return false;
}

struct SeriesSum {
  double sum;
  double max_term;
};

// Kummer's M(a, b, x) by direct summation.
inline SeriesSum kummer_m_series(double a, double b, double x) {
  double term = 1.0;
  double sum = 1.0;
  double max_term = 1.0;
  const double settle = std::max(0.0, -b) + 2.0;
  for (int k = 0; k < 1000; ++k) {
    term *= (a + k) * x / ((b + k) * (k + 1.0));
    sum += term;
    max_term = std::max(max_term, std::abs(term));
    if (k > settle && std::abs(term) < 1e-17 * std::abs(sum)) return {sum, max_term};
  }
  return {sum, std::numeric_limits<double>::infinity()};
}

// Small-x route through the connection formula
//   U = Gamma(1-b)/Gamma(a-b+1) M(a,b,x) + Gamma(b-1)/Gamma(a) x^{1-b} M(a-b+1,2-b,x),
// valid for non-integer b. Rejected if cancellation would cost accuracy.
inline bool hyperg_u_series(double a, double b, double x, double* log_u) {
  if (near_integer(b, 0.05) || std::abs(b) > 60.0) return false;
  const double c = a - b + 1.0;
  constexpr double ninf = -std::numeric_limits<double>::infinity();

  int s_g1 = 1;
  const double lg_1mb = lgamma_signed(1.0 - b, &s_g1);
  double log_t1 = ninf;
  int s_t1 = 1;
  SeriesSum m1{0.0, 0.0};
  if (!nonpositive_integer(c)) {
    int s_gc = 1;
    const double lg_c = lgamma_signed(c, &s_gc);
    m1 = kummer_m_series(a, b, x);
    if (!std::isfinite(m1.max_term) || m1.sum == 0.0) return false;
    log_t1 = lg_1mb - lg_c + std::log(std::abs(m1.sum));
    s_t1 = s_g1 * s_gc * (m1.sum > 0.0 ? 1 : -1);
  }

  int s_g2 = 1;
  const double lg_bm1 = lgamma_signed(b - 1.0, &s_g2);
  const SeriesSum m2 = kummer_m_series(c, 2.0 - b, x);
  if (!std::isfinite(m2.max_term) || m2.sum == 0.0) return false;
  const double log_t2 = lg_bm1 - log_gamma(a) + (1.0 - b) * std::log(x) + std::log(std::abs(m2.sum));
  const int s_t2 = s_g2 * (m2.sum > 0.0 ? 1 : -1);

  const double top = std::max(log_t1, log_t2);
  const double w1 = log_t1 == ninf ? 0.0 : std::exp(log_t1 - top);
  const double w2 = std::exp(log_t2 - top);
  const double combined = s_t1 * w1 + s_t2 * w2;
  if (!(combined > 0.0)) return false;
  // Rounding in each series scales with its largest term; lgamma adds a few ulps.
  const double r1 = m1.sum == 0.0 ? 0.0 : m1.max_term / std::abs(m1.sum);
  const double r2 = m2.max_term / std::abs(m2.sum);
  const double err = 4e-16 * (w1 * (r1 + 8.0) + w2 * (r2 + 8.0)) / combined;
  if (err > 1e-12) return false;
  *log_u = top + std::log(combined);
  return true;
}

inline constexpr double kHypergRecurrenceMinX = 1.0;
inline constexpr int kHypergRecurrenceMaxSteps = 4000;
inline constexpr double kHypergRecurrenceMaxA = 8.0;
inline constexpr double kHypergRecurrenceMaxC = 16.0;

// Miller backward recurrence in a. With v_n = (a)_n (c)_n / n! U(a+n, b, x),
// c = a-b+1, the three-term recurrence becomes
//   v_{n-1} = n [(2a + 2n + x - b) v_n - (n+1) v_{n+1}] / ((a+n-1)(c+n-1)),
// v_n is its minimal solution, and sum_n v_n = x^{-a} (expand (1+t)^c in
// t/(1+t) under the integral). Only used for c > 0, where all v_n are positive.
inline bool hyperg_u_recurrence(double a, double b, double x, double* log_u) {
  const double c = a - b + 1.0;
  // The start estimate below ignores the a-dependence of U(a + n, b, x).
  if (!(c > 0.0) || a > kHypergRecurrenceMaxA || c > kHypergRecurrenceMaxC) return false;
  // v_n ~ n^{c-1} exp(-2 sqrt(n x)): start well past the peak of the terms.
  const double cm1 = std::max(0.0, c - 1.0);
  const double peak = std::max(1.0, cm1 * cm1 / x);
  auto log_term = [&](double n) { return cm1 * std::log(n) - 2.0 * std::sqrt(n * x); };
  const double target = log_term(peak) - 41.0;
  double start = std::max(peak, 8.0);
  while (log_term(start) > target) {
    start *= 1.25;
    if (start > kHypergRecurrenceMaxSteps) return false;
  }
  const int n_max = static_cast<int>(std::ceil(start)) + 2;
  double v_next = 0.0;
  double v = 1e-200;
  double sum = v;
  for (int n = n_max; n >= 1; --n) {
    const double den = (a + n - 1.0) * (c + n - 1.0);
    const double v_prev = n * ((2.0 * (a + n) + x - b) * v - (n + 1.0) * v_next) / den;
    v_next = v;
    v = v_prev;
    sum += v;
    if (std::abs(v) > 1e250) {
      v *= 1e-250;
      v_next *= 1e-250;
      sum *= 1e-250;
    }
  }
  if (!(v > 0.0 && sum > 0.0 && std::isfinite(sum))) return false;
  *log_u = -a * std::log(x) + std::log(v / sum);
  return true;
}

// Integral route: U = (1/Gamma(a)) int_0^inf t^{a-1} (1+t)^{b-a-1} e^{-xt} dt.
// [0, t0] is summed from the Taylor expansion of (1+t)^{b-a-1} e^{-xt};
// [t0, inf) is integrated in u = ln t with the integrand scaled by its peak.
inline double hyperg_u_quadrature(double a, double b, double x, const QuadratureConfig& cfg) {
  const double c = b - a - 1.0;
  const double t0 = 0.125 / std::max({1.0, x, std::abs(c)});
  const double u0 = std::log(t0);

  double q_prev = 0.0;
  double q = 1.0;
  double left = 1.0 / a;
  int small_terms = 0;
  for (int k = 0; k < 400 && small_terms < 2; ++k) {
    const double q_next = t0 * ((c - x - k) * q - x * t0 * q_prev) / (k + 1.0);
    q_prev = q;
    q = q_next;
    const double term = q / (a + k + 1.0);
    left += term;
    small_terms = std::abs(term) < 1e-17 * std::abs(left) ? small_terms + 1 : 0;
  }
  const double log_left = a * u0 + std::log(left);

  auto log_f = [a, c, x](double u) {
    const double t = std::exp(u);
    return a * u + c * std::log1p(t) - x * t;
  };
  auto slope = [a, c, x](double u) {
    const double t = std::exp(u);
    return a + c * t / (1.0 + t) - x * t;
  };
  // g' has exactly one sign change on the real line, so a bracketed Newton
  // iteration locates the mode.
  double mode = u0;
  if (slope(u0) > 0.0) {
    double lo = u0;
    double hi = u0 + 1.0;
    double step = 1.0;
    while (slope(hi) > 0.0) {
      lo = hi;
      step *= 2.0;
      hi += step;
      if (step > 1e4) throw ConvergenceError("hyperg_u: could not bracket integrand mode");
    }
    double u = 0.5 * (lo + hi);
    for (int it = 0; it < 100 && hi - lo > 1e-10; ++it) {
      const double t = std::exp(u);
      const double s = a + c * t / (1.0 + t) - x * t;
      if (s > 0.0) lo = u; else hi = u;
      const double curv = c * t / ((1.0 + t) * (1.0 + t)) - x * t;
      double next = curv < 0.0 ? u - s / curv : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - u) < 1e-12) {
        u = next;
        break;
      }
      u = next;
    }
    mode = u;
  }
  UnimodalOptions opt;
  opt.known_mode = mode;
  opt.panel_width = 3.0;
  const auto right = integrate_unimodal_log(log_f, u0, std::numeric_limits<double>::infinity(), cfg, opt);
  return log_add_exp(log_left, right.log_value) - log_gamma(a);
}

inline void check_hyperg_args(double a, double b, double x) {
  if (!(std::isfinite(a) && a > 0.0) || !(std::isfinite(x) && x > 0.0) || !std::isfinite(b)) {
    throw DomainError("hyperg_u: requires a > 0, x > 0 and finite b (a=" + std::to_string(a) +
                      ", b=" + std::to_string(b) + ", x=" + std::to_string(x) + ")");
  }
}

}  // namespace detail

/// ln U(a, b, x) together with the route that produced it.
inline HypergUValue log_hyperg_u_route(double a, double b, double x, const QuadratureConfig& cfg = {}) {
  detail::check_hyperg_args(a, b, x);
  cfg.validate();
  if (b == a + 1.0) return {-a * std::log(x), HypergURoute::identity};
  double value = 0.0;
  if (x >= detail::kHypergAsymptoticMinX && detail::hyperg_u_asymptotic(a, b, x, &value)) {
    return {value, HypergURoute::asymptotic};
  }
  if (x <= detail::kHypergSeriesMaxX && detail::hyperg_u_series(a, b, x, &value)) {
    return {value, HypergURoute::series};
  }
  if (x >= detail::kHypergRecurrenceMinX && detail::hyperg_u_recurrence(a, b, x, &value)) {
    return {value, HypergURoute::recurrence};
  }
  return {detail::hyperg_u_quadrature(a, b, x, cfg), HypergURoute::quadrature};
}

/// ln U(a, b, x) for a > 0, x > 0, any real b.
inline double log_hyperg_u(double a, double b, double x, const QuadratureConfig& cfg = {}) {
  return log_hyperg_u_route(a, b, x, cfg).log_value;
}

/// Tricomi's U(a, b, x). Returns +inf where the value exceeds the double range;
/// use log_hyperg_u there.
inline double hyperg_u(double a, double b, double x, const QuadratureConfig& cfg = {}) {
  return std::exp(log_hyperg_u(a, b, x, cfg));
}

}  // namespace chgp
