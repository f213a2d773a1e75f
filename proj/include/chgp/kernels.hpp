#pragma once

// Covariance families: Matern, confluent hypergeometric (CH), generalized Cauchy
// (GC) and tensor products of those, with spectral densities, effective-range
// calibration and the CH microergodic parameter.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "chgp/errors.hpp"
#include "chgp/quadrature.hpp"
#include "chgp/specfun.hpp"

namespace chgp {

struct MaternParams {
  double nu = 0.5;
  double phi = 1.0;
  double sigma2 = 1.0;
};

struct CHParams {
  double nu = 0.5;
  double alpha = 1.0;
  double beta = 1.0;
  double sigma2 = 1.0;
};

struct GCParams {
  double delta = 1.0;
  double lambda = 1.0;
  double phi = 1.0;
  double sigma2 = 1.0;
};

/// Isotropic family usable on its own or as a tensor component.
using IsoSpec = std::variant<MaternParams, CHParams, GCParams>;

/// Product of one-dimensional correlations, one per coordinate, times a global
/// variance. Components carry sigma2 = 1.
struct TensorParams {
  std::vector<IsoSpec> components;
  double sigma2 = 1.0;
};

using KernelSpec = std::variant<MaternParams, CHParams, GCParams, TensorParams>;

struct SpectralTailConstants {
  double amplitude = 0.0;
  double exponent = 0.0;
  double slow_vary_shift = 0.0;
};

namespace detail {

inline bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

inline bool positive_or_zero(double v) { return std::isfinite(v) && v >= 0.0; }

inline void check_lag(double h) {
  if (!(std::isfinite(h) && h >= 0.0)) {
    throw DomainError("covariance lag must be finite and nonnegative, got " + std::to_string(h));
  }
}

inline void check_dim(int d) { require(d >= 1 && d <= 3, "spectral density: dimension must be 1, 2 or 3"); }

}  // namespace detail

// sigma2 = 0 is accepted so degenerate (constant) processes can be simulated.
inline void validate(const MaternParams& p) {
  detail::require(detail::positive_finite(p.nu) && detail::positive_finite(p.phi) &&
                      detail::positive_or_zero(p.sigma2),
                  "Matern: nu, phi must be positive and finite, sigma2 nonnegative");
}

inline void validate(const CHParams& p) {
  detail::require(detail::positive_finite(p.nu) && detail::positive_finite(p.alpha) &&
                      detail::positive_finite(p.beta) && detail::positive_or_zero(p.sigma2),
                  "CH: nu, alpha, beta must be positive and finite, sigma2 nonnegative");
}

inline void validate(const GCParams& p) {
  detail::require(std::isfinite(p.delta) && p.delta > 0.0 && p.delta <= 2.0,
                  "GC: delta must lie in (0, 2]");
  detail::require(detail::positive_finite(p.lambda) && detail::positive_finite(p.phi) &&
                      detail::positive_or_zero(p.sigma2),
                  "GC: lambda, phi must be positive and finite, sigma2 nonnegative");
}

inline void validate(const TensorParams& p) {
  detail::require(!p.components.empty(), "tensor kernel: needs at least one component");
  detail::require(detail::positive_or_zero(p.sigma2), "tensor kernel: sigma2 must be nonnegative");
  for (const auto& c : p.components) {
    std::visit([](const auto& q) { validate(q); }, c);
    const double s2 = std::visit([](const auto& q) { return q.sigma2; }, c);
    detail::require(s2 == 1.0, "tensor kernel: components must have unit variance");
  }
}

inline void validate(const IsoSpec& s) {
  std::visit([](const auto& p) { validate(p); }, s);
}

inline void validate(const KernelSpec& s) {
  std::visit([](const auto& p) { validate(p); }, s);
}

template <class Spec>
double variance(const Spec& s) {
  return std::visit([](const auto& p) { return p.sigma2; }, s);
}

template <class Spec>
Spec with_variance(Spec s, double sigma2) {
  std::visit([&](auto& p) { p.sigma2 = sigma2; }, s);
  return s;
}

inline std::string family_name(const KernelSpec& s) {
  static constexpr std::array<const char*, 4> names = {"matern", "ch", "gc", "tensor"};
  return names[s.index()];
}

/// Non-fatal parameter remarks, e.g. GC with lambda > d.
inline std::vector<std::string> kernel_warnings(const KernelSpec& s, int d) {
  std::vector<std::string> out;
  auto check_gc = [&](const IsoSpec& iso, int dim) {
    if (const auto* gc = std::get_if<GCParams>(&iso); gc && gc->lambda > dim) {
      out.push_back("GC lambda=" + std::to_string(gc->lambda) + " exceeds the dimension " +
                    std::to_string(dim) + "; positive definiteness is not guaranteed");
    }
  };
  if (const auto* t = std::get_if<TensorParams>(&s)) {
    for (const auto& c : t->components) check_gc(c, 1);
  } else {
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (!std::is_same_v<T, TensorParams>) check_gc(IsoSpec{p}, d);
        },
        s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Isotropic covariance functions.
// ---------------------------------------------------------------------------

namespace detail {

inline double matern_corr(double h, double nu, double phi) {
  if (h == 0.0) return 1.0;
  const double z = std::sqrt(2.0 * nu) * h / phi;
  if (nu == 0.5) return std::exp(-z);
  if (nu == 1.5) return (1.0 + z) * std::exp(-z);
  if (nu == 2.5) return (1.0 + z + z * z / 3.0) * std::exp(-z);
  const double lg = (1.0 - nu) * std::numbers::ln2 - log_gamma(nu) + nu * std::log(z) + log_bessel_k(nu, z);
  return std::min(1.0, std::exp(lg));
}

inline double ch_log_prefactor(double nu, double alpha) { return log_gamma(nu + alpha) - log_gamma(nu); }

inline double ch_corr(double h, double nu, double alpha, double beta) {
  if (h == 0.0) return 1.0;
  const double r = h / beta;
  const double x = nu * r * r;
  if (!(x > 0.0)) return 1.0;  // lag below the resolution of x
  const double lg = ch_log_prefactor(nu, alpha) + log_hyperg_u(alpha, 1.0 - nu, x);
  return std::min(1.0, std::exp(lg));
}

inline double gc_corr(double h, double delta, double lambda, double phi) {
  if (h == 0.0) return 1.0;
  return std::exp(-(lambda / delta) * std::log1p(std::pow(h / phi, delta)));
}

}  // namespace detail

/// Matern covariance sigma2 * 2^{1-nu}/Gamma(nu) * z^nu K_nu(z), z = sqrt(2 nu) h / phi.
/// nu in {1/2, 3/2, 5/2} uses the exponential-polynomial closed forms.
inline double matern_cov(double h, const MaternParams& p) {
  detail::check_lag(h);
  validate(p);
  return p.sigma2 * detail::matern_corr(h, p.nu, p.phi);
}

/// CH covariance sigma2 * Gamma(nu+alpha)/Gamma(nu) * U(alpha, 1-nu, nu (h/beta)^2).
inline double ch_cov(double h, const CHParams& p) {
  detail::check_lag(h);
  validate(p);
  return p.sigma2 * detail::ch_corr(h, p.nu, p.alpha, p.beta);
}

/// GC covariance sigma2 * (1 + (h/phi)^delta)^{-lambda/delta}.
inline double gc_cov(double h, const GCParams& p) {
  detail::check_lag(h);
  validate(p);
  return p.sigma2 * detail::gc_corr(h, p.delta, p.lambda, p.phi);
}

/// CH covariance from its scale-mixture form
///   sigma2 beta^{2 alpha} Gamma(nu+alpha) / (Gamma(nu) Gamma(alpha))
///     * int_0^inf x^{nu-1} (x + beta^2)^{-(nu+alpha)} exp(-nu h^2 / x) dx,
/// integrated in log x. Independent of the U-function route.
inline double ch_cov_mixture(double h, const CHParams& p, const QuadratureConfig& cfg = {}) {
  detail::check_lag(h);
  validate(p);
  const double nu = p.nu;
  const double a = p.alpha;
  const double b2 = p.beta * p.beta;
  const double nh2 = nu * h * h;
  auto log_f = [&](double u) {
    const double x = std::exp(u);
    const double lg = u > 0.0 ? u + std::log1p(b2 / x) : std::log(x + b2);
    return nu * u - (nu + a) * lg - nh2 / x;
  };
  UnimodalOptions opt;
  opt.mode_hint = std::log(b2);
  const auto r = integrate_unimodal_log(log_f, -std::numeric_limits<double>::infinity(),
                                        std::numeric_limits<double>::infinity(), cfg, opt);
  const double log_pre = std::log(p.sigma2) + a * std::log(b2) + log_gamma(nu + a) - log_gamma(nu) - log_gamma(a);
  return std::exp(log_pre + r.log_value);
}

/// Large-lag approximation
///   sigma2 beta^{2 alpha} Gamma(nu+alpha) / (nu^alpha Gamma(nu)) h^{-2 alpha} L(h^2),
/// L(x) = (x / (x + beta^2/(2 nu)))^{nu+alpha}.
inline double ch_tail_approx(double h, const CHParams& p) {
  validate(p);
  detail::require(std::isfinite(h) && h > 0.0, "ch_tail_approx: requires h > 0");
  const double h2 = h * h;
  const double shift = p.beta * p.beta / (2.0 * p.nu);
  const double log_l = -(p.nu + p.alpha) * std::log1p(shift / h2);
  const double lg = std::log(p.sigma2) + 2.0 * p.alpha * std::log(p.beta) + detail::ch_log_prefactor(p.nu, p.alpha) -
                    p.alpha * std::log(p.nu) - 2.0 * p.alpha * std::log(h) + log_l;
  return std::exp(lg);
}

/// Slowly varying factor L(x) of the tail approximation.
inline double ch_tail_slowly_varying(double x, const CHParams& p) {
  validate(p);
  detail::require(std::isfinite(x) && x > 0.0, "ch_tail_slowly_varying: requires x > 0");
  return std::exp(-(p.nu + p.alpha) * std::log1p(p.beta * p.beta / (2.0 * p.nu * x)));
}

/// Unit-variance correlation of an isotropic spec at lag h.
inline double correlation(const IsoSpec& s, double h) {
  detail::check_lag(h);
  return std::visit(
      [h](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        validate(p);
        if constexpr (std::is_same_v<T, MaternParams>) return detail::matern_corr(h, p.nu, p.phi);
        if constexpr (std::is_same_v<T, CHParams>) return detail::ch_corr(h, p.nu, p.alpha, p.beta);
        if constexpr (std::is_same_v<T, GCParams>) return detail::gc_corr(h, p.delta, p.lambda, p.phi);
      },
      s);
}

inline double covariance(const IsoSpec& s, double h) { return variance(s) * correlation(s, h); }

/// Tensor-product covariance sigma2 * prod_i R_i(|s_i - u_i|).
inline double tensor_cov(std::span<const double> s, std::span<const double> u, const TensorParams& p) {
  validate(p);
  if (s.size() != u.size() || s.size() != p.components.size()) {
    throw InputError("tensor_cov: coordinate dimension " + std::to_string(s.size()) + "/" +
                     std::to_string(u.size()) + " does not match tensor arity " +
                     std::to_string(p.components.size()));
  }
  double prod = p.sigma2;
  for (std::size_t i = 0; i < s.size(); ++i) prod *= correlation(p.components[i], std::abs(s[i] - u[i]));
  return prod;
}

inline IsoSpec to_iso(const KernelSpec& s) {
  return std::visit(
      [](const auto& p) -> IsoSpec {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TensorParams>) {
          throw InputError("tensor kernels have no isotropic form");
        } else {
          return p;
        }
      },
      s);
}

inline KernelSpec to_kernel(const IsoSpec& s) {
  return std::visit([](const auto& p) -> KernelSpec { return p; }, s);
}

// ---------------------------------------------------------------------------
// Spectral densities (normalized so that int_{R^d} f = C(0)).
// ---------------------------------------------------------------------------

/// Matern spectral density
///   sigma2 Gamma(nu+d/2) / (Gamma(nu) pi^{d/2}) kappa^{2 nu} / (kappa^2 + omega^2)^{nu+d/2},
/// kappa^2 = 2 nu / phi^2.
inline double matern_spectral(double omega, const MaternParams& p, int d) {
  validate(p);
  detail::check_dim(d);
  detail::require(std::isfinite(omega) && omega >= 0.0, "matern_spectral: omega must be >= 0");
  const double hd = 0.5 * d;
  const double k2 = 2.0 * p.nu / (p.phi * p.phi);
  const double lg = std::log(p.sigma2) + log_gamma(p.nu + hd) - log_gamma(p.nu) - hd * std::log(std::numbers::pi) +
                    p.nu * std::log(k2) - (p.nu + hd) * std::log(k2 + omega * omega);
  return std::exp(lg);
}

/// CH spectral density: the Matern density mixed over u = phi^{-2} ~ Gamma(alpha, rate beta^2/2),
/// integrated in log u. Finite only for alpha > d/2.
inline double ch_spectral(double omega, const CHParams& p, int d, const QuadratureConfig& cfg = {1e-12, 1e-8, 200}) {
  validate(p);
  detail::check_dim(d);
  detail::require(std::isfinite(omega) && omega >= 0.0, "ch_spectral: omega must be >= 0");
  const double hd = 0.5 * d;
  if (!(p.alpha > hd)) {
    throw DomainError("ch_spectral: density is infinite unless alpha > d/2 (alpha=" + std::to_string(p.alpha) +
                      ", d=" + std::to_string(d) + ")");
  }
  const double nu = p.nu;
  const double rate = 0.5 * p.beta * p.beta;
  const double w2 = omega * omega;
  auto log_f = [&](double t) {
    const double k2 = 2.0 * nu * std::exp(t);
    return nu * std::log(k2) - (nu + hd) * std::log(k2 + w2) + p.alpha * t - rate * std::exp(t);
  };
  UnimodalOptions opt;
  opt.mode_hint = std::log((p.alpha + nu) / rate);
  const auto r = integrate_unimodal_log(log_f, -std::numeric_limits<double>::infinity(),
                                        std::numeric_limits<double>::infinity(), cfg, opt);
  const double log_pre = std::log(p.sigma2) + log_gamma(nu + hd) - log_gamma(nu) - hd * std::log(std::numbers::pi) +
                         p.alpha * std::log(rate) - log_gamma(p.alpha);
  return std::exp(log_pre + r.log_value);
}

/// Constants of the CH spectral tail f(omega) ~ amplitude omega^{-exponent} L(omega^2),
/// L(x) = (x / (x + slow_vary_shift))^{nu+d/2}.
inline SpectralTailConstants ch_spectral_tail(const CHParams& p, int d) {
  validate(p);
  detail::check_dim(d);
  const double hd = 0.5 * d;
  const double lg = std::log(p.sigma2) + 2.0 * p.nu * std::numbers::ln2 + p.nu * std::log(p.nu) +
                    log_gamma(p.nu + p.alpha) + log_gamma(p.nu + hd) - hd * std::log(std::numbers::pi) -
                    2.0 * p.nu * std::log(p.beta) - log_gamma(p.alpha) - log_gamma(p.nu);
  return {std::exp(lg), 2.0 * p.nu + d, p.beta * p.beta / (2.0 * p.nu)};
}

inline double ch_spectral_tail_value(double omega, const CHParams& p, int d) {
  const auto t = ch_spectral_tail(p, d);
  detail::require(std::isfinite(omega) && omega > 0.0, "ch_spectral_tail_value: omega must be > 0");
  const double w2 = omega * omega;
  const double log_l = -(p.nu + 0.5 * d) * std::log1p(t.slow_vary_shift / w2);
  return std::exp(std::log(t.amplitude) - t.exponent * std::log(omega) + log_l);
}

// ---------------------------------------------------------------------------
// Effective range, microergodic parameter, equivalence.
// ---------------------------------------------------------------------------

inline constexpr double kEffectiveRangeLevel = 0.05;

namespace detail {

inline IsoSpec with_scale(IsoSpec s, double scale) {
  std::visit(
      [scale](auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CHParams>) {
          p.beta = scale;
        } else {
          p.phi = scale;
        }
      },
      s);
  return s;
}

}  // namespace detail

inline double scale_of(const IsoSpec& s) {
  return std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CHParams>) {
          return p.beta;
        } else {
          return p.phi;
        }
      },
      s);
}

/// Scale parameter (phi for Matern and GC, beta for CH) that puts the correlation
/// at target_er to 0.05. Bisection in log scale; the bracket starts at
/// [1e-3, 1e3] * target_er and widens geometrically to [1e-8, 1e8] * target_er.
inline double effective_range_scale(const IsoSpec& shape, double target_er) {
  detail::require(detail::positive_finite(target_er), "effective_range: target must be positive");
  auto g = [&](double log_scale) {
    return correlation(detail::with_scale(shape, std::exp(log_scale)), target_er) - kEffectiveRangeLevel;
  };
  const double base = std::log(target_er);
  double lo = base + std::log(1e-3);
  double hi = base + std::log(1e3);
  const double lo_limit = base + std::log(1e-8);
  const double hi_limit = base + std::log(1e8);
  // correlation increases with the scale
  while (g(lo) > 0.0) {
    if (lo <= lo_limit) throw ConvergenceError("effective_range: no bracket within [1e-8, 1e8] * target");
    lo = std::max(lo_limit, lo - std::log(10.0));
  }
  while (g(hi) < 0.0) {
    if (hi >= hi_limit) throw ConvergenceError("effective_range: no bracket within [1e-8, 1e8] * target");
    hi = std::min(hi_limit, hi + std::log(10.0));
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (gm == 0.0) return std::exp(mid);
    (gm > 0.0 ? hi : lo) = mid;
  }
  const double glo = std::abs(g(lo));
  const double ghi = std::abs(g(hi));
  return std::exp(glo < ghi ? lo : hi);
}

/// Copy of shape with its scale set by effective_range_scale.
inline IsoSpec calibrate_effective_range(const IsoSpec& shape, double target_er) {
  return detail::with_scale(shape, effective_range_scale(shape, target_er));
}

/// c = sigma2 beta^{-2 nu} Gamma(nu+alpha) / Gamma(alpha).
inline double microergodic(const CHParams& p) {
  validate(p);
  return std::exp(std::log(p.sigma2) - 2.0 * p.nu * std::log(p.beta) + log_gamma(p.nu + p.alpha) -
                  log_gamma(p.alpha));
}

/// The Matern analogue sigma2 phi^{-2 nu}, on the scale that matches the CH value
/// sigma2 (beta^2/2)^{-nu} Gamma(nu+alpha)/Gamma(alpha).
inline double matern_microergodic(const MaternParams& p) {
  validate(p);
  return std::exp(std::log(p.sigma2) - 2.0 * p.nu * std::log(p.phi));
}

struct EquivalenceResult {
  bool equivalent = false;
  double residual = 0.0;  // q2 / q1 - 1
};

inline EquivalenceResult equivalence_check(const CHParams& p1, const CHParams& p2, double rel_tol) {
  detail::require(p1.nu == p2.nu, "equivalence_check: smoothness nu must agree");
  detail::require(rel_tol >= 0.0, "equivalence_check: rel_tol must be nonnegative");
  const double r = std::expm1(std::log(microergodic(p2)) - std::log(microergodic(p1)));
  return {std::abs(r) <= rel_tol, r};
}

inline EquivalenceResult equivalence_check(const CHParams& p1, const MaternParams& p2, double rel_tol) {
  detail::require(p1.nu == p2.nu, "equivalence_check: smoothness nu must agree");
  detail::require(rel_tol >= 0.0, "equivalence_check: rel_tol must be nonnegative");
  const double log_q1 = std::log(microergodic(p1)) + p1.nu * std::numbers::ln2;
  const double r = std::expm1(std::log(matern_microergodic(p2)) - log_q1);
  return {std::abs(r) <= rel_tol, r};
}

/// Matern variance that is equivalent to the CH model at range phi.
inline double matched_matern_variance(const CHParams& p, double phi) {
  return std::exp(std::log(microergodic(p)) + p.nu * std::numbers::ln2 + 2.0 * p.nu * std::log(phi));
}

/// CH variance that is equivalent to the Matern model for the given CH shape.
inline double matched_ch_variance(const MaternParams& m, double alpha, double beta) {
  const CHParams unit{m.nu, alpha, beta, 1.0};
  return std::exp(std::log(matern_microergodic(m)) - std::log(microergodic(unit)) - m.nu * std::numbers::ln2);
}

/// CH parameters converging to Matern(nu, gamma, sigma2) as alpha grows:
/// beta = sqrt(2 (alpha + 1)) gamma.
inline CHParams matern_limit_of_ch(double gamma, double nu, double sigma2, double alpha) {
  CHParams p{nu, alpha, std::sqrt(2.0 * (alpha + 1.0)) * gamma, sigma2};
  validate(p);
  return p;
}

/// GC smoothness paired with Matern/CH smoothness nu in cross-family comparisons.
inline double gc_delta_for(double nu) { return std::min(2.0 * nu, 2.0); }

// ---------------------------------------------------------------------------
// Tabulated correlation for large covariance assemblies.
// ---------------------------------------------------------------------------

/// Piecewise Chebyshev interpolant of a radial correlation on [h_min, h_max]
/// using dyadic panels [h_max 2^{-k-1}, h_max 2^{-k}]. Lags outside the table
/// (and zero) go to the exact function.
template <class F>
class RadialTable {
 public:
  static constexpr int kOrder = 20;

  RadialTable(F f, double h_min, double h_max, int max_panels = 60) : f_(std::move(f)), h_max_(h_max) {
    detail::require(h_min > 0.0 && h_max >= h_min, "RadialTable: requires 0 < h_min <= h_max");
    panels_ = 1;
    while (panels_ < max_panels && std::ldexp(h_max, -panels_) > h_min) ++panels_;
    h_lo_ = std::ldexp(h_max, -panels_);
    coef_.resize(static_cast<std::size_t>(panels_) * kOrder);
    std::array<double, kOrder> vals{};
    for (int k = 0; k < panels_; ++k) {
      const double hi = std::ldexp(h_max, -k);
      const double lo = 0.5 * hi;
      for (int j = 0; j < kOrder; ++j) {
        const double t = std::cos(std::numbers::pi * (j + 0.5) / kOrder);
        vals[j] = f_(0.5 * (lo + hi) + 0.5 * (hi - lo) * t);
      }
      for (int m = 0; m < kOrder; ++m) {
        double s = 0.0;
        for (int j = 0; j < kOrder; ++j) s += vals[j] * std::cos(std::numbers::pi * m * (j + 0.5) / kOrder);
        coef_[static_cast<std::size_t>(k) * kOrder + m] = (m == 0 ? 1.0 : 2.0) * s / kOrder;
      }
    }
  }

  double operator()(double h) const {
    if (!(h > h_lo_) || h > h_max_) return f_(h);
    int e = 0;
    const double m = std::frexp(h / h_max_, &e);  // h / h_max = m 2^e, m in [0.5, 1)
    int k = -e;
    double t = 4.0 * m - 3.0;
    if (k < 0) {  // h == h_max
      k = 0;
      t = 1.0;
    }
    if (k >= panels_) return f_(h);
    const double* c = &coef_[static_cast<std::size_t>(k) * kOrder];
    double b1 = 0.0;
    double b2 = 0.0;
    for (int j = kOrder - 1; j >= 1; --j) {
      const double b0 = 2.0 * t * b1 - b2 + c[j];
      b2 = b1;
      b1 = b0;
    }
    return t * b1 - b2 + c[0];
  }

  int panels() const { return panels_; }
  double h_lo() const { return h_lo_; }

 private:
  F f_;
  double h_max_;
  double h_lo_ = 0.0;
  int panels_ = 0;
  std::vector<double> coef_;
};

}  // namespace chgp
