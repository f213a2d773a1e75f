#pragma once

// Gaussian-process core: covariance assembly, profile likelihood, REML,
// kriging of the latent process and the CH microergodic estimator.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "chgp/design.hpp"
#include "chgp/errors.hpp"
#include "chgp/kernels.hpp"

namespace chgp {

struct GPModel {
  KernelSpec kernel = MaternParams{};
  double mean_b = 0.0;
  double nugget_tau2 = 0.0;
};

inline void validate(const GPModel& m) {
  validate(m.kernel);
  detail::require(std::isfinite(m.mean_b), "GPModel: mean must be finite");
  detail::require(std::isfinite(m.nugget_tau2) && m.nugget_tau2 >= 0.0, "GPModel: nugget must be >= 0");
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct FitResult {
  GPModel model;
  double loglik = 0.0;  // value of the maximized objective
  std::string objective = "profile_ml";
  std::optional<double> microergodic_hat;  // CH fits only
  std::optional<Interval> microergodic_ci95;
  bool mean_estimated = false;
  int n_evals = 0;
  bool converged = false;
};

struct PredictionResult {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  Eigen::VectorXd lower95;
  Eigen::VectorXd upper95;
};

// ---------------------------------------------------------------------------
// Lags and correlation matrices.
// ---------------------------------------------------------------------------

/// Lags reused across repeated assemblies on a fixed location set: the distance
/// matrix for isotropic kernels, per-coordinate absolute differences for tensors.
struct LagCache {
  Eigen::MatrixXd dist;
  std::vector<Eigen::MatrixXd> coord_diff;
};

inline LagCache make_lag_cache(const Locations& a, const Locations& b, bool tensor) {
  LagCache c;
  if (!tensor) {
    c.dist = &a == &b ? pairwise_dist(a) : cross_dist(a, b);
    return c;
  }
  validate(a);
  validate(b);
  if (a.metric != Metric::euclidean || b.metric != Metric::euclidean || a.dim() != b.dim()) {
    throw InputError("tensor kernels need euclidean coordinates of equal dimension");
  }
  for (Eigen::Index k = 0; k < a.dim(); ++k) {
    Eigen::MatrixXd m(a.size(), b.size());
    for (Eigen::Index j = 0; j < b.size(); ++j) m.col(j) = (a.coords.col(k).array() - b.coords(j, k)).abs().matrix();
    c.coord_diff.push_back(std::move(m));
  }
  return c;
}

inline LagCache make_lag_cache(const Locations& locs, bool tensor) { return make_lag_cache(locs, locs, tensor); }

inline bool is_tensor(const KernelSpec& s) { return std::holds_alternative<TensorParams>(s); }

namespace detail {

inline constexpr Eigen::Index kTableMinEntries = 2000;

inline bool cheap_correlation(const IsoSpec& s) {
  if (std::holds_alternative<GCParams>(s)) return true;
  if (const auto* m = std::get_if<MaternParams>(&s)) return m->nu == 0.5 || m->nu == 1.5 || m->nu == 2.5;
  return false;
}

/// Applies the unit correlation of s elementwise to a lag matrix. Large matrices
/// with costly families go through a RadialTable.
inline Eigen::MatrixXd apply_correlation(const IsoSpec& s, const Eigen::MatrixXd& lags, bool symmetric) {
  validate(s);
  const Eigen::Index rows = lags.rows();
  const Eigen::Index cols = lags.cols();
  Eigen::MatrixXd out(rows, cols);
  auto exact = [&s](double h) { return correlation(s, h); };
  auto fill = [&](auto&& f) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const Eigen::Index start = symmetric ? j : 0;
      for (Eigen::Index i = start; i < rows; ++i) {
        const double h = lags(i, j);
        out(i, j) = h == 0.0 ? 1.0 : f(h);
        if (symmetric) out(j, i) = out(i, j);
      }
    }
  };
  const Eigen::Index entries = symmetric ? rows * (rows - 1) / 2 : rows * cols;
  if (entries < kTableMinEntries || cheap_correlation(s)) {
    fill(exact);
    return out;
  }
  double h_min = std::numeric_limits<double>::infinity();
  double h_max = 0.0;
  for (Eigen::Index k = 0; k < lags.size(); ++k) {
    const double h = lags.data()[k];
    if (h > 0.0) {
      h_min = std::min(h_min, h);
      h_max = std::max(h_max, h);
    }
  }
  if (!(h_max > 0.0)) {
    fill(exact);
    return out;
  }
  const RadialTable table(exact, h_min, h_max);
  fill(table);
  return out;
}

}  // namespace detail

/// Unit-variance correlation matrix between the point sets behind the cache.
inline Eigen::MatrixXd correlation_matrix(const KernelSpec& spec, const LagCache& lags, bool symmetric) {
  if (const auto* t = std::get_if<TensorParams>(&spec)) {
    validate(*t);
    if (lags.coord_diff.size() != t->components.size()) {
      throw InputError("tensor kernel arity " + std::to_string(t->components.size()) +
                       " does not match the coordinate dimension " + std::to_string(lags.coord_diff.size()));
    }
    Eigen::MatrixXd r = detail::apply_correlation(t->components[0], lags.coord_diff[0], symmetric);
    for (std::size_t k = 1; k < t->components.size(); ++k) {
      r.array() *= detail::apply_correlation(t->components[k], lags.coord_diff[k], symmetric).array();
    }
    return r;
  }
  if (lags.dist.size() == 0 && !lags.coord_diff.empty()) throw InputError("isotropic kernel needs a distance cache");
  return detail::apply_correlation(to_iso(spec), lags.dist, symmetric);
}

/// K = sigma2 R + tau2 I.
inline Eigen::MatrixXd cov_matrix(const GPModel& model, const Locations& locs) {
  validate(model);
  const auto lags = make_lag_cache(locs, is_tensor(model.kernel));
  Eigen::MatrixXd k = variance(model.kernel) * correlation_matrix(model.kernel, lags, true);
  k.diagonal().array() += model.nugget_tau2;
  return k;
}

/// Nugget-free cross covariance sigma2 r(a_i, b_j).
inline Eigen::MatrixXd cross_cov_matrix(const GPModel& model, const Locations& a, const Locations& b) {
  validate(model);
  const auto lags = make_lag_cache(a, b, is_tensor(model.kernel));
  return variance(model.kernel) * correlation_matrix(model.kernel, lags, false);
}

// ---------------------------------------------------------------------------
// Cholesky with jitter.
// ---------------------------------------------------------------------------

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
  double log_det = 0.0;

  Eigen::VectorXd solve(const Eigen::VectorXd& v) const { return llt.solve(v); }
  Eigen::MatrixXd solve(const Eigen::MatrixXd& v) const { return llt.solve(v); }
  /// v' A^{-1} v through the triangular factor.
  double quad_form(const Eigen::VectorXd& v) const { return llt.matrixL().solve(v).squaredNorm(); }
};

/// Cholesky of a; on failure adds 1e-10 mean(diag) to the diagonal and grows it by
/// x10 up to 1e-6 mean(diag) before raising DecompositionError.
inline Factorization factorize(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw InputError("factorize: need a nonempty square matrix");
  if (!a.allFinite()) throw DecompositionError("factorize: matrix has non-finite entries");
  Factorization f;
  f.llt.compute(a);
  if (f.llt.info() != Eigen::Success) {
    const double scale = a.diagonal().mean();
    bool ok = false;
    for (double rel = 1e-10; rel <= 1e-6 * (1.0 + 1e-9); rel *= 10.0) {
      Eigen::MatrixXd b = a;
      b.diagonal().array() += rel * scale;
      f.llt.compute(b);
      if (f.llt.info() == Eigen::Success) {
        f.jitter = rel * scale;
        ok = true;
        break;
      }
    }
    if (!ok) throw DecompositionError("covariance matrix is not positive definite even after jitter 1e-6*mean(diag)");
  }
  f.log_det = 2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
  if (!std::isfinite(f.log_det)) throw DecompositionError("covariance matrix is numerically singular");
  return f;
}

// ---------------------------------------------------------------------------
// Likelihoods.
// ---------------------------------------------------------------------------

enum class MeanMode { known, gls };

struct LoglikResult {
  double value = 0.0;
  double sigma2_hat = 0.0;  // profiled variance (equals the model's when not profiled)
  double b_hat = 0.0;       // mean used (model's b when known)
};

namespace detail {

struct ScaledSystem {
  Factorization fac;
  Eigen::VectorXd resid;
  double b = 0.0;
  double one_kinv_one = 0.0;
};

// Factorizes a (R + eta I) and removes the mean, either the known b or its GLS estimate.
inline ScaledSystem prepare_system(Eigen::MatrixXd a, const Eigen::VectorXd& z, MeanMode mode, double b_known) {
  ScaledSystem s{factorize(a), {}, b_known, 0.0};
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(z.size());
  if (mode == MeanMode::gls) {
    const Eigen::VectorXd kinv_one = s.fac.solve(ones);
    s.one_kinv_one = ones.dot(kinv_one);
    s.b = kinv_one.dot(z) / s.one_kinv_one;
  }
  s.resid = z - s.b * ones;
  return s;
}

inline double nugget_ratio(const GPModel& m) {
  const double s2 = variance(m.kernel);
  if (m.nugget_tau2 == 0.0) return 0.0;
  detail::require(s2 > 0.0, "profiled likelihood needs sigma2 > 0 to express the nugget as a ratio");
  return m.nugget_tau2 / s2;
}

}  // namespace detail

/// Gaussian log-likelihood from a precomputed unit correlation matrix r. With
/// profiling the nugget enters as eta = tau2/sigma2 and sigma2_hat = q/n.
inline LoglikResult loglik_from_corr(const GPModel& model, const Eigen::MatrixXd& r, const Eigen::VectorXd& z,
                                     bool profile_sigma2, MeanMode mode = MeanMode::known) {
  const double n = static_cast<double>(z.size());
  constexpr double log_2pi = 1.8378770664093454836;
  if (profile_sigma2) {
    Eigen::MatrixXd a = r;
    a.diagonal().array() += detail::nugget_ratio(model);
    const auto s = detail::prepare_system(std::move(a), z, mode, model.mean_b);
    const double q = s.fac.quad_form(s.resid);
    const double s2 = q / n;
    if (!(s2 > 0.0)) throw DecompositionError("profiled variance is zero: data equal the mean");
    return {-0.5 * (n * (log_2pi + std::log(s2)) + s.fac.log_det + n), s2, s.b};
  }
  const double s2 = variance(model.kernel);
  Eigen::MatrixXd k = s2 * r;
  k.diagonal().array() += model.nugget_tau2;
  const auto s = detail::prepare_system(std::move(k), z, mode, model.mean_b);
  const double q = s.fac.quad_form(s.resid);
  return {-0.5 * (n * log_2pi + s.fac.log_det + q), s2, s.b};
}

inline LoglikResult loglik(const GPModel& model, const Dataset& data, bool profile_sigma2,
                           MeanMode mode = MeanMode::known) {
  validate(model);
  validate(data);
  const auto lags = make_lag_cache(data.locs, is_tensor(model.kernel));
  return loglik_from_corr(model, correlation_matrix(model.kernel, lags, true), data.z, profile_sigma2, mode);
}

/// Concentrated REML for a constant mean:
///   -1/2 [(n-1) log(2 pi sigma2_hat) + log|A| + log(1'A^{-1}1) - log n + (n-1)],
/// A = R + eta I, b GLS, sigma2_hat = r'A^{-1}r / (n-1). The -log n term makes the
/// value the density of orthonormal error contrasts.
inline LoglikResult reml_from_corr(const GPModel& model, const Eigen::MatrixXd& r, const Eigen::VectorXd& z) {
  const double n = static_cast<double>(z.size());
  detail::require(z.size() >= 2, "REML needs at least two observations");
  constexpr double log_2pi = 1.8378770664093454836;
  Eigen::MatrixXd a = r;
  a.diagonal().array() += detail::nugget_ratio(model);
  const auto s = detail::prepare_system(std::move(a), z, MeanMode::gls, 0.0);
  const double q = s.fac.quad_form(s.resid);
  const double s2 = q / (n - 1.0);
  if (!(s2 > 0.0)) throw DecompositionError("REML variance is zero: data are constant");
  const double v = -0.5 * ((n - 1.0) * (log_2pi + std::log(s2)) + s.fac.log_det + std::log(s.one_kinv_one) -
                           std::log(n) + (n - 1.0));
  return {v, s2, s.b};
}

inline LoglikResult reml_loglik(const GPModel& model, const Dataset& data) {
  validate(model);
  validate(data);
  const auto lags = make_lag_cache(data.locs, is_tensor(model.kernel));
  return reml_from_corr(model, correlation_matrix(model.kernel, lags, true), data.z);
}

// ---------------------------------------------------------------------------
// Kriging.
// ---------------------------------------------------------------------------

struct KrigeOptions {
  MeanMode mean = MeanMode::known;
  /// Adds (1 - 1'K^{-1}r)^2 / (1'K^{-1}1) to the variance when the mean is GLS.
  bool gls_variance_term = true;
};

/// Predicts the latent (nugget-free) process at targets.
inline PredictionResult krige(const GPModel& model, const Dataset& data, const Locations& targets,
                              const KrigeOptions& opt = {}) {
  validate(model);
  validate(data);
  validate(targets);
  const double s2 = variance(model.kernel);
  const Eigen::MatrixXd k = cov_matrix(model, data.locs);
  const Eigen::MatrixXd rc = cross_cov_matrix(model, data.locs, targets);  // n x m
  const auto s = detail::prepare_system(k, data.z, opt.mean, model.mean_b);
  const Eigen::VectorXd w = s.fac.solve(s.resid);
  const Eigen::MatrixXd lr = s.fac.llt.matrixL().solve(rc);
  const Eigen::Index m = targets.size();
  PredictionResult out;
  out.mean = (s.b + (rc.transpose() * w).array()).matrix();
  Eigen::VectorXd var = (s2 - lr.colwise().squaredNorm().array()).matrix();
  if (opt.mean == MeanMode::gls && opt.gls_variance_term) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(data.z.size());
    const Eigen::VectorXd kinv_one = s.fac.solve(ones);
    const Eigen::VectorXd u = (1.0 - (rc.transpose() * kinv_one).array()).matrix();
    var.array() += u.array().square() / s.one_kinv_one;
  }
  // A target on a noiseless training point has zero variance exactly; the
  // subtraction above leaves round-off whose square root would be ~1e-8.
  if (model.nugget_tau2 == 0.0 && s.fac.jitter == 0.0 && s2 > 0.0) {
    for (Eigen::Index i = 0; i < m; ++i) {
      if ((rc.col(i).array() == s2).any()) var(i) = 0.0;
    }
  }
  out.sd.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double v = var(i);
    if (v < -1e-10 * std::max(s2, 1e-300) && s2 > 0.0) {
      throw DecompositionError("kriging variance is negative beyond round-off at target " + std::to_string(i + 1));
    }
    out.sd(i) = std::sqrt(std::max(v, 0.0));
  }
  out.lower95 = out.mean - 1.96 * out.sd;
  out.upper95 = out.mean + 1.96 * out.sd;
  return out;
}

// ---------------------------------------------------------------------------
// Microergodic estimator.
// ---------------------------------------------------------------------------

struct MicroergodicEstimate {
  double c_hat = 0.0;
  Interval ci95;
};

inline Interval microergodic_ci(double c_hat, Eigen::Index n) {
  const double half = 1.96 * std::sqrt(2.0 / static_cast<double>(n)) * c_hat;
  return {c_hat - half, c_hat + half};
}

/// c_hat = z' R^{-1}(theta) z Gamma(nu+alpha) / (n beta^{2 nu} Gamma(alpha)) for a
/// precomputed CH correlation matrix; z is already centred.
inline MicroergodicEstimate microergodic_from_corr(const CHParams& theta, const Eigen::MatrixXd& r,
                                                   const Eigen::VectorXd& z) {
  detail::require(z.size() >= 2, "microergodic estimator needs n >= 2");
  const auto fac = factorize(r);
  const double q = fac.quad_form(z);
  const CHParams unit{theta.nu, theta.alpha, theta.beta, 1.0};
  const double c = q / static_cast<double>(z.size()) * microergodic(unit);
  return {c, microergodic_ci(c, z.size())};
}

/// Microergodic estimate for CH correlation parameters theta (theta.sigma2 is
/// ignored); the known mean b is subtracted first.
inline MicroergodicEstimate microergodic_mle(const CHParams& theta, const Dataset& data, double b = 0.0) {
  validate(data);
  const CHParams unit{theta.nu, theta.alpha, theta.beta, 1.0};
  validate(unit);
  const auto lags = make_lag_cache(data.locs, false);
  const Eigen::MatrixXd r = correlation_matrix(unit, lags, true);
  return microergodic_from_corr(unit, r, (data.z.array() - b).matrix());
}

}  // namespace chgp
