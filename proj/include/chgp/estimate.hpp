#pragma once

// Bounded derivative-free fitting of covariance parameters by profile
// likelihood or REML. sigma2 (and b under REML or GLS) are profiled in closed form.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "chgp/design.hpp"
#include "chgp/errors.hpp"
#include "chgp/gp.hpp"
#include "chgp/kernels.hpp"
#include "chgp/rng.hpp"

namespace chgp {

enum class Objective { profile_ml, reml };

inline std::string to_string(Objective o) { return o == Objective::reml ? "reml" : "profile_ml"; }

inline Objective objective_from_string(const std::string& s) {
  if (s == "profile_ml" || s == "ml") return Objective::profile_ml;
  if (s == "reml") return Objective::reml;
  throw InputError("unknown objective '" + s + "' (expected profile_ml or reml)");
}

struct FitConfig {
  Objective objective = Objective::profile_ml;
  /// Overrides of the default search intervals, keyed by parameter name
  /// ("alpha", "beta", "phi", "lambda", "delta", "eta"; tensor components use "k.name").
  std::map<std::string, Interval> bounds;
  /// Parameters held at the template value. nu is always fixed.
  std::set<std::string> fixed = {"delta"};
  bool fit_nugget = false;
  /// Mean handling for profile_ml (REML always uses the GLS mean).
  MeanMode mean = MeanMode::known;
  /// Lets alpha go below d/2 (down to 1e-3); the CH family itself is valid for all alpha > 0.
  bool allow_small_alpha = false;
  int n_starts = 5;
  int max_iters = 2000;
  double x_tol = 1e-8;
  double f_tol = 1e-10;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_starts < 1) throw InputError("fit: n_starts must be positive");
    if (max_iters < 1) throw InputError("fit: max_iters must be positive");
    if (!(x_tol > 0.0 && f_tol > 0.0)) throw InputError("fit: tolerances must be positive");
    for (const auto& [name, iv] : bounds) {
      if (!(iv.lo < iv.hi)) throw InputError("fit: bounds for " + name + " need lower < upper");
    }
  }
};

class OptimizationError : public ConvergenceError {
 public:
  OptimizationError(const std::string& what, std::vector<double> best_point)
      : ConvergenceError(what), best_point_(std::move(best_point)) {}
  const std::vector<double>& best_point() const { return best_point_; }

 private:
  std::vector<double> best_point_;
};

// ---------------------------------------------------------------------------
// Nelder-Mead in a box.
// ---------------------------------------------------------------------------

struct NelderMeadResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  int evals = 0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// Folds x back into [lo, hi] by mirror reflection at the walls.
inline double reflect_into(double x, double lo, double hi) {
  if (x >= lo && x <= hi) return x;
  if (!std::isfinite(x)) return std::clamp(x, lo, hi);
  const double w = hi - lo;
  double t = std::fmod(x - lo, 2.0 * w);
  if (t < 0.0) t += 2.0 * w;
  return std::clamp(t <= w ? lo + t : hi - (t - w), lo, hi);
}

}  // namespace detail

/// Minimizes f over the box [lo, hi] starting from x0 with per-coordinate initial
/// steps. Trial points leaving the box are mirrored back. Non-finite values count
/// as +inf. Stops when the simplex diameter drops below x_tol or the spread of
/// function values below f_tol.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                                    const std::vector<double>& lo, const std::vector<double>& hi,
                                    const std::vector<double>& step, int max_iters, double x_tol, double f_tol) {
  const std::size_t d = x0.size();
  NelderMeadResult res;
  auto eval = [&](std::vector<double>& x) {
    for (std::size_t k = 0; k < d; ++k) x[k] = detail::reflect_into(x[k], lo[k], hi[k]);
    ++res.evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  if (d == 0) {
    res.x = x0;
    res.f = eval(res.x);
    res.converged = true;
    return res;
  }
  std::vector<std::vector<double>> pts(d + 1, x0);
  std::vector<double> fv(d + 1);
  fv[0] = eval(pts[0]);
  for (std::size_t k = 0; k < d; ++k) {
    auto& p = pts[k + 1];
    p[k] += step[k];
    if (p[k] > hi[k]) p[k] = x0[k] - step[k];
    fv[k + 1] = eval(p);
  }
  std::vector<std::size_t> order(d + 1);
  std::vector<double> centroid(d);
  std::vector<double> xr(d), xe(d), xc(d);
  for (res.iterations = 0; res.iterations < max_iters; ++res.iterations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[d - 1];
    double diam = 0.0;
    for (std::size_t i = 0; i <= d; ++i) {
      for (std::size_t k = 0; k < d; ++k) diam = std::max(diam, std::abs(pts[i][k] - pts[best][k]));
    }
    const bool f_flat = std::isfinite(fv[worst]) && std::abs(fv[worst] - fv[best]) < f_tol;
    if (diam < x_tol || f_flat) {
      res.converged = true;
      break;
    }
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < d; ++k) centroid[k] += pts[i][k] / static_cast<double>(d);
    }
    for (std::size_t k = 0; k < d; ++k) xr[k] = centroid[k] + (centroid[k] - pts[worst][k]);
    const double fr = eval(xr);
    if (fr < fv[best]) {
      for (std::size_t k = 0; k < d; ++k) xe[k] = centroid[k] + 2.0 * (centroid[k] - pts[worst][k]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        fv[worst] = fe;
      } else {
        pts[worst] = xr;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      pts[worst] = xr;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    for (std::size_t k = 0; k < d; ++k) {
      xc[k] = outside ? centroid[k] + 0.5 * (xr[k] - centroid[k]) : centroid[k] + 0.5 * (pts[worst][k] - centroid[k]);
    }
    const double fc = eval(xc);
    if (fc < (outside ? fr : fv[worst])) {
      pts[worst] = xc;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= d; ++i) {  // shrink toward the best vertex
      if (i == best) continue;
      for (std::size_t k = 0; k < d; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      fv[i] = eval(pts[i]);
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  res.x = pts[static_cast<std::size_t>(it - fv.begin())];
  res.f = *it;
  return res;
}

// ---------------------------------------------------------------------------
// Parameter space.
// ---------------------------------------------------------------------------

/// One free parameter: name, natural-scale bounds and the transform into the
/// search coordinates (log for scales and shapes, log(eta + 1e-6) for the nugget ratio).
struct FreeParam {
  std::string name;
  Interval bounds;

  bool is_eta() const { return name == "eta"; }
  double to_search(double v) const { return is_eta() ? std::log(v + kEtaShift) : std::log(v); }
  double from_search(double s) const {
    const double v = is_eta() ? std::exp(s) - kEtaShift : std::exp(s);
    return std::clamp(v, bounds.lo, bounds.hi);
  }
  static constexpr double kEtaShift = 1e-6;
};

namespace detail {

inline double location_diameter(const Locations& l) {
  double dmax = 0.0;
  for (Eigen::Index j = 0; j < l.size(); ++j) {
    for (Eigen::Index i = j + 1; i < l.size(); ++i) dmax = std::max(dmax, distance(l, i, l, j));
  }
  return dmax > 0.0 ? dmax : 1.0;
}

inline double coordinate_extent(const Locations& l, Eigen::Index k) {
  const double e = l.coords.col(k).maxCoeff() - l.coords.col(k).minCoeff();
  return e > 0.0 ? e : 1.0;
}

inline std::vector<std::string> family_params(const IsoSpec& s) {
  if (std::holds_alternative<MaternParams>(s)) return {"phi"};
  if (std::holds_alternative<CHParams>(s)) return {"alpha", "beta"};
  return {"delta", "lambda", "phi"};
}

inline Interval default_bound(const std::string& name, double scale, int d, bool small_alpha) {
  if (name == "alpha") return {small_alpha ? 1e-3 : std::max(1e-3, 0.5 * d + 1e-6), 100.0};
  if (name == "beta" || name == "phi") return {1e-3 * scale, 1e3 * scale};
  if (name == "lambda") return {1e-2, 1e2};
  if (name == "delta") return {1e-2, 2.0};
  return {0.0, 10.0};  // eta
}

inline double& param_field(MaternParams& p, const std::string& name) {
  if (name == "phi") return p.phi;
  throw InputError("unknown Matern parameter '" + name + "'");
}

inline double& param_field(CHParams& p, const std::string& name) {
  if (name == "alpha") return p.alpha;
  if (name == "beta") return p.beta;
  throw InputError("unknown CH parameter '" + name + "'");
}

inline double& param_field(GCParams& p, const std::string& name) {
  if (name == "delta") return p.delta;
  if (name == "lambda") return p.lambda;
  if (name == "phi") return p.phi;
  throw InputError("unknown GC parameter '" + name + "'");
}

inline double& param_field(TensorParams& t, const std::string& name) {
  const auto dot = name.find('.');
  if (dot == std::string::npos) throw InputError("tensor parameter names look like '0.phi', got '" + name + "'");
  const auto idx = static_cast<std::size_t>(std::stoul(name.substr(0, dot)));
  if (idx >= t.components.size()) throw InputError("tensor component index out of range in '" + name + "'");
  const std::string field = name.substr(dot + 1);
  return std::visit([&](auto& c) -> double& { return param_field(c, field); }, t.components[idx]);
}

inline double& param_ref(KernelSpec& k, const std::string& name) {
  return std::visit([&](auto& p) -> double& { return param_field(p, name); }, k);
}

}  // namespace detail

/// Free parameters of a template under cfg, in a fixed order.
inline std::vector<FreeParam> free_parameters(const GPModel& tmpl, const Locations& locs, const FitConfig& cfg) {
  const int d = static_cast<int>(locs.dim());
  std::vector<FreeParam> out;
  std::set<std::string> known;
  auto add = [&](const std::string& name, double scale, int dim) {
    known.insert(name);
    if (cfg.fixed.count(name)) return;
    Interval b = detail::default_bound(name.substr(name.find('.') + 1), scale, dim, cfg.allow_small_alpha);
    if (auto it = cfg.bounds.find(name); it != cfg.bounds.end()) b = it->second;
    const bool is_eta = name == "eta";
    if (!(b.lo < b.hi) || b.lo < 0.0 || (!is_eta && b.lo <= 0.0)) {
      throw InputError("fit: invalid bounds for " + name);
    }
    out.push_back({name, b});
  };
  if (const auto* t = std::get_if<TensorParams>(&tmpl.kernel)) {
    for (std::size_t k = 0; k < t->components.size(); ++k) {
      const double ext = k < static_cast<std::size_t>(d) ? detail::coordinate_extent(locs, static_cast<Eigen::Index>(k)) : 1.0;
      for (const auto& n : detail::family_params(t->components[k])) add(std::to_string(k) + "." + n, ext, 1);
    }
  } else {
    const double diam = detail::location_diameter(locs);
    for (const auto& n : detail::family_params(to_iso(tmpl.kernel))) add(n, diam, d);
  }
  known.insert("eta");
  if (cfg.fit_nugget && !cfg.fixed.count("eta")) add("eta", 1.0, d);
  for (const auto& [name, iv] : cfg.bounds) {
    if (!known.count(name)) throw InputError("fit: bounds given for unknown parameter '" + name + "'");
  }
  // Names of other families are accepted in `fixed` so one config serves several candidates.
  static const std::set<std::string> any_family = {"nu", "alpha", "beta", "phi", "delta", "lambda", "eta"};
  for (const auto& name : cfg.fixed) {
    const std::string base = name.substr(name.find('.') + 1);
    if (!known.count(name) && !any_family.count(base)) {
      throw InputError("fit: cannot fix unknown parameter '" + name + "'");
    }
  }
  return out;
}

/// Template with the free parameters set to natural-scale values. sigma2 is left
/// at 1; eta is returned separately.
inline KernelSpec apply_parameters(const GPModel& tmpl, const std::vector<FreeParam>& params,
                                   const std::vector<double>& values, double* eta) {
  KernelSpec k = with_variance(tmpl.kernel, 1.0);
  const double s2 = variance(tmpl.kernel);
  *eta = s2 > 0.0 ? tmpl.nugget_tau2 / s2 : 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].is_eta()) {
      *eta = values[i];
    } else {
      detail::param_ref(k, params[i].name) = values[i];
    }
  }
  return k;
}

/// Objective value (log-likelihood or REML) for a unit-variance kernel k and nugget ratio eta.
inline LoglikResult evaluate_objective(const KernelSpec& k, double eta, const GPModel& tmpl, const LagCache& lags,
                                       const Eigen::VectorXd& z, const FitConfig& cfg) {
  GPModel m{k, tmpl.mean_b, eta};  // sigma2 = 1 so tau2 = eta
  const Eigen::MatrixXd r = correlation_matrix(k, lags, true);
  if (cfg.objective == Objective::reml) return reml_from_corr(m, r, z);
  return loglik_from_corr(m, r, z, true, cfg.mean);
}

/// Maximizes the configured objective. Restarts come from a seeded Latin hypercube
/// over the search box; the best start wins, ties to the lowest index.
inline FitResult fit(const GPModel& tmpl, const Dataset& data, const FitConfig& cfg, const LagCache* cache = nullptr) {
  cfg.validate();
  validate(tmpl);
  validate(data);
  if (data.z.size() < 3) throw InputError("fit: need at least 3 observations");
  LagCache own;
  if (cache == nullptr) {
    own = make_lag_cache(data.locs, is_tensor(tmpl.kernel));
    cache = &own;
  }
  const auto params = free_parameters(tmpl, data.locs, cfg);
  const std::size_t d = params.size();
  std::vector<double> lo(d), hi(d), step(d);
  for (std::size_t i = 0; i < d; ++i) {
    lo[i] = params[i].to_search(params[i].bounds.lo);
    hi[i] = params[i].to_search(params[i].bounds.hi);
    step[i] = 0.1 * (hi[i] - lo[i]);
  }
  auto natural = [&](const std::vector<double>& x) {
    std::vector<double> v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = params[i].from_search(x[i]);
    return v;
  };
  auto objective = [&](const std::vector<double>& x) {
    double eta = 0.0;
    try {
      const KernelSpec k = apply_parameters(tmpl, params, natural(x), &eta);
      return -evaluate_objective(k, eta, tmpl, *cache, data.z, cfg).value;
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  // Starts: centred Latin hypercube over the inner 80% of the search box.
  NormalSource src(make_stream(cfg.seed, 0x5157A7));
  std::vector<std::vector<double>> starts(static_cast<std::size_t>(cfg.n_starts), std::vector<double>(d));
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<int> perm(static_cast<std::size_t>(cfg.n_starts));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = cfg.n_starts - 1; i > 0; --i) {
      const auto j = static_cast<int>(src.engine()() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    for (int s = 0; s < cfg.n_starts; ++s) {
      const double u = (perm[static_cast<std::size_t>(s)] + src.uniform()) / cfg.n_starts;
      starts[static_cast<std::size_t>(s)][k] = lo[k] + (hi[k] - lo[k]) * (0.1 + 0.8 * u);
    }
  }
  NelderMeadResult best;
  int total_evals = 0;
  int best_index = -1;
  for (int s = 0; s < cfg.n_starts; ++s) {
    auto r = nelder_mead(objective, starts[static_cast<std::size_t>(s)], lo, hi, step, cfg.max_iters, cfg.x_tol,
                         cfg.f_tol);
    total_evals += r.evals;
    if (std::isfinite(r.f) && (best_index < 0 || r.f < best.f)) {
      best = std::move(r);
      best_index = s;
    }
  }
  if (best_index < 0) {
    throw OptimizationError("fit: the objective was not finite at any point visited from " +
                                std::to_string(cfg.n_starts) + " starts",
                            starts.empty() ? std::vector<double>{} : natural(starts.front()));
  }
  const auto values = natural(best.x);
  double eta = 0.0;
  const KernelSpec k = apply_parameters(tmpl, params, values, &eta);
  const auto lr = evaluate_objective(k, eta, tmpl, *cache, data.z, cfg);
  FitResult out;
  out.model.kernel = with_variance(k, lr.sigma2_hat);
  out.model.nugget_tau2 = eta * lr.sigma2_hat;
  out.mean_estimated = cfg.objective == Objective::reml || cfg.mean == MeanMode::gls;
  out.model.mean_b = out.mean_estimated ? lr.b_hat : tmpl.mean_b;
  out.loglik = lr.value;
  out.objective = to_string(cfg.objective);
  out.n_evals = total_evals;
  out.converged = best.converged;
  if (const auto* ch = std::get_if<CHParams>(&out.model.kernel)) {
    const double c = microergodic(*ch);
    out.microergodic_hat = c;
    out.microergodic_ci95 = microergodic_ci(c, data.z.size());
  }
  return out;
}

}  // namespace chgp
