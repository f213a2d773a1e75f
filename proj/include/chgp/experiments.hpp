#pragma once

// Monte Carlo harnesses: prediction case studies, the asymptotic study of the
// microergodic estimator, the prediction-efficiency study, the special-function
// timing benchmark and 1-D realization export.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "chgp/design.hpp"
#include "chgp/errors.hpp"
#include "chgp/estimate.hpp"
#include "chgp/gp.hpp"
#include "chgp/kernels.hpp"
#include "chgp/rng.hpp"
#include "chgp/simulate.hpp"
#include "chgp/specfun.hpp"

namespace chgp {

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Callers write results
/// into slot i, so output order never depends on scheduling. The first exception
/// is rethrown after all workers stop.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  const unsigned workers = std::min<unsigned>(thread_count(threads), static_cast<unsigned>(std::max(n, 1)));
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

inline double median(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Linear-interpolated empirical quantile (type 7).
inline double quantile(std::vector<double> v, double p) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t k = 0;
  for (double x : v) {
    if (!std::isnan(x)) {
      s += x;
      ++k;
    }
  }
  return k ? s / static_cast<double>(k) : std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Prediction studies.
// ---------------------------------------------------------------------------

enum class Candidate { matern, ch, gc, truth };

inline std::string to_string(Candidate c) {
  switch (c) {
    case Candidate::matern: return "matern";
    case Candidate::ch: return "ch";
    case Candidate::gc: return "gc";
    case Candidate::truth: return "truth";
  }
  return "unknown";
}

inline Candidate candidate_from_string(const std::string& s) {
  if (s == "matern") return Candidate::matern;
  if (s == "ch") return Candidate::ch;
  if (s == "gc") return Candidate::gc;
  if (s == "truth") return Candidate::truth;
  throw InputError("unknown candidate '" + s + "' (expected matern, ch, gc or truth)");
}

enum class DesignKind { maximin_lhs, grid };

struct StudySpec {
  std::string case_id = "case1";
  IsoSpec truth = MaternParams{0.5, 1.0, 1.0};
  std::vector<Candidate> candidates = {Candidate::matern, Candidate::ch, Candidate::gc};
  int n_train = 500;
  DesignKind design = DesignKind::maximin_lhs;
  int lhs_candidates = 100;
  int n_reps = 30;
  std::uint64_t seed = 1;
  Bounds domain = {{0.0, 2000.0}, {0.0, 2000.0}};
  std::vector<int> target_counts = {10, 10};
  std::vector<double> curve_lags;  // empty: 41 lags over [0, diameter/2]
  FitConfig fit;
  KrigeOptions krige;
  int threads = 1;
};

/// Smoothness that Matern/CH candidates share with the truth; GC truth maps delta -> nu = delta/2.
inline double study_smoothness(const IsoSpec& truth) {
  if (const auto* m = std::get_if<MaternParams>(&truth)) return m->nu;
  if (const auto* c = std::get_if<CHParams>(&truth)) return c->nu;
  return 0.5 * std::get<GCParams>(truth).delta;
}

/// Starting template for a fitted candidate; shape values are placeholders, the
/// fit draws its own starts.
inline IsoSpec candidate_template(Candidate c, const IsoSpec& truth, int d) {
  const double nu = study_smoothness(truth);
  const double scale = scale_of(truth);
  switch (c) {
    case Candidate::matern: return MaternParams{nu, scale, 1.0};
    case Candidate::ch: return CHParams{nu, 1.0, scale, 1.0};
    case Candidate::gc:
      return GCParams{std::min({2.0 * nu, static_cast<double>(d), 2.0}), 1.0, scale, 1.0};
    case Candidate::truth: return truth;
  }
  return truth;
}

struct PredictionRow {
  int rep = 0;
  std::string candidate;
  bool ok = false;
  std::string error;
  double rmspe = std::numeric_limits<double>::quiet_NaN();
  double cvg95 = std::numeric_limits<double>::quiet_NaN();
  double alci95 = std::numeric_limits<double>::quiet_NaN();
  double loglik = std::numeric_limits<double>::quiet_NaN();
  KernelSpec fitted;
};

struct CurveRow {
  int rep = 0;
  std::string candidate;
  double lag = 0.0;
  double correlation = 0.0;
};

struct PredictionSummary {
  std::string candidate;
  int n_ok = 0;
  int n_failed = 0;
  double median_rmspe = 0.0;
  double mean_rmspe = 0.0;
  double median_cvg95 = 0.0;
  double mean_cvg95 = 0.0;
  double median_alci95 = 0.0;
  double mean_alci95 = 0.0;
};

struct PredictionStudyResult {
  std::vector<PredictionRow> rows;  // rep-major, candidate order within a rep
  std::vector<CurveRow> curves;
  std::vector<PredictionSummary> summary;
};

inline std::vector<PredictionSummary> summarize_prediction_rows(const std::vector<PredictionRow>& rows,
                                                               const std::vector<Candidate>& candidates) {
  std::vector<PredictionSummary> out;
  for (Candidate c : candidates) {
    PredictionSummary s;
    s.candidate = to_string(c);
    std::vector<double> r, v, a;
    for (const auto& row : rows) {
      if (row.candidate != s.candidate) continue;
      if (!row.ok) {
        ++s.n_failed;
        continue;
      }
      ++s.n_ok;
      r.push_back(row.rmspe);
      v.push_back(row.cvg95);
      a.push_back(row.alci95);
    }
    s.median_rmspe = median(r);
    s.mean_rmspe = mean_of(r);
    s.median_cvg95 = median(v);
    s.mean_cvg95 = mean_of(v);
    s.median_alci95 = median(a);
    s.mean_alci95 = mean_of(a);
    out.push_back(s);
  }
  return out;
}

inline const PredictionSummary& find_summary(const PredictionStudyResult& r, Candidate c) {
  for (const auto& s : r.summary) {
    if (s.candidate == to_string(c)) return s;
  }
  throw InputError("study has no candidate " + to_string(c));
}

inline PredictionStudyResult run_prediction_study(const StudySpec& spec) {
  validate(spec.truth);
  validate(spec.domain);
  if (spec.n_reps < 1) throw InputError("prediction study: n_reps must be positive");
  if (spec.n_train < 3) throw InputError("prediction study: n_train must be at least 3");
  if (spec.candidates.empty()) throw InputError("prediction study: no candidates");
  const int d = static_cast<int>(spec.domain.size());
  const Locations train = spec.design == DesignKind::maximin_lhs
                              ? maximin_lhs(spec.n_train, spec.domain, derive_seed(spec.seed, 1), spec.lhs_candidates)
                              : [&] {
                                  const int per = static_cast<int>(std::lround(std::pow(spec.n_train, 1.0 / d)));
                                  return regular_grid(spec.domain, std::vector<int>(static_cast<std::size_t>(d), per));
                                }();
  const Locations targets = regular_grid(spec.domain, spec.target_counts);
  const Eigen::Index n = train.size();
  const Eigen::Index m = targets.size();
  Locations all;
  all.coords.resize(n + m, d);
  all.coords << train.coords, targets.coords;
  const GPModel truth_model{to_kernel(spec.truth), 0.0, 0.0};
  const Eigen::MatrixXd factor = signal_factor(truth_model, all);
  const LagCache lags = make_lag_cache(train, false);

  std::vector<double> curve_lags = spec.curve_lags;
  if (curve_lags.empty()) {
    double diam = 0.0;
    for (const auto& [lo, hi] : spec.domain) diam += (hi - lo) * (hi - lo);
    diam = std::sqrt(diam);
    for (int k = 0; k <= 40; ++k) curve_lags.push_back(0.5 * diam * k / 40.0);
  }

  const std::size_t nc = spec.candidates.size();
  std::vector<PredictionRow> rows(static_cast<std::size_t>(spec.n_reps) * nc);
  std::vector<std::vector<CurveRow>> curves(rows.size());
  const std::uint64_t sim_seed = derive_seed(spec.seed, 2);
  parallel_for(spec.n_reps, spec.threads, [&](int rep) {
    const Eigen::VectorXd y = sample_replicate(truth_model, factor, sim_seed, static_cast<std::uint64_t>(rep));
    const Dataset data{train, y.head(n)};
    const Eigen::VectorXd truth_at_targets = y.tail(m);
    for (std::size_t ci = 0; ci < nc; ++ci) {
      const Candidate cand = spec.candidates[ci];
      auto& row = rows[static_cast<std::size_t>(rep) * nc + ci];
      row.rep = rep;
      row.candidate = to_string(cand);
      try {
        GPModel model;
        if (cand == Candidate::truth) {
          model = truth_model;
          row.loglik = loglik(model, data, false).value;
        } else {
          FitConfig cfg = spec.fit;
          cfg.seed = derive_seed(spec.seed, 1000 + static_cast<std::uint64_t>(rep) * 16 + ci);
          const GPModel tmpl{to_kernel(candidate_template(cand, spec.truth, d)), 0.0, 0.0};
          const FitResult fr = fit(tmpl, data, cfg, &lags);
          model = fr.model;
          row.loglik = fr.loglik;
        }
        const auto pred = krige(model, data, targets, spec.krige);
        const Eigen::ArrayXd err = (pred.mean - truth_at_targets).array();
        row.rmspe = std::sqrt(err.square().mean());
        int inside = 0;
        for (Eigen::Index i = 0; i < m; ++i) {
          if (truth_at_targets(i) >= pred.lower95(i) && truth_at_targets(i) <= pred.upper95(i)) ++inside;
        }
        row.cvg95 = static_cast<double>(inside) / static_cast<double>(m);
        row.alci95 = (pred.upper95 - pred.lower95).mean();
        row.fitted = model.kernel;
        row.ok = true;
        const IsoSpec iso = to_iso(model.kernel);
        for (double h : curve_lags) {
          curves[static_cast<std::size_t>(rep) * nc + ci].push_back({rep, row.candidate, h, correlation(iso, h)});
        }
      } catch (const NumericalError& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
  });
  PredictionStudyResult out;
  out.rows = std::move(rows);
  for (auto& c : curves) out.curves.insert(out.curves.end(), c.begin(), c.end());
  out.summary = summarize_prediction_rows(out.rows, spec.candidates);
  return out;
}

// ---------------------------------------------------------------------------
// Asymptotic study of the microergodic estimator.
// ---------------------------------------------------------------------------

enum class ThetaMode { theta0, beta_half, beta_double, beta_hat, alpha_beta_hat };

inline std::string to_string(ThetaMode m) {
  switch (m) {
    case ThetaMode::theta0: return "theta0";
    case ThetaMode::beta_half: return "alpha0_sqrt0.5beta0";
    case ThetaMode::beta_double: return "alpha0_sqrt2beta0";
    case ThetaMode::beta_hat: return "alpha0_betahat";
    case ThetaMode::alpha_beta_hat: return "alphahat_betahat";
  }
  return "unknown";
}

inline ThetaMode theta_mode_from_string(const std::string& s) {
  for (ThetaMode m : {ThetaMode::theta0, ThetaMode::beta_half, ThetaMode::beta_double, ThetaMode::beta_hat,
                      ThetaMode::alpha_beta_hat}) {
    if (to_string(m) == s) return m;
  }
  throw InputError("unknown theta mode '" + s + "'");
}

struct AsymptoticSpec {
  CHParams truth{0.5, 2.0, 1.0, 1.0};
  std::vector<ThetaMode> modes = {ThetaMode::theta0};
  std::vector<int> n_list = {200, 400};
  int n_reps = 200;
  std::uint64_t seed = 1;
  std::vector<int> grid_counts = {50, 50};
  Bounds domain = {{0.0, 1.0}, {0.0, 1.0}};
  FitConfig fit;
  int threads = 1;
};

struct AsymptoticRow {
  int n = 0;
  int rep = 0;
  std::string mode;
  bool ok = false;
  double c_hat = std::numeric_limits<double>::quiet_NaN();
  double xi = std::numeric_limits<double>::quiet_NaN();
  bool covered = false;
};

struct AsymptoticSummary {
  int n = 0;
  std::string mode;
  int n_ok = 0;
  int n_failed = 0;
  std::array<double, 5> xi_percentiles{};  // 5, 25, 50, 75, 95
  double cvg = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
};

struct AsymptoticResult {
  double c0 = 0.0;
  std::vector<AsymptoticRow> rows;
  std::vector<AsymptoticSummary> summary;
};

inline std::vector<AsymptoticSummary> summarize_asymptotic_rows(const std::vector<AsymptoticRow>& rows, double c0,
                                                                const std::vector<int>& n_list,
                                                                const std::vector<ThetaMode>& modes) {
  std::vector<AsymptoticSummary> out;
  for (int n : n_list) {
    for (ThetaMode mode : modes) {
      AsymptoticSummary s;
      s.n = n;
      s.mode = to_string(mode);
      std::vector<double> xi;
      double cover = 0.0;
      double err = 0.0;
      double sq = 0.0;
      for (const auto& r : rows) {
        if (r.n != n || r.mode != s.mode) continue;
        if (!r.ok) {
          ++s.n_failed;
          continue;
        }
        ++s.n_ok;
        xi.push_back(r.xi);
        cover += r.covered ? 1.0 : 0.0;
        err += r.c_hat - c0;
        sq += (r.c_hat - c0) * (r.c_hat - c0);
      }
      const double k = std::max(1, s.n_ok);
      constexpr std::array<double, 5> ps = {0.05, 0.25, 0.5, 0.75, 0.95};
      for (std::size_t i = 0; i < ps.size(); ++i) s.xi_percentiles[i] = quantile(xi, ps[i]);
      s.cvg = cover / k;
      s.bias = err / k;
      s.rmse = std::sqrt(sq / k);
      out.push_back(s);
    }
  }
  return out;
}

inline AsymptoticResult run_asymptotic_study(const AsymptoticSpec& spec) {
  validate(spec.truth);
  if (spec.n_reps < 1) throw InputError("asymptotic study: n_reps must be positive");
  const Locations grid = regular_grid(spec.domain, spec.grid_counts);
  for (int n : spec.n_list) {
    if (n < 3 || n > grid.size()) throw InputError("asymptotic study: n must lie in [3, grid size]");
  }
  const CHParams t0 = spec.truth;
  const double c0 = microergodic(t0);
  AsymptoticResult out;
  out.c0 = c0;
  const std::size_t nm = spec.modes.size();
  for (std::size_t ni = 0; ni < spec.n_list.size(); ++ni) {
    const int n = spec.n_list[ni];
    std::vector<AsymptoticRow> rows(static_cast<std::size_t>(spec.n_reps) * nm);
    parallel_for(spec.n_reps, spec.threads, [&](int rep) {
      const std::uint64_t key = static_cast<std::uint64_t>(ni) << 32 | static_cast<std::uint64_t>(rep);
      // random subsample of the grid
      NormalSource pick(make_stream(derive_seed(spec.seed, 11), key));
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(grid.size()));
      std::iota(idx.begin(), idx.end(), Eigen::Index{0});
      for (int i = 0; i < n; ++i) {
        const auto span = static_cast<std::uint64_t>(grid.size() - i);
        const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(pick.engine()() % span);
        std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
      }
      Locations locs;
      locs.coords.resize(n, grid.dim());
      for (int i = 0; i < n; ++i) locs.coords.row(i) = grid.coords.row(idx[static_cast<std::size_t>(i)]);
      const LagCache lags = make_lag_cache(locs, false);
      const Eigen::MatrixXd r0 = correlation_matrix(t0, lags, true);
      const auto fac0 = factorize(t0.sigma2 * r0);
      NormalSource src(make_stream(derive_seed(spec.seed, 12), key));
      Eigen::VectorXd w(n);
      for (int i = 0; i < n; ++i) w(i) = src.normal();
      const Eigen::VectorXd z = fac0.llt.matrixL() * w;
      const Dataset data{locs, z};
      for (std::size_t mi = 0; mi < nm; ++mi) {
        auto& row = rows[static_cast<std::size_t>(rep) * nm + mi];
        row.n = n;
        row.rep = rep;
        row.mode = to_string(spec.modes[mi]);
        try {
          double c = 0.0;
          const ThetaMode mode = spec.modes[mi];
          if (mode == ThetaMode::theta0 || mode == ThetaMode::beta_half || mode == ThetaMode::beta_double) {
            CHParams th = t0;
            if (mode == ThetaMode::beta_half) th.beta *= std::sqrt(0.5);
            if (mode == ThetaMode::beta_double) th.beta *= std::sqrt(2.0);
            const Eigen::MatrixXd r = mode == ThetaMode::theta0 ? r0 : correlation_matrix(th, lags, true);
            c = microergodic_from_corr(th, r, z).c_hat;
          } else {
            FitConfig cfg = spec.fit;
            cfg.objective = Objective::profile_ml;
            cfg.mean = MeanMode::known;
            cfg.seed = derive_seed(spec.seed, 13 + key);
            if (mode == ThetaMode::beta_hat) cfg.fixed.insert("alpha");
            const GPModel tmpl{t0, 0.0, 0.0};
            c = *fit(tmpl, data, cfg, &lags).microergodic_hat;
          }
          row.c_hat = c;
          row.xi = std::sqrt(static_cast<double>(n)) * (c - c0) / (std::sqrt(2.0) * c0);
          const Interval ci = microergodic_ci(c, n);
          row.covered = ci.lo <= c0 && c0 <= ci.hi;
          row.ok = true;
        } catch (const NumericalError&) {
          row.ok = false;
        }
      }
    });
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  out.summary = summarize_asymptotic_rows(out.rows, c0, spec.n_list, spec.modes);
  return out;
}

// ---------------------------------------------------------------------------
// Prediction efficiency under equivalent measures.
// ---------------------------------------------------------------------------

struct EfficiencySpec {
  MaternParams truth{0.5, 0.2, 1.0};
  CHParams predictor{0.5, 2.0, 1.0, 1.0};
  std::vector<int> n_list = {50, 100, 200, 400};
  int n_reps = 50;
  std::uint64_t seed = 1;
  Bounds domain = {{0.0, 1.0}, {0.0, 1.0}};
  Bounds target_box = {{0.25, 0.75}, {0.25, 0.75}};
  int threads = 1;
};

struct EfficiencyRow {
  int n = 0;
  double mean_ratio = 0.0;
  double se_ratio = 0.0;
  std::vector<double> ratios;
};

/// Exact MSPE of the CH-based kriging predictor under the Matern truth, divided by
/// the optimal (truth-based) MSPE, at one uniform held-out point per replicate.
/// MSPE(lambda) = sigma0^2 - 2 lambda' r0 + lambda' K0 lambda.
inline std::vector<EfficiencyRow> run_efficiency_study(const EfficiencySpec& spec) {
  validate(spec.truth);
  validate(spec.predictor);
  std::vector<EfficiencyRow> out;
  for (std::size_t ni = 0; ni < spec.n_list.size(); ++ni) {
    const int n = spec.n_list[ni];
    EfficiencyRow row;
    row.n = n;
    row.ratios.assign(static_cast<std::size_t>(spec.n_reps), 0.0);
    parallel_for(spec.n_reps, spec.threads, [&](int rep) {
      NormalSource src(make_stream(spec.seed, static_cast<std::uint64_t>(ni) << 32 | static_cast<std::uint64_t>(rep)));
      Locations train;
      train.coords.resize(n, static_cast<Eigen::Index>(spec.domain.size()));
      for (int i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < spec.domain.size(); ++k) {
          const auto [lo, hi] = spec.domain[k];
          train.coords(i, static_cast<Eigen::Index>(k)) = lo + (hi - lo) * src.uniform();
        }
      }
      Locations target;
      target.coords.resize(1, static_cast<Eigen::Index>(spec.target_box.size()));
      for (std::size_t k = 0; k < spec.target_box.size(); ++k) {
        const auto [lo, hi] = spec.target_box[k];
        target.coords(0, static_cast<Eigen::Index>(k)) = lo + (hi - lo) * src.uniform();
      }
      const GPModel m0{spec.truth, 0.0, 0.0};
      const GPModel m1{spec.predictor, 0.0, 0.0};
      const Eigen::MatrixXd k0 = cov_matrix(m0, train);
      const Eigen::MatrixXd k1 = cov_matrix(m1, train);
      const Eigen::VectorXd r0 = cross_cov_matrix(m0, train, target).col(0);
      const Eigen::VectorXd r1 = cross_cov_matrix(m1, train, target).col(0);
      const auto f0 = factorize(k0);
      const auto f1 = factorize(k1);
      const double s0 = spec.truth.sigma2;
      const double opt = s0 - f0.quad_form(r0);
      const Eigen::VectorXd lam = f1.solve(r1);
      const double mspe = s0 - 2.0 * lam.dot(r0) + lam.dot(k0 * lam);
      row.ratios[static_cast<std::size_t>(rep)] = mspe / opt;
    });
    row.mean_ratio = mean_of(row.ratios);
    double ss = 0.0;
    for (double r : row.ratios) ss += (r - row.mean_ratio) * (r - row.mean_ratio);
    row.se_ratio = std::sqrt(ss / std::max(1, spec.n_reps - 1) / spec.n_reps);
    out.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Timing benchmark.
// ---------------------------------------------------------------------------

struct TimingResult {
  std::size_t n_evals = 0;
  double bessel_ns = 0.0;
  double hyperg_ns = 0.0;
  double ratio = 0.0;
};

/// Mean wall time per call of bessel_k and hyperg_u over arguments drawn as in
/// covariance evaluation: nu in [0.25, 2.5], alpha in [0.25, 5], lag/scale in
/// [1e-2, 1e2] (log-uniform).
inline TimingResult run_timing_bench(std::size_t n_evals, std::uint64_t seed) {
  if (n_evals == 0) throw InputError("timing benchmark: n_evals must be positive");
  NormalSource src(make_stream(seed, 0));
  std::vector<double> nu(n_evals), al(n_evals), r(n_evals);
  for (std::size_t i = 0; i < n_evals; ++i) {
    nu[i] = 0.25 + 2.25 * src.uniform();
    al[i] = 0.25 + 4.75 * src.uniform();
    r[i] = std::exp(std::log(1e-2) + src.uniform() * std::log(1e4));
  }
  volatile double sink = 0.0;
  const std::size_t warm = std::min<std::size_t>(n_evals, 1000);
  for (std::size_t i = 0; i < warm; ++i) {
    sink = sink + bessel_k(nu[i], std::sqrt(2.0 * nu[i]) * r[i]);
    sink = sink + log_hyperg_u(al[i], 1.0 - nu[i], nu[i] * r[i] * r[i]);
  }
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  for (std::size_t i = 0; i < n_evals; ++i) sink = sink + bessel_k(nu[i], std::sqrt(2.0 * nu[i]) * r[i]);
  auto t1 = clock::now();
  for (std::size_t i = 0; i < n_evals; ++i) sink = sink + hyperg_u(al[i], 1.0 - nu[i], nu[i] * r[i] * r[i]);
  auto t2 = clock::now();
  TimingResult out;
  out.n_evals = n_evals;
  out.bessel_ns = std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(n_evals);
  out.hyperg_ns = std::chrono::duration<double, std::nano>(t2 - t1).count() / static_cast<double>(n_evals);
  out.ratio = out.hyperg_ns / out.bessel_ns;
  return out;
}

// ---------------------------------------------------------------------------
// 1-D realizations.
// ---------------------------------------------------------------------------

/// n_points x kernels.size() realizations on an endpoint-inclusive grid over
/// [lo, hi]. Every column is driven by the same normal vector so that columns
/// differ only through their covariance.
inline Eigen::MatrixXd export_realizations_1d(const std::vector<IsoSpec>& kernels, int n_points, std::uint64_t seed,
                                              double lo = 0.0, double hi = 2000.0) {
  if (kernels.empty()) throw InputError("export_realizations_1d: need at least one kernel");
  if (n_points < 2) throw InputError("export_realizations_1d: need at least two points");
  const Locations grid = regular_grid({{lo, hi}}, {n_points});
  NormalSource src(make_stream(seed, 0));
  Eigen::VectorXd w(n_points);
  for (int i = 0; i < n_points; ++i) w(i) = src.normal();
  Eigen::MatrixXd out(n_points, static_cast<Eigen::Index>(kernels.size()));
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    const GPModel m{to_kernel(kernels[k]), 0.0, 0.0};
    const Eigen::MatrixXd l = signal_factor(m, grid);
    out.col(static_cast<Eigen::Index>(k)) = l.triangularView<Eigen::Lower>() * w;
  }
  return out;
}

/// Grid used by export_realizations_1d.
inline Eigen::VectorXd realization_grid(int n_points, double lo = 0.0, double hi = 2000.0) {
  return regular_grid({{lo, hi}}, {n_points}).coords.col(0);
}

}  // namespace chgp
