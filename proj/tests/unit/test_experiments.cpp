#include <gtest/gtest.h>

#include <cmath>

#include "chgp/experiments.hpp"

using namespace chgp;

namespace {

StudySpec small_study() {
  StudySpec s;
  s.case_id = "unit";
  s.truth = calibrate_effective_range(IsoSpec{MaternParams{0.5, 1.0, 1.0}}, 400.0);
  s.n_train = 80;
  s.lhs_candidates = 10;
  s.n_reps = 3;
  s.seed = 5;
  s.fit.n_starts = 1;
  s.curve_lags = {0.0, 100.0, 500.0};
  return s;
}

}  // namespace

TEST(Stats, MedianAndQuantile) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_EQ(median({NAN, 1.0, 5.0}), 3.0);
  EXPECT_TRUE(std::isnan(median({})));
  EXPECT_EQ(quantile({1, 2, 3, 4, 5}, 0.0), 1.0);
  EXPECT_EQ(quantile({1, 2, 3, 4, 5}, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5}, 0.3), 2.2);
  EXPECT_EQ(mean_of({1.0, NAN, 3.0}), 2.0);
}

TEST(Stats, StandardNormalReferenceRow) {
  NormalSource src(make_stream(3, 0));
  std::vector<double> x(400000);
  for (double& v : x) v = src.normal();
  const double expect[5] = {-1.6449, -0.6749, 0.0, 0.6749, 1.6449};
  const double ps[5] = {0.05, 0.25, 0.5, 0.75, 0.95};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(quantile(x, ps[i]), expect[i], 0.01);
  int inside = 0;
  for (double v : x) inside += std::fabs(v) <= 1.96;
  EXPECT_NEAR(inside / 400000.0, 0.95, 0.002);
}

TEST(Stats, ParallelForKeepsSlotsAndRethrows) {
  std::vector<int> out(50, -1);
  parallel_for(50, 4, [&](int i) { out[static_cast<std::size_t>(i)] = i * i; });
  for (int i = 0; i < 50; ++i) EXPECT_EQ(out[static_cast<std::size_t>(i)], i * i);
  EXPECT_THROW(parallel_for(10, 3, [](int i) {
                 if (i == 7) throw InputError("boom");
               }),
               InputError);
}

TEST(Candidates, NamesAndTemplates) {
  for (Candidate c : {Candidate::matern, Candidate::ch, Candidate::gc, Candidate::truth}) {
    EXPECT_EQ(candidate_from_string(to_string(c)), c);
  }
  EXPECT_THROW(candidate_from_string("rbf"), InputError);
  const IsoSpec truth = CHParams{2.5, 0.5, 100.0, 1.0};
  EXPECT_EQ(std::get<MaternParams>(candidate_template(Candidate::matern, truth, 2)).nu, 2.5);
  EXPECT_EQ(std::get<CHParams>(candidate_template(Candidate::ch, truth, 2)).nu, 2.5);
  EXPECT_EQ(std::get<GCParams>(candidate_template(Candidate::gc, truth, 2)).delta, 2.0);
  EXPECT_EQ(std::get<GCParams>(candidate_template(Candidate::gc, IsoSpec{MaternParams{0.5, 1, 1}}, 2)).delta, 1.0);
  EXPECT_EQ(study_smoothness(IsoSpec{GCParams{1.0, 1.0, 1.0, 1.0}}), 0.5);
}

TEST(PredictionStudy, TruthIntervalsAreCalibrated) {
  StudySpec s = small_study();
  s.candidates = {Candidate::truth};
  s.n_train = 150;
  s.n_reps = 30;
  const auto r = run_prediction_study(s);
  ASSERT_EQ(r.rows.size(), 30u);
  double cover = 0.0;
  for (const auto& row : r.rows) {
    ASSERT_TRUE(row.ok);
    cover += row.cvg95;
    EXPECT_GE(row.alci95, 0.0);
    EXPECT_GE(row.cvg95, 0.0);
    EXPECT_LE(row.cvg95, 1.0);
  }
  cover /= 30.0;
  EXPECT_GE(cover, 0.90);
  EXPECT_LE(cover, 0.99);
}

TEST(PredictionStudy, RowsCurvesAndSummary) {
  const StudySpec s = small_study();
  const auto r = run_prediction_study(s);
  ASSERT_EQ(r.rows.size(), 9u);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_EQ(r.rows[i].rep, static_cast<int>(i / 3));
    EXPECT_EQ(r.rows[i].candidate, to_string(s.candidates[i % 3]));
    EXPECT_TRUE(r.rows[i].ok) << r.rows[i].error;
    EXPECT_GT(r.rows[i].rmspe, 0.0);
  }
  ASSERT_EQ(r.curves.size(), 9u * 3u);
  for (const auto& c : r.curves) {
    if (c.lag == 0.0) {
      EXPECT_EQ(c.correlation, 1.0);
    }
    EXPECT_GE(c.correlation, 0.0);
    EXPECT_LE(c.correlation, 1.0);
  }
  // aggregates are recomputable from the rows
  ASSERT_EQ(r.summary.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> rm;
    for (const auto& row : r.rows) {
      if (row.candidate == r.summary[k].candidate) rm.push_back(row.rmspe);
    }
    EXPECT_EQ(r.summary[k].median_rmspe, median(rm));
    EXPECT_EQ(r.summary[k].n_ok, 3);
    EXPECT_EQ(r.summary[k].n_failed, 0);
  }
  EXPECT_EQ(&find_summary(r, Candidate::ch), &r.summary[1]);
  EXPECT_THROW(find_summary(r, Candidate::truth), InputError);
}

TEST(PredictionStudy, Deterministic) {
  StudySpec s = small_study();
  s.n_reps = 2;
  s.candidates = {Candidate::ch};
  const auto a = run_prediction_study(s);
  s.threads = 2;
  const auto b = run_prediction_study(s);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].rmspe, b.rows[i].rmspe);
    EXPECT_EQ(a.rows[i].cvg95, b.rows[i].cvg95);
    EXPECT_EQ(a.rows[i].loglik, b.rows[i].loglik);
  }
}

TEST(PredictionStudy, FailuresAreCountedAndSkipped) {
  std::vector<PredictionRow> rows(3);
  rows[0].candidate = rows[1].candidate = rows[2].candidate = "ch";
  rows[0].ok = true;
  rows[0].rmspe = 1.0;
  rows[1].ok = false;
  rows[2].ok = true;
  rows[2].rmspe = 3.0;
  const auto s = summarize_prediction_rows(rows, {Candidate::ch});
  EXPECT_EQ(s[0].n_ok, 2);
  EXPECT_EQ(s[0].n_failed, 1);
  EXPECT_EQ(s[0].median_rmspe, 2.0);
}

TEST(PredictionStudy, Errors) {
  StudySpec s = small_study();
  s.n_reps = 0;
  EXPECT_THROW(run_prediction_study(s), InputError);
  s = small_study();
  s.candidates.clear();
  EXPECT_THROW(run_prediction_study(s), InputError);
  s = small_study();
  s.truth = MaternParams{-1.0, 1.0, 1.0};
  EXPECT_THROW(run_prediction_study(s), DomainError);
}

TEST(AsymptoticStudy, RowsAndBiasDirections) {
  AsymptoticSpec s;
  s.truth = std::get<CHParams>(calibrate_effective_range(IsoSpec{CHParams{0.5, 2.0, 1.0, 1.0}}, 0.6));
  s.modes = {ThetaMode::theta0, ThetaMode::beta_half, ThetaMode::beta_double};
  s.n_list = {100};
  s.n_reps = 40;
  s.grid_counts = {20, 20};
  s.seed = 9;
  const auto r = run_asymptotic_study(s);
  ASSERT_EQ(r.rows.size(), 120u);
  EXPECT_DOUBLE_EQ(r.c0, microergodic(s.truth));
  for (const auto& row : r.rows) {
    ASSERT_TRUE(row.ok);
    EXPECT_NEAR(row.xi, std::sqrt(100.0) * (row.c_hat - r.c0) / (std::sqrt(2.0) * r.c0), 1e-12);
    const auto ci = microergodic_ci(row.c_hat, 100);
    EXPECT_EQ(row.covered, ci.lo <= r.c0 && r.c0 <= ci.hi);
  }
  ASSERT_EQ(r.summary.size(), 3u);
  EXPECT_GE(r.summary[0].cvg, 0.80);
  EXPECT_GT(r.summary[1].xi_percentiles[2], 0.0);
  EXPECT_LT(r.summary[2].xi_percentiles[2], 0.0);
  // recompute one summary from rows
  std::vector<double> xi;
  double cover = 0.0;
  for (const auto& row : r.rows) {
    if (row.mode == "theta0") {
      xi.push_back(row.xi);
      cover += row.covered;
    }
  }
  EXPECT_EQ(r.summary[0].xi_percentiles[2], quantile(xi, 0.5));
  EXPECT_DOUBLE_EQ(r.summary[0].cvg, cover / 40.0);
}

TEST(AsymptoticStudy, FittedModesAndDeterminism) {
  AsymptoticSpec s;
  s.truth = CHParams{0.5, 2.0, 0.2, 1.0};
  s.modes = {ThetaMode::beta_hat, ThetaMode::alpha_beta_hat};
  s.n_list = {40};
  s.n_reps = 2;
  s.grid_counts = {10, 10};
  s.fit.n_starts = 1;
  const auto a = run_asymptotic_study(s);
  const auto b = run_asymptotic_study(s);
  ASSERT_EQ(a.rows.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_TRUE(a.rows[i].ok);
    EXPECT_EQ(a.rows[i].c_hat, b.rows[i].c_hat);
  }
  EXPECT_EQ(theta_mode_from_string(to_string(ThetaMode::beta_double)), ThetaMode::beta_double);
  EXPECT_THROW(theta_mode_from_string("bogus"), InputError);
  s.n_list = {1000};
  EXPECT_THROW(run_asymptotic_study(s), InputError);
}

TEST(EfficiencyStudy, RatiosAreAtLeastOne) {
  EfficiencySpec s;
  s.truth = MaternParams{0.5, 0.2, 1.0};
  s.predictor = CHParams{0.5, 2.0, 0.3, 1.0};
  s.predictor.sigma2 = matched_ch_variance(s.truth, s.predictor.alpha, s.predictor.beta);
  s.n_list = {30, 60};
  s.n_reps = 10;
  const auto rows = run_efficiency_study(s);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& row : rows) {
    ASSERT_EQ(row.ratios.size(), 10u);
    for (double v : row.ratios) EXPECT_GE(v, 1.0 - 1e-9);
    EXPECT_DOUBLE_EQ(row.mean_ratio, mean_of(row.ratios));
    EXPECT_GE(row.se_ratio, 0.0);
  }
  // the truth itself as predictor is optimal
  EfficiencySpec same = s;
  same.predictor = CHParams{};
  same.n_list = {30};
  same.n_reps = 3;
  const auto m = run_efficiency_study(same);
  EXPECT_GE(m[0].mean_ratio, 1.0 - 1e-9);
}

TEST(TimingBench, ReportsRatio) {
  EXPECT_THROW(run_timing_bench(0, 1), InputError);
  const auto a = run_timing_bench(100000, 1);
  const auto b = run_timing_bench(100000, 1);
  EXPECT_EQ(a.n_evals, 100000u);
  EXPECT_GT(a.ratio, 0.0);
  EXPECT_LE(a.ratio, 10.0);
  EXPECT_LT(std::fabs(a.hyperg_ns - b.hyperg_ns) / a.hyperg_ns, 0.2);
  EXPECT_LT(std::fabs(a.bessel_ns - b.bessel_ns) / a.bessel_ns, 0.2);
}

TEST(Realizations, ColumnsAndSeeds) {
  const std::vector<IsoSpec> ks{MaternParams{0.5, 200.0, 1.0}, CHParams{0.5, 0.5, 200.0, 1.0},
                                MaternParams{1.5, 200.0, 0.0}};
  const auto a = export_realizations_1d(ks, 200, 7);
  ASSERT_EQ(a.rows(), 200);
  ASSERT_EQ(a.cols(), 3);
  EXPECT_EQ(a, export_realizations_1d(ks, 200, 7));
  EXPECT_NE(a, export_realizations_1d(ks, 200, 8));
  EXPECT_TRUE((a.col(2).array() == 0.0).all());
  // shared driving noise: both columns start with L(0,0) w_0 = sigma w_0
  EXPECT_DOUBLE_EQ(a(0, 0), a(0, 1));
  const auto g = realization_grid(200);
  EXPECT_EQ(g(0), 0.0);
  EXPECT_EQ(g(199), 2000.0);
  EXPECT_THROW(export_realizations_1d({}, 10, 1), InputError);
  EXPECT_THROW(export_realizations_1d(ks, 1, 1), InputError);
}
