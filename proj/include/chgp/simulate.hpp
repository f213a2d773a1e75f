#pragma once

// Exact Gaussian-process sampling through the lower Cholesky factor.

#include <Eigen/Dense>

#include <cstdint>
#include <thread>
#include <vector>

#include "chgp/design.hpp"
#include "chgp/errors.hpp"
#include "chgp/gp.hpp"
#include "chgp/rng.hpp"

namespace chgp {

/// Lower factor L with L L' = sigma2 R (jittered when needed); zero for sigma2 = 0.
inline Eigen::MatrixXd signal_factor(const GPModel& model, const Locations& locs) {
  validate(model);
  const Eigen::Index n = locs.size();
  if (variance(model.kernel) == 0.0) return Eigen::MatrixXd::Zero(n, n);
  GPModel signal = model;
  signal.nugget_tau2 = 0.0;
  const auto fac = factorize(cov_matrix(signal, locs));
  return fac.llt.matrixL();
}

/// One realization b + L w + tau e from replicate stream `index` of `seed`.
inline Eigen::VectorXd sample_replicate(const GPModel& model, const Eigen::MatrixXd& factor, std::uint64_t seed,
                                        std::uint64_t index) {
  const Eigen::Index n = factor.rows();
  NormalSource src(make_stream(seed, index));
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = src.normal();
  Eigen::VectorXd y = factor.triangularView<Eigen::Lower>() * w;
  y.array() += model.mean_b;
  if (model.nugget_tau2 > 0.0) {
    const double tau = std::sqrt(model.nugget_tau2);
    for (Eigen::Index i = 0; i < n; ++i) y(i) += tau * src.normal();
  }
  return y;
}

/// n_reps x n matrix; row r depends only on (seed, first_rep + r), so any split
/// into batches gives the same rows. Rows are filled by up to `threads` workers.
inline Eigen::MatrixXd sample_gp(const GPModel& model, const Locations& locs, int n_reps, std::uint64_t seed,
                                 std::uint64_t first_rep = 0, int threads = 1) {
  if (n_reps < 1) throw InputError("sample_gp: n_reps must be positive");
  validate(locs);
  const Eigen::MatrixXd factor = signal_factor(model, locs);
  Eigen::MatrixXd out(n_reps, locs.size());
  const unsigned workers = std::min<unsigned>(thread_count(threads), static_cast<unsigned>(n_reps));
  auto work = [&](unsigned w) {
    for (int r = static_cast<int>(w); r < n_reps; r += static_cast<int>(workers)) {
      out.row(r) = sample_replicate(model, factor, seed, first_rep + static_cast<std::uint64_t>(r)).transpose();
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  return out;
}

}  // namespace chgp
