#pragma once

// Adaptive Gauss-Kronrod (10/21) quadrature, plus a log-domain driver for
// positive unimodal integrands whose magnitude would overflow a double.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "chgp/errors.hpp"

namespace chgp {

struct QuadratureConfig {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_subdivisions = 200;

  void validate() const {
    detail::require(abs_tol > 0.0 && rel_tol > 0.0 && max_subdivisions >= 1,
                    "QuadratureConfig: tolerances must be positive and max_subdivisions >= 1");
  }
};

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int subdivisions = 0;
  bool converged = false;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule on [-1, 1].
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525373788, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
// Gauss weights attached to the odd-indexed Kronrod nodes (1, 3, 5, 7, 9).
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
  double lo;
  double hi;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment gauss_kronrod_21(F& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double f_center = f(center);
  double kronrod = f_center * kKronrodWeights[10];
  double gauss = 0.0;
  double abs_sum = std::abs(kronrod);
  std::array<double, 10> f_lo{};
  std::array<double, 10> f_hi{};
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    f_lo[j] = f(center - dx);
    f_hi[j] = f(center + dx);
    const double pair = f_lo[j] + f_hi[j];
    kronrod += kKronrodWeights[j] * pair;
    abs_sum += kKronrodWeights[j] * (std::abs(f_lo[j]) + std::abs(f_hi[j]));
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
  }
  const double mean = 0.5 * kronrod;
  double asc = kKronrodWeights[10] * std::abs(f_center - mean);
  for (int j = 0; j < 10; ++j) {
    asc += kKronrodWeights[j] * (std::abs(f_lo[j] - mean) + std::abs(f_hi[j] - mean));
  }
  const double ahalf = std::abs(half);
  double err = std::abs((kronrod - gauss) * half);
  const double resasc = asc * ahalf;
  const double resabs = abs_sum * ahalf;
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) {
    err = std::max(50.0 * eps * resabs, err);
  }
  return {lo, hi, kronrod * half, err};
}

}  // namespace detail

/// Globally adaptive integration of f over [lo, hi] (finite). Optional interior
/// breakpoints seed the initial partition. Never throws on non-convergence;
/// inspect QuadratureResult::converged.
template <class F>
QuadratureResult integrate(F&& f, double lo, double hi, const QuadratureConfig& cfg,
                           std::span<const double> breakpoints = {}) {
  std::vector<double> cuts;
  cuts.reserve(breakpoints.size() + 2);
  cuts.push_back(lo);
  for (double b : breakpoints) {
    if (b > lo && b < hi) cuts.push_back(b);
  }
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<detail::Segment> heap;
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    auto seg = detail::gauss_kronrod_21(f, cuts[i], cuts[i + 1]);
    total += seg.value;
    total_err += seg.error;
    heap.push(seg);
  }
  int subdivisions = 0;
  auto tolerance = [&] { return std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total)); };
  while (total_err > tolerance() && subdivisions < cfg.max_subdivisions) {
    const detail::Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) {
      heap.push(worst);  // interval at machine resolution
      break;
    }
    const auto left = detail::gauss_kronrod_21(f, worst.lo, mid);
    const auto right = detail::gauss_kronrod_21(f, mid, worst.hi);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
  }
  // Re-sum to shed the drift accumulated by incremental updates.
  double value = 0.0;
  double err = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  const bool ok = err <= std::max(cfg.abs_tol, cfg.rel_tol * std::abs(value));
  return {value, err, subdivisions, ok};
}

/// Result of a log-domain integral: log of the (positive) integral value and a
/// relative error estimate.
struct LogIntegral {
  double log_value = 0.0;
  double rel_error = 0.0;
  double mode = 0.0;
  double log_peak = 0.0;
};

struct UnimodalOptions {
  /// Truncate where log f drops this far below its peak.
  double log_cutoff = 46.0;
  /// Width of the initial panels handed to the adaptive integrator.
  double panel_width = 4.0;
  /// Starting point for the mode search when the mode is not known.
  double mode_hint = 0.0;
  std::optional<double> known_mode;
};

namespace detail {

template <class G>
double safe_log_eval(G& log_f, double u) {
  const double v = log_f(u);
  return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
}

template <class G>
double find_mode(G& log_f, double lo, double hi, double hint) {
  double x0 = std::clamp(hint, lo, hi);
  double g0 = safe_log_eval(log_f, x0);
  double step = 1.0;
  double left = x0;
  double right = x0;
  auto try_dir = [&](double dir) -> bool {
    const double x1 = std::clamp(x0 + dir * step, lo, hi);
    if (x1 == x0) return false;
    const double g1 = safe_log_eval(log_f, x1);
    if (!(g1 > g0)) return false;
    double prev = x0;
    double cur = x1;
    double gcur = g1;
    for (int it = 0; it < 80; ++it) {
      step *= 2.0;
      const double next = std::clamp(cur + dir * step, lo, hi);
      if (next == cur) break;
      const double gnext = safe_log_eval(log_f, next);
      if (!(gnext > gcur)) {
        left = std::min(prev, next);
        right = std::max(prev, next);
        return true;
      }
      prev = cur;
      cur = next;
      gcur = gnext;
    }
    left = std::min(prev, cur);
    right = std::max(prev, cur);
    return true;
  };
  if (!try_dir(+1.0) && !try_dir(-1.0)) {
    left = std::max(lo, x0 - step);
    right = std::min(hi, x0 + step);
  }
  // Golden-section refinement; the mode only seeds scaling and the partition.
  constexpr double kInvPhi = 0.6180339887498949;
  double a = left;
  double b = right;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double gc = safe_log_eval(log_f, c);
  double gd = safe_log_eval(log_f, d);
  while (b - a > 1e-6 * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (gc > gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - kInvPhi * (b - a);
      gc = safe_log_eval(log_f, c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + kInvPhi * (b - a);
      gd = safe_log_eval(log_f, d);
    }
  }
  return 0.5 * (a + b);
}

template <class G>
double find_cut(G& log_f, double mode, double peak, double limit, double dir, double cutoff) {
  double x = mode;
  double step = 1.0;
  for (int it = 0; it < 200; ++it) {
    double next = x + dir * step;
    if ((dir > 0 && next >= limit) || (dir < 0 && next <= limit)) return limit;
    if (safe_log_eval(log_f, next) - peak < -cutoff) return next;
    x = next;
    step *= 1.5;
  }
  throw ConvergenceError("log-domain quadrature: integrand does not decay");
}

}  // namespace detail

/// Integrates exp(log_f(u)) over [lo, hi] for a unimodal log_f. Either bound may be
/// infinite provided the integrand decays. The integrand is rescaled by its peak,
/// so the result is returned as a logarithm and never overflows.
template <class G>
LogIntegral integrate_unimodal_log(G&& log_f, double lo, double hi, const QuadratureConfig& cfg,
                                   const UnimodalOptions& opt = {}) {
  const double mode = opt.known_mode ? std::clamp(*opt.known_mode, lo, hi)
                                     : detail::find_mode(log_f, lo, hi, opt.mode_hint);
  const double peak = detail::safe_log_eval(log_f, mode);
  if (!std::isfinite(peak)) {
    throw ConvergenceError("log-domain quadrature: non-finite integrand at the mode");
  }
  const double left = detail::find_cut(log_f, mode, peak, lo, -1.0, opt.log_cutoff);
  const double right = detail::find_cut(log_f, mode, peak, hi, +1.0, opt.log_cutoff);

  std::vector<double> cuts;
  cuts.push_back(mode);
  for (double x = mode - opt.panel_width; x > left; x -= opt.panel_width) cuts.push_back(x);
  for (double x = mode + opt.panel_width; x < right; x += opt.panel_width) cuts.push_back(x);

  auto scaled = [&](double u) {
    const double v = log_f(u) - peak;
    return std::isnan(v) ? 0.0 : std::exp(v);
  };
  QuadratureConfig inner = cfg;
  inner.abs_tol = std::min(cfg.abs_tol, 1e-300);
  const auto res = integrate(scaled, left, right, inner, cuts);
  if (!res.converged || !(res.value > 0.0)) {
    throw ConvergenceError("log-domain quadrature did not reach tolerance within " +
                           std::to_string(cfg.max_subdivisions) + " subdivisions");
  }
  return {peak + std::log(res.value), res.abs_error / res.value, mode, peak};
}

}  // namespace chgp
