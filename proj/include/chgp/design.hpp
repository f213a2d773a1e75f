#pragma once

// Locations and distances, regular grids, maximin Latin hypercubes and
// directional semivariograms.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chgp/errors.hpp"
#include "chgp/rng.hpp"

namespace chgp {

enum class Metric { euclidean, chordal, great_circle };

inline constexpr double kEarthRadiusKm = 6371.0088;

inline std::string to_string(Metric m) {
  switch (m) {
    case Metric::euclidean: return "euclidean";
    case Metric::chordal: return "chordal";
    case Metric::great_circle: return "great_circle";
  }
  return "unknown";
}

inline Metric metric_from_string(const std::string& s) {
  if (s == "euclidean") return Metric::euclidean;
  if (s == "chordal") return Metric::chordal;
  if (s == "great_circle") return Metric::great_circle;
  throw InputError("unknown metric '" + s + "' (expected euclidean, chordal or great_circle)");
}

/// n x d coordinates. Spherical metrics take (lon, lat) in degrees.
struct Locations {
  Eigen::MatrixXd coords;
  Metric metric = Metric::euclidean;
  double radius = kEarthRadiusKm;

  Eigen::Index size() const { return coords.rows(); }
  Eigen::Index dim() const { return coords.cols(); }
};

struct Dataset {
  Locations locs;
  Eigen::VectorXd z;
};

inline void validate(const Locations& l) {
  if (l.size() < 1) throw InputError("locations: need at least one point");
  if (!l.coords.allFinite()) throw InputError("locations: coordinates must be finite");
  if (l.metric == Metric::euclidean) {
    if (l.dim() < 1 || l.dim() > 3) throw InputError("locations: euclidean dimension must be 1, 2 or 3");
    return;
  }
  if (l.dim() != 2) throw InputError("locations: spherical metrics need (lon, lat) columns");
  if (!(l.radius > 0.0 && std::isfinite(l.radius))) throw InputError("locations: radius must be positive");
  for (Eigen::Index i = 0; i < l.size(); ++i) {
    const double lon = l.coords(i, 0);
    const double lat = l.coords(i, 1);
    if (lon < -180.0 || lon > 180.0 || lat < -90.0 || lat > 90.0) {
      throw InputError("locations: point " + std::to_string(i + 1) + " has lon/lat outside [-180,180]x[-90,90]");
    }
  }
}

inline void validate(const Dataset& d) {
  validate(d.locs);
  if (d.z.size() != d.locs.size()) throw InputError("dataset: observation count does not match locations");
  if (!d.z.allFinite()) throw InputError("dataset: observations must be finite");
}

namespace detail {

inline double haversine(double lon1, double lat1, double lon2, double lat2) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double s_lat = std::sin(0.5 * (lat2 - lat1) * rad);
  const double s_lon = std::sin(0.5 * (lon2 - lon1) * rad);
  const double hav = s_lat * s_lat + std::cos(lat1 * rad) * std::cos(lat2 * rad) * s_lon * s_lon;
  return std::clamp(hav, 0.0, 1.0);
}

template <class A, class B>
double point_distance(const A& a, const B& b, Metric metric, double radius) {
  switch (metric) {
    case Metric::euclidean: return (a - b).norm();
    case Metric::chordal: {
      // 2R sin(dsigma/2) with sin^2(dsigma/2) = hav
      return 2.0 * radius * std::sqrt(haversine(a(0), a(1), b(0), b(1)));
    }
    case Metric::great_circle: {
      const double hav = haversine(a(0), a(1), b(0), b(1));
      return 2.0 * radius * std::asin(std::sqrt(hav));
    }
  }
  return 0.0;
}

}  // namespace detail

inline double distance(const Locations& a, Eigen::Index i, const Locations& b, Eigen::Index j) {
  return detail::point_distance(a.coords.row(i), b.coords.row(j), a.metric, a.radius);
}

/// Symmetric n x n distance matrix with an exact zero diagonal.
inline Eigen::MatrixXd pairwise_dist(const Locations& locs) {
  validate(locs);
  const Eigen::Index n = locs.size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      d(i, j) = distance(locs, i, locs, j);
      d(j, i) = d(i, j);
    }
  }
  return d;
}

/// Distances between every point of a (rows) and every point of b (columns).
inline Eigen::MatrixXd cross_dist(const Locations& a, const Locations& b) {
  validate(a);
  validate(b);
  if (a.metric != b.metric || a.dim() != b.dim() || a.radius != b.radius) {
    throw InputError("cross_dist: location sets use different metrics or dimensions");
  }
  Eigen::MatrixXd d(a.size(), b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    for (Eigen::Index i = 0; i < a.size(); ++i) d(i, j) = distance(a, i, b, j);
  }
  return d;
}

/// Closed interval per coordinate.
using Bounds = std::vector<std::pair<double, double>>;

inline void validate(const Bounds& b) {
  if (b.empty() || b.size() > 3) throw InputError("bounds: need 1 to 3 dimensions");
  for (const auto& [lo, hi] : b) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) throw InputError("bounds: need finite lo < hi");
  }
}

/// Endpoint-inclusive axis-aligned grid; the first coordinate varies fastest.
inline Locations regular_grid(const Bounds& bounds, const std::vector<int>& counts) {
  validate(bounds);
  if (counts.size() != bounds.size()) throw InputError("regular_grid: one count per dimension required");
  for (int c : counts) {
    if (c < 2) throw InputError("regular_grid: counts must be at least 2");
  }
  const auto d = static_cast<Eigen::Index>(bounds.size());
  Eigen::Index n = 1;
  for (int c : counts) n *= c;
  Locations out;
  out.coords.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index rem = i;
    for (Eigen::Index k = 0; k < d; ++k) {
      const int c = counts[static_cast<std::size_t>(k)];
      const Eigen::Index idx = rem % c;
      rem /= c;
      const auto [lo, hi] = bounds[static_cast<std::size_t>(k)];
      out.coords(i, k) = idx == c - 1 ? hi : lo + (hi - lo) * static_cast<double>(idx) / (c - 1);
    }
  }
  return out;
}

namespace detail {

/// One Latin hypercube draw in the unit cube.
inline Eigen::MatrixXd unit_lhs(Eigen::Index n, Eigen::Index d, std::uint64_t seed, std::uint64_t index) {
  NormalSource src(make_stream(seed, index));
  Eigen::MatrixXd u(n, d);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < d; ++k) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    for (Eigen::Index i = n - 1; i > 0; --i) {  // Fisher-Yates on raw bits
      const auto j = static_cast<Eigen::Index>(src.engine()() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      u(i, k) = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + src.uniform()) / static_cast<double>(n);
    }
  }
  return u;
}

inline double min_pairwise(const Eigen::MatrixXd& u) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < u.rows(); ++j) {
    for (Eigen::Index i = j + 1; i < u.rows(); ++i) best = std::min(best, (u.row(i) - u.row(j)).squaredNorm());
  }
  return std::sqrt(best);
}

inline Locations scale_unit(const Eigen::MatrixXd& u, const Bounds& bounds) {
  Locations out;
  out.coords.resize(u.rows(), u.cols());
  for (Eigen::Index k = 0; k < u.cols(); ++k) {
    const auto [lo, hi] = bounds[static_cast<std::size_t>(k)];
    out.coords.col(k) = (lo + (hi - lo) * u.col(k).array()).matrix();
  }
  return out;
}

}  // namespace detail

/// Plain Latin hypercube (candidate 0 of maximin_lhs).
inline Locations latin_hypercube(int n, const Bounds& bounds, std::uint64_t seed) {
  validate(bounds);
  if (n < 1) throw InputError("latin_hypercube: n must be positive");
  return detail::scale_unit(detail::unit_lhs(n, static_cast<Eigen::Index>(bounds.size()), seed, 0), bounds);
}

/// Best of n_candidates Latin hypercube draws by minimum pairwise distance in the
/// unit cube; ties go to the lowest candidate index.
inline Locations maximin_lhs(int n, const Bounds& bounds, std::uint64_t seed, int n_candidates = 100) {
  validate(bounds);
  if (n < 2) throw InputError("maximin_lhs: n must be at least 2");
  if (n_candidates < 1) throw InputError("maximin_lhs: n_candidates must be positive");
  const auto d = static_cast<Eigen::Index>(bounds.size());
  Eigen::MatrixXd best;
  double best_score = -1.0;
  for (int c = 0; c < n_candidates; ++c) {
    Eigen::MatrixXd u = detail::unit_lhs(n, d, seed, static_cast<std::uint64_t>(c));
    const double score = detail::min_pairwise(u);
    if (score > best_score) {
      best_score = score;
      best = std::move(u);
    }
  }
  return detail::scale_unit(best, bounds);
}

// ---------------------------------------------------------------------------
// Semivariograms.
// ---------------------------------------------------------------------------

struct SemivariogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t pairs = 0;
  std::optional<double> gamma;  // empty when no pair falls in the bin
};

struct SemivariogramCurve {
  std::optional<double> angle_deg;  // empty for the omnidirectional curve
  std::vector<SemivariogramBin> bins;
};

namespace detail {

inline void check_edges(const std::vector<double>& edges) {
  if (edges.size() < 2) throw InputError("semivariogram: need at least two bin edges");
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    if (!(edges[k] < edges[k + 1]) || edges[k] < 0.0) throw InputError("semivariogram: bin edges must increase");
  }
}

inline std::optional<std::size_t> find_bin(const std::vector<double>& edges, double h) {
  if (h < edges.front() || h >= edges.back()) return std::nullopt;
  const auto it = std::upper_bound(edges.begin(), edges.end(), h);
  return static_cast<std::size_t>(it - edges.begin()) - 1;
}

inline SemivariogramCurve finish_curve(std::optional<double> angle, const std::vector<double>& edges,
                                       const std::vector<double>& sums, const std::vector<std::size_t>& counts) {
  SemivariogramCurve c{angle, {}};
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    SemivariogramBin b{edges[k], edges[k + 1], counts[k], std::nullopt};
    if (counts[k] > 0) b.gamma = sums[k] / (2.0 * static_cast<double>(counts[k]));
    c.bins.push_back(b);
  }
  return c;
}

}  // namespace detail

/// Classical estimator gamma(h) = sum (Z_i - Z_j)^2 / (2 |N(h)|) over half-open
/// distance bins [e_k, e_{k+1}).
inline SemivariogramCurve omnidirectional_semivariogram(const Dataset& data, const std::vector<double>& edges) {
  validate(data);
  detail::check_edges(edges);
  std::vector<double> sums(edges.size() - 1, 0.0);
  std::vector<std::size_t> counts(edges.size() - 1, 0);
  const Eigen::Index n = data.locs.size();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const auto bin = detail::find_bin(edges, distance(data.locs, i, data.locs, j));
      if (!bin) continue;
      const double dz = data.z(i) - data.z(j);
      sums[*bin] += dz * dz;
      ++counts[*bin];
    }
  }
  return detail::finish_curve(std::nullopt, edges, sums, counts);
}

/// Directional semivariograms for 2-D planar data. The direction of s_j - s_i is
/// taken modulo 180 degrees from the first axis; a pair belongs to angle a when
/// the wrapped difference lies in [-tol, tol).
inline std::vector<SemivariogramCurve> directional_semivariogram(const Dataset& data, const std::vector<double>& angles_deg,
                                                                 double angle_tol_deg, const std::vector<double>& edges) {
  validate(data);
  detail::check_edges(edges);
  if (data.locs.dim() != 2 || data.locs.metric != Metric::euclidean) {
    throw InputError("directional_semivariogram: needs planar 2-D coordinates");
  }
  if (!(angle_tol_deg > 0.0 && angle_tol_deg <= 90.0)) throw InputError("directional_semivariogram: tolerance must be in (0, 90]");
  const std::size_t nb = edges.size() - 1;
  std::vector<std::vector<double>> sums(angles_deg.size(), std::vector<double>(nb, 0.0));
  std::vector<std::vector<std::size_t>> counts(angles_deg.size(), std::vector<std::size_t>(nb, 0));
  const Eigen::Index n = data.locs.size();
  const auto& x = data.locs.coords;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double dx = x(j, 0) - x(i, 0);
      const double dy = x(j, 1) - x(i, 1);
      const auto bin = detail::find_bin(edges, std::hypot(dx, dy));
      if (!bin) continue;
      double theta = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
      theta = std::fmod(theta + 360.0, 180.0);
      const double dz = data.z(j) - data.z(i);
      for (std::size_t a = 0; a < angles_deg.size(); ++a) {
        double diff = std::fmod(theta - angles_deg[a], 180.0);
        if (diff < -90.0) diff += 180.0;
        if (diff >= 90.0) diff -= 180.0;
        if (diff >= -angle_tol_deg && diff < angle_tol_deg) {
          sums[a][*bin] += dz * dz;
          ++counts[a][*bin];
        }
      }
    }
  }
  std::vector<SemivariogramCurve> out;
  for (std::size_t a = 0; a < angles_deg.size(); ++a) {
    out.push_back(detail::finish_curve(angles_deg[a], edges, sums[a], counts[a]));
  }
  return out;
}

}  // namespace chgp
