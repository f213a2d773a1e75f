#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "chgp/design.hpp"
#include "chgp/simulate.hpp"

using namespace chgp;

namespace {

Locations planar(std::initializer_list<std::pair<double, double>> pts) {
  Locations l;
  l.coords.resize(static_cast<Eigen::Index>(pts.size()), 2);
  Eigen::Index i = 0;
  for (const auto& [x, y] : pts) {
    l.coords(i, 0) = x;
    l.coords(i, 1) = y;
    ++i;
  }
  return l;
}

Locations spherical(Metric m, std::initializer_list<std::pair<double, double>> pts, double radius = 6371.0) {
  Locations l = planar(pts);
  l.metric = m;
  l.radius = radius;
  return l;
}

Locations random_points(int n, int d, std::uint64_t seed, double lo, double hi) {
  NormalSource src(make_stream(seed, 0));
  Locations l;
  l.coords.resize(n, d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) l.coords(i, k) = lo + (hi - lo) * src.uniform();
  }
  return l;
}

}  // namespace

TEST(Locations, Validation) {
  Locations empty;
  empty.coords.resize(0, 2);
  EXPECT_THROW(validate(empty), InputError);

  Locations four_d;
  four_d.coords = Eigen::MatrixXd::Zero(3, 4);
  EXPECT_THROW(validate(four_d), InputError);

  Locations nan_pt = planar({{0, 0}, {NAN, 1}});
  EXPECT_THROW(validate(nan_pt), InputError);

  EXPECT_THROW(validate(spherical(Metric::chordal, {{0, 91}})), InputError);
  EXPECT_THROW(validate(spherical(Metric::great_circle, {{181, 0}})), InputError);
  EXPECT_NO_THROW(validate(spherical(Metric::chordal, {{-180, -90}, {180, 90}})));

  Locations three_col;
  three_col.coords = Eigen::MatrixXd::Zero(2, 3);
  three_col.metric = Metric::chordal;
  EXPECT_THROW(validate(three_col), InputError);

  EXPECT_THROW(validate(spherical(Metric::chordal, {{0, 0}}, 0.0)), InputError);
}

TEST(Locations, MetricNames) {
  for (Metric m : {Metric::euclidean, Metric::chordal, Metric::great_circle}) {
    EXPECT_EQ(metric_from_string(to_string(m)), m);
  }
  EXPECT_THROW(metric_from_string("manhattan"), InputError);
}

TEST(PairwiseDist, Examples) {
  const auto same = pairwise_dist(planar({{1.5, -2}, {1.5, -2}}));
  EXPECT_EQ(same(0, 1), 0.0);

  const auto d = pairwise_dist(planar({{0, 0}, {3, 4}}));
  EXPECT_NEAR(d(0, 1), 5.0, 1e-15);
  EXPECT_EQ(d(0, 0), 0.0);

  const auto c = pairwise_dist(spherical(Metric::chordal, {{0, 0}, {180, 0}}));
  EXPECT_NEAR(c(0, 1), 12742.0, 1e-9);
  const auto poles = pairwise_dist(spherical(Metric::chordal, {{10, 90}, {-70, -90}}));
  EXPECT_NEAR(poles(0, 1), 12742.0, 1e-9);
}

TEST(PairwiseDist, SphericalMetrics) {
  // quarter circle along the equator
  const auto locs = {std::pair{0.0, 0.0}, std::pair{90.0, 0.0}};
  const double r = 6371.0;
  const auto gc = pairwise_dist(spherical(Metric::great_circle, locs, r));
  const auto ch = pairwise_dist(spherical(Metric::chordal, locs, r));
  EXPECT_NEAR(gc(0, 1), r * std::numbers::pi / 2, 1e-9);
  EXPECT_NEAR(ch(0, 1), r * std::sqrt(2.0), 1e-9);

  // chordal equals the 3-D Euclidean distance between embedded points
  auto embed = [&](double lon, double lat) {
    const double k = std::numbers::pi / 180.0;
    return Eigen::Vector3d(r * std::cos(lat * k) * std::cos(lon * k), r * std::cos(lat * k) * std::sin(lon * k),
                           r * std::sin(lat * k));
  };
  const auto sph = spherical(Metric::chordal, {{-122.3, 47.6}, {151.2, -33.9}, {2.35, 48.86}}, r);
  const auto dm = pairwise_dist(sph);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double expect = (embed(sph.coords(i, 0), sph.coords(i, 1)) - embed(sph.coords(j, 0), sph.coords(j, 1))).norm();
      EXPECT_NEAR(dm(i, j), expect, 1e-8);
    }
  }
}

TEST(PairwiseDist, MetricInvariants) {
  std::vector<Locations> sets;
  sets.push_back(random_points(25, 1, 11, -5, 5));
  sets.push_back(random_points(25, 2, 12, 0, 100));
  sets.push_back(random_points(25, 3, 13, 0, 1));
  for (Metric m : {Metric::chordal, Metric::great_circle}) {
    Locations s = random_points(25, 2, 14, 0, 1);
    s.coords.col(0) = (s.coords.col(0).array() * 360.0 - 180.0).matrix();
    s.coords.col(1) = (s.coords.col(1).array() * 180.0 - 90.0).matrix();
    s.metric = m;
    sets.push_back(s);
  }
  for (const auto& s : sets) {
    const auto d = pairwise_dist(s);
    const auto n = d.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      EXPECT_EQ(d(i, i), 0.0);
      for (Eigen::Index j = 0; j < n; ++j) {
        EXPECT_EQ(d(i, j), d(j, i));
        EXPECT_GE(d(i, j), 0.0);
        for (Eigen::Index k = 0; k < n; ++k) EXPECT_LE(d(i, j), d(i, k) + d(k, j) + 1e-9 * (1.0 + d(i, j)));
      }
    }
  }
}

TEST(CrossDist, MatchesPairwiseAndRejectsMismatch) {
  const auto a = random_points(6, 2, 3, 0, 10);
  const auto b = random_points(4, 2, 4, 0, 10);
  const auto x = cross_dist(a, b);
  ASSERT_EQ(x.rows(), 6);
  ASSERT_EQ(x.cols(), 4);
  Locations both;
  both.coords.resize(10, 2);
  both.coords << a.coords, b.coords;
  const auto p = pairwise_dist(both);
  EXPECT_TRUE(x.isApprox(p.block(0, 6, 6, 4), 1e-15));

  Locations c = b;
  c.metric = Metric::chordal;
  c.coords = Eigen::MatrixXd::Zero(4, 2);
  EXPECT_THROW(cross_dist(a, c), InputError);
  EXPECT_THROW(cross_dist(a, random_points(3, 3, 5, 0, 1)), InputError);
}

TEST(RegularGrid, Examples) {
  const auto corners = regular_grid({{0, 1}, {0, 1}}, {2, 2});
  ASSERT_EQ(corners.size(), 4);
  std::set<std::pair<double, double>> got;
  for (int i = 0; i < 4; ++i) got.insert({corners.coords(i, 0), corners.coords(i, 1)});
  EXPECT_EQ(got, (std::set<std::pair<double, double>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}}));

  const auto g = regular_grid({{0, 2000}, {0, 2000}}, {10, 10});
  ASSERT_EQ(g.size(), 100);
  EXPECT_NEAR(g.coords(1, 0) - g.coords(0, 0), 2000.0 / 9.0, 1e-12);
  EXPECT_NEAR(g.coords(10, 1) - g.coords(0, 1), 2000.0 / 9.0, 1e-12);
  EXPECT_EQ(g.coords.col(0).maxCoeff(), 2000.0);
  EXPECT_EQ(g.coords.col(1).minCoeff(), 0.0);
  const auto d = pairwise_dist(g);
  double nearest = INFINITY;
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 100; ++j) {
      if (i != j) nearest = std::min(nearest, d(i, j));
    }
  }
  EXPECT_NEAR(nearest, 2000.0 / 9.0, 1e-9);

  const auto line = regular_grid({{0, 2}}, {3});
  ASSERT_EQ(line.size(), 3);
  EXPECT_EQ(line.coords(0, 0), 0.0);
  EXPECT_EQ(line.coords(1, 0), 1.0);
  EXPECT_EQ(line.coords(2, 0), 2.0);

  EXPECT_EQ(regular_grid({{0, 1}, {0, 1}, {0, 1}}, {2, 3, 4}).size(), 24);
}

TEST(RegularGrid, Errors) {
  EXPECT_THROW(regular_grid({{0, 1}}, {1}), InputError);
  EXPECT_THROW(regular_grid({{0, 1}, {0, 1}}, {3}), InputError);
  EXPECT_THROW(regular_grid({{1, 0}}, {3}), InputError);
  EXPECT_THROW(regular_grid({}, {}), InputError);
}

TEST(MaximinLhs, TwoPointsSplitTheInterval) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto l = maximin_lhs(2, {{0, 1}}, seed);
    const double a = std::min(l.coords(0, 0), l.coords(1, 0));
    const double b = std::max(l.coords(0, 0), l.coords(1, 0));
    EXPECT_GE(a, 0.0);
    EXPECT_LT(a, 0.5);
    EXPECT_GE(b, 0.5);
    EXPECT_LE(b, 1.0);
  }
}

TEST(MaximinLhs, Deterministic) {
  const auto a = maximin_lhs(30, {{0, 1}, {-3, 3}}, 42);
  const auto b = maximin_lhs(30, {{0, 1}, {-3, 3}}, 42);
  EXPECT_EQ(a.coords, b.coords);
  const auto c = maximin_lhs(30, {{0, 1}, {-3, 3}}, 43);
  EXPECT_NE(a.coords, c.coords);
}

TEST(MaximinLhs, BeatsPlainLhs) {
  auto min_dist = [](const Locations& l) {
    const auto d = pairwise_dist(l);
    double m = INFINITY;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < d.rows(); ++j) m = std::min(m, d(i, j));
    }
    return m;
  };
  for (std::uint64_t seed : {1u, 2u, 3u, 2026u}) {
    const auto best = maximin_lhs(50, {{0, 1}, {0, 1}}, seed);
    const auto plain = latin_hypercube(50, {{0, 1}, {0, 1}}, seed);
    EXPECT_GE(min_dist(best), min_dist(plain));
  }
  // a single candidate is the plain draw
  EXPECT_EQ(maximin_lhs(20, {{0, 1}, {0, 1}}, 9, 1).coords, latin_hypercube(20, {{0, 1}, {0, 1}}, 9).coords);
}

TEST(MaximinLhs, EveryStratumHitOnce) {
  const Bounds b{{0, 2000}, {-1, 1}, {10, 11}};
  for (int n : {2, 7, 50}) {
    const auto l = maximin_lhs(n, b, 77);
    ASSERT_EQ(l.size(), n);
    for (int k = 0; k < 3; ++k) {
      std::vector<int> hits(n, 0);
      for (int i = 0; i < n; ++i) {
        const double u = (l.coords(i, k) - b[k].first) / (b[k].second - b[k].first);
        ASSERT_GE(u, 0.0);
        ASSERT_LE(u, 1.0);
        ++hits[std::min(n - 1, static_cast<int>(std::floor(u * n)))];
      }
      for (int h : hits) EXPECT_EQ(h, 1);
    }
  }
}

TEST(MaximinLhs, Errors) {
  EXPECT_THROW(maximin_lhs(1, {{0, 1}}, 1), InputError);
  EXPECT_THROW(maximin_lhs(5, {{0, 1}}, 1, 0), InputError);
  EXPECT_THROW(maximin_lhs(5, {{0, 0}}, 1), InputError);
  EXPECT_THROW(latin_hypercube(0, {{0, 1}}, 1), InputError);
}

TEST(Semivariogram, ConstantFieldIsZero) {
  Dataset data{random_points(60, 2, 5, 0, 10), Eigen::VectorXd::Constant(60, 3.25)};
  const std::vector<double> edges{0, 2, 4, 6, 8};
  for (const auto& c : directional_semivariogram(data, {0, 45, 90, 135}, 22.5, edges)) {
    for (const auto& b : c.bins) {
      if (b.gamma) {
        EXPECT_EQ(*b.gamma, 0.0);
      }
    }
  }
  for (const auto& b : omnidirectional_semivariogram(data, edges).bins) {
    ASSERT_TRUE(b.gamma.has_value());
    EXPECT_EQ(*b.gamma, 0.0);
  }
}

TEST(Semivariogram, WhiteNoiseLevel) {
  const double tau2 = 2.5;
  const auto locs = random_points(1000, 2, 21, 0, 100);
  NormalSource src(make_stream(22, 0));
  Eigen::VectorXd z(1000);
  for (int i = 0; i < 1000; ++i) z(i) = std::sqrt(tau2) * src.normal();
  Dataset data{locs, z};
  const std::vector<double> edges{0.5, 10, 20, 30, 40, 50};
  for (const auto& c : directional_semivariogram(data, {0, 45, 90, 135}, 22.5, edges)) {
    for (const auto& b : c.bins) {
      ASSERT_TRUE(b.gamma.has_value());
      EXPECT_NEAR(*b.gamma / tau2, 1.0, 0.10) << "angle " << *c.angle_deg << " bin " << b.lo;
    }
  }
  for (const auto& b : omnidirectional_semivariogram(data, edges).bins) EXPECT_NEAR(*b.gamma / tau2, 1.0, 0.10);
}

TEST(Semivariogram, IsotropicFieldHasNoDirectionalEffect) {
  const auto locs = random_points(400, 2, 31, 0, 100);
  GPModel model;
  model.kernel = MaternParams{0.5, 20.0, 1.0};
  const Eigen::MatrixXd z = sample_gp(model, locs, 20, 32);
  const std::vector<double> edges{5, 10, 15, 20};
  const std::vector<double> angles{0, 45, 90, 135};
  // average over replicates to tame sampling noise of single realizations
  std::vector<std::vector<double>> dir(angles.size(), std::vector<double>(3, 0.0));
  std::vector<double> omni(3, 0.0);
  for (int r = 0; r < z.rows(); ++r) {
    Dataset data{locs, z.row(r).transpose()};
    const auto curves = directional_semivariogram(data, angles, 22.5, edges);
    const auto all = omnidirectional_semivariogram(data, edges);
    for (std::size_t a = 0; a < angles.size(); ++a) {
      for (int k = 0; k < 3; ++k) dir[a][k] += *curves[a].bins[k].gamma;
    }
    for (int k = 0; k < 3; ++k) omni[k] += *all.bins[k].gamma;
  }
  for (std::size_t a = 0; a < angles.size(); ++a) {
    for (int k = 0; k < 3; ++k) EXPECT_LT(std::fabs(dir[a][k] / omni[k] - 1.0), 0.15) << angles[a] << " " << k;
  }
}

TEST(Semivariogram, EmptyBinsAreMissing) {
  Dataset data{planar({{0, 0}, {1, 0}, {0, 3}}), Eigen::Vector3d(0, 1, 2)};
  const auto omni = omnidirectional_semivariogram(data, {0, 1.5, 2, 5});
  ASSERT_EQ(omni.bins.size(), 3u);
  EXPECT_EQ(omni.bins[0].pairs, 1u);
  EXPECT_DOUBLE_EQ(*omni.bins[0].gamma, 0.5);
  EXPECT_FALSE(omni.bins[1].gamma.has_value());
  EXPECT_EQ(omni.bins[1].pairs, 0u);
  EXPECT_EQ(omni.bins[2].pairs, 2u);
  EXPECT_DOUBLE_EQ(*omni.bins[2].gamma, (4.0 + 1.0) / 4.0);
  EXPECT_FALSE(omni.angle_deg.has_value());
}

TEST(Semivariogram, SectorsAreHalfOpenModulo180) {
  // pair directions: 0, 90, 45 and -45 (== 135) degrees
  Dataset data{planar({{0, 0}, {1, 0}, {0, 1}, {1, 1}, {2, -1}}), Eigen::VectorXd::Zero(5)};
  data.z << 0, 1, 2, 3, 4;
  const std::vector<double> edges{0, 10};
  const auto c = directional_semivariogram(data, {0, 45, 90, 135}, 22.5, edges);
  std::size_t total = 0;
  for (const auto& curve : c) total += curve.bins[0].pairs;
  EXPECT_EQ(total, 10u);  // every pair lands in exactly one sector

  // a direction exactly on a sector boundary goes to the sector above it
  Dataset edge{planar({{0, 0}, {std::cos(std::numbers::pi / 8), std::sin(std::numbers::pi / 8)}}), Eigen::Vector2d(0, 1)};
  const auto e = directional_semivariogram(edge, {0, 45}, 22.5, edges);
  EXPECT_EQ(e[0].bins[0].pairs + e[1].bins[0].pairs, 1u);

  // s_j - s_i pointing at 180 degrees is the same sector as 0
  Dataset back{planar({{1, 0}, {0, 0}}), Eigen::Vector2d(0, 2)};
  const auto b = directional_semivariogram(back, {0, 90}, 22.5, edges);
  EXPECT_EQ(b[0].bins[0].pairs, 1u);
  EXPECT_DOUBLE_EQ(*b[0].bins[0].gamma, 2.0);
  EXPECT_FALSE(b[1].bins[0].gamma.has_value());

  // 170 degrees sits within 22.5 of 0 after wrapping
  Dataset wrap{planar({{0, 0}, {-1, std::tan(10.0 * std::numbers::pi / 180.0)}}), Eigen::Vector2d(0, 1)};
  EXPECT_EQ(directional_semivariogram(wrap, {0}, 22.5, edges)[0].bins[0].pairs, 1u);
}

TEST(Semivariogram, Errors) {
  Dataset data{planar({{0, 0}, {1, 0}}), Eigen::Vector2d(0, 1)};
  EXPECT_THROW(omnidirectional_semivariogram(data, {1}), InputError);
  EXPECT_THROW(omnidirectional_semivariogram(data, {2, 1}), InputError);
  EXPECT_THROW(directional_semivariogram(data, {0}, 0.0, {0, 1}), InputError);
  Dataset line{random_points(5, 1, 1, 0, 1), Eigen::VectorXd::Zero(5)};
  EXPECT_THROW(directional_semivariogram(line, {0}, 10, {0, 1}), InputError);
  Dataset bad{planar({{0, 0}, {1, 0}}), Eigen::Vector3d(0, 1, 2)};
  EXPECT_THROW(omnidirectional_semivariogram(bad, {0, 1}), InputError);
}
