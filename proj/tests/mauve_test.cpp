#include "geoscore/mauve.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "geoscore/error.hpp"
#include "support/synthetic.hpp"

namespace geoscore::mauve {
namespace {

using geoscore::testing::gaussian;

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

QuantizedPair pair_of(std::vector<double> p, std::vector<double> q) {
  QuantizedPair out;
  out.clusters = p.size();
  out.p_hist = std::move(p);
  out.q_hist = std::move(q);
  return out;
}

std::vector<double> random_hist(std::size_t k, Rng& rng) {
  std::vector<double> h(k);
  for (auto& v : h) v = rng.uniform() + 1e-3;
  const double s = sum(h);
  for (auto& v : h) v /= s;
  return h;
}

TEST(Quantize, IdenticalCloudsGiveEqualHistograms) {
  Rng rng(1);
  const Matrix x = gaussian(80, 4, rng);
  const auto pair = quantize(x, x, 6, 42);
  EXPECT_EQ(pair.p_hist, pair.q_hist);
  EXPECT_DOUBLE_EQ(mauve_score(pair), 1.0);
}

TEST(Quantize, SingleClusterIsUnit) {
  Rng rng(2);
  const auto pair = quantize(gaussian(10, 3, rng), gaussian(15, 3, rng), 1, 3);
  EXPECT_EQ(pair.p_hist, std::vector<double>{1.0});
  EXPECT_EQ(pair.q_hist, std::vector<double>{1.0});
}

TEST(Quantize, SeparatedBlobsLandInOwnClusters) {
  Rng rng(3);
  Matrix p = gaussian(200, 5, rng), q = gaussian(200, 5, rng);
  p.col(0).array() += 50.0;
  q.col(0).array() -= 50.0;
  const auto pair = quantize(p, q, 2, 17);
  const double p_top = std::max(pair.p_hist[0], pair.p_hist[1]);
  const double q_top = std::max(pair.q_hist[0], pair.q_hist[1]);
  EXPECT_GE(p_top, 0.99);
  EXPECT_GE(q_top, 0.99);
  // Different clusters.
  EXPECT_NE(pair.p_hist[0] > 0.5, pair.q_hist[0] > 0.5);
}

TEST(Quantize, HistogramsAreNormalizedAndSmoothed) {
  Rng rng(4);
  Matrix p = gaussian(50, 3, rng), q = gaussian(70, 3, rng);
  q.array() += 4.0;
  const auto pair = quantize(p, q, 10, 5);
  EXPECT_NEAR(sum(pair.p_hist), 1.0, 1e-12);
  EXPECT_NEAR(sum(pair.q_hist), 1.0, 1e-12);
  for (double v : pair.p_hist) EXPECT_GT(v, 0.0);
  for (double v : pair.q_hist) EXPECT_GT(v, 0.0);
}

TEST(Quantize, SmoothingMassMatchesFormula) {
  // Far-apart clouds with K=2: each bin is (count/N + e)/(1 + K e) with
  // e = 1/(10 K N_total).
  Matrix p = Matrix::Zero(3, 1), q = Matrix::Zero(5, 1);
  p.col(0) << 0.0, 0.1, 0.2;
  q.col(0) << 100.0, 100.1, 100.2, 100.3, 100.4;
  const auto pair = quantize(p, q, 2, 9);
  const double e = 1.0 / (10.0 * 2 * 8);
  const double p_small = e / (1 + 2 * e);
  const double p_big = (1 + e) / (1 + 2 * e);
  EXPECT_NEAR(std::min(pair.p_hist[0], pair.p_hist[1]), p_small, 1e-15);
  EXPECT_NEAR(std::max(pair.p_hist[0], pair.p_hist[1]), p_big, 1e-15);
}

TEST(Quantize, SeedReproducible) {
  Rng rng(6);
  const Matrix p = gaussian(120, 6, rng), q = gaussian(90, 6, rng);
  const auto a = quantize(p, q, 12, 1234), b = quantize(p, q, 12, 1234);
  EXPECT_EQ(a.p_hist, b.p_hist);
  EXPECT_EQ(a.q_hist, b.q_hist);
}

TEST(Quantize, Errors) {
  Rng rng(7);
  EXPECT_THROW(quantize(gaussian(5, 3, rng), gaussian(5, 4, rng), 2, 1), ParameterError);
  EXPECT_THROW(quantize(gaussian(5, 3, rng), gaussian(5, 3, rng), 11, 1), ParameterError);
  EXPECT_THROW(quantize(gaussian(5, 3, rng), gaussian(5, 3, rng), 0, 1), ParameterError);
}

TEST(KMeans, TiesAndConvergence) {
  Matrix x(4, 1);
  x << 0, 0.1, 10, 10.1;
  const auto r = kmeans(x, 2, 5);
  EXPECT_EQ(r.assignment[0], r.assignment[1]);
  EXPECT_EQ(r.assignment[2], r.assignment[3]);
  EXPECT_NE(r.assignment[0], r.assignment[2]);
  EXPECT_LE(r.iterations, kKMeansMaxIterations);
}

TEST(KMeans, DuplicatePointsWithMoreClustersThanDistinct) {
  Matrix x = Matrix::Zero(6, 2);
  x.row(5) << 1, 1;
  EXPECT_NO_THROW(kmeans(x, 4, 1));
}

TEST(DefaultClusters, ScalesAndCaps) {
  EXPECT_EQ(default_clusters(5), 1u);
  EXPECT_EQ(default_clusters(100), 10u);
  EXPECT_EQ(default_clusters(109), 10u);
  EXPECT_EQ(default_clusters(1000000), kMaxClusters);
}

TEST(Kl, Examples) {
  const std::vector<double> p{0.2, 0.3, 0.5};
  EXPECT_DOUBLE_EQ(kl_divergence(p, p), 0.0);
  EXPECT_NEAR(kl_divergence(std::vector<double>{1, 0}, std::vector<double>{0.5, 0.5}), std::numbers::ln2, 1e-15);
  EXPECT_THROW(kl_divergence(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0}), DegenerateError);
}

TEST(Kl, GibbsNonNegative) {
  Rng rng(10);
  for (int t = 0; t < 100; ++t) {
    const auto k = 2 + rng.below(20);
    EXPECT_GE(kl_divergence(random_hist(k, rng), random_hist(k, rng)), 0.0);
  }
}

TEST(Score, IdentityIsExactlyOne) {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const auto h = random_hist(2 + rng.below(30), rng);
    EXPECT_EQ(mauve_score(pair_of(h, h)), 1.0);
  }
}

TEST(Score, SwapIsExact) {
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const auto k = 2 + rng.below(30);
    const auto p = random_hist(k, rng), q = random_hist(k, rng);
    for (std::size_t grid : {3u, 10u, 99u}) EXPECT_EQ(mauve_score(pair_of(p, q), grid), mauve_score(pair_of(q, p), grid));
  }
}

TEST(Score, NearDisjointMatchesBruteForce) {
  const std::vector<double> p{0.999, 0.001}, q{0.001, 0.999};
  const double got = mauve_score(pair_of(p, q), 99);
  EXPECT_NEAR(got, geoscore::testing::oracle_mauve(p, q, 99), 1e-12);
  EXPECT_GE(got, 0.0);
  EXPECT_LT(got, 1.0);
}

TEST(Score, RangeAndBruteForceOnRandomPairs) {
  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const auto k = 2 + rng.below(30);
    const auto p = random_hist(k, rng), q = random_hist(k, rng);
    const double s = mauve_score(pair_of(p, q));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_NEAR(s, geoscore::testing::oracle_mauve(p, q, 99), 1e-12);
  }
}

TEST(Score, GridRefinementNeverRaisesTheMinimum) {
  // Grid G' = 2G + 1 contains every point of grid G.
  Rng rng(14);
  for (int t = 0; t < 50; ++t) {
    const auto k = 2 + rng.below(10);
    const auto pair = pair_of(random_hist(k, rng), random_hist(k, rng));
    std::size_t g = 3;
    double prev = mauve_score(pair, g);
    for (int step = 0; step < 4; ++step) {
      g = 2 * g + 1;
      const double cur = mauve_score(pair, g);
      EXPECT_GE(cur, prev - 1e-15);
      prev = cur;
    }
  }
}

TEST(Score, RejectsBadInput) {
  EXPECT_THROW(mauve_score(pair_of({0.5, 0.5}, {0.5, 0.5}), 2), ParameterError);
  EXPECT_THROW(mauve_score(pair_of({0.5, 0.6}, {0.5, 0.5})), ParameterError);
  EXPECT_THROW(mauve_score(pair_of({1.0}, {0.5, 0.5})), ParameterError);
}

}  // namespace
}  // namespace geoscore::mauve
