#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "geoscore/matrix.hpp"

namespace geoscore::mauve {

inline constexpr std::size_t kDefaultLambdaGrid = 99;
inline constexpr std::size_t kMaxClusters = 500;
inline constexpr int kKMeansMaxIterations = 100;
inline constexpr double kKMeansTolerance = 1e-6;

// Smoothed cluster-occupancy histograms of two clouds over a shared codebook.
struct QuantizedPair {
  std::vector<double> p_hist;
  std::vector<double> q_hist;
  std::size_t clusters = 0;
  std::uint64_t seed = 0;
};

// Throws ParameterError unless both histograms have equal non-zero length,
// non-negative entries, and sum to 1 within 1e-12.
void validate(const QuantizedPair& pair);

// min(floor(total_points / 10), kMaxClusters), at least 1.
std::size_t default_clusters(std::size_t total_points);

struct KMeansResult {
  Matrix centers;
  std::vector<std::size_t> assignment;
  int iterations = 0;
};

// Lloyd's algorithm with D^2-weighted seeding. Assignment ties go to the
// lowest cluster index; empty clusters keep their previous centre.
KMeansResult kmeans(const MatrixView& points, std::size_t clusters, std::uint64_t seed,
                    int max_iterations = kKMeansMaxIterations, double tolerance = kKMeansTolerance);

// Joint k-means over the stacked clouds, per-cloud histograms of the
// assignments, each bin raised by 1/(10 K N_total) and renormalised.
QuantizedPair quantize(const MatrixView& p_points, const MatrixView& q_points, std::size_t clusters,
                       std::uint64_t seed);

// sum p_i ln(p_i / q_i) with 0 ln(0/q) = 0. DegenerateError if some q_i = 0
// where p_i > 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// 1 - min over lambda_i = i/(grid+1), i = 1..grid, of
//   lambda KL(P || R) + (1 - lambda) KL(Q || R),  R = lambda P + (1 - lambda) Q,
// clamped to [0, 1].
double mauve_score(const QuantizedPair& pair, std::size_t lambda_grid = kDefaultLambdaGrid);

}  // namespace geoscore::mauve
