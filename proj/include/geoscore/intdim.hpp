#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "geoscore/matrix.hpp"

namespace geoscore::intdim {

inline constexpr double kDedupEps = 1e-10;
inline constexpr std::size_t kDefaultK = 10;
inline constexpr double kJitterScale = 1e-8;

// Default correlation-integral grid: 16 log-spaced radii between these
// percentiles of (a deterministic subsample of) the pairwise distances.
inline constexpr std::size_t kCorrIntRadii = 16;
inline constexpr double kCorrIntLowPercentile = 0.1;
inline constexpr double kCorrIntHighPercentile = 5.0;
inline constexpr std::size_t kCorrIntSamplePairs = 10000;

// Sorted ascending k-nearest-neighbour distances, self excluded. Row i holds
// T_1(x_i) <= ... <= T_k(x_i), all > 0.
class NeighborTable {
 public:
  NeighborTable(Matrix distances);

  const Matrix& distances() const { return distances_; }
  std::size_t n_points() const { return static_cast<std::size_t>(distances_.rows()); }
  std::size_t k() const { return static_cast<std::size_t>(distances_.cols()); }
  // 1-based neighbour rank, as in T_j.
  double radius(std::size_t point, std::size_t j) const {
    return distances_(static_cast<Eigen::Index>(point), static_cast<Eigen::Index>(j - 1));
  }

 private:
  Matrix distances_;
};

enum class Estimator { kMle, kMom, kMada, kCorrInt };
std::string_view to_string(Estimator e);

struct IdEstimate {
  double value;
  Estimator estimator;
  // k for the neighbour estimators, the radius grid actually fitted for CorrInt.
  std::size_t k = 0;
  std::vector<double> radii;
};

// Exact brute-force kNN. ParameterError if k < 1 or k >= n; DegenerateError
// listing the offending pairs if two rows are within dedup_eps.
NeighborTable knn_distances(const MatrixView& x, std::size_t k, double dedup_eps = kDedupEps);

// Levina-Bickel: local inverse mean log-ratio over j < k, aggregated as the
// inverse of the mean inverse. Needs k >= 3.
IdEstimate id_mle(const NeighborTable& table);

// First-moment estimator: m1 = mean_{j<k} T_j/T_k, local m1/(1-m1), global mean.
IdEstimate id_mom(const NeighborTable& table);

// Two-scale ratio ln 2 / ln(T_k / T_ceil(k/2)), median over points. Points with
// equal radii are skipped.
IdEstimate id_mada(const NeighborTable& table);

// Grassberger-Procaccia correlation dimension: least-squares slope of ln C(r)
// against ln r over the radii with 0 < C(r) < 1. Needs n >= 20.
IdEstimate id_corrint(const MatrixView& x, std::optional<std::vector<double>> radii = std::nullopt);

// Radius grid id_corrint uses when none is given.
std::vector<double> default_corrint_radii(const MatrixView& x);

// Adds seeded uniform noise in [-scale, scale] to every entry, for corpora
// where repeated token vectors are expected.
Matrix jitter(const MatrixView& x, std::uint64_t seed, double scale = kJitterScale);

}  // namespace geoscore::intdim
