#include "geoscore/intdim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "geoscore/error.hpp"
#include "geoscore/random.hpp"

namespace geoscore::intdim {

namespace {

double distance(const MatrixView& x, Eigen::Index i, Eigen::Index j) {
  return (x.row(i) - x.row(j)).norm();
}

void require_finite(const MatrixView& x, const char* what) {
  if (x.rows() < 1 || x.cols() < 1) throw ParameterError(fmt::format("{}: empty matrix", what));
  if (!x.allFinite()) throw ParameterError(fmt::format("{}: matrix has non-finite entries", what));
}

// Upper-triangle pairwise distances in (i, j>i) lexicographic order.
std::vector<double> pairwise_distances(const MatrixView& x) {
  const Eigen::Index n = x.rows();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) out.push_back(distance(x, i, j));
  }
  return out;
}

// Nearest-rank percentile of an unsorted sample (copied).
double percentile(std::vector<double> sample, double pct) {
  const std::size_t n = sample.size();
  auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(rank - 1), sample.end());
  return sample[rank - 1];
}

void require_k(const NeighborTable& t, std::size_t min_k, const char* what) {
  if (t.k() < min_k) throw ParameterError(fmt::format("{} needs k >= {}, got {}", what, min_k, t.k()));
}

}  // namespace

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::kMle: return "MLE";
    case Estimator::kMom: return "MOM";
    case Estimator::kMada: return "MADA";
    case Estimator::kCorrInt: return "CorrInt";
  }
  return "?";
}

NeighborTable::NeighborTable(Matrix distances) : distances_(std::move(distances)) {
  if (distances_.rows() < 2 || distances_.cols() < 1) throw ParameterError("neighbor table is empty");
  if (distances_.cols() >= distances_.rows()) throw ParameterError("neighbor table needs k < n");
  for (Eigen::Index i = 0; i < distances_.rows(); ++i) {
    for (Eigen::Index j = 0; j < distances_.cols(); ++j) {
      const double d = distances_(i, j);
      if (!(d > 0.0) || !std::isfinite(d)) {
        throw ParameterError(fmt::format("neighbor distance ({}, {}) = {} must be positive", i, j, d));
      }
      if (j > 0 && d < distances_(i, j - 1)) {
        throw ParameterError(fmt::format("neighbor row {} is not sorted", i));
      }
    }
  }
}

NeighborTable knn_distances(const MatrixView& x, std::size_t k, double dedup_eps) {
  require_finite(x, "knn_distances");
  const auto n = static_cast<std::size_t>(x.rows());
  if (k < 1 || k >= n) throw ParameterError(fmt::format("knn needs 1 <= k < n, got k={} n={}", k, n));

  // Full symmetric distance matrix; n is at most a few thousand tokens.
  Matrix all(n, n);
  std::vector<std::pair<std::size_t, std::size_t>> duplicates;
  for (std::size_t i = 0; i < n; ++i) {
    all(i, i) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = distance(x, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      all(i, j) = all(j, i) = d;
      if (d <= dedup_eps) duplicates.emplace_back(i, j);
    }
  }
  if (!duplicates.empty()) {
    std::string listed;
    const std::size_t shown = std::min<std::size_t>(duplicates.size(), 10);
    for (std::size_t p = 0; p < shown; ++p) {
      listed += fmt::format("{}({}, {})", p ? ", " : "", duplicates[p].first, duplicates[p].second);
    }
    if (duplicates.size() > shown) listed += fmt::format(", ... {} pairs total", duplicates.size());
    throw DegenerateError("duplicate points within dedup_eps: " + listed);
  }

  Matrix out(n, k);
  std::vector<double> row(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row[m++] = all(i, j);
    }
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
    for (std::size_t j = 0; j < k; ++j) out(i, j) = row[j];
  }
  return NeighborTable(std::move(out));
}

IdEstimate id_mle(const NeighborTable& table) {
  require_k(table, 3, "MLE");
  const std::size_t k = table.k();
  double sum_inverse = 0.0;
  for (std::size_t i = 0; i < table.n_points(); ++i) {
    const double tk = table.radius(i, k);
    double acc = 0.0;
    for (std::size_t j = 1; j < k; ++j) acc += std::log(tk / table.radius(i, j));
    const double inverse = acc / static_cast<double>(k - 1);
    if (inverse <= 0.0) {
      throw DegenerateError(fmt::format("MLE: point {} has all {} neighbours at one radius", i, k));
    }
    sum_inverse += inverse;
  }
  return {static_cast<double>(table.n_points()) / sum_inverse, Estimator::kMle, k, {}};
}

IdEstimate id_mom(const NeighborTable& table) {
  require_k(table, 2, "MOM");
  const std::size_t k = table.k();
  double total = 0.0;
  for (std::size_t i = 0; i < table.n_points(); ++i) {
    const double tk = table.radius(i, k);
    double m1 = 0.0;
    for (std::size_t j = 1; j < k; ++j) m1 += table.radius(i, j) / tk;
    m1 /= static_cast<double>(k - 1);
    if (m1 >= 1.0) {
      throw DegenerateError(fmt::format("MOM: point {} has all {} neighbours at one radius", i, k));
    }
    total += m1 / (1.0 - m1);
  }
  return {total / static_cast<double>(table.n_points()), Estimator::kMom, k, {}};
}

IdEstimate id_mada(const NeighborTable& table) {
  require_k(table, 2, "MADA");
  const std::size_t k = table.k();
  const std::size_t half = (k + 1) / 2;
  std::vector<double> local;
  local.reserve(table.n_points());
  for (std::size_t i = 0; i < table.n_points(); ++i) {
    const double ratio = table.radius(i, k) / table.radius(i, half);
    if (ratio > 1.0) local.push_back(std::log(2.0) / std::log(ratio));
  }
  if (local.empty()) throw DegenerateError("MADA: every local estimate is degenerate");
  const std::size_t mid = local.size() / 2;
  std::nth_element(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(mid), local.end());
  double median = local[mid];
  if (local.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return {median, Estimator::kMada, k, {}};
}

std::vector<double> default_corrint_radii(const MatrixView& x) {
  const Eigen::Index n = x.rows();
  const auto total = static_cast<std::size_t>(n * (n - 1) / 2);
  if (total == 0) throw ParameterError("correlation integral needs at least two points");

  // Deterministic stride over the lexicographic pair order.
  std::vector<double> sample;
  const std::size_t take = std::min(total, kCorrIntSamplePairs);
  sample.reserve(take);
  std::size_t next = 0, idx = 0, taken = 0;
  for (Eigen::Index i = 0; i < n && taken < take; ++i) {
    for (Eigen::Index j = i + 1; j < n && taken < take; ++j, ++idx) {
      if (idx == next) {
        sample.push_back(distance(x, i, j));
        ++taken;
        next = taken * total / take;
      }
    }
  }

  const double lo = percentile(sample, kCorrIntLowPercentile);
  const double hi = percentile(sample, kCorrIntHighPercentile);
  if (!(lo > kDedupEps) || !(hi > lo)) {
    throw DegenerateError("correlation integral: no scale range (points coincide within dedup_eps)");
  }
  std::vector<double> radii(kCorrIntRadii);
  const double step = std::log(hi / lo) / static_cast<double>(kCorrIntRadii - 1);
  for (std::size_t i = 0; i < kCorrIntRadii; ++i) radii[i] = lo * std::exp(step * static_cast<double>(i));
  radii.back() = hi;
  return radii;
}

IdEstimate id_corrint(const MatrixView& x, std::optional<std::vector<double>> radii) {
  require_finite(x, "corrint");
  if (x.rows() < 20) throw ParameterError(fmt::format("CorrInt needs n >= 20, got {}", x.rows()));
  std::vector<double> grid = radii ? std::move(*radii) : default_corrint_radii(x);
  for (double r : grid) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ParameterError(fmt::format("invalid CorrInt radius {}", r));
  }
  std::sort(grid.begin(), grid.end());

  std::vector<double> dist = pairwise_distances(x);
  std::sort(dist.begin(), dist.end());
  const double pairs = static_cast<double>(dist.size());

  std::vector<double> log_r, log_c, used;
  for (double r : grid) {
    // #{d < r}, strict.
    const auto count = static_cast<double>(std::lower_bound(dist.begin(), dist.end(), r) - dist.begin());
    const double c = count / pairs;
    if (c > 0.0 && c < 1.0) {
      log_r.push_back(std::log(r));
      log_c.push_back(std::log(c));
      used.push_back(r);
    }
  }
  if (log_r.size() < 3) {
    throw DegenerateError(fmt::format("CorrInt: insufficient scale range ({} usable radii)", log_r.size()));
  }

  const double m = static_cast<double>(log_r.size());
  const double mean_r = std::accumulate(log_r.begin(), log_r.end(), 0.0) / m;
  const double mean_c = std::accumulate(log_c.begin(), log_c.end(), 0.0) / m;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < log_r.size(); ++i) {
    sxy += (log_r[i] - mean_r) * (log_c[i] - mean_c);
    sxx += (log_r[i] - mean_r) * (log_r[i] - mean_r);
  }
  if (!(sxx > 0.0)) throw DegenerateError("CorrInt: radii do not span a scale range");
  const double slope = sxy / sxx;
  if (!(slope > 0.0)) throw DegenerateError(fmt::format("CorrInt: non-positive slope {}", slope));
  return {slope, Estimator::kCorrInt, 0, std::move(used)};
}

Matrix jitter(const MatrixView& x, std::uint64_t seed, double scale) {
  Rng rng(seed);
  Matrix out = x;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += rng.uniform(-scale, scale);
  }
  return out;
}

}  // namespace geoscore::intdim
