#include "geoscore/mauve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "geoscore/error.hpp"
#include "geoscore/random.hpp"

namespace geoscore::mauve {

namespace {

void check_histogram(const std::vector<double>& h, const char* name) {
  double total = 0.0;
  for (double v : h) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ParameterError(fmt::format("{}: invalid entry {}", name, v));
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ParameterError(fmt::format("{} sums to {}, not 1", name, total));
}

std::size_t nearest_center(const Matrix& centers, const MatrixView& points, Eigen::Index i) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    const double d = (points.row(i) - centers.row(c)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(c);
    }
  }
  return best;
}

}  // namespace

void validate(const QuantizedPair& pair) {
  if (pair.p_hist.empty() || pair.p_hist.size() != pair.q_hist.size()) {
    throw ParameterError(fmt::format("histogram lengths differ or are empty ({} vs {})", pair.p_hist.size(),
                                     pair.q_hist.size()));
  }
  check_histogram(pair.p_hist, "p_hist");
  check_histogram(pair.q_hist, "q_hist");
}

std::size_t default_clusters(std::size_t total_points) {
  return std::clamp<std::size_t>(total_points / 10, 1, kMaxClusters);
}

KMeansResult kmeans(const MatrixView& points, std::size_t clusters, std::uint64_t seed, int max_iterations,
                    double tolerance) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (clusters < 1 || clusters > n) {
    throw ParameterError(fmt::format("k-means needs 1 <= clusters <= points, got {} for {}", clusters, n));
  }
  Rng rng(seed);
  const auto k = static_cast<Eigen::Index>(clusters);
  Matrix centers(k, points.cols());

  // D^2 seeding.
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  centers.row(0) = points.row(static_cast<Eigen::Index>(rng.below(n)));
  for (Eigen::Index c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], (points.row(static_cast<Eigen::Index>(i)) - centers.row(c - 1)).squaredNorm());
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (nearest[i] <= 0.0) continue;
        pick = i;  // last candidate absorbs rounding in the running sum
        target -= nearest[i];
        if (target < 0.0) break;
      }
    } else {
      pick = rng.below(n);  // fewer distinct points than clusters
    }
    centers.row(c) = points.row(static_cast<Eigen::Index>(pick));
  }

  KMeansResult result;
  result.assignment.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) result.assignment[i] = nearest_center(centers, points, static_cast<Eigen::Index>(i));

  for (int iter = 1; iter <= max_iterations; ++iter) {
    result.iterations = iter;
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<std::size_t> counts(clusters, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(result.assignment[i])) += points.row(static_cast<Eigen::Index>(i));
      ++counts[result.assignment[i]];
    }
    Matrix updated = centers;
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        updated.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
    const double shift = (updated - centers).norm();
    const double scale = centers.norm();
    centers = std::move(updated);

    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = nearest_center(centers, points, static_cast<Eigen::Index>(i));
      if (a != result.assignment[i]) {
        result.assignment[i] = a;
        changed = true;
      }
    }
    if (!changed || shift <= tolerance * std::max(scale, std::numeric_limits<double>::min())) break;
  }
  result.centers = std::move(centers);
  return result;
}

QuantizedPair quantize(const MatrixView& p_points, const MatrixView& q_points, std::size_t clusters,
                       std::uint64_t seed) {
  if (p_points.rows() < 1 || q_points.rows() < 1) throw ParameterError("quantize: empty point cloud");
  if (p_points.cols() != q_points.cols()) {
    throw ParameterError(fmt::format("quantize: dimension mismatch {} vs {}", p_points.cols(), q_points.cols()));
  }
  if (!p_points.allFinite() || !q_points.allFinite()) throw ParameterError("quantize: non-finite points");
  const auto np = static_cast<std::size_t>(p_points.rows());
  const auto nq = static_cast<std::size_t>(q_points.rows());
  const std::size_t total = np + nq;
  if (clusters < 1 || clusters > total) {
    throw ParameterError(fmt::format("quantize: clusters must be in [1, {}], got {}", total, clusters));
  }

  Matrix joint(static_cast<Eigen::Index>(total), p_points.cols());
  joint.topRows(p_points.rows()) = p_points;
  joint.bottomRows(q_points.rows()) = q_points;
  const KMeansResult km = kmeans(joint, clusters, seed);

  std::vector<double> p_counts(clusters, 0.0), q_counts(clusters, 0.0);
  for (std::size_t i = 0; i < np; ++i) p_counts[km.assignment[i]] += 1.0;
  for (std::size_t i = 0; i < nq; ++i) q_counts[km.assignment[np + i]] += 1.0;

  const double eps = 1.0 / (10.0 * static_cast<double>(clusters) * static_cast<double>(total));
  auto smooth = [&](std::vector<double>& counts, double n) {
    double sum = 0.0;
    for (double& c : counts) {
      c = c / n + eps;
      sum += c;
    }
    for (double& c : counts) c /= sum;
  };
  smooth(p_counts, static_cast<double>(np));
  smooth(q_counts, static_cast<double>(nq));

  QuantizedPair out{std::move(p_counts), std::move(q_counts), clusters, seed};
  validate(out);
  return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ParameterError(fmt::format("KL: length mismatch {} vs {}", p.size(), q.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw DegenerateError(fmt::format("KL: q[{}] = 0 where p[{}] = {}", i, i, p[i]));
    total += p[i] * std::log(p[i] / q[i]);
  }
  return total;
}

double mauve_score(const QuantizedPair& pair, std::size_t lambda_grid) {
  validate(pair);
  if (lambda_grid < 3) throw ParameterError(fmt::format("lambda grid needs >= 3 points, got {}", lambda_grid));
  const std::size_t K = pair.p_hist.size();
  const auto denom = static_cast<double>(lambda_grid + 1);
  std::vector<double> mix(K);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i <= lambda_grid; ++i) {
    // Both weights by division so that swapping P and Q visits the mirrored
    // grid point with bit-identical weights.
    const double a = static_cast<double>(i) / denom;
    const double b = static_cast<double>(lambda_grid + 1 - i) / denom;
    for (std::size_t j = 0; j < K; ++j) {
      const double p = pair.p_hist[j];
      const double q = pair.q_hist[j];
      mix[j] = p == q ? p : a * p + b * q;
    }
    const double value = a * kl_divergence(pair.p_hist, mix) + b * kl_divergence(pair.q_hist, mix);
    best = std::min(best, value);
  }
  return std::clamp(1.0 - best, 0.0, 1.0);
}

}  // namespace geoscore::mauve
