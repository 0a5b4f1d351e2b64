#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geoscore/corpus_io.hpp"
#include "geoscore/error.hpp"
#include "geoscore/matrix.hpp"

namespace geoscore::analysis {

enum class Metric { kSchatten, kMev, kErank, kResultant, kMauve, kMle, kMom, kMada, kCorrInt };

inline constexpr Metric kAllMetrics[] = {Metric::kSchatten, Metric::kMev, Metric::kErank,
                                         Metric::kResultant, Metric::kMauve, Metric::kMle,
                                         Metric::kMom, Metric::kMada, Metric::kCorrInt};

std::string_view metric_name(Metric m);
std::optional<Metric> parse_metric(std::string_view name);

// MAUVE compares whole clouds of two sources; every other metric maps one
// layer matrix to a scalar.
constexpr bool is_layer_metric(Metric m) { return m != Metric::kMauve; }

enum class Direction { kHigherBetter, kLowerBetter, kUnsigned };
std::string_view direction_name(Direction d);
std::optional<Direction> parse_direction(std::string_view name);

// Shipped defaults: ERank and MAUVE up, MEV, Resultant and the ID estimators
// down, Schatten unsigned.
Direction default_direction(Metric m);

struct MetricParams {
  std::size_t k = 10;
  double schatten_p = 1.0;
  bool center = false;
  bool jitter = false;
  std::uint64_t jitter_seed = 0;
  std::optional<std::vector<double>> corrint_radii;
};

// Applies one per-layer metric to a layer matrix.
double evaluate_metric(Metric metric, const MatrixView& layer, const MetricParams& params);

// Inclusive 0-based layer range, written "A..B".
struct LayerRange {
  std::size_t first;
  std::size_t last;
};
LayerRange parse_layer_range(std::string_view text);
// All layers when `range` is empty. ParameterError if out of bounds.
std::vector<std::size_t> resolve_layers(const std::optional<LayerRange>& range, std::size_t n_layers);

struct ScoreProfile {
  std::string doc_id;
  Metric metric;
  std::vector<std::size_t> layers;
  std::vector<double> layer_scores;
  double average;
};

// Layer scores and their arithmetic mean.
ScoreProfile make_profile(std::string doc_id, Metric metric, std::vector<std::size_t> layers,
                          std::vector<double> scores);

// Metric failure on one layer, with the layer index and the cause.
class LayerMetricError : public Error {
 public:
  LayerMetricError(std::size_t layer, const std::string& cause);
  std::size_t layer() const { return layer_; }

 private:
  std::size_t layer_;
};

using LayerFunction = std::function<double(const MatrixView&)>;

ScoreProfile layer_profile(const LayerStack& stack, std::string doc_id, Metric metric,
                           const LayerFunction& fn, std::span<const std::size_t> layers);
ScoreProfile layer_profile(const LayerStack& stack, std::string doc_id, Metric metric,
                           const MetricParams& params, std::span<const std::size_t> layers);

struct SourceScore {
  std::string source_label;
  Metric metric;
  double mean;                      // mean of document averages
  std::vector<double> layer_means;  // per-layer mean across documents
  std::size_t n_docs;
};

// Groups profiles by (metric, source). Output order: metric by first
// appearance in `profiles`, source by first appearance in the manifest.
// ValidationError if a doc_id is not in the manifest or layer sets differ.
std::vector<SourceScore> aggregate_by_source(std::span<const ScoreProfile> profiles,
                                             const CorpusManifest& manifest);

using SourceValues = std::map<std::string, double>;

// Ranks 1..G with G the best under `direction`; ties take the average rank.
SourceValues rank_generators(const SourceValues& scores, Direction direction);

struct RankTable {
  std::vector<std::string> generators;
  std::vector<std::string> metrics;
  std::vector<Direction> directions;
  Matrix ranks;  // generators x metrics

  // Throws ValidationError if the shape is inconsistent or a column does not
  // sum to G(G+1)/2.
  void validate() const;
};

struct ConsensusEntry {
  std::string generator;
  double mean_rank;
  std::size_t consensus_rank;  // 1..G, G best
};

// Mean rank across metric columns, re-ranked; ties resolved by label order
// (lexicographically smaller label ranks higher). Returned best first.
std::vector<ConsensusEntry> consensus_ranking(const RankTable& table);

// Average ranks 1..n in ascending value order.
std::vector<double> average_ranks(std::span<const double> values);

struct Correlation {
  double rho;
  double p;
};

enum class PValueMethod { kTApproximation, kExactPermutation };

// Spearman rho (Pearson on average ranks). The p-value is two-sided; t
// approximation with n-2 dof by default, or exhaustive permutation (n <= 10).
Correlation spearman(std::span<const double> x, std::span<const double> y,
                     PValueMethod method = PValueMethod::kTApproximation);

// Benjamini-Hochberg step-up adjusted p-values, in input order.
std::vector<double> fdr_adjust(std::span<const double> p_values);

inline constexpr double kSignificanceLevel = 0.05;

struct CorrelationReport {
  std::vector<std::string> labels;
  Matrix rho;
  Matrix p_values;
  Matrix fdr_adjusted;
  std::vector<std::vector<bool>> significant;
};

// Pairwise Spearman among labelled series of equal length; the FDR
// correction runs over the off-diagonal pairs.
CorrelationReport correlate(std::vector<std::string> labels, std::span<const std::vector<double>> series,
                            PValueMethod method = PValueMethod::kTApproximation);

// Externally computed per-document scalars (e.g. perplexity, BLEURT):
// CSV with header doc_id,metric,value.
using Sidecar = std::map<std::string, std::map<std::string, double>>;
Sidecar load_sidecar(const std::filesystem::path& path);

}  // namespace geoscore::analysis
