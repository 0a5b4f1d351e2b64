#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geoscore/analysis.hpp"

namespace geoscore::commands {

// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kMetricError = 3,
  kInsufficientData = 4,
  kIncompatibleTables = 5,
};

enum class MauveInput { kDocumentMean, kTokens };
std::string_view mauve_input_name(MauveInput m);

struct RunConfig {
  std::filesystem::path manifest_path;
  std::vector<analysis::Metric> metrics;
  std::optional<analysis::LayerRange> layer_range;
  std::size_t k = 10;
  double schatten_p = 1.0;
  std::optional<std::size_t> mauve_clusters;  // default scales with points
  std::uint64_t seed = 1;
  std::optional<std::size_t> threads;  // flag, then GEOSCORE_THREADS, then cores
  std::filesystem::path output_dir;
  bool center = false;
  bool jitter = false;
  MauveInput mauve_input = MauveInput::kDocumentMean;
  std::string mauve_reference = "original";
  std::size_t lambda_grid = 99;
  std::optional<std::filesystem::path> sidecar;
};

// Throws ParameterError for a config violating its invariants.
void validate(const RunConfig& config);

std::size_t resolve_thread_count(std::optional<std::size_t> flag);

// Per-source metric summary read back from a score file.
struct ScoreFile {
  std::string tester_model;
  std::vector<analysis::ScoreProfile> profiles;
  std::vector<analysis::SourceScore> sources;
};
ScoreFile load_score_file(const std::filesystem::path& path);

inline constexpr const char* kScoresFile = "scores.json";
inline constexpr const char* kRanksFile = "ranks.json";

// compute: per-document layer profiles and per-source aggregates.
// Writes scores.json, profiles.csv, sources.csv and, when documents carry
// text, text_metrics.csv and text_summary.csv.
int cmd_compute(const RunConfig& config, std::ostream& diag);

struct RankConfig {
  std::vector<std::filesystem::path> score_files;
  std::map<analysis::Metric, analysis::Direction> directions;  // overrides
  std::filesystem::path output_dir;
};
// rank: ranks.csv / ranks.json with the consensus (Average) column. Several
// score files (testers) are combined by averaging their per-tester ranks.
int cmd_rank(const RankConfig& config, std::ostream& diag);

struct CorrelateConfig {
  std::vector<std::filesystem::path> tables;  // score or rank files
  std::vector<std::string> metrics;           // empty: all shared metrics
  analysis::PValueMethod p_method = analysis::PValueMethod::kTApproximation;
  std::filesystem::path output_dir;
};
// correlate: Spearman among tables over their shared sources, per metric,
// with BH-adjusted p-values and asterisks at adjusted p <= 0.05.
int cmd_correlate(const CorrelateConfig& config, std::ostream& diag);

struct ReportConfig {
  std::vector<std::filesystem::path> score_files;
  std::filesystem::path output_dir;
};
// report: per-metric layer-curve SVG (one series per source) and averages.csv.
int cmd_report(const ReportConfig& config, std::ostream& diag);

}  // namespace geoscore::commands
