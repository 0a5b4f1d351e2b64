// geoscore: reference-free text quality from tester-model hidden states.
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geoscore/analysis.hpp"
#include "geoscore/commands.hpp"
#include "geoscore/error.hpp"

namespace {

using geoscore::analysis::Direction;
using geoscore::analysis::Metric;
namespace cmd = geoscore::commands;

std::vector<Metric> parse_metric_list(const std::string& text) {
  std::vector<Metric> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    const std::string name = text.substr(start, comma - start);
    if (name == "all") {
      out.assign(std::begin(geoscore::analysis::kAllMetrics), std::end(geoscore::analysis::kAllMetrics));
    } else if (auto m = geoscore::analysis::parse_metric(name)) {
      out.push_back(*m);
    } else {
      throw geoscore::ParameterError("unknown metric '" + name + "'");
    }
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometry-based, reference-free text quality scoring"};
  app.require_subcommand(1);

  cmd::RunConfig run;
  std::string metrics = "schatten,mev,erank,resultant,mle,mom,mada,corrint";
  std::string layers, mauve_input = "doc-mean";
  std::string manifest, out_dir, sidecar;
  std::size_t threads = 0, mauve_clusters = 0;
  auto* compute = app.add_subcommand("compute", "Score every document of a manifest");
  compute->add_option("--manifest", manifest, "Corpus manifest (JSON)")->required();
  compute->add_option("--metrics", metrics, "Comma-separated metric names, or 'all'")->capture_default_str();
  compute->add_option("--layers", layers, "Layer range A..B (default: all stored layers)");
  compute->add_option("--k", run.k, "Neighbours for the ID estimators")->capture_default_str();
  compute->add_option("--schatten-p", run.schatten_p, "Schatten norm order")->capture_default_str();
  compute->add_option("--mauve-clusters", mauve_clusters, "k-means clusters (default: scales with points)");
  compute->add_option("--mauve-input", mauve_input, "doc-mean or tokens")
      ->check(CLI::IsMember({"doc-mean", "tokens"}))
      ->capture_default_str();
  compute->add_option("--mauve-reference", run.mauve_reference, "Reference source label for MAUVE")
      ->capture_default_str();
  compute->add_option("--lambda-grid", run.lambda_grid, "Mixture grid size for MAUVE")->capture_default_str();
  compute->add_option("--seed", run.seed, "Random seed")->capture_default_str();
  compute->add_option("--threads", threads, "Worker threads");
  compute->add_flag("--center", run.center, "Subtract the row mean before the spectral metrics");
  compute->add_flag("--jitter", run.jitter, "Seeded 1e-8 jitter before the ID estimators");
  compute->add_option("--sidecar", sidecar, "CSV of external per-document scores (doc_id,metric,value)");
  compute->add_option("--out", out_dir, "Output directory")->required();

  cmd::RankConfig rank;
  std::vector<std::string> rank_inputs, direction_specs;
  auto* rank_cmd = app.add_subcommand("rank", "Rank sources per metric and build the consensus column");
  rank_cmd->add_option("scores", rank_inputs, "scores.json files (one per tester)")->required();
  rank_cmd->add_option("--direction", direction_specs, "Override a direction, e.g. schatten=higher");
  rank_cmd->add_option("--out", rank.output_dir, "Output directory")->required();

  cmd::CorrelateConfig corr;
  std::vector<std::string> corr_inputs;
  std::string corr_metrics;
  bool exact_p = false;
  auto* corr_cmd = app.add_subcommand("correlate", "Spearman correlation between score or rank tables");
  corr_cmd->add_option("tables", corr_inputs, "scores.json or ranks.json files")->required();
  corr_cmd->add_option("--metrics", corr_metrics, "Restrict to these comma-separated metrics");
  corr_cmd->add_flag("--exact-p", exact_p, "Exact permutation p-values (at most 10 sources)");
  corr_cmd->add_option("--out", corr.output_dir, "Output directory")->required();

  cmd::ReportConfig rep;
  std::vector<std::string> rep_inputs;
  auto* rep_cmd = app.add_subcommand("report", "Layer-curve charts and average tables");
  rep_cmd->add_option("scores", rep_inputs, "scores.json files")->required();
  rep_cmd->add_option("--out", rep.output_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cmd::kInputError;
  }

  try {
    if (*compute) {
      run.manifest_path = manifest;
      run.output_dir = out_dir;
      run.metrics = parse_metric_list(metrics);
      if (!layers.empty()) run.layer_range = geoscore::analysis::parse_layer_range(layers);
      if (compute->count("--threads")) run.threads = threads;
      if (compute->count("--mauve-clusters")) run.mauve_clusters = mauve_clusters;
      run.mauve_input = mauve_input == "tokens" ? cmd::MauveInput::kTokens : cmd::MauveInput::kDocumentMean;
      if (!sidecar.empty()) run.sidecar = sidecar;
      return cmd::cmd_compute(run, std::cerr);
    }
    if (*rank_cmd) {
      rank.score_files.assign(rank_inputs.begin(), rank_inputs.end());
      for (const auto& item : direction_specs) {
        const auto eq = item.find('=');
        const auto metric = geoscore::analysis::parse_metric(item.substr(0, eq));
        const auto dir = eq == std::string::npos ? std::nullopt
                                                 : geoscore::analysis::parse_direction(item.substr(eq + 1));
        if (!metric || !dir) throw geoscore::ParameterError("bad --direction '" + item + "'");
        rank.directions[*metric] = *dir;
      }
      return cmd::cmd_rank(rank, std::cerr);
    }
    if (*corr_cmd) {
      corr.tables.assign(corr_inputs.begin(), corr_inputs.end());
      if (!corr_metrics.empty()) {
        // Rank tables also carry an "average" column, so names pass through.
        std::stringstream names(corr_metrics);
        for (std::string name; std::getline(names, name, ',');) corr.metrics.push_back(name);
      }
      if (exact_p) corr.p_method = geoscore::analysis::PValueMethod::kExactPermutation;
      return cmd::cmd_correlate(corr, std::cerr);
    }
    rep.score_files.assign(rep_inputs.begin(), rep_inputs.end());
    return cmd::cmd_report(rep, std::cerr);
  } catch (const geoscore::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cmd::kInputError;
  }
}
