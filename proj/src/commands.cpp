#include "geoscore/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "geoscore/corpus_io.hpp"
#include "geoscore/error.hpp"
#include "geoscore/intdim.hpp"
#include "geoscore/mauve.hpp"
#include "geoscore/parallel.hpp"
#include "geoscore/random.hpp"
#include "geoscore/report.hpp"
#include "geoscore/textstats.hpp"

namespace geoscore::commands {

namespace fs = std::filesystem;
using analysis::Metric;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kScoresKind = "geoscore.scores";
constexpr const char* kRanksKind = "geoscore.ranks";
constexpr int kOutputVersion = 1;
// MAUVE work items draw from a stream family disjoint from the documents'.
constexpr std::uint64_t kMauveStreamBase = 1ULL << 40;

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot open {} for writing", path.string()));
  out << content;
  if (!out) throw Error(fmt::format("write to {} failed", path.string()));
}

std::string csv_text(const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (const auto& r : rows) report::write_csv_row(out, r);
  return out.str();
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

// Lowercase alphanumerics, everything else folded to '_'.
std::string slug(std::string_view s) {
  std::string out;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    out += std::isalnum(u) ? static_cast<char>(std::tolower(u)) : '_';
  }
  return out.empty() ? "unnamed" : out;
}

std::vector<std::string> layer_headers(const std::vector<std::size_t>& layers) {
  std::vector<std::string> out;
  for (std::size_t l : layers) out.push_back(fmt::format("layer_{}", l));
  return out;
}

struct DocResult {
  std::vector<analysis::ScoreProfile> profiles;
  std::optional<std::string> failure;
  std::optional<textstats::TextMetricRow> text;
  textstats::Tokens tokens;
};

struct MauveJob {
  std::size_t source;
  std::size_t layer_pos;
};

Metric checked_metric(const std::string& name, const fs::path& file) {
  auto m = analysis::parse_metric(name);
  if (!m) throw FormatError(fmt::format("{}: unknown metric '{}'", file.string(), name));
  return *m;
}

}  // namespace

std::string_view mauve_input_name(MauveInput m) {
  return m == MauveInput::kTokens ? "tokens" : "doc-mean";
}

void validate(const RunConfig& config) {
  if (config.metrics.empty()) throw ParameterError("no metrics requested");
  if (config.k < 1) throw ParameterError("k must be positive");
  if (!(config.schatten_p >= 1.0)) throw ParameterError("schatten-p must be >= 1");
  if (config.threads && *config.threads == 0) throw ParameterError("thread count must be positive");
  if (config.mauve_clusters && *config.mauve_clusters == 0) throw ParameterError("mauve-clusters must be positive");
  if (config.lambda_grid < 3) throw ParameterError("lambda grid needs >= 3 points");
  if (config.output_dir.empty()) throw ParameterError("output directory required");
}

std::size_t resolve_thread_count(std::optional<std::size_t> flag) {
  if (flag && *flag > 0) return *flag;
  if (const char* env = std::getenv("GEOSCORE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_compute(const RunConfig& config, std::ostream& diag) {
  CorpusManifest manifest;
  std::vector<std::size_t> layers;
  std::optional<analysis::Sidecar> sidecar;
  try {
    validate(config);
    manifest = load_manifest(config.manifest_path);
    layers = analysis::resolve_layers(config.layer_range, std::max<std::size_t>(manifest.n_layers, 1));
    if (config.sidecar) {
      sidecar = analysis::load_sidecar(*config.sidecar);
      for (const auto& [doc_id, values] : *sidecar) {
        if (manifest.find(doc_id) == nullptr) {
          throw ValidationError(fmt::format("sidecar doc_id '{}' is not in the manifest", doc_id));
        }
      }
    }
  } catch (const Error& e) {
    diag << "error: " << e.what() << '\n';
    return kInputError;
  }
  if (manifest.documents.empty()) {
    diag << "error: manifest lists no documents\n";
    return kInsufficientData;
  }

  std::vector<Metric> layer_metrics;
  bool want_mauve = false;
  for (Metric m : config.metrics) {
    if (m == Metric::kMauve) {
      want_mauve = true;
    } else if (std::find(layer_metrics.begin(), layer_metrics.end(), m) == layer_metrics.end()) {
      layer_metrics.push_back(m);
    }
  }

  std::vector<std::string> sources;
  std::vector<std::vector<std::size_t>> source_docs;
  for (std::size_t i = 0; i < manifest.documents.size(); ++i) {
    const auto& label = manifest.documents[i].source_label;
    auto it = std::find(sources.begin(), sources.end(), label);
    if (it == sources.end()) {
      sources.push_back(label);
      source_docs.emplace_back();
      it = sources.end() - 1;
    }
    source_docs[static_cast<std::size_t>(it - sources.begin())].push_back(i);
  }
  std::size_t reference_source = 0;
  if (want_mauve) {
    auto it = std::find(sources.begin(), sources.end(), config.mauve_reference);
    if (it == sources.end()) {
      diag << fmt::format("error: MAUVE reference source '{}' not in manifest\n", config.mauve_reference);
      return kInputError;
    }
    reference_source = static_cast<std::size_t>(it - sources.begin());
  }

  const std::size_t threads = resolve_thread_count(config.threads);

  // Per-document pass: layer metrics and text statistics.
  std::vector<DocResult> results(manifest.documents.size());
  parallel_for(manifest.documents.size(), threads, [&](std::size_t d) {
    DocResult& out = results[d];
    const DocumentRecord& doc = manifest.documents[d];
    try {
      if (doc.text && !doc.text->empty()) {
        out.tokens = textstats::tokenize(*doc.text);
        out.text = textstats::TextMetricRow{doc.doc_id, textstats::compression_ratio(*doc.text), std::nullopt,
                                            out.tokens.size()};
      }
      if (layer_metrics.empty()) return;
      const LayerStack stack = read_tensor_file(manifest.resolve(doc));
      analysis::MetricParams params;
      params.k = config.k;
      params.schatten_p = config.schatten_p;
      params.center = config.center;
      params.jitter = config.jitter;
      params.jitter_seed = derive_seed(config.seed, d);
      for (Metric m : layer_metrics) {
        try {
          out.profiles.push_back(analysis::layer_profile(stack, doc.doc_id, m, params, layers));
        } catch (const analysis::LayerMetricError& e) {
          out.failure = fmt::format("document '{}', metric {}, {}", doc.doc_id, analysis::metric_name(m), e.what());
          return;
        }
      }
    } catch (const std::exception& e) {
      out.failure = fmt::format("document '{}': {}", doc.doc_id, e.what());
    }
  });
  for (const auto& r : results) {
    if (r.failure) {
      diag << "error: " << *r.failure << '\n';
      return kMetricError;
    }
  }

  // ROUGE-L against the paired reference document.
  for (std::size_t d = 0; d < manifest.documents.size(); ++d) {
    const auto& doc = manifest.documents[d];
    if (!results[d].text || !doc.reference_doc_id) continue;
    for (std::size_t r = 0; r < manifest.documents.size(); ++r) {
      if (manifest.documents[r].doc_id != *doc.reference_doc_id) continue;
      if (!results[r].tokens.empty() && !results[d].tokens.empty()) {
        results[d].text->rouge_l = textstats::rouge_l(results[d].tokens, results[r].tokens);
      }
    }
  }

  // Source-level MAUVE per layer against the reference source.
  std::vector<analysis::SourceScore> mauve_scores;
  if (want_mauve) {
    std::vector<MauveJob> jobs;
    for (std::size_t s = 0; s < sources.size(); ++s) {
      for (std::size_t l = 0; l < layers.size(); ++l) jobs.push_back({s, l});
    }
    std::vector<double> values(jobs.size(), 0.0);
    std::vector<std::optional<std::string>> failures(jobs.size());

    auto cloud = [&](std::size_t source, std::size_t layer) {
      std::vector<Matrix> parts;
      Eigen::Index rows = 0;
      for (std::size_t d : source_docs[source]) {
        Matrix x = read_tensor_layer(manifest.resolve(manifest.documents[d]), layer).cast<double>();
        if (config.mauve_input == MauveInput::kDocumentMean) x = Matrix(x.colwise().mean());
        rows += x.rows();
        parts.push_back(std::move(x));
      }
      Matrix out(rows, static_cast<Eigen::Index>(manifest.hidden_dim));
      Eigen::Index at = 0;
      for (const auto& p : parts) {
        out.middleRows(at, p.rows()) = p;
        at += p.rows();
      }
      return out;
    };

    parallel_for(jobs.size(), threads, [&](std::size_t j) {
      const auto [s, l] = jobs[j];
      try {
        const Matrix p = cloud(s, layers[l]);
        const Matrix q = cloud(reference_source, layers[l]);
        const std::size_t total = static_cast<std::size_t>(p.rows() + q.rows());
        const std::size_t clusters = config.mauve_clusters.value_or(mauve::default_clusters(total));
        const auto pair = mauve::quantize(p, q, clusters, derive_seed(config.seed, kMauveStreamBase + j));
        values[j] = mauve::mauve_score(pair, config.lambda_grid);
      } catch (const std::exception& e) {
        failures[j] = fmt::format("MAUVE for source '{}', layer {}: {}", sources[s], layers[l], e.what());
      }
    });
    for (const auto& f : failures) {
      if (f) {
        diag << "error: " << *f << '\n';
        return kMetricError;
      }
    }
    for (std::size_t s = 0; s < sources.size(); ++s) {
      analysis::SourceScore score{sources[s], Metric::kMauve, 0.0, {}, source_docs[s].size()};
      for (std::size_t l = 0; l < layers.size(); ++l) score.layer_means.push_back(values[s * layers.size() + l]);
      double sum = 0.0;
      for (double v : score.layer_means) sum += v;
      score.mean = sum / static_cast<double>(layers.size());
      mauve_scores.push_back(std::move(score));
    }
  }

  std::vector<analysis::ScoreProfile> profiles;
  for (auto& r : results) {
    for (auto& p : r.profiles) profiles.push_back(std::move(p));
  }
  // Document-major order from the workers; regroup metric-major for output.
  std::stable_sort(profiles.begin(), profiles.end(), [&](const auto& a, const auto& b) {
    auto pos = [&](Metric m) { return std::find(layer_metrics.begin(), layer_metrics.end(), m) - layer_metrics.begin(); };
    return pos(a.metric) < pos(b.metric);
  });
  std::vector<analysis::SourceScore> aggregates;
  try {
    aggregates = analysis::aggregate_by_source(profiles, manifest);
  } catch (const Error& e) {
    diag << "error: " << e.what() << '\n';
    return kInputError;
  }
  for (auto& m : mauve_scores) aggregates.push_back(std::move(m));

  // Serialise.
  try {
    fs::create_directories(config.output_dir);

    json meta;
    meta["metrics"] = json::array();
    for (Metric m : config.metrics) meta["metrics"].push_back(std::string(analysis::metric_name(m)));
    meta["layers"] = layers;
    meta["k"] = config.k;
    meta["schatten_p"] = config.schatten_p;
    meta["center_rows"] = config.center;
    meta["jitter"] = config.jitter;
    meta["seed"] = config.seed;
    meta["dedup_eps"] = intdim::kDedupEps;
    meta["corrint_grid"] = fmt::format("{} log-spaced radii, percentiles {}..{} of a {}-pair subsample",
                                       intdim::kCorrIntRadii, intdim::kCorrIntLowPercentile,
                                       intdim::kCorrIntHighPercentile, intdim::kCorrIntSamplePairs);
    if (want_mauve) {
      meta["mauve"] = {{"input", std::string(mauve_input_name(config.mauve_input))},
                       {"reference", config.mauve_reference},
                       {"clusters", config.mauve_clusters ? json(*config.mauve_clusters) : json("auto")},
                       {"lambda_grid", config.lambda_grid}};
    }
    meta["tokenization"] = std::string(textstats::kTokenizationRule);
    json directions;
    for (Metric m : config.metrics) {
      directions[std::string(analysis::metric_name(m))] = std::string(analysis::direction_name(analysis::default_direction(m)));
    }
    meta["directions"] = directions;

    json doc;
    doc["format_version"] = kOutputVersion;
    doc["kind"] = kScoresKind;
    doc["tester_model"] = manifest.tester_model;
    doc["metadata"] = meta;
    doc["profiles"] = json::array();
    for (const auto& p : profiles) {
      doc["profiles"].push_back({{"doc_id", p.doc_id},
                                 {"source_label", manifest.find(p.doc_id)->source_label},
                                 {"metric", std::string(analysis::metric_name(p.metric))},
                                 {"layers", p.layers},
                                 {"layer_scores", p.layer_scores},
                                 {"average", p.average}});
    }
    doc["sources"] = json::array();
    for (const auto& s : aggregates) {
      doc["sources"].push_back({{"source_label", s.source_label},
                                {"metric", std::string(analysis::metric_name(s.metric))},
                                {"n_docs", s.n_docs},
                                {"mean", s.mean},
                                {"layers", layers},
                                {"layer_means", s.layer_means}});
    }
    write_text(config.output_dir / kScoresFile, doc.dump(2) + "\n");

    std::vector<std::vector<std::string>> rows;
    auto header = std::vector<std::string>{"doc_id", "source_label", "metric", "average"};
    for (auto& h : layer_headers(layers)) header.push_back(h);
    rows.push_back(header);
    for (const auto& p : profiles) {
      std::vector<std::string> r{p.doc_id, manifest.find(p.doc_id)->source_label,
                                 std::string(analysis::metric_name(p.metric)), report::format_double(p.average)};
      for (double v : p.layer_scores) r.push_back(report::format_double(v));
      rows.push_back(std::move(r));
    }
    write_text(config.output_dir / "profiles.csv", csv_text(rows));

    rows.clear();
    header = {"source_label", "metric", "n_docs", "mean"};
    for (auto& h : layer_headers(layers)) header.push_back(h);
    rows.push_back(header);
    for (const auto& s : aggregates) {
      std::vector<std::string> r{s.source_label, std::string(analysis::metric_name(s.metric)),
                                 std::to_string(s.n_docs), report::format_double(s.mean)};
      for (double v : s.layer_means) r.push_back(report::format_double(v));
      rows.push_back(std::move(r));
    }
    write_text(config.output_dir / "sources.csv", csv_text(rows));

    const bool any_text = std::any_of(results.begin(), results.end(), [](const DocResult& r) { return r.text.has_value(); });
    if (any_text || sidecar) {
      std::set<std::string> extra_names;
      if (sidecar) {
        for (const auto& [id, values] : *sidecar) {
          for (const auto& [name, v] : values) extra_names.insert(name);
        }
      }
      rows.clear();
      header = {"doc_id", "source_label", "cr", "rouge_l", "token_len"};
      for (const auto& n : extra_names) header.push_back(n);
      rows.push_back(header);
      for (std::size_t d = 0; d < manifest.documents.size(); ++d) {
        const auto& docrec = manifest.documents[d];
        const auto& t = results[d].text;
        std::vector<std::string> r{docrec.doc_id, docrec.source_label, t ? report::format_double(t->cr) : "",
                                   t && t->rouge_l ? report::format_double(*t->rouge_l) : "",
                                   t ? std::to_string(t->token_len) : ""};
        for (const auto& n : extra_names) {
          std::string cell;
          if (sidecar && sidecar->contains(docrec.doc_id) && sidecar->at(docrec.doc_id).contains(n)) {
            cell = report::format_double(sidecar->at(docrec.doc_id).at(n));
          }
          r.push_back(cell);
        }
        rows.push_back(std::move(r));
      }
      write_text(config.output_dir / "text_metrics.csv", csv_text(rows));

      rows.clear();
      header = {"source_label", "n_texts", "cr", "rouge_l", "avg_len", "std_len"};
      for (const auto& n : extra_names) header.push_back(n);
      rows.push_back(header);
      for (std::size_t s = 0; s < sources.size(); ++s) {
        std::vector<std::size_t> lengths;
        double cr = 0.0, rouge = 0.0;
        std::size_t n_rouge = 0;
        std::map<std::string, std::pair<double, std::size_t>> extra;
        for (std::size_t d : source_docs[s]) {
          if (const auto& t = results[d].text) {
            lengths.push_back(t->token_len);
            cr += t->cr;
            if (t->rouge_l) rouge += *t->rouge_l, ++n_rouge;
          }
          if (sidecar && sidecar->contains(manifest.documents[d].doc_id)) {
            for (const auto& [n, v] : sidecar->at(manifest.documents[d].doc_id)) {
              extra[n].first += v;
              ++extra[n].second;
            }
          }
        }
        std::vector<std::string> r{sources[s], std::to_string(lengths.size())};
        if (lengths.empty()) {
          r.insert(r.end(), {"", "", "", ""});
        } else {
          const auto stats = textstats::length_stats(std::span<const std::size_t>(lengths));
          r.push_back(report::format_double(cr / static_cast<double>(lengths.size())));
          r.push_back(n_rouge ? report::format_double(rouge / static_cast<double>(n_rouge)) : "");
          r.push_back(report::format_double(stats.mean));
          r.push_back(report::format_double(stats.stddev));
        }
        for (const auto& n : extra_names) {
          auto it = extra.find(n);
          r.push_back(it == extra.end() ? "" : report::format_double(it->second.first / static_cast<double>(it->second.second)));
        }
        rows.push_back(std::move(r));
      }
      write_text(config.output_dir / "text_summary.csv", csv_text(rows));
    }
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << '\n';
    return kInputError;
  }
  diag << fmt::format("scored {} documents, {} profiles, {} source aggregates -> {}\n", manifest.documents.size(),
                      profiles.size(), aggregates.size(), config.output_dir.string());
  return kOk;
}

ScoreFile load_score_file(const fs::path& path) {
  const json doc = read_json(path);
  try {
    if (doc.value("kind", "") != kScoresKind) throw FormatError(fmt::format("{}: not a score file", path.string()));
    ScoreFile out;
    out.tester_model = doc.at("tester_model").get<std::string>();
    for (const auto& p : doc.at("profiles")) {
      out.profiles.push_back(analysis::make_profile(p.at("doc_id").get<std::string>(),
                                                    checked_metric(p.at("metric").get<std::string>(), path),
                                                    p.at("layers").get<std::vector<std::size_t>>(),
                                                    p.at("layer_scores").get<std::vector<double>>()));
    }
    for (const auto& s : doc.at("sources")) {
      out.sources.push_back({s.at("source_label").get<std::string>(), checked_metric(s.at("metric").get<std::string>(), path),
                             s.at("mean").get<double>(), s.at("layer_means").get<std::vector<double>>(),
                             s.at("n_docs").get<std::size_t>()});
    }
    return out;
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

namespace {

// metric name -> source -> value, with sources in first-seen order.
struct Table {
  std::string label;
  std::map<std::string, std::map<std::string, double>> values;
  std::vector<std::string> source_order;
};

Table table_from_scores(const ScoreFile& f) {
  Table t;
  t.label = f.tester_model;
  for (const auto& s : f.sources) {
    t.values[std::string(analysis::metric_name(s.metric))][s.source_label] = s.mean;
    if (std::find(t.source_order.begin(), t.source_order.end(), s.source_label) == t.source_order.end()) {
      t.source_order.push_back(s.source_label);
    }
  }
  return t;
}

Table load_table(const fs::path& path) {
  const json doc = read_json(path);
  const std::string kind = doc.value("kind", "");
  if (kind == kScoresKind) return table_from_scores(load_score_file(path));
  if (kind != kRanksKind) throw FormatError(fmt::format("{}: neither a score nor a rank file", path.string()));
  try {
    Table t;
    const auto& testers = doc.at("testers");
    for (std::size_t i = 0; i < testers.size(); ++i) t.label += (i ? "+" : "") + testers[i].get<std::string>();
    for (const auto& row : doc.at("rows")) {
      const auto source = row.at("source").get<std::string>();
      t.source_order.push_back(source);
      for (const auto& [metric, rank] : row.at("ranks").items()) t.values[metric][source] = rank.get<double>();
      t.values["average"][source] = row.at("consensus_rank").get<double>();
    }
    return t;
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<std::string> shared_sources(const std::vector<Table>& tables) {
  std::vector<std::string> out;
  if (tables.empty()) return out;
  for (const auto& s : tables.front().source_order) {
    const bool everywhere = std::all_of(tables.begin(), tables.end(), [&](const Table& t) {
      return std::find(t.source_order.begin(), t.source_order.end(), s) != t.source_order.end();
    });
    if (everywhere) out.push_back(s);
  }
  return out;
}

}  // namespace

int cmd_rank(const RankConfig& config, std::ostream& diag) {
  std::vector<ScoreFile> files;
  try {
    if (config.score_files.empty()) throw ParameterError("no score files given");
    for (const auto& p : config.score_files) files.push_back(load_score_file(p));
  } catch (const Error& e) {
    diag << "error: " << e.what() << '\n';
    return kInputError;
  }
  std::vector<Table> tables;
  for (const auto& f : files) tables.push_back(table_from_scores(f));
  const std::vector<std::string> sources = shared_sources(tables);
  if (sources.size() < 2) {
    diag << fmt::format("error: ranking needs >= 2 shared sources, found {}\n", sources.size());
    return kInsufficientData;
  }

  analysis::RankTable table;
  table.generators = sources;
  std::vector<std::vector<double>> columns;
  for (Metric m : analysis::kAllMetrics) {
    const std::string name(analysis::metric_name(m));
    const bool everywhere = std::all_of(tables.begin(), tables.end(), [&](const Table& t) {
      if (!t.values.contains(name)) return false;
      const auto& v = t.values.at(name);
      return std::all_of(sources.begin(), sources.end(), [&](const auto& s) { return v.contains(s); });
    });
    if (!everywhere) continue;
    const auto override = config.directions.find(m);
    const analysis::Direction dir = override != config.directions.end() ? override->second : analysis::default_direction(m);
    if (dir == analysis::Direction::kUnsigned) {
      diag << fmt::format("note: skipping {} (unsigned direction; pass --direction {}=higher|lower to rank it)\n", name, name);
      continue;
    }
    analysis::SourceValues mean_rank;
    for (const auto& t : tables) {
      analysis::SourceValues scores;
      for (const auto& s : sources) scores[s] = t.values.at(name).at(s);
      for (const auto& [s, r] : analysis::rank_generators(scores, dir)) mean_rank[s] += r;
    }
    // One tester: its ranks. Several: re-rank the summed ranks.
    const analysis::SourceValues column =
        tables.size() == 1 ? mean_rank : analysis::rank_generators(mean_rank, analysis::Direction::kHigherBetter);
    std::vector<double> col;
    for (const auto& s : sources) col.push_back(column.at(s));
    columns.push_back(std::move(col));
    table.metrics.push_back(name);
    table.directions.push_back(dir);
  }
  if (table.metrics.empty()) {
    diag << "error: no rankable metric shared by every score file\n";
    return kInsufficientData;
  }
  table.ranks = Matrix(static_cast<Eigen::Index>(sources.size()), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    for (std::size_t g = 0; g < sources.size(); ++g) {
      table.ranks(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(c)) = columns[c][g];
    }
  }

  try {
    const auto consensus = analysis::consensus_ranking(table);
    fs::create_directories(config.output_dir);

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"source"};
    for (const auto& m : table.metrics) header.push_back(m);
    header.push_back("mean_rank");
    header.push_back("Average");
    rows.push_back(header);
    json doc;
    doc["format_version"] = kOutputVersion;
    doc["kind"] = kRanksKind;
    doc["testers"] = json::array();
    for (const auto& f : files) doc["testers"].push_back(f.tester_model);
    doc["metrics"] = json::array();
    for (std::size_t c = 0; c < table.metrics.size(); ++c) {
      doc["metrics"].push_back({{"name", table.metrics[c]}, {"direction", std::string(analysis::direction_name(table.directions[c]))}});
    }
    doc["rows"] = json::array();
    for (const auto& e : consensus) {
      const auto g = static_cast<Eigen::Index>(std::find(sources.begin(), sources.end(), e.generator) - sources.begin());
      std::vector<std::string> r{e.generator};
      json ranks;
      for (std::size_t c = 0; c < table.metrics.size(); ++c) {
        const double v = table.ranks(g, static_cast<Eigen::Index>(c));
        r.push_back(report::format_double(v));
        ranks[table.metrics[c]] = v;
      }
      r.push_back(report::format_double(e.mean_rank));
      r.push_back(std::to_string(e.consensus_rank));
      rows.push_back(std::move(r));
      doc["rows"].push_back({{"source", e.generator}, {"ranks", ranks}, {"mean_rank", e.mean_rank}, {"consensus_rank", e.consensus_rank}});
    }
    write_text(config.output_dir / "ranks.csv", csv_text(rows));
    write_text(config.output_dir / kRanksFile, doc.dump(2) + "\n");
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << '\n';
    return kInputError;
  }
  diag << fmt::format("ranked {} sources on {} metrics -> {}\n", sources.size(), table.metrics.size(),
                      config.output_dir.string());
  return kOk;
}

int cmd_correlate(const CorrelateConfig& config, std::ostream& diag) {
  std::vector<Table> tables;
  try {
    for (const auto& p : config.tables) tables.push_back(load_table(p));
  } catch (const Error& e) {
    diag << "error: " << e.what() << '\n';
    return kInputError;
  }
  if (tables.size() < 2) {
    diag << fmt::format("error: correlation needs >= 2 tables, got {}\n", tables.size());
    return kInsufficientData;
  }
  // Disambiguate repeated labels.
  std::map<std::string, int> seen;
  for (auto& t : tables) {
    if (t.label.empty()) t.label = "table";
    if (const int n = ++seen[t.label]; n > 1) t.label += fmt::format("#{}", n);
  }

  const std::vector<std::string> sources = shared_sources(tables);
  if (sources.empty()) {
    diag << "error: tables share no sources\n";
    return kIncompatibleTables;
  }
  if (sources.size() < 3) {
    diag << fmt::format("error: Spearman needs >= 3 shared sources, found {}\n", sources.size());
    return kInsufficientData;
  }

  std::vector<std::string> metrics;
  for (const auto& [name, values] : tables.front().values) {
    if (!config.metrics.empty() && std::find(config.metrics.begin(), config.metrics.end(), name) == config.metrics.end()) continue;
    const bool everywhere = std::all_of(tables.begin(), tables.end(), [&](const Table& t) {
      if (!t.values.contains(name)) return false;
      const auto& v = t.values.at(name);
      return std::all_of(sources.begin(), sources.end(), [&](const auto& s) { return v.contains(s); });
    });
    if (everywhere) metrics.push_back(name);
  }
  if (metrics.empty()) {
    diag << "error: no metric is present in every table\n";
    return kIncompatibleTables;
  }

  std::vector<std::string> labels;
  for (const auto& t : tables) labels.push_back(t.label);
  json doc;
  doc["format_version"] = kOutputVersion;
  doc["kind"] = "geoscore.correlation";
  doc["labels"] = labels;
  doc["sources"] = sources;
  doc["p_value_method"] = config.p_method == analysis::PValueMethod::kExactPermutation ? "exact_permutation" : "t_approximation";
  doc["alpha"] = analysis::kSignificanceLevel;
  doc["reports"] = json::array();

  std::vector<std::pair<std::string, std::string>> outputs;
  for (const auto& metric : metrics) {
    std::vector<std::vector<double>> series;
    for (const auto& t : tables) {
      std::vector<double> v;
      for (const auto& s : sources) v.push_back(t.values.at(metric).at(s));
      series.push_back(std::move(v));
    }
    analysis::CorrelationReport r;
    try {
      r = analysis::correlate(labels, series, config.p_method);
    } catch (const Error& e) {
      // A metric that is constant across sources has no ranking to compare.
      diag << fmt::format("note: skipping {}: {}\n", metric, e.what());
      continue;
    }

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{""};
    for (const auto& l : labels) header.push_back(l);
    rows.push_back(header);
    const auto n = static_cast<Eigen::Index>(labels.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<std::string> row{labels[static_cast<std::size_t>(i)]};
      for (Eigen::Index j = 0; j < n; ++j) {
        const bool star = i != j && r.significant[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        row.push_back(fmt::format("{:.3f}{}", r.rho(i, j), star ? "*" : ""));
      }
      rows.push_back(std::move(row));
    }
    outputs.emplace_back(fmt::format("correlation_{}.csv", slug(metric)), csv_text(rows));

    rows.clear();
    rows.push_back({"a", "b", "rho", "p", "p_fdr", "significant"});
    json pairs = json::array();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const bool sig = r.significant[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        rows.push_back({labels[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(j)],
                        report::format_double(r.rho(i, j)), report::format_double(r.p_values(i, j)),
                        report::format_double(r.fdr_adjusted(i, j)), sig ? "true" : "false"});
        pairs.push_back({{"a", labels[static_cast<std::size_t>(i)]},
                         {"b", labels[static_cast<std::size_t>(j)]},
                         {"rho", r.rho(i, j)},
                         {"p", r.p_values(i, j)},
                         {"p_fdr", r.fdr_adjusted(i, j)},
                         {"significant", sig}});
      }
    }
    outputs.emplace_back(fmt::format("correlation_{}_pairs.csv", slug(metric)), csv_text(rows));
    doc["reports"].push_back({{"metric", metric}, {"pairs", pairs}});
  }
  if (doc["reports"].empty()) {
    diag << "error: no metric could be correlated\n";
    return kInsufficientData;
  }

  try {
    fs::create_directories(config.output_dir);
    for (const auto& [name, content] : outputs) write_text(config.output_dir / name, content);
    write_text(config.output_dir / "correlation.json", doc.dump(2) + "\n");
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << '\n';
    return kInputError;
  }
  diag << fmt::format("correlated {} tables over {} sources for {} metrics -> {}\n", tables.size(), sources.size(),
                      doc["reports"].size(), config.output_dir.string());
  return kOk;
}

int cmd_report(const ReportConfig& config, std::ostream& diag) {
  std::vector<ScoreFile> files;
  try {
    if (config.score_files.empty()) throw ParameterError("no score files given");
    for (const auto& p : config.score_files) files.push_back(load_score_file(p));
  } catch (const Error& e) {
    diag << "error: " << e.what() << '\n';
    return kInputError;
  }
  const bool any = std::any_of(files.begin(), files.end(), [](const ScoreFile& f) { return !f.sources.empty(); });
  if (!any) {
    diag << "error: score files contain no source aggregates\n";
    return kInsufficientData;
  }

  std::vector<std::pair<std::string, std::string>> outputs;
  std::vector<std::vector<std::string>> rows{{"tester_model", "metric", "source_label", "n_docs", "mean"}};
  std::map<std::string, int> prefixes;
  for (const auto& f : files) {
    std::string prefix;
    if (files.size() > 1) {
      prefix = slug(f.tester_model);
      if (const int n = ++prefixes[prefix]; n > 1) prefix += fmt::format("_{}", n);
      prefix += "__";
    }
    // Layer indices come from the matching profiles; MAUVE has none, so use
    // the score file's layer list via position.
    std::vector<Metric> metric_order;
    for (const auto& s : f.sources) {
      if (std::find(metric_order.begin(), metric_order.end(), s.metric) == metric_order.end()) metric_order.push_back(s.metric);
      rows.push_back({f.tester_model, std::string(analysis::metric_name(s.metric)), s.source_label,
                      std::to_string(s.n_docs), report::format_double(s.mean)});
    }
    for (Metric m : metric_order) {
      std::vector<std::size_t> layer_ids;
      for (const auto& p : f.profiles) {
        if (p.metric == m) {
          layer_ids = p.layers;
          break;
        }
      }
      std::vector<report::Series> series;
      for (const auto& s : f.sources) {
        if (s.metric != m) continue;
        report::Series line{s.source_label, {}, s.layer_means};
        for (std::size_t i = 0; i < s.layer_means.size(); ++i) {
          line.x.push_back(static_cast<double>(i < layer_ids.size() ? layer_ids[i] : i));
        }
        series.push_back(std::move(line));
      }
      const std::string name(analysis::metric_name(m));
      outputs.emplace_back(prefix + name + "_layers.svg",
                           report::line_chart_svg(fmt::format("{} by layer ({})", name, f.tester_model), "layer", name, series));
    }
  }
  outputs.emplace_back("averages.csv", csv_text(rows));

  try {
    fs::create_directories(config.output_dir);
    for (const auto& [name, content] : outputs) write_text(config.output_dir / name, content);
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << '\n';
    return kInputError;
  }
  diag << fmt::format("wrote {} report files -> {}\n", outputs.size(), config.output_dir.string());
  return kOk;
}

}  // namespace geoscore::commands
