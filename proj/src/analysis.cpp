#include "geoscore/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "geoscore/intdim.hpp"
#include "geoscore/report.hpp"
#include "geoscore/spectral.hpp"

namespace geoscore::analysis {

namespace {

struct MetricInfo {
  Metric metric;
  std::string_view name;
  Direction direction;
};

constexpr MetricInfo kMetricTable[] = {
    {Metric::kSchatten, "schatten", Direction::kUnsigned},
    {Metric::kMev, "mev", Direction::kLowerBetter},
    {Metric::kErank, "erank", Direction::kHigherBetter},
    {Metric::kResultant, "resultant", Direction::kLowerBetter},
    {Metric::kMauve, "mauve", Direction::kHigherBetter},
    {Metric::kMle, "mle", Direction::kLowerBetter},
    {Metric::kMom, "mom", Direction::kLowerBetter},
    {Metric::kMada, "mada", Direction::kLowerBetter},
    {Metric::kCorrInt, "corrint", Direction::kLowerBetter},
};

const MetricInfo& info(Metric m) {
  for (const auto& row : kMetricTable) {
    if (row.metric == m) return row;
  }
  throw ParameterError("unknown metric");
}

std::size_t parse_index(std::string_view text) {
  std::size_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ParameterError(fmt::format("invalid layer index '{}'", text));
  }
  return v;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace

std::string_view metric_name(Metric m) { return info(m).name; }

std::optional<Metric> parse_metric(std::string_view name) {
  for (const auto& row : kMetricTable) {
    if (row.name == name) return row.metric;
  }
  return std::nullopt;
}

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::kHigherBetter: return "higher_better";
    case Direction::kLowerBetter: return "lower_better";
    case Direction::kUnsigned: return "unsigned";
  }
  return "?";
}

std::optional<Direction> parse_direction(std::string_view name) {
  if (name == "higher_better" || name == "higher") return Direction::kHigherBetter;
  if (name == "lower_better" || name == "lower") return Direction::kLowerBetter;
  if (name == "unsigned") return Direction::kUnsigned;
  return std::nullopt;
}

Direction default_direction(Metric m) { return info(m).direction; }

double evaluate_metric(Metric metric, const MatrixView& layer, const MetricParams& params) {
  Matrix x = params.center ? spectral::center_rows(layer) : Matrix(layer);
  switch (metric) {
    case Metric::kSchatten: return spectral::schatten_norm(spectral::singular_values(x), params.schatten_p);
    case Metric::kMev: return spectral::mev(spectral::singular_values(x));
    case Metric::kErank: return spectral::effective_rank(spectral::singular_values(x));
    case Metric::kResultant: return spectral::resultant_length(x);
    case Metric::kMauve: throw ParameterError("MAUVE is a source-level metric, not a per-layer one");
    default: break;
  }
  if (params.jitter) x = intdim::jitter(x, params.jitter_seed);
  switch (metric) {
    case Metric::kMle: return intdim::id_mle(intdim::knn_distances(x, params.k)).value;
    case Metric::kMom: return intdim::id_mom(intdim::knn_distances(x, params.k)).value;
    case Metric::kMada: return intdim::id_mada(intdim::knn_distances(x, params.k)).value;
    case Metric::kCorrInt: return intdim::id_corrint(x, params.corrint_radii).value;
    default: break;
  }
  throw ParameterError("unknown metric");
}

LayerRange parse_layer_range(std::string_view text) {
  const auto sep = text.find("..");
  if (sep == std::string_view::npos) {
    const std::size_t only = parse_index(text);
    return {only, only};
  }
  LayerRange r{parse_index(text.substr(0, sep)), parse_index(text.substr(sep + 2))};
  if (r.first > r.last) throw ParameterError(fmt::format("empty layer range '{}'", text));
  return r;
}

std::vector<std::size_t> resolve_layers(const std::optional<LayerRange>& range, std::size_t n_layers) {
  if (n_layers == 0) throw ParameterError("no layers");
  const LayerRange r = range.value_or(LayerRange{0, n_layers - 1});
  if (r.first > r.last || r.last >= n_layers) {
    throw ParameterError(fmt::format("layer range {}..{} outside 0..{}", r.first, r.last, n_layers - 1));
  }
  std::vector<std::size_t> out(r.last - r.first + 1);
  std::iota(out.begin(), out.end(), r.first);
  return out;
}

ScoreProfile make_profile(std::string doc_id, Metric metric, std::vector<std::size_t> layers,
                          std::vector<double> scores) {
  if (scores.empty() || scores.size() != layers.size()) {
    throw ParameterError(fmt::format("profile '{}': {} scores for {} layers", doc_id, scores.size(), layers.size()));
  }
  const double sum = std::accumulate(scores.begin(), scores.end(), 0.0);
  const double average = sum / static_cast<double>(scores.size());
  return {std::move(doc_id), metric, std::move(layers), std::move(scores), average};
}

LayerMetricError::LayerMetricError(std::size_t layer, const std::string& cause)
    : Error(fmt::format("layer {}: {}", layer, cause)), layer_(layer) {}

ScoreProfile layer_profile(const LayerStack& stack, std::string doc_id, Metric metric, const LayerFunction& fn,
                           std::span<const std::size_t> layers) {
  std::vector<double> scores;
  scores.reserve(layers.size());
  for (std::size_t l : layers) {
    if (l >= stack.n_layers()) throw ParameterError(fmt::format("layer {} outside stack of {}", l, stack.n_layers()));
    double v;
    try {
      v = fn(stack.layer_f64(l));
    } catch (const Error& e) {
      throw LayerMetricError(l, e.what());
    }
    if (!std::isfinite(v)) throw LayerMetricError(l, fmt::format("non-finite score {}", v));
    scores.push_back(v);
  }
  return make_profile(std::move(doc_id), metric, {layers.begin(), layers.end()}, std::move(scores));
}

ScoreProfile layer_profile(const LayerStack& stack, std::string doc_id, Metric metric, const MetricParams& params,
                           std::span<const std::size_t> layers) {
  if (!is_layer_metric(metric)) throw ParameterError(fmt::format("{} is not a per-layer metric", metric_name(metric)));
  return layer_profile(
      stack, std::move(doc_id), metric, [&](const MatrixView& x) { return evaluate_metric(metric, x, params); },
      layers);
}

std::vector<SourceScore> aggregate_by_source(std::span<const ScoreProfile> profiles,
                                             const CorpusManifest& manifest) {
  std::vector<Metric> metric_order;
  for (const auto& p : profiles) {
    if (std::find(metric_order.begin(), metric_order.end(), p.metric) == metric_order.end()) {
      metric_order.push_back(p.metric);
    }
  }
  std::vector<std::string> source_order;
  for (const auto& d : manifest.documents) {
    if (std::find(source_order.begin(), source_order.end(), d.source_label) == source_order.end()) {
      source_order.push_back(d.source_label);
    }
  }

  std::vector<SourceScore> out;
  for (Metric metric : metric_order) {
    for (const auto& source : source_order) {
      SourceScore s{source, metric, 0.0, {}, 0};
      const std::vector<std::size_t>* layers = nullptr;
      for (const auto& p : profiles) {
        if (p.metric != metric) continue;
        const DocumentRecord* doc = manifest.find(p.doc_id);
        if (doc == nullptr) throw ValidationError(fmt::format("profile doc_id '{}' is not in the manifest", p.doc_id));
        if (doc->source_label != source) continue;
        if (layers == nullptr) {
          layers = &p.layers;
          s.layer_means.assign(p.layers.size(), 0.0);
        } else if (*layers != p.layers) {
          throw ValidationError(fmt::format("profile '{}' uses a different layer set", p.doc_id));
        }
        s.mean += p.average;
        for (std::size_t i = 0; i < p.layer_scores.size(); ++i) s.layer_means[i] += p.layer_scores[i];
        ++s.n_docs;
      }
      if (s.n_docs == 0) continue;
      const auto n = static_cast<double>(s.n_docs);
      s.mean /= n;
      for (double& v : s.layer_means) v /= n;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

SourceValues rank_generators(const SourceValues& scores, Direction direction) {
  if (scores.size() < 2) throw ParameterError(fmt::format("ranking needs >= 2 sources, got {}", scores.size()));
  if (direction == Direction::kUnsigned) throw ParameterError("cannot rank under an unsigned direction");
  std::vector<double> keyed;
  keyed.reserve(scores.size());
  for (const auto& [label, v] : scores) {
    if (!std::isfinite(v)) throw ParameterError(fmt::format("non-finite score for '{}'", label));
    keyed.push_back(direction == Direction::kHigherBetter ? v : -v);
  }
  const std::vector<double> ranks = average_ranks(keyed);
  SourceValues out;
  std::size_t i = 0;
  for (const auto& [label, v] : scores) out[label] = ranks[i++];
  return out;
}

void RankTable::validate() const {
  const auto g = static_cast<Eigen::Index>(generators.size());
  const auto m = static_cast<Eigen::Index>(metrics.size());
  if (ranks.rows() != g || ranks.cols() != m || directions.size() != metrics.size()) {
    throw ValidationError("rank table shape does not match its labels");
  }
  const double expected = static_cast<double>(g) * static_cast<double>(g + 1) / 2.0;
  for (Eigen::Index c = 0; c < m; ++c) {
    const double sum = ranks.col(c).sum();
    if (std::abs(sum - expected) > 1e-9) {
      throw ValidationError(fmt::format("rank column '{}' sums to {}, expected {}", metrics[static_cast<std::size_t>(c)],
                                        sum, expected));
    }
  }
}

std::vector<ConsensusEntry> consensus_ranking(const RankTable& table) {
  table.validate();
  const std::size_t g = table.generators.size();
  std::vector<ConsensusEntry> entries;
  entries.reserve(g);
  for (std::size_t i = 0; i < g; ++i) {
    // Ranks are multiples of 1/2, so this sum is exact in any column order.
    const double mean = table.metrics.empty() ? 0.0 : table.ranks.row(static_cast<Eigen::Index>(i)).mean();
    entries.push_back({table.generators[i], mean, 0});
  }
  std::sort(entries.begin(), entries.end(), [](const ConsensusEntry& a, const ConsensusEntry& b) {
    if (a.mean_rank != b.mean_rank) return a.mean_rank > b.mean_rank;
    return a.generator < b.generator;
  });
  for (std::size_t i = 0; i < g; ++i) entries[i].consensus_rank = g - i;
  return entries;
}

namespace {

double exact_permutation_p(std::span<const double> rx, std::vector<double> ry, double rho) {
  std::sort(ry.begin(), ry.end());
  std::size_t hits = 0, total = 0;
  const double threshold = std::abs(rho) - 1e-12;
  do {
    ++total;
    if (std::abs(pearson(rx, ry)) >= threshold) ++hits;
  } while (std::next_permutation(ry.begin(), ry.end()));
  // next_permutation skips repeated tie arrangements; every distinct
  // arrangement is equally likely, so the ratio is unchanged.
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

Correlation spearman(std::span<const double> x, std::span<const double> y, PValueMethod method) {
  if (x.size() != y.size()) throw ParameterError(fmt::format("spearman: lengths {} and {}", x.size(), y.size()));
  if (x.size() < 3) throw ParameterError(fmt::format("spearman needs >= 3 points, got {}", x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw ParameterError("spearman: non-finite input");
  }
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (constant(x) || constant(y)) throw DegenerateError("spearman: correlation undefined for a constant vector");

  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double rho = pearson(rx, ry);

  if (method == PValueMethod::kExactPermutation) {
    if (x.size() > 10) throw ParameterError("exact permutation p-values are limited to n <= 10");
    return {rho, exact_permutation_p(rx, ry, rho)};
  }
  if (std::abs(rho) >= 1.0) return {rho, 0.0};
  const double df = static_cast<double>(x.size() - 2);
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  const boost::math::students_t_distribution<double> dist(df);
  const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return {rho, std::clamp(p, 0.0, 1.0)};
}

std::vector<double> fdr_adjust(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError(fmt::format("p-value {} outside [0, 1]", p));
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> adjusted(m);
  double running = 1.0;
  for (std::size_t r = m; r-- > 0;) {
    // m/(r+1) >= 1, but the product can round below p; clamp so adjusted >= raw.
    const double p = p_values[order[r]];
    const double candidate = std::max(p, p * static_cast<double>(m) / static_cast<double>(r + 1));
    running = std::min(running, candidate);
    adjusted[order[r]] = std::min(running, 1.0);
  }
  return adjusted;
}

CorrelationReport correlate(std::vector<std::string> labels, std::span<const std::vector<double>> series,
                            PValueMethod method) {
  const std::size_t t = labels.size();
  if (series.size() != t) throw ParameterError("correlate: one series per label required");
  CorrelationReport r;
  r.labels = std::move(labels);
  const auto n = static_cast<Eigen::Index>(t);
  r.rho = Matrix::Identity(n, n);
  r.p_values = Matrix::Zero(n, n);
  r.fdr_adjusted = Matrix::Zero(n, n);
  r.significant.assign(t, std::vector<bool>(t, false));

  std::vector<double> raw;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = i + 1; j < t; ++j) {
      const Correlation c = spearman(series[i], series[j], method);
      r.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.rho;
      r.rho(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = c.rho;
      r.p_values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.p;
      r.p_values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = c.p;
      raw.push_back(c.p);
      pairs.emplace_back(i, j);
    }
  }
  const std::vector<double> adjusted = fdr_adjust(raw);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    r.fdr_adjusted(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = adjusted[k];
    r.fdr_adjusted(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = adjusted[k];
    r.significant[i][j] = r.significant[j][i] = adjusted[k] <= kSignificanceLevel;
  }
  for (std::size_t i = 0; i < t; ++i) r.significant[i][i] = true;
  return r;
}

Sidecar load_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open sidecar {}", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto rows = report::parse_csv(buffer.str());
  if (rows.empty() || rows.front() != std::vector<std::string>{"doc_id", "metric", "value"}) {
    throw FormatError(fmt::format("{}: expected header doc_id,metric,value", path.string()));
  }
  Sidecar out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 3) throw FormatError(fmt::format("{}: row {} has {} fields", path.string(), i + 1, row.size()));
    double v = 0.0;
    const auto& s = row[2];
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw FormatError(fmt::format("{}: row {} value '{}' is not a finite number", path.string(), i + 1, s));
    }
    if (!out[row[0]].emplace(row[1], v).second) {
      throw ValidationError(fmt::format("{}: duplicate entry ({}, {})", path.string(), row[0], row[1]));
    }
  }
  return out;
}

}  // namespace geoscore::analysis
