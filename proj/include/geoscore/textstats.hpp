#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace geoscore::textstats {

using Tokens = std::vector<std::string>;

// Split on Unicode whitespace, strip leading/trailing punctuation from each
// piece, lowercase; pieces left empty are dropped.
Tokens tokenize(std::string_view text);

// Human-readable statement of the tokenization rule, recorded in outputs.
inline constexpr std::string_view kTokenizationRule =
    "lowercase; split on Unicode whitespace; strip leading/trailing punctuation";

inline constexpr int kDeflateLevel = 6;

// Raw DEFLATE stream length (level 6, no zlib/gzip wrapper) over the UTF-8
// byte length. ParameterError on empty text.
double compression_ratio(std::string_view text);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

// LCS F-measure. ParameterError on an empty sequence.
double rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference);

struct LengthStats {
  double mean;
  double stddev;  // population
};
LengthStats length_stats(std::span<const std::size_t> lengths);
LengthStats length_stats(std::span<const Tokens> texts);

struct TextMetricRow {
  std::string doc_id;
  double cr;
  std::optional<double> rouge_l;
  std::size_t token_len;
};

}  // namespace geoscore::textstats
