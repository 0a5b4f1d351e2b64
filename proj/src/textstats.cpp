#include "geoscore/textstats.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <fmt/format.h>
#include <zlib.h>

#include "geoscore/error.hpp"
#include "geoscore/unicode.hpp"

namespace geoscore::textstats {

Tokens tokenize(std::string_view text) {
  const std::u32string cps = unicode::decode_utf8(text);
  Tokens out;
  std::size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && unicode::is_whitespace(cps[i])) ++i;
    std::size_t end = i;
    while (end < cps.size() && !unicode::is_whitespace(cps[end])) ++end;
    std::size_t lo = i, hi = end;
    while (lo < hi && unicode::is_punctuation(cps[lo])) ++lo;
    while (hi > lo && unicode::is_punctuation(cps[hi - 1])) --hi;
    if (lo < hi) {
      std::u32string word(cps.begin() + static_cast<std::ptrdiff_t>(lo), cps.begin() + static_cast<std::ptrdiff_t>(hi));
      for (char32_t& c : word) c = unicode::to_lower(c);
      out.push_back(unicode::encode_utf8(word));
    }
    i = end;
  }
  return out;
}

double compression_ratio(std::string_view text) {
  if (text.empty()) throw ParameterError("compression ratio of empty text");
  z_stream zs;
  std::memset(&zs, 0, sizeof zs);
  // Negative window bits: raw DEFLATE, no header or checksum.
  if (deflateInit2(&zs, kDeflateLevel, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
    throw Error("deflateInit2 failed");
  }
  std::vector<unsigned char> buffer(deflateBound(&zs, static_cast<uLong>(text.size())));
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(text.data()));
  zs.avail_in = static_cast<uInt>(text.size());
  zs.next_out = buffer.data();
  zs.avail_out = static_cast<uInt>(buffer.size());
  const int rc = deflate(&zs, Z_FINISH);
  const auto compressed = static_cast<double>(zs.total_out);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(fmt::format("deflate failed ({})", rc));
  return compressed / static_cast<double>(text.size());
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  // Single rolling row over the shorter sequence.
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (const auto& x : a) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = (x == b[j - 1]) ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

double rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference) {
  if (candidate.empty() || reference.empty()) throw ParameterError("ROUGE-L of an empty token sequence");
  const auto lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return 0.0;
  // 2PR/(P+R) with P = lcs/|c|, R = lcs/|r| reduces to one integer ratio,
  // which is correctly rounded.
  return 2.0 * lcs / static_cast<double>(candidate.size() + reference.size());
}

LengthStats length_stats(std::span<const std::size_t> lengths) {
  if (lengths.empty()) throw ParameterError("length statistics of an empty list");
  // Fixed summation order makes the result exactly permutation-invariant.
  std::vector<std::size_t> sorted(lengths.begin(), lengths.end());
  std::sort(sorted.begin(), sorted.end());
  lengths = sorted;
  const auto n = static_cast<double>(lengths.size());
  double mean = 0.0;
  for (std::size_t len : lengths) mean += static_cast<double>(len);
  mean /= n;
  double var = 0.0;
  for (std::size_t len : lengths) {
    const double d = static_cast<double>(len) - mean;
    var += d * d;
  }
  return {mean, std::sqrt(var / n)};
}

LengthStats length_stats(std::span<const Tokens> texts) {
  std::vector<std::size_t> lengths;
  lengths.reserve(texts.size());
  for (const auto& t : texts) lengths.push_back(t.size());
  return length_stats(lengths);
}

}  // namespace geoscore::textstats
