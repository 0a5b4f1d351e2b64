#include "geoscore/textstats.hpp"

#include <algorithm>
#include <string>

#include <gtest/gtest.h>

#include "geoscore/error.hpp"
#include "geoscore/random.hpp"
#include "geoscore/unicode.hpp"

namespace geoscore::textstats {
namespace {

std::string random_base64(std::size_t n, std::uint64_t seed) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  Rng rng(seed);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += kAlphabet[rng.below(64)];
  return s;
}

TEST(Tokenize, LowercaseSplitStrip) {
  EXPECT_EQ(tokenize("  The CAT, sat!  "), (Tokens{"the", "cat", "sat"}));
  EXPECT_EQ(tokenize("don't \"stop\"..."), (Tokens{"don't", "stop"}));
  EXPECT_EQ(tokenize("... --- !!!"), Tokens{});
  EXPECT_EQ(tokenize(""), Tokens{});
}

TEST(Tokenize, UnicodeWhitespaceAndCase) {
  // U+00A0 no-break space, U+3000 ideographic space, Cyrillic and Greek capitals.
  EXPECT_EQ(tokenize("\xD0\x9F\xD0\xA0\xD0\x98\xC2\xA0\xCE\xA3\xCE\x9F\xE3\x80\x80\xC3\x89t\xC3\xA9"),
            (Tokens{"\xD0\xBF\xD1\x80\xD0\xB8", "\xCF\x83\xCE\xBF", "\xC3\xA9t\xC3\xA9"}));
  // Guillemets are punctuation.
  EXPECT_EQ(tokenize("\xC2\xAB" "bonjour" "\xC2\xBB"), Tokens{"bonjour"});
}

TEST(Unicode, InvalidBytesBecomeReplacement) {
  const auto s = unicode::decode_utf8("a\xFF" "b");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[1], U'\uFFFD');
  EXPECT_EQ(unicode::encode_utf8(unicode::decode_utf8("h\xC3\xA9llo")), "h\xC3\xA9llo");
}

TEST(RougeL, HandCases) {
  const Tokens a = tokenize("the cat sat on mat");
  const Tokens b = tokenize("the cat lay on mat");
  EXPECT_EQ(lcs_length(a, b), 4u);
  EXPECT_EQ(rouge_l(a, b), 0.8);
  EXPECT_EQ(rouge_l(a, a), 1.0);
  EXPECT_EQ(rouge_l(tokenize("alpha beta"), tokenize("gamma delta")), 0.0);
  EXPECT_THROW(rouge_l(Tokens{}, a), ParameterError);
}

TEST(RougeL, AsymmetricLengths) {
  // LCS 2, P = 2/2, R = 2/4, F = 2/3.
  EXPECT_NEAR(rouge_l(Tokens{"a", "b"}, Tokens{"a", "x", "b", "y"}), 2.0 / 3.0, 1e-15);
}

TEST(RougeL, SymmetricOnEqualLengthsAndSelfIsOne) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto n = 1 + rng.below(12);
    Tokens x, y;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(std::string(1, static_cast<char>('a' + rng.below(5))));
      y.push_back(std::string(1, static_cast<char>('a' + rng.below(5))));
    }
    EXPECT_EQ(rouge_l(x, y), rouge_l(y, x));
    EXPECT_EQ(rouge_l(x, x), 1.0);
    const double f = rouge_l(x, y);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
}

TEST(Lcs, MatchesExhaustiveSubsequenceSearch) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    Tokens a, b;
    const auto na = 1 + rng.below(8), nb = 1 + rng.below(8);
    for (std::size_t i = 0; i < na; ++i) a.push_back(std::string(1, static_cast<char>('a' + rng.below(3))));
    for (std::size_t i = 0; i < nb; ++i) b.push_back(std::string(1, static_cast<char>('a' + rng.below(3))));
    // Longest subsequence of `a` (over all masks) that is also a subsequence of `b`.
    std::size_t best = 0;
    for (unsigned mask = 0; mask < (1u << na); ++mask) {
      Tokens sub;
      for (std::size_t i = 0; i < na; ++i)
        if (mask & (1u << i)) sub.push_back(a[i]);
      std::size_t j = 0;
      for (std::size_t i = 0; i < nb && j < sub.size(); ++i)
        if (b[i] == sub[j]) ++j;
      if (j == sub.size()) best = std::max(best, sub.size());
    }
    EXPECT_EQ(lcs_length(a, b), best);
  }
}

TEST(CompressionRatio, RepetitiveVersusRandom) {
  const double rep = compression_ratio(std::string(1000, 'a'));
  const double rnd = compression_ratio(random_base64(256, 2024));
  EXPECT_LT(rep, 0.05);
  EXPECT_LT(rep, rnd);
}

// Known failure. Base64 carries 6 bits per byte and raw deflate at level 6
// picks a dynamic Huffman block for it, so 256 random characters land near
// 0.85 to 0.875 for every seed tried. The 0.9 bound is kept as stated.
TEST(CompressionRatio, RandomBase64AboveNineTenths) {
  EXPECT_GT(compression_ratio(random_base64(256, 2024)), 0.9);
}

TEST(CompressionRatio, DeterministicAndPositive) {
  const std::string text = "The quick brown fox jumps over the lazy dog. " + random_base64(100, 1);
  const double a = compression_ratio(text), b = compression_ratio(text);
  EXPECT_EQ(a, b);
  EXPECT_GT(a, 0.0);
  EXPECT_THROW(compression_ratio(""), ParameterError);
}

TEST(CompressionRatio, SingleByteIsRawDeflate) {
  // A raw fixed-Huffman block for one literal is 3 bytes; zlib or gzip
  // framing would add 6 or 18.
  EXPECT_DOUBLE_EQ(compression_ratio("a"), 3.0);
}

TEST(LengthStats, Examples) {
  const auto one = length_stats(std::vector<std::size_t>{7});
  EXPECT_EQ(one.mean, 7.0);
  EXPECT_EQ(one.stddev, 0.0);
  const auto two = length_stats(std::vector<std::size_t>{10, 20});
  EXPECT_DOUBLE_EQ(two.mean, 15.0);
  EXPECT_DOUBLE_EQ(two.stddev, 5.0);
  EXPECT_THROW(length_stats(std::vector<std::size_t>{}), ParameterError);
  const std::vector<Tokens> texts{tokenize("a b c"), tokenize("a")};
  const auto t = length_stats(texts);
  EXPECT_DOUBLE_EQ(t.mean, 2.0);
  EXPECT_DOUBLE_EQ(t.stddev, 1.0);
}

TEST(LengthStats, PermutationInvariant) {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::size_t> v(2 + rng.below(40));
    for (auto& x : v) x = rng.below(1000);
    const auto a = length_stats(v);
    for (int s = 0; s < 5; ++s) {
      for (std::size_t i = v.size() - 1; i > 0; --i) std::swap(v[i], v[rng.below(i + 1)]);
      const auto b = length_stats(v);
      EXPECT_EQ(a.mean, b.mean);
      EXPECT_EQ(a.stddev, b.stddev);
    }
  }
}

}  // namespace
}  // namespace geoscore::textstats
