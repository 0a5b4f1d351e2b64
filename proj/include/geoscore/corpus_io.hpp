#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "geoscore/matrix.hpp"

namespace geoscore {

// Per-document stack of hidden-state matrices, one n_tokens x hidden_dim
// matrix per tapped layer, stored in single precision. Immutable once built.
class LayerStack {
 public:
  // Throws ValidationError if `layers` is empty, any dimension is zero, or
  // the layer shapes differ.
  explicit LayerStack(std::vector<MatrixF> layers);

  std::size_t n_layers() const { return layers_.size(); }
  std::size_t n_tokens() const { return static_cast<std::size_t>(layers_.front().rows()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(layers_.front().cols()); }

  const MatrixF& layer(std::size_t index) const { return layers_.at(index); }
  const std::vector<MatrixF>& layers() const { return layers_; }

  // Layer promoted to double precision.
  Matrix layer_f64(std::size_t index) const { return layer(index).cast<double>(); }

  friend bool operator==(const LayerStack& a, const LayerStack& b);

 private:
  std::vector<MatrixF> layers_;
};

// Location of the first non-finite entry, if any.
struct TensorIndex {
  std::size_t layer;
  std::size_t row;
  std::size_t col;
};
std::optional<TensorIndex> find_non_finite(const LayerStack& stack);

// GHST container layout: magic "GHST", then little-endian u32
// {version, n_layers, n_tokens, hidden_dim}, then the row-major f32 layers.
inline constexpr std::array<unsigned char, 4> kTensorMagic = {0x47, 0x48, 0x53, 0x54};
inline constexpr std::uint32_t kTensorVersion = 1;
inline constexpr std::size_t kTensorHeaderBytes = 20;

// 4 magic bytes + 4 u32 fields, then 4*L*n*d payload bytes.
constexpr std::uint64_t tensor_file_size(std::uint64_t layers, std::uint64_t tokens,
                                         std::uint64_t dim) {
  return kTensorHeaderBytes + 4 * layers * tokens * dim;
}

// Returns the number of bytes written. Throws ValidationError naming
// (layer, row, col) of the first non-finite value; nothing is written then.
std::uint64_t write_tensor(const LayerStack& stack, std::ostream& out);
std::uint64_t write_tensor_file(const LayerStack& stack, const std::filesystem::path& path);

// Inverse of write_tensor. FormatError on bad magic/version/zero dims,
// LengthError on a short or over-long payload, ValidationError on non-finite
// values.
LayerStack read_tensor(std::istream& in);
LayerStack read_tensor_file(const std::filesystem::path& path);

// Header fields only; the payload is not read.
struct TensorHeader {
  std::uint32_t version;
  std::uint32_t n_layers;
  std::uint32_t n_tokens;
  std::uint32_t hidden_dim;
};
TensorHeader read_tensor_header(std::istream& in);

// One layer, located by offset from the header. Validates length and
// finiteness of that layer only.
MatrixF read_tensor_layer(const std::filesystem::path& path, std::size_t layer);

struct DocumentRecord {
  std::string doc_id;
  std::string source_label;  // generator name, or "original" for human text
  std::string language;
  std::optional<std::string> text;
  std::filesystem::path tensor_path;  // relative to the manifest directory
  // Optional pairing used by reference-based text metrics (ROUGE-L).
  std::optional<std::string> reference_doc_id;
  // Filled by load_manifest from the tensor header.
  std::size_t n_tokens = 0;
};

struct CorpusManifest {
  int format_version = 1;
  std::string tester_model;
  std::vector<DocumentRecord> documents;
  std::filesystem::path root;  // directory tensor paths resolve against
  std::size_t n_layers = 0;
  std::size_t hidden_dim = 0;

  std::filesystem::path resolve(const DocumentRecord& doc) const { return root / doc.tensor_path; }
  const DocumentRecord* find(const std::string& doc_id) const;
};

inline constexpr int kManifestVersion = 1;

// Parses and validates a manifest: unique doc ids, non-empty source labels,
// every tensor present and parseable, one (n_layers, hidden_dim) shape across
// documents. Documents keep file order.
CorpusManifest load_manifest(const std::filesystem::path& path);

// Writes the manifest text form (tensor files are not touched).
void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);

}  // namespace geoscore
