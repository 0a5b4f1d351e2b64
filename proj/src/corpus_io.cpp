#include "geoscore/corpus_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "geoscore/error.hpp"

namespace geoscore {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > UINT32_MAX) throw ValidationError(fmt::format("{} {} exceeds the u32 header field", what, v));
  return static_cast<std::uint32_t>(v);
}

// Reads up to n bytes; returns the count actually read.
std::size_t read_some(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount());
}

}  // namespace

LayerStack::LayerStack(std::vector<MatrixF> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ValidationError("layer stack needs at least one layer");
  const auto rows = layers_.front().rows();
  const auto cols = layers_.front().cols();
  if (rows < 1 || cols < 1) {
    throw ValidationError(fmt::format("layer stack dimensions must be >= 1, got {}x{}", rows, cols));
  }
  for (std::size_t l = 1; l < layers_.size(); ++l) {
    if (layers_[l].rows() != rows || layers_[l].cols() != cols) {
      throw ValidationError(fmt::format("layer {} has shape {}x{}, layer 0 has {}x{}", l,
                                        layers_[l].rows(), layers_[l].cols(), rows, cols));
    }
  }
}

bool operator==(const LayerStack& a, const LayerStack& b) {
  if (a.n_layers() != b.n_layers() || a.n_tokens() != b.n_tokens() ||
      a.hidden_dim() != b.hidden_dim()) {
    return false;
  }
  // Bitwise comparison so that -0.0 != 0.0 and the round-trip check is exact.
  const std::size_t bytes = a.n_tokens() * a.hidden_dim() * sizeof(float);
  for (std::size_t l = 0; l < a.n_layers(); ++l) {
    if (std::memcmp(a.layer(l).data(), b.layer(l).data(), bytes) != 0) return false;
  }
  return true;
}

std::optional<TensorIndex> find_non_finite(const LayerStack& stack) {
  for (std::size_t l = 0; l < stack.n_layers(); ++l) {
    const MatrixF& m = stack.layer(l);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (!std::isfinite(m(r, c))) {
          return TensorIndex{l, static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
        }
      }
    }
  }
  return std::nullopt;
}

std::uint64_t write_tensor(const LayerStack& stack, std::ostream& out) {
  if (auto bad = find_non_finite(stack)) {
    throw ValidationError(fmt::format("non-finite value at layer {}, row {}, col {}", bad->layer,
                                      bad->row, bad->col));
  }
  out.write(reinterpret_cast<const char*>(kTensorMagic.data()), kTensorMagic.size());
  put_u32(out, kTensorVersion);
  put_u32(out, checked_u32(stack.n_layers(), "n_layers"));
  put_u32(out, checked_u32(stack.n_tokens(), "n_tokens"));
  put_u32(out, checked_u32(stack.hidden_dim(), "hidden_dim"));

  std::vector<char> row(stack.hidden_dim() * 4);
  for (const MatrixF& m : stack.layers()) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const auto bits = std::bit_cast<std::uint32_t>(m(r, c));
        char* p = row.data() + 4 * c;
        p[0] = static_cast<char>(bits & 0xff);
        p[1] = static_cast<char>((bits >> 8) & 0xff);
        p[2] = static_cast<char>((bits >> 16) & 0xff);
        p[3] = static_cast<char>((bits >> 24) & 0xff);
      }
      out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
  }
  if (!out) throw Error("write failed");
  return tensor_file_size(stack.n_layers(), stack.n_tokens(), stack.hidden_dim());
}

std::uint64_t write_tensor_file(const LayerStack& stack, const std::filesystem::path& path) {
  // Validate before creating the file so a rejected stack leaves nothing behind.
  if (auto bad = find_non_finite(stack)) {
    throw ValidationError(fmt::format("non-finite value at layer {}, row {}, col {}", bad->layer,
                                      bad->row, bad->col));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot open {} for writing", path.string()));
  return write_tensor(stack, out);
}

TensorHeader read_tensor_header(std::istream& in) {
  unsigned char header[kTensorHeaderBytes];
  const std::size_t got = read_some(in, reinterpret_cast<char*>(header), sizeof header);
  if (got < kTensorMagic.size() ||
      !std::equal(kTensorMagic.begin(), kTensorMagic.end(), header)) {
    throw FormatError("bad magic: not a GHST container");
  }
  if (got < sizeof header) throw LengthError(fmt::format("truncated header: {} of {} bytes", got, sizeof header));

  TensorHeader h{get_u32(header + 4), get_u32(header + 8), get_u32(header + 12), get_u32(header + 16)};
  if (h.version != kTensorVersion) throw FormatError(fmt::format("unsupported container version {}", h.version));
  if (h.n_layers == 0 || h.n_tokens == 0 || h.hidden_dim == 0) {
    throw FormatError(fmt::format("zero dimension in header: layers={} tokens={} dim={}", h.n_layers,
                                  h.n_tokens, h.hidden_dim));
  }
  return h;
}

LayerStack read_tensor(std::istream& in) {
  const TensorHeader h = read_tensor_header(in);
  const std::uint64_t expected = 4ULL * h.n_layers * h.n_tokens * h.hidden_dim;

  std::vector<MatrixF> layers;
  layers.reserve(h.n_layers);
  std::vector<char> row(static_cast<std::size_t>(h.hidden_dim) * 4);
  std::uint64_t consumed = 0;
  for (std::uint32_t l = 0; l < h.n_layers; ++l) {
    MatrixF m(h.n_tokens, h.hidden_dim);
    for (std::uint32_t r = 0; r < h.n_tokens; ++r) {
      const std::size_t got = read_some(in, row.data(), row.size());
      consumed += got;
      if (got < row.size()) {
        throw LengthError(fmt::format("truncated payload: header declares {} bytes, got {}", expected, consumed));
      }
      for (std::uint32_t c = 0; c < h.hidden_dim; ++c) {
        const float v = std::bit_cast<float>(get_u32(reinterpret_cast<const unsigned char*>(row.data()) + 4 * c));
        if (!std::isfinite(v)) {
          throw ValidationError(fmt::format("non-finite value at layer {}, row {}, col {}", l, r, c));
        }
        m(r, c) = v;
      }
    }
    layers.push_back(std::move(m));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw LengthError(fmt::format("trailing bytes after the {}-byte payload", expected));
  }
  return LayerStack(std::move(layers));
}

LayerStack read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open tensor file {}", path.string()));
  try {
    return read_tensor(in);
  } catch (const FormatError& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  } catch (const LengthError& e) {
    throw LengthError(fmt::format("{}: {}", path.string(), e.what()));
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

MatrixF read_tensor_layer(const std::filesystem::path& path, std::size_t layer) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open tensor file {}", path.string()));
  const TensorHeader h = read_tensor_header(in);
  if (layer >= h.n_layers) {
    throw ParameterError(fmt::format("{}: layer {} outside 0..{}", path.string(), layer, h.n_layers - 1));
  }
  const std::uint64_t layer_bytes = 4ULL * h.n_tokens * h.hidden_dim;
  in.seekg(static_cast<std::streamoff>(kTensorHeaderBytes + layer * layer_bytes));
  std::vector<char> raw(static_cast<std::size_t>(layer_bytes));
  if (read_some(in, raw.data(), raw.size()) < raw.size()) {
    throw LengthError(fmt::format("{}: truncated payload in layer {}", path.string(), layer));
  }
  MatrixF m(h.n_tokens, h.hidden_dim);
  const auto* bytes = reinterpret_cast<const unsigned char*>(raw.data());
  for (std::uint32_t r = 0; r < h.n_tokens; ++r) {
    for (std::uint32_t c = 0; c < h.hidden_dim; ++c) {
      const float v = std::bit_cast<float>(get_u32(bytes + 4 * (static_cast<std::size_t>(r) * h.hidden_dim + c)));
      if (!std::isfinite(v)) {
        throw ValidationError(fmt::format("{}: non-finite value at layer {}, row {}, col {}", path.string(), layer, r, c));
      }
      m(r, c) = v;
    }
  }
  return m;
}

const DocumentRecord* CorpusManifest::find(const std::string& doc_id) const {
  for (const auto& d : documents) {
    if (d.doc_id == doc_id) return &d;
  }
  return nullptr;
}

namespace {

std::string required_string(const nlohmann::json& obj, const char* key, std::size_t index) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw FormatError(fmt::format("documents[{}]: missing string field '{}'", index, key));
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const nlohmann::json& obj, const char* key, std::size_t index) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw FormatError(fmt::format("documents[{}]: field '{}' must be a string", index, key));
  return it->get<std::string>();
}

}  // namespace

CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open manifest {}", path.string()));

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
  if (!doc.is_object()) throw FormatError(fmt::format("{}: top level must be an object", path.string()));

  CorpusManifest m;
  m.root = path.parent_path();
  if (!doc.contains("format_version") || !doc["format_version"].is_number_integer()) {
    throw FormatError("manifest: missing integer 'format_version'");
  }
  m.format_version = doc["format_version"].get<int>();
  if (m.format_version != kManifestVersion) {
    throw FormatError(fmt::format("manifest: unsupported format_version {}", m.format_version));
  }
  if (!doc.contains("tester_model") || !doc["tester_model"].is_string()) {
    throw FormatError("manifest: missing string 'tester_model'");
  }
  m.tester_model = doc["tester_model"].get<std::string>();
  if (!doc.contains("documents") || !doc["documents"].is_array()) {
    throw FormatError("manifest: missing array 'documents'");
  }

  const auto& records = doc["documents"];
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.is_object()) throw FormatError(fmt::format("documents[{}] must be an object", i));
    DocumentRecord rec;
    rec.doc_id = required_string(r, "doc_id", i);
    rec.source_label = required_string(r, "source_label", i);
    rec.language = required_string(r, "language", i);
    rec.text = optional_string(r, "text", i);
    rec.tensor_path = required_string(r, "tensor_path", i);
    rec.reference_doc_id = optional_string(r, "reference_doc_id", i);
    if (rec.source_label.empty()) {
      throw ValidationError(fmt::format("document '{}': empty source_label", rec.doc_id));
    }
    m.documents.push_back(std::move(rec));
  }

  std::map<std::string, int> counts;
  for (const auto& d : m.documents) ++counts[d.doc_id];
  std::string dupes;
  for (const auto& [id, n] : counts) {
    if (n > 1) dupes += (dupes.empty() ? "" : ", ") + fmt::format("'{}' (x{})", id, n);
  }
  if (!dupes.empty()) throw ValidationError("duplicate doc_id: " + dupes);

  for (const auto& d : m.documents) {
    if (d.reference_doc_id && !counts.contains(*d.reference_doc_id)) {
      throw ValidationError(fmt::format("document '{}': reference_doc_id '{}' not in manifest", d.doc_id,
                                        *d.reference_doc_id));
    }
  }

  const DocumentRecord* first = nullptr;
  for (auto& d : m.documents) {
    const auto tensor = m.resolve(d);
    if (!std::filesystem::is_regular_file(tensor)) {
      throw ValidationError(fmt::format("document '{}': missing tensor file {}", d.doc_id, tensor.string()));
    }
    // Full parse validates payload length and finiteness.
    const LayerStack stack = read_tensor_file(tensor);
    d.n_tokens = stack.n_tokens();
    if (first == nullptr) {
      first = &d;
      m.n_layers = stack.n_layers();
      m.hidden_dim = stack.hidden_dim();
    } else if (stack.n_layers() != m.n_layers || stack.hidden_dim() != m.hidden_dim) {
      throw ValidationError(fmt::format(
          "shape mismatch: document '{}' has {} layers x dim {}, document '{}' has {} layers x dim {}",
          first->doc_id, m.n_layers, m.hidden_dim, d.doc_id, stack.n_layers(), stack.hidden_dim()));
    }
  }
  return m;
}

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
  nlohmann::ordered_json out;
  out["format_version"] = manifest.format_version;
  out["tester_model"] = manifest.tester_model;
  out["documents"] = nlohmann::ordered_json::array();
  for (const auto& d : manifest.documents) {
    nlohmann::ordered_json r;
    r["doc_id"] = d.doc_id;
    r["source_label"] = d.source_label;
    r["language"] = d.language;
    if (d.text) r["text"] = *d.text;
    r["tensor_path"] = d.tensor_path.generic_string();
    if (d.reference_doc_id) r["reference_doc_id"] = *d.reference_doc_id;
    out["documents"].push_back(std::move(r));
  }
  std::ofstream f(path);
  if (!f) throw Error(fmt::format("cannot open {} for writing", path.string()));
  f << out.dump(2) << '\n';
}

}  // namespace geoscore
