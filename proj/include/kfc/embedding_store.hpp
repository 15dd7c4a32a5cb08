#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kfc/error.hpp"

namespace kfc {

/// N x D frame embeddings, row-major, held in double precision.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  EmbeddingMatrix(std::size_t n_frames, std::size_t dim, std::vector<double> data,
                  bool normalized = false)
      : n_frames_(n_frames), dim_(dim), data_(std::move(data)), normalized_(normalized) {
    if (n_frames_ == 0 || dim_ == 0) throw Error(Errc::DimZero, "embedding matrix is empty");
    if (data_.size() != n_frames_ * dim_) {
      throw Error(Errc::DimMismatch, "data length " + std::to_string(data_.size()) +
                                         " != n_frames * dim");
    }
  }

  std::size_t n_frames() const noexcept { return n_frames_; }
  std::size_t dim() const noexcept { return dim_; }
  bool normalized() const noexcept { return normalized_; }
  std::span<const double> data() const noexcept { return data_; }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * dim_, dim_);
  }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t n_frames_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
  bool normalized_ = false;
};

class QueryVector {
 public:
  QueryVector() = default;

  explicit QueryVector(std::vector<double> data, bool normalized = false)
      : data_(std::move(data)), normalized_(normalized) {
    if (data_.empty()) throw Error(Errc::DimZero, "query vector is empty");
  }

  std::size_t dim() const noexcept { return data_.size(); }
  bool normalized() const noexcept { return normalized_; }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const QueryVector&, const QueryVector&) = default;

 private:
  std::vector<double> data_;
  bool normalized_ = false;
};

/// Frame index -> caption text. Text is kept verbatim.
using CaptionSet = std::map<std::size_t, std::string>;

inline constexpr std::size_t kMaxCaptionBytes = 512;
inline constexpr std::uint32_t kKfceVersion = 1;
inline constexpr std::size_t kKfceHeaderBytes = 16;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

namespace detail {

inline double checked_norm(std::span<const double> v, std::size_t index) {
  double norm = std::sqrt(dot(v, v));
  if (!(norm > 1e-12)) throw Error(Errc::ZeroRow, "degenerate embedding", static_cast<std::int64_t>(index));
  return norm;
}

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

struct KfcePayload {
  std::uint32_t n_frames;
  std::uint32_t dim;
  std::vector<double> values;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline KfcePayload read_kfce(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < kKfceHeaderBytes || bytes.compare(0, 4, "KFCE") != 0) {
    throw Error(Errc::MalformedHeader, "bad magic in " + path.string());
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t version = get_u32(p + 4);
  if (version != kKfceVersion) {
    throw Error(Errc::MalformedHeader, "unsupported version " + std::to_string(version));
  }
  KfcePayload out{get_u32(p + 8), get_u32(p + 12), {}};
  if (out.n_frames == 0 || out.dim == 0) throw Error(Errc::DimZero, path.string());
  const std::uint64_t count = std::uint64_t{out.n_frames} * out.dim;
  const std::uint64_t expected = kKfceHeaderBytes + 4 * count;
  if (bytes.size() < expected) {
    throw Error(Errc::TruncatedPayload, "expected " + std::to_string(expected) + " bytes, got " +
                                            std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) throw Error(Errc::MalformedHeader, "trailing bytes after payload");
  out.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    out.values[i] = std::bit_cast<float>(get_u32(p + kKfceHeaderBytes + 4 * i));
  }
  return out;
}

inline void write_kfce(const std::filesystem::path& path, std::size_t n_frames, std::size_t dim,
                       std::span<const double> values) {
  if (n_frames == 0 || dim == 0) throw Error(Errc::DimZero, "refusing to write empty matrix");
  std::string out;
  out.reserve(kKfceHeaderBytes + 4 * values.size());
  out.append("KFCE");
  put_u32(out, kKfceVersion);
  put_u32(out, static_cast<std::uint32_t>(n_frames));
  put_u32(out, static_cast<std::uint32_t>(dim));
  for (double v : values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(Errc::IoFailure, "short write to " + path.string());
}

}  // namespace detail

/// Reads a KFCE file. The result is flagged unnormalized.
inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  auto payload = detail::read_kfce(path);
  return EmbeddingMatrix(payload.n_frames, payload.dim, std::move(payload.values), false);
}

/// Query files are KFCE with exactly one row.
inline QueryVector load_query(const std::filesystem::path& path) {
  auto payload = detail::read_kfce(path);
  if (payload.n_frames != 1) {
    throw Error(Errc::MalformedHeader, "query file must hold one row, found " +
                                           std::to_string(payload.n_frames));
  }
  return QueryVector(std::move(payload.values), false);
}

/// Payload is narrowed to float32; values that are already float-representable
/// survive a write/load cycle bit for bit.
inline void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  detail::write_kfce(path, m.n_frames(), m.dim(), m.data());
}

inline void write_query(const QueryVector& q, const std::filesystem::path& path) {
  detail::write_kfce(path, 1, q.dim(), q.data());
}

inline EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m) {
  std::vector<double> out(m.data().begin(), m.data().end());
  for (std::size_t i = 0; i < m.n_frames(); ++i) {
    const double norm = detail::checked_norm(m.row(i), i);
    for (std::size_t d = 0; d < m.dim(); ++d) out[i * m.dim() + d] /= norm;
  }
  return EmbeddingMatrix(m.n_frames(), m.dim(), std::move(out), true);
}

inline QueryVector normalize(const QueryVector& q) {
  std::vector<double> out(q.data().begin(), q.data().end());
  const double norm = detail::checked_norm(q.data(), 0);
  for (double& v : out) v /= norm;
  return QueryVector(std::move(out), true);
}

/// Parses line-delimited {"index": i, "text": "..."} records. Blank lines are
/// skipped; line numbers in errors are 1-based.
inline CaptionSet parse_captions(std::istream& in) {
  CaptionSet out;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("index") ||
        !rec.contains("text") || !rec["index"].is_number_integer() || !rec["text"].is_string()) {
      throw Error(Errc::MalformedLine, "expected {\"index\": int, \"text\": string}", lineno);
    }
    const auto index = rec["index"].get<std::int64_t>();
    if (index < 0) throw Error(Errc::NegativeIndex, "caption index", index);
    auto text = rec["text"].get<std::string>();
    if (text.size() > kMaxCaptionBytes) {
      throw Error(Errc::MalformedLine, "caption longer than 512 bytes", lineno);
    }
    auto [it, inserted] = out.emplace(static_cast<std::size_t>(index), std::move(text));
    if (!inserted) throw Error(Errc::DuplicateIndex, "caption index repeated", index);
  }
  return out;
}

inline CaptionSet load_captions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return parse_captions(in);
}

inline void write_captions(const CaptionSet& captions, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  for (const auto& [index, text] : captions) {
    out << nlohmann::json{{"index", index}, {"text", text}}.dump() << '\n';
  }
}

/// Checks that every caption refers to a frame of an n_frames-long video.
inline void check_captions(const CaptionSet& captions, std::size_t n_frames) {
  if (!captions.empty() && captions.rbegin()->first >= n_frames) {
    throw Error(Errc::IndexOutOfRange, "caption beyond video length",
                static_cast<std::int64_t>(captions.rbegin()->first));
  }
}

}  // namespace kfc
