// SPDX-License-Identifier: Apache-2.0
//
// Reference gallery of per-image vector sets and an exhaustive matcher.
//
// Stored vectors are unit-normalized f32, so a comparison is N + 1 dot
// products accumulated in double. On-disk layout (little-endian):
//   "DREP" | u16 version | u8 N | u8 pad | u32 dim | u64 count
//   count x ( u64 id | (N+1)*dim f32 )
//   u32 CRC32 of everything above
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "pdfembed/image.hpp"
#include "pdfembed/model.hpp"
#include "pdfembed/vectorset.hpp"

namespace pdfembed::gallery {

inline constexpr std::uint16_t kStoreVersion = 1;
inline constexpr std::size_t kStoreHeaderBytes = 4 + 2 + 1 + 1 + 4 + 8;

class EmbeddingStore {
 public:
  EmbeddingStore(int max_level, std::size_t dim);

  /// Normalizes and appends; throws DuplicateId, DimensionMismatch, ZeroNorm.
  void add(std::uint64_t id, const VectorSet& vectors);

  int max_level() const noexcept { return max_level_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t record_floats() const noexcept { return (static_cast<std::size_t>(max_level_) + 1) * dim_; }

  std::uint64_t id(std::size_t i) const { return ids_.at(i); }
  /// (N+1) * dim unit vectors of entry i, row-major.
  std::span<const float> record(std::size_t i) const;

  std::vector<std::uint8_t> encode() const;
  static EmbeddingStore decode(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static EmbeddingStore load(const std::filesystem::path& path);

 private:
  int max_level_;
  std::size_t dim_;
  std::vector<std::uint64_t> ids_;
  std::vector<float> data_;
  std::unordered_set<std::uint64_t> seen_;
};

struct Entry {
  std::uint64_t id = 0;
  VectorSet vectors;
};

/// Throws InvalidArgument if the sets disagree on N or dim.
EmbeddingStore build_store(std::span<const Entry> entries, int max_level, std::size_t dim);

/// Stored file size for `count` entries.
std::size_t store_file_size(int max_level, std::size_t dim, std::size_t count);

struct MatchResult {
  std::uint64_t gallery_id = 0;
  int level = 0;
  std::vector<double> h;
  double peak = 0.0;

  bool operator==(const MatchResult&) const = default;
};

/// Level descending, then peak descending, then id ascending.
bool ranks_before(const MatchResult& a, const MatchResult& b);

/// Every entry whose predicted level is >= min_level, in ranking order.
std::vector<MatchResult> match_one(const VectorSet& query, const EmbeddingStore& store,
                                   int min_level = 0, int threads = 1);

struct ScanTiming {
  double encode_seconds_per_image = 0.0;
  double match_seconds_per_pair = 0.0;  // median over timed samples
  std::size_t timed_pairs = 0;
};

struct ScanReport {
  std::vector<MatchResult> best;  // one per query
  std::vector<int> levels;
  int threshold = 4;
  double replication_ratio = 0.0;
  ScanTiming timing;
};

/// Best match per query plus match timing. Throws InvalidArgument on an
/// empty store.
ScanReport scan(std::span<const VectorSet> queries, const EmbeddingStore& store,
                int threshold = 4, int threads = 1);

/// Encodes the query images (timed), then scans.
ScanReport scan(const encoder::ModelParams& params, std::span<const Image> queries,
                const EmbeddingStore& store, int threshold = 4, int threads = 1);

/// Numeric file stem if it parses as an unsigned integer, otherwise the
/// 64-bit FNV-1a hash of the stem.
std::uint64_t id_from_name(const std::filesystem::path& path);

}  // namespace pdfembed::gallery
