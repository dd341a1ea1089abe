// SPDX-License-Identifier: Apache-2.0
#include "pdfembed/gallery.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <thread>

#include "pdfembed/binary_io.hpp"
#include "pdfembed/error.hpp"
#include "pdfembed/protocols.hpp"

namespace pdfembed::gallery {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kMinTimedPairs = 100000;
constexpr std::size_t kPairsPerSample = 2000;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Query rows as unit vectors in double.
Matrix unit_rows(const VectorSet& q) {
  Matrix out = q.vectors();
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) /= out.row(r).norm();
  return out;
}

void check_query(const VectorSet& query, const EmbeddingStore& store) {
  if (query.count() != static_cast<std::size_t>(store.max_level()) + 1 || query.dim() != store.dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                "query has " + std::to_string(query.count()) + "x" + std::to_string(query.dim()) +
                    " vectors, store expects " + std::to_string(store.max_level() + 1) + "x" +
                    std::to_string(store.dim()));
  }
}

/// Per-level cosines of entry i against a unit-row query.
void score(const Matrix& query, const EmbeddingStore& store, std::size_t i, std::span<double> h) {
  const auto rec = store.record(i);
  const std::size_t dim = store.dim();
  for (std::size_t l = 0; l < h.size(); ++l) {
    const float* s = rec.data() + l * dim;
    const double* qrow = query.data() + l * dim;
    double dot = 0.0;
    for (std::size_t k = 0; k < dim; ++k) dot += qrow[k] * static_cast<double>(s[k]);
    h[l] = std::clamp(dot, -1.0, 1.0);
  }
}

template <class Fn>
void for_ranges(std::size_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n < 2 * workers) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    pool.emplace_back([&fn, begin, end = std::min(n, begin + chunk)] { fn(begin, end); });
  }
}

}  // namespace

EmbeddingStore::EmbeddingStore(int max_level, std::size_t dim) : max_level_(max_level), dim_(dim) {
  if (max_level < 1 || max_level > 255) {
    throw Error(ErrorKind::InvalidArgument, "store max level must lie in [1, 255]");
  }
  if (dim == 0 || dim > 0xFFFFFFFFu) throw Error(ErrorKind::InvalidArgument, "store dim must be positive");
}

void EmbeddingStore::add(std::uint64_t id, const VectorSet& vectors) {
  if (vectors.count() != static_cast<std::size_t>(max_level_) + 1 || vectors.dim() != dim_) {
    throw Error(ErrorKind::DimensionMismatch, "vector set shape does not match the store");
  }
  if (seen_.contains(id)) {
    throw Error(ErrorKind::DuplicateId, "duplicate gallery id " + std::to_string(id));
  }
  const auto& m = vectors.vectors();
  std::vector<float> rec;
  rec.reserve(record_floats());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double norm = m.row(r).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorKind::ZeroNorm, "entry " + std::to_string(id) + " vector " +
                                           std::to_string(r) + " has zero or non-finite norm");
    }
    for (Eigen::Index c = 0; c < m.cols(); ++c) rec.push_back(static_cast<float>(m(r, c) / norm));
  }
  seen_.insert(id);
  ids_.push_back(id);
  data_.insert(data_.end(), rec.begin(), rec.end());
}

std::span<const float> EmbeddingStore::record(std::size_t i) const {
  if (i >= ids_.size()) throw Error(ErrorKind::OutOfRange, "store index out of range");
  return {data_.data() + i * record_floats(), record_floats()};
}

std::vector<std::uint8_t> EmbeddingStore::encode() const {
  io::ByteWriter w;
  w.put_bytes("DREP");
  w.put_u16(kStoreVersion);
  w.put_u8(static_cast<std::uint8_t>(max_level_));
  w.put_u8(0);
  w.put_u32(static_cast<std::uint32_t>(dim_));
  w.put_u64(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    w.put_u64(ids_[i]);
    for (float v : record(i)) w.put_f32(v);
  }
  w.put_crc();
  return w.bytes();
}

EmbeddingStore EmbeddingStore::decode(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(io::verify_crc(bytes));
  if (r.get_bytes(4) != "DREP") throw Error(ErrorKind::CorruptFile, "not a DREP store (bad magic)");
  const auto version = r.get_u16();
  if (version != kStoreVersion) {
    throw Error(ErrorKind::CorruptFile, "unsupported store version " + std::to_string(version));
  }
  const int max_level = r.get_u8();
  r.get_u8();
  const std::uint32_t dim = r.get_u32();
  const std::uint64_t count = r.get_u64();
  if (max_level < 1 || dim == 0) throw Error(ErrorKind::CorruptFile, "store header has zero N or dim");
  const std::size_t rec_bytes = 8 + (static_cast<std::size_t>(max_level) + 1) * dim * 4;
  if (count > r.remaining() / rec_bytes || r.remaining() != count * rec_bytes) {
    throw Error(ErrorKind::CorruptFile, "store body size does not match its record count");
  }
  EmbeddingStore store(max_level, dim);
  store.ids_.reserve(count);
  store.data_.reserve(count * store.record_floats());
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto id = r.get_u64();
    if (!store.seen_.insert(id).second) {
      throw Error(ErrorKind::CorruptFile, "duplicate id " + std::to_string(id) + " in store");
    }
    store.ids_.push_back(id);
    for (std::size_t k = 0; k < store.record_floats(); ++k) store.data_.push_back(r.get_f32());
  }
  return store;
}

void EmbeddingStore::save(const std::filesystem::path& path) const { io::write_file(path, encode()); }

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
  return decode(io::read_file(path));
}

EmbeddingStore build_store(std::span<const Entry> entries, int max_level, std::size_t dim) {
  EmbeddingStore store(max_level, dim);
  for (const auto& e : entries) {
    if (e.vectors.count() != static_cast<std::size_t>(max_level) + 1 || e.vectors.dim() != dim) {
      throw Error(ErrorKind::InvalidArgument,
                  "entry " + std::to_string(e.id) + " disagrees with the store on N or dim");
    }
    store.add(e.id, e.vectors);
  }
  return store;
}

std::size_t store_file_size(int max_level, std::size_t dim, std::size_t count) {
  return kStoreHeaderBytes + count * (8 + (static_cast<std::size_t>(max_level) + 1) * dim * 4) + 4;
}

bool ranks_before(const MatchResult& a, const MatchResult& b) {
  if (a.level != b.level) return a.level > b.level;
  if (a.peak != b.peak) return a.peak > b.peak;
  return a.gallery_id < b.gallery_id;
}

std::vector<MatchResult> match_one(const VectorSet& query, const EmbeddingStore& store,
                                   int min_level, int threads) {
  check_query(query, store);
  const Matrix q = unit_rows(query);
  const std::size_t levels = static_cast<std::size_t>(store.max_level()) + 1;
  if (min_level > store.max_level()) return {};

  std::vector<double> h_all(store.size() * levels);
  std::vector<int> level_of(store.size());
  for_ranges(store.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      std::span<double> h(h_all.data() + i * levels, levels);
      score(q, store, i, h);
      level_of[i] = encoder::argmax_level(h);
    }
  });

  std::vector<MatchResult> out;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (level_of[i] < min_level) continue;
    MatchResult m;
    m.gallery_id = store.id(i);
    m.level = level_of[i];
    m.h.assign(h_all.begin() + static_cast<std::ptrdiff_t>(i * levels),
               h_all.begin() + static_cast<std::ptrdiff_t>((i + 1) * levels));
    m.peak = m.h[static_cast<std::size_t>(m.level)];
    out.push_back(std::move(m));
  }
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

ScanReport scan(std::span<const VectorSet> queries, const EmbeddingStore& store, int threshold,
                int threads) {
  if (store.size() == 0) throw Error(ErrorKind::InvalidArgument, "cannot scan an empty store");
  ScanReport report;
  report.threshold = threshold;
  for (const auto& q : queries) {
    auto matches = match_one(q, store, 0, threads);
    report.levels.push_back(matches.front().level);
    report.best.push_back(std::move(matches.front()));
  }
  if (!report.levels.empty()) {
    report.replication_ratio = protocols::replication_ratio(report.levels, threshold);
  }

  // Match cost: the scoring kernel alone, sampled in runs of ~kPairsPerSample
  // comparisons and summarized by the median per-pair time.
  if (!queries.empty()) {
    const std::size_t levels = static_cast<std::size_t>(store.max_level()) + 1;
    std::vector<double> h(levels);
    std::vector<double> samples;
    volatile int sink = 0;
    std::size_t qi = 0;
    std::size_t ei = 0;
    Matrix q = unit_rows(queries[0]);
    while (report.timing.timed_pairs < kMinTimedPairs) {
      const auto start = Clock::now();
      for (std::size_t k = 0; k < kPairsPerSample; ++k) {
        score(q, store, ei, h);
        sink = sink + encoder::argmax_level(h);
        if (++ei == store.size()) {
          ei = 0;
          qi = (qi + 1) % queries.size();
          q = unit_rows(queries[qi]);
        }
      }
      samples.push_back(seconds_since(start) / static_cast<double>(kPairsPerSample));
      report.timing.timed_pairs += kPairsPerSample;
    }
    std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2),
                     samples.end());
    report.timing.match_seconds_per_pair = samples[samples.size() / 2];
  }
  return report;
}

ScanReport scan(const encoder::ModelParams& params, std::span<const Image> queries,
                const EmbeddingStore& store, int threshold, int threads) {
  std::vector<VectorSet> encoded;
  encoded.reserve(queries.size());
  const auto start = Clock::now();
  for (const auto& img : queries) encoded.push_back(encoder::forward(params, img));
  const double encode_total = seconds_since(start);
  auto report = scan(encoded, store, threshold, threads);
  if (!queries.empty()) {
    report.timing.encode_seconds_per_image = encode_total / static_cast<double>(queries.size());
  }
  return report;
}

std::uint64_t id_from_name(const std::filesystem::path& path) {
  const std::string stem = path.stem().string();
  std::uint64_t value = 0;
  const auto* end = stem.data() + stem.size();
  auto [ptr, ec] = std::from_chars(stem.data(), end, value);
  if (!stem.empty() && ec == std::errc() && ptr == end) return value;
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : stem) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace pdfembed::gallery
