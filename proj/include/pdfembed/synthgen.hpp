// SPDX-License-Identifier: Apache-2.0
//
// Synthetic image/replica pairs with a controlled replication level.
//
// The image is divided into a cell grid and the cells are dealt, in raster
// order, into N content regions that tile the image. A real image paints a
// random texture into every region over a random background level. The
// replica of level k keeps regions 0..k-1 of the real image (plus optional
// pixel noise) and repaints the remaining N - k regions with fresh texture,
// so the shared structure grows with k and level N with zero noise is an
// exact copy.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pdfembed/image.hpp"
#include "pdfembed/training.hpp"

namespace pdfembed::synthgen {

struct SynthConfig {
  int image_size = 16;
  int cell_grid = 4;  // cells per side
  int max_level = 5;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  // Relative frequency of each level 0..N; empty means uniform.
  std::vector<double> level_weights;

  void validate() const;
};

/// Region index (0..N-1) of every cell, raster order.
std::vector<int> region_map(const SynthConfig& config);

struct SyntheticPair {
  Image real;
  Image replica;
  int level = 0;
};

/// Deterministic in (config.seed, pair_id, level).
SyntheticPair gen_pair(const SynthConfig& config, int level, std::uint64_t pair_id);

/// Levels for pairs 0..count-1 drawn from config.level_weights.
std::vector<int> draw_levels(const SynthConfig& config, std::size_t count);

/// In-memory dataset of `count` pairs with ids 0..count-1.
std::vector<encoder::TrainingPair> generate(const SynthConfig& config, std::size_t count);

struct PairRecord {
  std::string pair_id;
  std::string real;
  std::string gen;
  int level = 0;

  bool operator==(const PairRecord&) const = default;
};

/// One JSON object per line: {"pair_id", "real", "gen", "level"}.
void write_annotations(const std::filesystem::path& path,
                       const std::vector<PairRecord>& records);
/// Throws Parse (with the line number) on malformed lines and OutOfRange on
/// levels outside [0, max_level].
std::vector<PairRecord> read_annotations(const std::filesystem::path& path,
                                         int max_level);

/// Deterministic shuffle, then the first round(fraction * n) go to train.
/// Throws InvalidArgument if either side would be empty.
std::pair<std::vector<PairRecord>, std::vector<PairRecord>> split(
    const std::vector<PairRecord>& records, double fraction, std::uint64_t seed);

/// Writes images under dir/images and returns the annotation records
/// (paths relative to dir).
std::vector<PairRecord> write_dataset(const std::filesystem::path& dir,
                                      const SynthConfig& config, std::size_t count);

/// Loads the rasters named by `records`, resolving relative paths against
/// `base_dir`.
std::vector<encoder::TrainingPair> load_pairs(const std::vector<PairRecord>& records,
                                              const std::filesystem::path& base_dir);

}  // namespace pdfembed::synthgen
