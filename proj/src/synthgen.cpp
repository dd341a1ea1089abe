// SPDX-License-Identifier: Apache-2.0
#include "pdfembed/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "pdfembed/error.hpp"

namespace pdfembed::synthgen {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t pair_seed(std::uint64_t seed, std::uint64_t pair_id) {
  return splitmix64(splitmix64(seed) ^ pair_id);
}

float clip01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

}  // namespace

void SynthConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::InvalidArgument, "synth config: " + what);
  };
  if (max_level < 1) fail("max level must be >= 1");
  if (cell_grid < 1 || image_size < 1 || image_size % cell_grid != 0) {
    fail("image size must be a positive multiple of the cell grid");
  }
  if (cell_grid * cell_grid < max_level) fail("fewer cells than content regions");
  if (!(noise_std >= 0.0)) fail("noise_std must be >= 0");
  if (!level_weights.empty()) {
    if (level_weights.size() != static_cast<std::size_t>(max_level) + 1) {
      fail("level weights need one entry per level");
    }
    double total = 0.0;
    for (double w : level_weights) {
      if (!(w >= 0.0)) fail("level weights must be nonnegative");
      total += w;
    }
    if (!(total > 0.0)) fail("level weights sum to zero");
  }
}

std::vector<int> region_map(const SynthConfig& config) {
  config.validate();
  const int cells = config.cell_grid * config.cell_grid;
  const int base = cells / config.max_level;
  const int extra = cells % config.max_level;
  std::vector<int> map;
  map.reserve(static_cast<std::size_t>(cells));
  for (int r = 0; r < config.max_level; ++r) {
    const int size = base + (r < extra ? 1 : 0);
    map.insert(map.end(), static_cast<std::size_t>(size), r);
  }
  return map;
}

SyntheticPair gen_pair(const SynthConfig& config, int level, std::uint64_t pair_id) {
  config.validate();
  if (level < 0 || level > config.max_level) {
    throw Error(ErrorKind::OutOfRange, "level " + std::to_string(level) + " outside [0, N]");
  }
  std::mt19937_64 rng(pair_seed(config.seed, pair_id));
  std::uniform_real_distribution<double> background(0.25, 0.75);
  std::uniform_real_distribution<double> texture(-0.5, 0.5);
  std::normal_distribution<double> noise(0.0, config.noise_std > 0.0 ? config.noise_std : 1.0);

  const int size = config.image_size;
  const int cell = size / config.cell_grid;
  const auto regions = region_map(config);

  SyntheticPair out{Image(size, size, 1), Image(size, size, 1), level};
  const double bg = background(rng);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const int region = regions[static_cast<std::size_t>((y / cell) * config.cell_grid + x / cell)];
      const double real = bg + texture(rng);
      const double fresh = bg + texture(rng);
      out.real.at(y, x) = clip01(real);
      if (region < level) {
        double v = out.real.at(y, x);
        if (config.noise_std > 0.0) v += noise(rng);
        out.replica.at(y, x) = clip01(v);
      } else {
        out.replica.at(y, x) = clip01(fresh);
      }
    }
  }
  return out;
}

std::vector<int> draw_levels(const SynthConfig& config, std::size_t count) {
  config.validate();
  std::vector<double> weights = config.level_weights;
  if (weights.empty()) weights.assign(static_cast<std::size_t>(config.max_level) + 1, 1.0);
  std::mt19937_64 rng(splitmix64(config.seed ^ 0x6C6576656CULL));
  std::discrete_distribution<int> dist(weights.begin(), weights.end());
  std::vector<int> levels(count);
  for (auto& l : levels) l = dist(rng);
  return levels;
}

std::vector<encoder::TrainingPair> generate(const SynthConfig& config, std::size_t count) {
  const auto levels = draw_levels(config, count);
  std::vector<encoder::TrainingPair> pairs;
  pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto p = gen_pair(config, levels[i], i);
    pairs.push_back({std::move(p.real), std::move(p.replica), p.level});
  }
  return pairs;
}

void write_annotations(const std::filesystem::path& path,
                       const std::vector<PairRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["pair_id"] = r.pair_id;
    j["real"] = r.real;
    j["gen"] = r.gen;
    j["level"] = r.level;
    out << j.dump() << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

std::vector<PairRecord> read_annotations(const std::filesystem::path& path,
                                         int max_level) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<PairRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    PairRecord r;
    try {
      const auto j = nlohmann::json::parse(line);
      r.pair_id = j.at("pair_id").get<std::string>();
      r.real = j.at("real").get<std::string>();
      r.gen = j.at("gen").get<std::string>();
      r.level = j.at("level").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, where + ": malformed record: " + e.what());
    }
    if (r.level < 0 || r.level > max_level) {
      throw Error(ErrorKind::OutOfRange,
                  where + ": level " + std::to_string(r.level) + " outside [0, " +
                      std::to_string(max_level) + "]");
    }
    records.push_back(std::move(r));
  }
  return records;
}

std::pair<std::vector<PairRecord>, std::vector<PairRecord>> split(
    const std::vector<PairRecord>& records, double fraction, std::uint64_t seed) {
  if (records.empty()) throw Error(ErrorKind::InvalidArgument, "cannot split an empty record list");
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "split fraction must lie in (0, 1)");
  }
  const auto n_train = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(records.size())));
  if (n_train == 0 || n_train == records.size()) {
    throw Error(ErrorKind::InvalidArgument, "split leaves one side empty");
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(splitmix64(seed));
  std::shuffle(order.begin(), order.end(), rng);

  std::pair<std::vector<PairRecord>, std::vector<PairRecord>> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? out.first : out.second).push_back(records[order[i]]);
  }
  return out;
}

std::vector<PairRecord> write_dataset(const std::filesystem::path& dir,
                                      const SynthConfig& config, std::size_t count) {
  const auto image_dir = dir / "images";
  std::filesystem::create_directories(image_dir);
  const auto levels = draw_levels(config, count);
  std::vector<PairRecord> records;
  records.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto pair = gen_pair(config, levels[i], i);
    char id[32];
    std::snprintf(id, sizeof id, "%06zu", i);
    PairRecord r{id, "images/" + std::string(id) + "_real.imgf",
                 "images/" + std::string(id) + "_gen.imgf", pair.level};
    write_image(dir / r.real, pair.real);
    write_image(dir / r.gen, pair.replica);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<encoder::TrainingPair> load_pairs(const std::vector<PairRecord>& records,
                                              const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  std::vector<encoder::TrainingPair> pairs;
  pairs.reserve(records.size());
  for (const auto& r : records) {
    pairs.push_back({read_image(resolve(r.real)), read_image(resolve(r.gen)), r.level});
  }
  return pairs;
}

}  // namespace pdfembed::synthgen
