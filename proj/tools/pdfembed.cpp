// SPDX-License-Identifier: Apache-2.0
//
// pdfembed: command-line driver for the replication-level pipeline.
//
// Exit status: 0 on success, 2 for invalid input, 3 for numerical failure.
// Failures print one JSON object {"error", "kind", "message"} on stderr.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pdfembed/binary_io.hpp"
#include "pdfembed/checkpoint.hpp"
#include "pdfembed/error.hpp"
#include "pdfembed/gallery.hpp"
#include "pdfembed/inference.hpp"
#include "pdfembed/levelpdf.hpp"
#include "pdfembed/protocols.hpp"
#include "pdfembed/report.hpp"
#include "pdfembed/synthgen.hpp"
#include "pdfembed/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace pdfembed;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt17_array(const std::vector<double>& values) {
  std::string s = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ", ";
    s += fmt17(values[i]);
  }
  return s + "]";
}

void write_json(const fs::path& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

fs::path require_out(const Globals& g) {
  if (g.out.empty()) throw Error(ErrorKind::InvalidArgument, "--out is required");
  return g.out;
}

fs::path manifest_path(const fs::path& out) {
  if (fs::is_directory(out)) return out / "manifest.json";
  return fs::path(out.string() + ".manifest.json");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".imgf") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::InvalidArgument, "no .imgf images under " + dir.string());
  return files;
}

std::vector<encoder::TrainingPair> load_dataset(const fs::path& annotations, int max_level) {
  const auto records = synthgen::read_annotations(annotations, max_level);
  if (records.empty()) throw Error(ErrorKind::InvalidArgument, "no pairs in " + annotations.string());
  return synthgen::load_pairs(records, annotations.parent_path());
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw Error(ErrorKind::Parse, "not a number: '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorKind::Parse, "empty number list");
  return out;
}

// ---------------------------------------------------------------- training

struct TrainSetup {
  encoder::ModelConfig model;
  encoder::Schedule schedule;
  objectives::ObjectiveSpec objective;
};

TrainSetup make_setup(const std::string& config_path, const std::string& objective_name,
                      std::optional<double> amplitude, const Globals& g) {
  TrainSetup s;
  s.objective = objectives::ObjectiveSpec::from_name(objective_name);
  if (!config_path.empty()) {
    json cfg;
    try {
      cfg = json::parse(std::ifstream(config_path));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, config_path + ": " + e.what());
    }
    if (!cfg.is_object()) throw Error(ErrorKind::Parse, config_path + ": expected a JSON object");
    for (const auto& [key, value] : cfg.items()) {
      try {
        if (key == "patch_size") s.model.patch_size = value.get<int>();
        else if (key == "embed_dim") s.model.embed_dim = value.get<int>();
        else if (key == "num_layers") s.model.num_layers = value.get<int>();
        else if (key == "num_heads") s.model.num_heads = value.get<int>();
        else if (key == "mlp_ratio") s.model.mlp_ratio = value.get<int>();
        else if (key == "max_level") s.model.max_level = value.get<int>();
        else if (key == "temperature") s.objective.temperature = value.get<double>();
        else if (key == "epochs") s.schedule.epochs = value.get<int>();
        else if (key == "lr") s.schedule.base_lr = value.get<double>();
        else if (key == "batch_size") s.schedule.batch_size = value.get<int>();
        else if (key == "momentum") s.schedule.momentum = value.get<double>();
        else if (key == "amplitude") s.objective.family.amplitude = value.get<double>();
        else if (key == "epsilon") s.objective.epsilon = value.get<double>();
        else throw Error(ErrorKind::InvalidArgument, config_path + ": unknown key '" + key + "'");
      } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, config_path + ": key '" + key + "': " + e.what());
      }
    }
  }
  if (amplitude) s.objective.family.amplitude = *amplitude;
  s.objective.validate();
  s.model.temperature = s.objective.temperature;
  s.model.head = s.objective.head();
  s.schedule.seed = g.seed;
  s.schedule.threads = g.threads;
  return s;
}

void fit_image_shape(encoder::ModelConfig& config, const std::vector<encoder::TrainingPair>& pairs) {
  const auto& first = pairs.front().real;
  config.image_height = first.height;
  config.image_width = first.width;
  config.channels = first.channels;
  config.validate();
}

json train_log(const encoder::TrainResult& r, const objectives::ObjectiveSpec& objective) {
  json steps = json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"step", s.step},
                     {"epoch", s.epoch},
                     {"objective", objective.name()},
                     {"lr", s.lr},
                     {"loss", s.loss},
                     {"skipped", s.skipped},
                     {"skipped_batches", s.skipped_batches}});
  }
  json epochs = json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"skipped_batches", e.skipped_batches}});
  }
  return {{"objective", objective.name()},
          {"skipped_batches", r.skipped_batches},
          {"steps", steps},
          {"epochs", epochs}};
}

json evaluate_pairs(const encoder::ModelParams& params, const std::vector<encoder::TrainingPair>& pairs,
                    int threshold) {
  const int n_levels = params.config().max_level;
  const auto pred = encoder::predict_pairs(params, pairs);
  json j;
  if (const auto r = protocols::try_pcc(pred.scores, pred.labels)) {
    j["pcc"] = *r;
  } else {
    j["pcc"] = "undefined";
  }
  j["rd"] = protocols::rd(pred.scores, pred.labels, n_levels);
  j["n"] = pairs.size();
  j["per_level_histogram"] = protocols::level_histogram(pred.levels, n_levels);
  std::vector<int> labels;
  for (const auto& p : pairs) labels.push_back(p.level);
  j["label_histogram"] = protocols::level_histogram(labels, n_levels);
  j["replication_threshold"] = threshold;
  j["replication_ratio"] = protocols::replication_ratio(pred.levels, threshold);
  return j;
}

// ---------------------------------------------------------------- commands

void cmd_pdf_solve(const Globals& g, const std::string& family, double amplitude, int level,
                   int max_level) {
  const auto out = require_out(g);
  const auto start = std::chrono::steady_clock::now();
  const levelpdf::LevelGrid grid(max_level);
  const levelpdf::PdfFamily fam{levelpdf::parse_family(family), amplitude};
  const auto pdf = levelpdf::solve(fam, level, grid);
  levelpdf::validate_shape(pdf, fam, grid);

  std::string text = "{\n";
  text += "  \"family\": \"" + std::string(levelpdf::to_string(fam.kind)) + "\",\n";
  text += "  \"A\": " + fmt17(amplitude) + ",\n";
  text += "  \"level\": " + std::to_string(level) + ",\n";
  text += "  \"max_level\": " + std::to_string(max_level) + ",\n";
  text += "  \"solved_param\": " + fmt17(pdf.solved_param) + ",\n";
  text += "  \"values\": " + fmt17_array(pdf.values) + "\n}\n";
  io::write_text(out, text);

  report::RunManifest m{"pdf solve",
                        {{"family", family}, {"amplitude", amplitude}, {"level", level}, {"max_level", max_level}},
                        g.seed, {}, {out}, {{"total", seconds_since(start)}}};
  write_json(manifest_path(out), m.to_json());
}

void cmd_synth_gen(const Globals& g, std::size_t n_pairs, int max_level, int size, double noise_std,
                   const std::string& level_weights, double split_fraction) {
  const fs::path out = require_out(g);
  const auto start = std::chrono::steady_clock::now();
  synthgen::SynthConfig config;
  config.image_size = size;
  config.max_level = max_level;
  config.noise_std = noise_std;
  config.seed = g.seed;
  if (!level_weights.empty()) config.level_weights = parse_doubles(level_weights);
  config.validate();
  if (n_pairs == 0) throw Error(ErrorKind::InvalidArgument, "--n-pairs must be positive");

  fs::create_directories(out);
  const auto records = synthgen::write_dataset(out, config, n_pairs);
  synthgen::write_annotations(out / "annotations.jsonl", records);
  std::vector<fs::path> outputs{out / "annotations.jsonl"};
  if (split_fraction > 0.0) {
    const auto [train, test] = synthgen::split(records, split_fraction, g.seed);
    synthgen::write_annotations(out / "train.jsonl", train);
    synthgen::write_annotations(out / "test.jsonl", test);
    outputs.push_back(out / "train.jsonl");
    outputs.push_back(out / "test.jsonl");
  }

  report::RunManifest m{"synth gen",
                        {{"n_pairs", n_pairs},
                         {"max_level", max_level},
                         {"size", size},
                         {"noise_std", noise_std},
                         {"level_weights", config.level_weights},
                         {"split", split_fraction}},
                        g.seed, {}, outputs, {{"total", seconds_since(start)}}};
  write_json(out / "manifest.json", m.to_json());
}

void cmd_train(const Globals& g, const std::string& config_path, const std::string& data,
               const std::string& objective, std::optional<double> amplitude) {
  const fs::path out = require_out(g);
  const auto start = std::chrono::steady_clock::now();
  auto setup = make_setup(config_path, objective, amplitude, g);
  const auto pairs = load_dataset(data, setup.model.max_level);
  fit_image_shape(setup.model, pairs);
  const double load_time = seconds_since(start);

  const auto result = encoder::train(setup.model, pairs, setup.objective, setup.schedule,
                                     [](const encoder::EpochRecord& e) {
                                       std::cerr << "epoch " << e.epoch << " loss " << e.mean_loss << '\n';
                                     });
  encoder::save_checkpoint(out, result.params);
  const fs::path log = out.string() + ".log.json";
  write_json(log, train_log(result, setup.objective));

  std::vector<fs::path> inputs{data};
  if (!config_path.empty()) inputs.emplace_back(config_path);
  report::RunManifest m{"train",
                        {{"config", config_path},
                         {"data", data},
                         {"objective", setup.objective.name()},
                         {"amplitude", setup.objective.family.amplitude},
                         {"temperature", setup.objective.temperature},
                         {"epochs", setup.schedule.epochs},
                         {"lr", setup.schedule.base_lr},
                         {"batch_size", setup.schedule.batch_size},
                         {"momentum", setup.schedule.momentum},
                         {"threads", g.threads}},
                        g.seed, inputs, {out, log},
                        {{"load", load_time}, {"total", seconds_since(start)}}};
  write_json(manifest_path(out), m.to_json());
}

void cmd_eval(const Globals& g, const std::string& model, const std::string& data, int threshold) {
  const fs::path out = require_out(g);
  const auto start = std::chrono::steady_clock::now();
  const auto params = encoder::load_checkpoint(model);
  const auto pairs = load_dataset(data, params.config().max_level);
  write_json(out, evaluate_pairs(params, pairs, threshold));
  report::RunManifest m{"eval", {{"model", model}, {"data", data}, {"threshold", threshold}},
                        g.seed, {model, data}, {out}, {{"total", seconds_since(start)}}};
  write_json(manifest_path(out), m.to_json());
}

void cmd_index_build(const Globals& g, const std::string& model, const std::string& images) {
  const fs::path out = require_out(g);
  const auto start = std::chrono::steady_clock::now();
  const auto params = encoder::load_checkpoint(model);
  const auto files = list_images(images);
  gallery::EmbeddingStore store(params.config().max_level, static_cast<std::size_t>(params.config().embed_dim));
  json names = json::object();
  for (const auto& f : files) {
    const auto id = gallery::id_from_name(f);
    store.add(id, encoder::forward(params, read_image(f)));
    names[std::to_string(id)] = fs::relative(f, images).string();
  }
  store.save(out);
  const fs::path names_path = out.string() + ".names.json";
  write_json(names_path, names);
  report::RunManifest m{"index build", {{"model", model}, {"images", images}, {"count", files.size()}},
                        g.seed, {model}, {out, names_path}, {{"total", seconds_since(start)}}};
  write_json(manifest_path(out), m.to_json());
}

void cmd_scan(const Globals& g, const std::string& model, const std::string& index,
              const std::string& queries, int threshold) {
  const fs::path out = require_out(g);
  const auto start = std::chrono::steady_clock::now();
  const auto params = encoder::load_checkpoint(model);
  const auto store = gallery::EmbeddingStore::load(index);
  const auto files = list_images(queries);
  std::vector<Image> images;
  for (const auto& f : files) images.push_back(read_image(f));

  json names = json::object();
  const fs::path names_path = index + ".names.json";
  if (fs::is_regular_file(names_path)) names = json::parse(std::ifstream(names_path));

  const auto rep = gallery::scan(params, images, store, threshold, g.threads);
  json rows = json::array();
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto& b = rep.best[i];
    json row;
    row["query"] = fs::relative(files[i], queries).string();
    row["gallery_id"] = b.gallery_id;
    const auto key = std::to_string(b.gallery_id);
    if (names.contains(key)) row["gallery_name"] = names[key];
    row["level"] = b.level;
    row["peak"] = b.peak;
    row["h"] = b.h;
    rows.push_back(std::move(row));
  }
  json j;
  j["threshold"] = threshold;
  j["n_queries"] = files.size();
  j["store_size"] = store.size();
  j["replication_ratio"] = rep.replication_ratio;
  j["timing"] = {{"encode_seconds_per_image", rep.timing.encode_seconds_per_image},
                 {"match_seconds_per_pair", rep.timing.match_seconds_per_pair},
                 {"timed_pairs", rep.timing.timed_pairs},
                 {"method", "steady_clock; match is the median per-pair time over samples of 2000 "
                            "comparisons, at least 1e5 pairs in total, warm cache"}};
  j["queries"] = rows;
  write_json(out, j);
  report::RunManifest m{"scan", {{"model", model}, {"index", index}, {"queries", queries}, {"threshold", threshold}},
                        g.seed, {model, index}, {out}, {{"total", seconds_since(start)}}};
  write_json(manifest_path(out), m.to_json());
}

void cmd_sweep(const Globals& g, const std::string& amplitudes, const std::string& family,
               const std::string& config_path, const std::string& data, const std::string& test,
               int threshold) {
  const fs::path out = require_out(g);
  const auto start = std::chrono::steady_clock::now();
  const auto values = parse_doubles(amplitudes);
  const auto fam = levelpdf::parse_family(family);
  const std::string objective = fam == levelpdf::Family::Gaussian ? "kl-gauss"
                                : fam == levelpdf::Family::Linear ? "kl-linear"
                                                                  : "kl-exp";
  auto base = make_setup(config_path, objective, std::nullopt, g);
  const auto train_pairs = load_dataset(data, base.model.max_level);
  const auto test_pairs = load_dataset(test, base.model.max_level);
  fit_image_shape(base.model, train_pairs);

  json rows = json::array();
  std::string csv = "amplitude,pcc,rd,status\n";
  int failures = 0;
  for (double a : values) {
    auto setup = base;
    setup.objective.family.amplitude = a;
    json row{{"amplitude", a}};
    try {
      const auto result = encoder::train(setup.model, train_pairs, setup.objective, setup.schedule);
      const auto ev = evaluate_pairs(result.params, test_pairs, threshold);
      row["pcc"] = ev["pcc"];
      row["rd"] = ev["rd"];
      row["status"] = "ok";
      csv += fmt17(a) + "," + (ev["pcc"].is_number() ? fmt17(ev["pcc"].get<double>()) : "undefined") + "," +
             fmt17(ev["rd"].get<double>()) + ",ok\n";
    } catch (const Error& e) {
      ++failures;
      row["status"] = "error";
      row["kind"] = to_string(e.kind());
      row["message"] = e.what();
      csv += fmt17(a) + ",,," + std::string(to_string(e.kind())) + "\n";
    }
    std::cerr << "amplitude " << a << ": " << row["status"].get<std::string>() << '\n';
    rows.push_back(std::move(row));
  }
  write_json(out, {{"family", levelpdf::to_string(fam)}, {"results", rows}});
  const fs::path csv_path = out.string() + ".csv";
  io::write_text(csv_path, csv);
  report::RunManifest m{"sweep",
                        {{"amplitudes", values}, {"family", family}, {"config", config_path},
                         {"data", data}, {"test", test}},
                        g.seed, {data, test}, {out, csv_path}, {{"total", seconds_since(start)}}};
  write_json(manifest_path(out), m.to_json());
  if (failures == static_cast<int>(values.size())) {
    throw Error(ErrorKind::Unsolvable, "every amplitude in the sweep failed");
  }
}

void cmd_report_heatmap(const Globals& g, const std::string& model) {
  const fs::path out = require_out(g);
  const auto params = encoder::load_checkpoint(model);
  io::write_text(out, report::heatmap_csv(report::token_heatmap(params)));
  report::RunManifest m{"report heatmap", {{"model", model}}, g.seed, {model}, {out}, {}};
  write_json(manifest_path(out), m.to_json());
}

void cmd_report_pair(const Globals& g, const std::string& model, const std::string& real,
                     const std::string& gen, int level, const std::string& family,
                     std::optional<double> amplitude) {
  const fs::path out = require_out(g);
  const auto params = encoder::load_checkpoint(model);
  const auto kind = levelpdf::parse_family(family);
  const levelpdf::PdfFamily fam{kind, amplitude.value_or(levelpdf::default_amplitude(kind))};
  const auto d = report::pair_distribution(params, read_image(real), read_image(gen), level, fam);
  auto j = report::to_json(d);
  j["family"] = levelpdf::to_string(kind);
  j["amplitude"] = fam.amplitude;
  write_json(out, j);
  report::RunManifest m{"report pair", {{"model", model}, {"real", real}, {"gen", gen}, {"level", level}},
                        g.seed, {model, real, gen}, {out}, {}};
  write_json(manifest_path(out), m.to_json());
}

void print_error(std::string_view kind, std::string_view message) {
  json j{{"error", true}, {"kind", kind}, {"message", message}};
  std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Replication-level embeddings: supervision pdfs, training, evaluation, gallery scan"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--out", g.out, "Output file or directory");

  std::function<void()> run;
  auto sub = [](CLI::App* parent, const std::string& name, const std::string& help) {
    auto* s = parent->add_subcommand(name, help);
    s->fallthrough();
    return s;
  };

  // pdf solve
  auto* pdf = sub(&app, "pdf", "Supervision pdfs");
  pdf->require_subcommand(1);
  auto* solve = sub(pdf, "solve", "Solve one supervision pdf");
  std::string family = "exp";
  double amplitude = 1.0;
  int level = 0;
  int max_level = 5;
  solve->add_option("--family", family, "gaussian | linear | exp")->required();
  solve->add_option("--amplitude", amplitude, "Amplitude A")->required();
  solve->add_option("--level", level, "Integer level")->required();
  solve->add_option("--max-level", max_level, "N")->capture_default_str();
  solve->callback([&] { run = [&] { cmd_pdf_solve(g, family, amplitude, level, max_level); }; });

  // synth gen
  auto* synth = sub(&app, "synth", "Synthetic data");
  synth->require_subcommand(1);
  auto* gen = sub(synth, "gen", "Generate image/replica pairs");
  std::size_t n_pairs = 0;
  int size = 16;
  double noise_std = 0.0;
  std::string level_weights;
  double split_fraction = 0.0;
  gen->add_option("--n-pairs", n_pairs, "Number of pairs")->required();
  gen->add_option("--max-level", max_level, "N")->capture_default_str();
  gen->add_option("--size", size, "Image side in pixels")->capture_default_str();
  gen->add_option("--noise-std", noise_std, "Pixel noise on retained regions")->capture_default_str();
  gen->add_option("--level-weights", level_weights, "Comma-separated relative level frequencies");
  gen->add_option("--split", split_fraction, "Also write train/test files with this train fraction");
  gen->callback([&] {
    run = [&] { cmd_synth_gen(g, n_pairs, max_level, size, noise_std, level_weights, split_fraction); };
  });

  // train
  auto* train = sub(&app, "train", "Train an encoder");
  std::string config_path;
  std::string data;
  std::string objective = "kl-exp";
  std::optional<double> amp_override;
  train->add_option("--config", config_path, "JSON model/schedule config");
  train->add_option("--data", data, "Training annotations (.jsonl)")->required();
  train->add_option("--objective", objective,
                    "kl-gauss | kl-linear | kl-exp | pcc | rd | regression | onehot | labelsmooth")
      ->capture_default_str();
  train->add_option("--amplitude", amp_override, "Override the pdf amplitude");
  train->callback([&] { run = [&] { cmd_train(g, config_path, data, objective, amp_override); }; });

  // eval
  auto* eval = sub(&app, "eval", "Evaluate a model on labeled pairs");
  std::string model;
  int threshold = 4;
  eval->add_option("--model", model, "Checkpoint")->required();
  eval->add_option("--data", data, "Annotations (.jsonl)")->required();
  eval->add_option("--threshold", threshold, "Replication threshold")->capture_default_str();
  eval->callback([&] { run = [&] { cmd_eval(g, model, data, threshold); }; });

  // index build
  auto* index = sub(&app, "index", "Gallery index");
  index->require_subcommand(1);
  auto* build = sub(index, "build", "Encode a directory of images into a store");
  std::string images;
  build->add_option("--model", model, "Checkpoint")->required();
  build->add_option("--images", images, "Directory of .imgf images")->required();
  build->callback([&] { run = [&] { cmd_index_build(g, model, images); }; });

  // scan
  auto* scan = sub(&app, "scan", "Match query images against a store");
  std::string index_path;
  std::string queries;
  scan->add_option("--model", model, "Checkpoint")->required();
  scan->add_option("--index", index_path, "Store file")->required();
  scan->add_option("--queries", queries, "Directory of .imgf images")->required();
  scan->add_option("--threshold", threshold, "Replication threshold")->capture_default_str();
  scan->callback([&] { run = [&] { cmd_scan(g, model, index_path, queries, threshold); }; });

  // sweep
  auto* sweep = sub(&app, "sweep", "Train and evaluate once per amplitude");
  std::string amplitudes;
  std::string test;
  sweep->add_option("--amplitudes", amplitudes, "Comma-separated amplitudes")->required();
  sweep->add_option("--family", family, "gaussian | linear | exp")->capture_default_str();
  sweep->add_option("--config", config_path, "JSON model/schedule config");
  sweep->add_option("--data", data, "Training annotations")->required();
  sweep->add_option("--test", test, "Test annotations")->required();
  sweep->add_option("--threshold", threshold, "Replication threshold")->capture_default_str();
  sweep->callback([&] {
    run = [&] { cmd_sweep(g, amplitudes, family, config_path, data, test, threshold); };
  });

  // report
  auto* rep = sub(&app, "report", "Diagnostic data products");
  rep->require_subcommand(1);
  auto* heatmap = sub(rep, "heatmap", "Cosine matrix of the learned class tokens (CSV)");
  heatmap->add_option("--model", model, "Checkpoint")->required();
  heatmap->callback([&] { run = [&] { cmd_report_heatmap(g, model); }; });
  auto* pair = sub(rep, "pair", "Target and predicted level distribution for one pair (JSON)");
  std::string real;
  std::string generated;
  pair->add_option("--model", model, "Checkpoint")->required();
  pair->add_option("--real", real, "Real image")->required();
  pair->add_option("--gen", generated, "Generated image")->required();
  pair->add_option("--level", level, "Label level")->required();
  pair->add_option("--family", family, "Target family")->capture_default_str();
  pair->add_option("--amplitude", amp_override, "Target amplitude");
  pair->callback([&] {
    run = [&] { cmd_report_pair(g, model, real, generated, level, family, amp_override); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("Usage", e.what());
    return kExitInput;
  }

  try {
    run();
  } catch (const Error& e) {
    print_error(to_string(e.kind()), e.what());
    return is_numerical(e.kind()) ? kExitNumerical : kExitInput;
  } catch (const fs::filesystem_error& e) {
    print_error("Io", e.what());
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    print_error("Parse", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    print_error("Internal", e.what());
    return kExitInput;
  }
  return 0;
}
