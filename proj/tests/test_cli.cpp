// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "pdfembed/levelpdf.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int status = -1;
  std::string err;
};

const fs::path& work() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "pdfembed_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run cli(const std::string& args) {
  const auto err = work() / "stderr.txt";
  const std::string cmd = std::string(PDFEMBED_CLI) + " " + args + " > /dev/null 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(err)};
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

std::string path(const std::string& name) { return (work() / name).string(); }

/// Small dataset plus a one-epoch model shared by the pipeline tests.
void ensure_pipeline() {
  static bool done = false;
  if (done) return;
  ASSERT_EQ(cli("synth gen --n-pairs 60 --seed 3 --split 0.8 --out " + path("data")).status, 0);
  std::ofstream(path("cfg.json")) << R"({"epochs": 1, "batch_size": 16, "embed_dim": 16, "num_heads": 2, "num_layers": 1})";
  ASSERT_EQ(cli("train --config " + path("cfg.json") + " --data " + path("data/train.jsonl") +
                " --objective kl-exp --amplitude 0.1 --seed 1 --out " + path("model.bin"))
                .status,
            0);
  done = true;
}

}  // namespace

TEST(Cli, HelpExitsZero) { EXPECT_EQ(cli("--help").status, 0); }

TEST(Cli, PdfSolveWritesFullPrecision) {
  ASSERT_EQ(cli("pdf solve --family linear --amplitude 0.3 --level 3 --max-level 5 --out " + path("pdf.json")).status, 0);
  const auto text = slurp(path("pdf.json"));
  const auto j = json::parse(text);
  EXPECT_EQ(j["family"], "linear");
  EXPECT_EQ(j["level"], 3);
  const pdfembed::levelpdf::LevelGrid grid(5);
  const auto pdf = pdfembed::levelpdf::solve_linear(0.6, 0.3, grid);
  ASSERT_EQ(j["values"].size(), 6U);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(j["values"][i].get<double>(), pdf.values[i]);
  EXPECT_EQ(j["solved_param"].get<double>(), pdf.solved_param);
  EXPECT_NE(text.find("\"A\": 0.29999999999999999"), std::string::npos) << text;
  EXPECT_TRUE(fs::exists(path("pdf.json.manifest.json")));
}

TEST(Cli, ExitCodes) {
  auto r = cli("pdf solve --family gaussian --amplitude 1.0 --level 3 --out " + path("x.json"));
  EXPECT_EQ(r.status, 3);
  const auto err = json::parse(r.err);
  EXPECT_EQ(err["kind"], "Unsolvable");
  EXPECT_EQ(cli("pdf solve --family linear --amplitude 0.3 --level 9 --out " + path("x.json")).status, 2);
  EXPECT_EQ(cli("pdf solve --family cauchy --amplitude 0.3 --level 1 --out " + path("x.json")).status, 2);
  EXPECT_EQ(cli("pdf solve --family linear --amplitude 0.9 --level 1 --out " + path("x.json")).status, 3);
  EXPECT_EQ(cli("train --data /nonexistent.jsonl --out " + path("m.bin")).status, 2);
  EXPECT_EQ(cli("frobnicate").status, 2);
  r = cli("eval --model " + path("missing.bin") + " --data x --out " + path("r.json"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NO_THROW(json::parse(r.err));
}

TEST(Cli, SynthGenIsReproducible) {
  ASSERT_EQ(cli("synth gen --n-pairs 8 --seed 4 --out " + path("s1")).status, 0);
  ASSERT_EQ(cli("synth gen --n-pairs 8 --seed 4 --out " + path("s2")).status, 0);
  const auto m1 = load(path("s1/manifest.json"));
  const auto m2 = load(path("s2/manifest.json"));
  EXPECT_EQ(m1["outputs"][0]["sha256"], m2["outputs"][0]["sha256"]);
  EXPECT_EQ(slurp(path("s1/images/000005_gen.imgf")), slurp(path("s2/images/000005_gen.imgf")));
  EXPECT_EQ(m1["command"], "synth gen");
  EXPECT_EQ(m1["seed"], 4);
}

TEST(Cli, TrainWritesCheckpointLogAndManifest) {
  ensure_pipeline();
  const auto log = load(path("model.bin.log.json"));
  EXPECT_EQ(log["objective"], "kl-exp");
  ASSERT_FALSE(log["steps"].empty());
  for (const char* key : {"step", "objective", "loss", "skipped_batches"}) {
    EXPECT_TRUE(log["steps"][0].contains(key)) << key;
  }
  EXPECT_TRUE(fs::exists(path("model.bin.manifest.json")));
}

TEST(Cli, TrainIsReproducibleFromManifest) {
  ensure_pipeline();
  ASSERT_EQ(cli("train --config " + path("cfg.json") + " --data " + path("data/train.jsonl") +
                " --objective kl-exp --amplitude 0.1 --seed 1 --out " + path("model2.bin"))
                .status,
            0);
  EXPECT_EQ(load(path("model.bin.manifest.json"))["outputs"][0]["sha256"],
            load(path("model2.bin.manifest.json"))["outputs"][0]["sha256"]);
}

TEST(Cli, EvalReport) {
  ensure_pipeline();
  ASSERT_EQ(cli("eval --model " + path("model.bin") + " --data " + path("data/test.jsonl") + " --out " +
                path("eval.json"))
                .status,
            0);
  const auto j = load(path("eval.json"));
  EXPECT_TRUE(j["pcc"].is_number() || j["pcc"] == "undefined");
  EXPECT_EQ(j["n"], 12);
  EXPECT_EQ(j["per_level_histogram"].size(), 6U);
  EXPECT_GE(j["rd"].get<double>(), 0.0);
  EXPECT_LE(j["rd"].get<double>(), 1.0);
  EXPECT_TRUE(j.contains("replication_ratio"));
}

TEST(Cli, IndexBuildAndScan) {
  ensure_pipeline();
  ASSERT_EQ(cli("index build --model " + path("model.bin") + " --images " + path("data/images") + " --out " +
                path("gallery.drep"))
                .status,
            0);
  EXPECT_EQ(fs::file_size(path("gallery.drep")), 20U + 120U * (8U + 6U * 16U * 4U) + 4U);
  ASSERT_EQ(cli("scan --model " + path("model.bin") + " --index " + path("gallery.drep") + " --queries " +
                path("data/images") + " --threshold 4 --out " + path("scan.json"))
                .status,
            0);
  const auto j = load(path("scan.json"));
  EXPECT_EQ(j["n_queries"], 120);
  EXPECT_EQ(j["replication_ratio"], 1.0);  // every query is also in the gallery
  EXPECT_GT(j["timing"]["encode_seconds_per_image"].get<double>(), 0.0);
  EXPECT_GT(j["timing"]["match_seconds_per_pair"].get<double>(), 0.0);
  EXPECT_EQ(j["queries"][0]["gallery_name"], j["queries"][0]["query"]);
}

TEST(Cli, Reports) {
  ensure_pipeline();
  ASSERT_EQ(cli("report heatmap --model " + path("model.bin") + " --out " + path("heat.csv")).status, 0);
  std::ifstream in(path("heat.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "level,0,1,2,3,4,5");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 6);

  ASSERT_EQ(cli("report pair --model " + path("model.bin") + " --real " + path("data/images/000000_real.imgf") +
                " --gen " + path("data/images/000000_gen.imgf") + " --level 2 --family linear --amplitude 0.3 --out " +
                path("pair.json"))
                .status,
            0);
  const auto j = load(path("pair.json"));
  const pdfembed::levelpdf::LevelGrid grid(5);
  const auto g = pdfembed::levelpdf::solve_linear(0.4, 0.3, grid).values;
  double ts = 0, ps = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(j["target"][i].get<double>(), g[i]);
    ts += j["target"][i].get<double>();
    ps += j["predicted"][i].get<double>();
  }
  EXPECT_NEAR(ts, 1.0, 1e-9);
  EXPECT_NEAR(ps, 1.0, 1e-9);
}

TEST(Cli, Sweep) {
  ensure_pipeline();
  ASSERT_EQ(cli("sweep --amplitudes 0.1,1.0,1e-5 --family exp --config " + path("cfg.json") + " --data " +
                path("data/train.jsonl") + " --test " + path("data/test.jsonl") + " --out " + path("sweep.json"))
                .status,
            0);
  const auto j = load(path("sweep.json"));
  ASSERT_EQ(j["results"].size(), 3U);
  EXPECT_EQ(j["results"][0]["status"], "ok");
  EXPECT_EQ(j["results"][2]["status"], "error");
  EXPECT_TRUE(fs::exists(path("sweep.json.csv")));
}
