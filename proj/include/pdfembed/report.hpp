// SPDX-License-Identifier: Apache-2.0
//
// Diagnostic data products and the per-command run manifest.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdfembed/levelpdf.hpp"
#include "pdfembed/model.hpp"

namespace pdfembed::report {

inline constexpr const char* kVersion = "0.1.0";

/// (N+1) x (N+1) cosines between the learned initial class tokens.
Matrix token_heatmap(const encoder::ModelParams& params);
std::string heatmap_csv(const Matrix& heatmap);

struct PairDistribution {
  int label = 0;
  std::vector<double> target;      // supervision pdf for the label
  std::vector<double> raw;         // per-level cosines
  std::vector<double> normalized;  // softmax(raw / temperature)
  int predicted_level = 0;
};

PairDistribution pair_distribution(const encoder::ModelParams& params, const Image& real,
                                   const Image& generated, int label,
                                   const levelpdf::PdfFamily& family);
nlohmann::ordered_json to_json(const PairDistribution& d);

/// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  nlohmann::ordered_json flags = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;
  nlohmann::ordered_json timings = nlohmann::ordered_json::object();

  /// Digests are computed when serialized; missing files are reported as null.
  nlohmann::ordered_json to_json() const;
};

}  // namespace pdfembed::report
