// SPDX-License-Identifier: Apache-2.0
#include "pdfembed/report.hpp"

#include <openssl/evp.h>

#include <algorithm>

#include <cstdio>
#include <memory>
#include <sstream>

#include "pdfembed/binary_io.hpp"
#include "pdfembed/error.hpp"

namespace pdfembed::report {

Matrix token_heatmap(const encoder::ModelParams& params) {
  Matrix tokens = params.view(params.layout().class_tokens);
  for (Eigen::Index r = 0; r < tokens.rows(); ++r) {
    const double norm = tokens.row(r).norm();
    if (!(norm > 0.0)) throw Error(ErrorKind::ZeroNorm, "class token " + std::to_string(r) + " is zero");
    tokens.row(r) /= norm;
  }
  Matrix out = tokens * tokens.transpose();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < out.cols(); ++j) {
      const double v = std::clamp(out(i, j), -1.0, 1.0);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

std::string heatmap_csv(const Matrix& heatmap) {
  std::ostringstream os;
  os.precision(17);
  os << "level";
  for (Eigen::Index j = 0; j < heatmap.cols(); ++j) os << ',' << j;
  os << '\n';
  for (Eigen::Index i = 0; i < heatmap.rows(); ++i) {
    os << i;
    for (Eigen::Index j = 0; j < heatmap.cols(); ++j) os << ',' << heatmap(i, j);
    os << '\n';
  }
  return os.str();
}

PairDistribution pair_distribution(const encoder::ModelParams& params, const Image& real,
                                   const Image& generated, int label,
                                   const levelpdf::PdfFamily& family) {
  const auto& config = params.config();
  const levelpdf::LevelGrid grid(config.max_level);
  PairDistribution d;
  d.label = label;
  d.target = levelpdf::solve(family, label, grid).values;
  const auto vr = encoder::forward(params, real);
  const auto vg = encoder::forward(params, generated);
  d.raw = encoder::predict_raw(vr, vg);
  d.normalized = encoder::normalize_h(d.raw, config.temperature);
  d.predicted_level = encoder::argmax_level(d.raw);
  return d;
}

nlohmann::ordered_json to_json(const PairDistribution& d) {
  nlohmann::ordered_json j;
  j["label"] = d.label;
  j["predicted_level"] = d.predicted_level;
  j["target"] = d.target;
  j["predicted"] = d.normalized;
  j["raw_similarity"] = d.raw;
  return j;
}

std::string file_digest(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) {
    throw Error(ErrorKind::Io, "sha256 failed for " + path.string());
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    char buf[3];
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

nlohmann::ordered_json RunManifest::to_json() const {
  auto digests = [](const std::vector<std::filesystem::path>& paths) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& p : paths) {
      nlohmann::ordered_json e;
      e["path"] = p.string();
      if (std::filesystem::is_regular_file(p)) {
        e["sha256"] = file_digest(p);
      } else {
        e["sha256"] = nullptr;
      }
      out.push_back(std::move(e));
    }
    return out;
  };
  nlohmann::ordered_json j;
  j["command"] = command;
  j["flags"] = flags;
  j["seed"] = seed;
  j["version"] = kVersion;
  j["inputs"] = digests(inputs);
  j["outputs"] = digests(outputs);
  j["timings_seconds"] = timings;
  return j;
}

}  // namespace pdfembed::report
