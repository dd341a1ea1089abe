// SPDX-License-Identifier: Apache-2.0
#include "pdfembed/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pdfembed/error.hpp"

namespace pdfembed::protocols {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "prediction and label sequences differ in length");
  }
}

void check_label(double label, int max_level) {
  if (!(label >= 0.0 && label <= max_level)) {
    throw Error(ErrorKind::OutOfRange,
                "label " + std::to_string(label) + " outside [0, N]");
  }
}

}  // namespace

double pcc(std::span<const double> predictions, std::span<const double> labels) {
  check_lengths(predictions, labels);
  const std::size_t n = predictions.size();
  if (n < 2) {
    throw Error(ErrorKind::ZeroVariance, "PCC needs at least two pairs");
  }
  double mean_p = 0.0;
  double mean_l = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_p += predictions[i];
    mean_l += labels[i];
  }
  mean_p /= static_cast<double>(n);
  mean_l /= static_cast<double>(n);

  double cov = 0.0;
  double var_p = 0.0;
  double var_l = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dp = predictions[i] - mean_p;
    const double dl = labels[i] - mean_l;
    cov += dp * dl;
    var_p += dp * dp;
    var_l += dl * dl;
  }
  if (var_p <= 0.0 || var_l <= 0.0) {
    throw Error(ErrorKind::ZeroVariance, "PCC undefined for a constant sequence");
  }
  return std::clamp(cov / (std::sqrt(var_p) * std::sqrt(var_l)), -1.0, 1.0);
}

std::optional<double> try_pcc(std::span<const double> predictions,
                              std::span<const double> labels) {
  try {
    return pcc(predictions, labels);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ZeroVariance) return std::nullopt;
    throw;
  }
}

Deviation deviations(double prediction, double label, int max_level) {
  const double gap = std::abs(prediction - label);
  const double worst = std::max(max_level - label, label);
  return {gap / worst, gap / max_level};
}

double rd(std::span<const double> predictions, std::span<const double> labels,
          int max_level) {
  check_lengths(predictions, labels);
  if (predictions.empty()) {
    throw Error(ErrorKind::InvalidArgument, "RD of an empty series");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    check_label(labels[i], max_level);
    const double p =
        std::clamp(predictions[i], 0.0, static_cast<double>(max_level));
    total += deviations(p, labels[i], max_level).relative;
  }
  return total / static_cast<double>(predictions.size());
}

double scale_similarity(double similarity, int max_level) {
  return similarity * max_level;
}

double replication_ratio(std::span<const int> levels, int threshold) {
  if (levels.empty()) {
    throw Error(ErrorKind::InvalidArgument, "replication ratio of no levels");
  }
  auto hits = std::count_if(levels.begin(), levels.end(),
                            [threshold](int l) { return l >= threshold; });
  return static_cast<double>(hits) / static_cast<double>(levels.size());
}

std::vector<int> level_histogram(std::span<const int> levels, int max_level) {
  std::vector<int> hist(static_cast<std::size_t>(max_level) + 1, 0);
  for (int l : levels) {
    if (l < 0 || l > max_level) {
      throw Error(ErrorKind::OutOfRange, "level outside [0, N]");
    }
    ++hist[static_cast<std::size_t>(l)];
  }
  return hist;
}

}  // namespace pdfembed::protocols
