// SPDX-License-Identifier: Apache-2.0
//
// Evaluation protocols for predicted vs. labeled replication levels.
#pragma once

#include <optional>
#include <span>
#include <vector>

namespace pdfembed::protocols {

/// Pearson correlation of two equally long sequences.
/// Throws ZeroVariance if either sequence is constant.
double pcc(std::span<const double> predictions, std::span<const double> labels);

/// Same as pcc() but reports "undefined" instead of throwing.
std::optional<double> try_pcc(std::span<const double> predictions,
                              std::span<const double> labels);

struct Deviation {
  double relative = 0.0;  // |p - l| / max(N - l, l)
  double absolute = 0.0;  // |p - l| / N
};

Deviation deviations(double prediction, double label, int max_level);

/// Mean relative deviation. Predictions are clamped to [0, N] first; labels
/// must already lie in [0, N].
double rd(std::span<const double> predictions, std::span<const double> labels,
          int max_level);

/// Maps a similarity in [0, 1] onto the level scale.
double scale_similarity(double similarity, int max_level);

/// Fraction of levels >= threshold. Throws InvalidArgument on empty input.
double replication_ratio(std::span<const int> levels, int threshold = 4);

/// Count of each level 0..N.
std::vector<int> level_histogram(std::span<const int> levels, int max_level);

}  // namespace pdfembed::protocols
