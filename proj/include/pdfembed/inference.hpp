// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "pdfembed/model.hpp"
#include "pdfembed/training.hpp"

namespace pdfembed::encoder {

/// Level-scale prediction for one pair: the argmax level for distribution
/// heads, N * sigmoid(h_0 / tau) for scalar heads.
double predict_score(const ModelParams& params, const VectorSet& real,
                     const VectorSet& generated);

/// Integer level implied by a score (rounded and clamped to [0, N]).
int score_to_level(double score, int max_level);

struct PairPredictions {
  std::vector<double> scores;
  std::vector<double> labels;
  std::vector<int> levels;
};

PairPredictions predict_pairs(const ModelParams& params,
                              std::span<const TrainingPair> pairs);

}  // namespace pdfembed::encoder
