// SPDX-License-Identifier: Apache-2.0
#include "pdfembed/inference.hpp"

#include <algorithm>
#include <cmath>

#include "pdfembed/objectives.hpp"

namespace pdfembed::encoder {

double predict_score(const ModelParams& params, const VectorSet& real,
                     const VectorSet& generated) {
  const auto& c = params.config();
  if (c.head == Head::Scalar) {
    const auto h = predict_raw(real, generated);
    return objectives::scalar_head(h[0], c.max_level, c.temperature);
  }
  const levelpdf::LevelGrid grid(c.max_level);
  return predict_level(real, generated, grid).level;
}

int score_to_level(double score, int max_level) {
  const auto l = static_cast<int>(std::lround(score));
  return std::clamp(l, 0, max_level);
}

PairPredictions predict_pairs(const ModelParams& params,
                              std::span<const TrainingPair> pairs) {
  PairPredictions out;
  for (const auto& pair : pairs) {
    const auto s = predict_score(params, forward(params, pair.real),
                                 forward(params, pair.generated));
    out.scores.push_back(s);
    out.labels.push_back(pair.level);
    out.levels.push_back(score_to_level(s, params.config().max_level));
  }
  return out;
}

}  // namespace pdfembed::encoder
