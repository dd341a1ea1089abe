// SPDX-License-Identifier: Apache-2.0
//
// Representative vector sets and the per-level similarity read-out.
//
// A VectorSet holds the final states of the N + 1 class tokens of one image.
// Comparing two sets token by token gives the raw similarity vector h, whose
// argmax is the predicted replication level.
#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

#include "pdfembed/levelpdf.hpp"

namespace pdfembed {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class VectorSet {
 public:
  VectorSet() = default;
  /// One row per level; throws ZeroNorm if any row has zero norm.
  explicit VectorSet(Matrix vectors);

  std::size_t count() const noexcept { return static_cast<std::size_t>(vectors_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors_.cols()); }
  const Matrix& vectors() const noexcept { return vectors_; }

  /// Copy with every vector multiplied by `factor` (> 0).
  VectorSet scaled(double factor) const;

 private:
  Matrix vectors_;
};

namespace encoder {

/// All h entries at or above 1 - kSaturation mean every token pair points the
/// same way; such pairs are read out as the top level.
inline constexpr double kSaturation = 1e-6;

/// h_i = cos(real_i, generated_i).
std::vector<double> predict_raw(const VectorSet& real, const VectorSet& generated);

/// softmax(h / temperature).
std::vector<double> normalize_h(std::span<const double> h, double temperature);

/// Argmax with ties going to the lowest index, except that a saturated h
/// (every entry within kSaturation of 1) maps to the last index.
int argmax_level(std::span<const double> h);

struct LevelPrediction {
  int level = 0;
  double normalized = 0.0;
};

LevelPrediction predict_level(const VectorSet& real, const VectorSet& generated,
                              const levelpdf::LevelGrid& grid);

/// Back-propagates dL/dh through the per-row cosines.
void cosine_backward(const VectorSet& real, const VectorSet& generated,
                     std::span<const double> d_h, Matrix& d_real,
                     Matrix& d_generated);

}  // namespace encoder
}  // namespace pdfembed
