// SPDX-License-Identifier: Apache-2.0
#include "pdfembed/vectorset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pdfembed/error.hpp"

namespace pdfembed {

VectorSet::VectorSet(Matrix vectors) : vectors_(std::move(vectors)) {
  for (Eigen::Index i = 0; i < vectors_.rows(); ++i) {
    const double norm = vectors_.row(i).norm();
    if (!std::isfinite(norm)) {
      throw Error(ErrorKind::NonFinite,
                  "vector " + std::to_string(i) + " is not finite");
    }
    if (norm == 0.0) {
      throw Error(ErrorKind::ZeroNorm,
                  "vector " + std::to_string(i) + " has zero norm");
    }
  }
}

VectorSet VectorSet::scaled(double factor) const {
  if (!(factor > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "scale factor must be positive");
  }
  return VectorSet(vectors_ * factor);
}

namespace encoder {

namespace {

void check_compatible(const VectorSet& a, const VectorSet& b) {
  if (a.count() != b.count() || a.dim() != b.dim() || a.count() == 0) {
    throw Error(ErrorKind::DimensionMismatch,
                "vector sets differ in shape (" + std::to_string(a.count()) +
                    "x" + std::to_string(a.dim()) + " vs " +
                    std::to_string(b.count()) + "x" + std::to_string(b.dim()) +
                    ")");
  }
}

}  // namespace

std::vector<double> predict_raw(const VectorSet& real, const VectorSet& generated) {
  check_compatible(real, generated);
  const auto& a = real.vectors();
  const auto& b = generated.vectors();
  std::vector<double> h(real.count());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double na = a.row(i).norm();
    const double nb = b.row(i).norm();
    if (na == 0.0 || nb == 0.0) {
      throw Error(ErrorKind::ZeroNorm, "zero-norm vector in similarity");
    }
    h[static_cast<std::size_t>(i)] =
        std::clamp(a.row(i).dot(b.row(i)) / (na * nb), -1.0, 1.0);
  }
  return h;
}

std::vector<double> normalize_h(std::span<const double> h, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorKind::InvalidArgument, "temperature must be positive");
  }
  if (h.empty()) {
    throw Error(ErrorKind::InvalidArgument, "empty similarity vector");
  }
  double top = -INFINITY;
  for (double v : h) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::NonFinite, "non-finite similarity");
    }
    top = std::max(top, v);
  }
  std::vector<double> q(h.size());
  double total = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    q[i] = std::exp((h[i] - top) / temperature);
    total += q[i];
  }
  for (double& v : q) v /= total;
  return q;
}

int argmax_level(std::span<const double> h) {
  if (h.empty()) {
    throw Error(ErrorKind::InvalidArgument, "empty similarity vector");
  }
  if (std::all_of(h.begin(), h.end(),
                  [](double v) { return v >= 1.0 - kSaturation; })) {
    return static_cast<int>(h.size()) - 1;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (h[i] > h[best]) best = i;
  }
  return static_cast<int>(best);
}

LevelPrediction predict_level(const VectorSet& real, const VectorSet& generated,
                              const levelpdf::LevelGrid& grid) {
  if (real.count() != grid.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "vector set size does not match the level grid");
  }
  const auto h = predict_raw(real, generated);
  const int j = argmax_level(h);
  return {j, grid.point(static_cast<std::size_t>(j))};
}

void cosine_backward(const VectorSet& real, const VectorSet& generated,
                     std::span<const double> d_h, Matrix& d_real,
                     Matrix& d_generated) {
  check_compatible(real, generated);
  const auto& a = real.vectors();
  const auto& b = generated.vectors();
  d_real.setZero(a.rows(), a.cols());
  d_generated.setZero(b.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double g = d_h[static_cast<std::size_t>(i)];
    if (g == 0.0) continue;
    const double na = a.row(i).norm();
    const double nb = b.row(i).norm();
    const double c = a.row(i).dot(b.row(i)) / (na * nb);
    // d cos / da = b / (|a||b|) - cos * a / |a|^2, symmetric for b.
    d_real.row(i) = g * (b.row(i) / (na * nb) - c * a.row(i) / (na * na));
    d_generated.row(i) = g * (a.row(i) / (na * nb) - c * b.row(i) / (nb * nb));
  }
}

}  // namespace encoder
}  // namespace pdfembed
