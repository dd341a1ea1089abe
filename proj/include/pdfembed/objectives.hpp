// SPDX-License-Identifier: Apache-2.0
//
// Training objectives over batches of (real, generated, level) pairs.
//
// Distribution objectives (KL against a supervision pdf, one-hot and
// label-smoothed cross-entropy) compare softmax(h / tau) with a target over
// the N + 1 levels. Scalar objectives (PCC, RD, absolute deviation) act on a
// single prediction s = N * sigmoid(h_0 / tau) taken from the first
// class-token pair. Every batch loss is a mean over pairs, except PCC which
// is defined on the batch as a whole.
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdfembed/levelpdf.hpp"
#include "pdfembed/model.hpp"
#include "pdfembed/vectorset.hpp"

namespace pdfembed::objectives {

enum class Kind { KL, PCC, RD, Regression, OneHot, LabelSmooth };

struct ObjectiveSpec {
  Kind kind = Kind::KL;
  levelpdf::PdfFamily family{levelpdf::Family::Exponential, 1.0};
  double epsilon = 0.0;
  double temperature = 0.1;

  void validate() const;
  encoder::Head head() const;
  /// CLI name: kl-gauss, kl-linear, kl-exp, pcc, rd, regression, onehot,
  /// labelsmooth.
  std::string name() const;

  /// Builds a spec from its CLI name with the default amplitude for KL
  /// families and epsilon 0.5 for label smoothing.
  static ObjectiveSpec from_name(std::string_view name);
};

/// sum_i g_i log(g_i / q_i) with 0 log 0 = 0. Throws InvalidArgument if any
/// q_i <= 0.
double kl_loss(std::span<const double> g, std::span<const double> q);

/// (1 - eps) at `level` plus eps / (N + 1) everywhere.
std::vector<double> smoothed_target(int level, int max_level, double epsilon);

/// Cross-entropy -sum_i t_i log q_i against the smoothed one-hot target.
double classification_objective(std::span<const double> q, int level,
                                double epsilon);

struct ScalarLoss {
  double value = 0.0;
  std::vector<double> grad;  // d value / d prediction_i
};

/// 1 - PCC(predictions, labels). Throws ZeroVariance for constant input.
ScalarLoss pcc_objective(std::span<const double> predictions,
                         std::span<const double> labels);

/// Mean of |p - l| / max(N - l, l).
ScalarLoss rd_objective(std::span<const double> predictions,
                        std::span<const double> labels, int max_level);

/// Mean of |p - l|.
ScalarLoss regression_objective(std::span<const double> predictions,
                                std::span<const double> labels);

/// N * sigmoid(h0 / tau).
double scalar_head(double h0, int max_level, double temperature);

struct PairExample {
  VectorSet real;
  VectorSet generated;
  int level = 0;
};

struct BatchGradient {
  double loss = 0.0;
  bool skipped = false;
  std::vector<Matrix> d_real;
  std::vector<Matrix> d_generated;
};

/// Loss of the batch and its gradient with respect to every vector set.
/// A PCC batch with constant predictions or labels comes back with
/// skipped = true, zero loss and zero gradients.
BatchGradient evaluate(const ObjectiveSpec& spec,
                       std::span<const PairExample> batch,
                       const levelpdf::LevelGrid& grid);

}  // namespace pdfembed::objectives
