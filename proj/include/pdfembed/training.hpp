// SPDX-License-Identifier: Apache-2.0
//
// Minibatch training of the patch encoder: exact batch gradients for any
// objective and SGD with momentum under a cosine-decayed learning rate.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pdfembed/image.hpp"
#include "pdfembed/model.hpp"
#include "pdfembed/objectives.hpp"

namespace pdfembed::encoder {

struct TrainingPair {
  Image real;
  Image generated;
  int level = 0;
};

struct GradientResult {
  double loss = 0.0;
  bool skipped = false;
};

/// Writes into `grads` (overwriting it) the gradient of the batch loss over
/// pairs[indices]. Per-pair contributions are reduced in index order, so the
/// result does not depend on `threads`.
GradientResult compute_gradients(const ModelParams& params,
                                 std::span<const TrainingPair> pairs,
                                 std::span<const std::size_t> indices,
                                 const objectives::ObjectiveSpec& objective,
                                 ModelParams& grads, int threads = 1);

/// Gradient over every pair in `pairs`.
GradientResult compute_gradients(const ModelParams& params,
                                 std::span<const TrainingPair> pairs,
                                 const objectives::ObjectiveSpec& objective,
                                 ModelParams& grads, int threads = 1);

/// Batch loss without gradients.
double batch_loss(const ModelParams& params, std::span<const TrainingPair> pairs,
                  const objectives::ObjectiveSpec& objective);

struct Schedule {
  int epochs = 15;
  double base_lr = 0.05;
  int batch_size = 32;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// base * (1 + cos(pi * step / total_steps)) / 2.
double cosine_lr(double base_lr, long step, long total_steps);

struct StepRecord {
  long step = 0;
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  bool skipped = false;
  int skipped_batches = 0;  // running total
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;  // over non-skipped batches
  int skipped_batches = 0;
};

struct TrainResult {
  ModelParams params;
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  int skipped_batches = 0;
};

/// Trains from ModelParams::initialize(config, schedule.seed). The config's
/// head and temperature are taken from the objective. Throws Divergence with
/// the offending step index if a loss or update becomes non-finite.
TrainResult train(ModelConfig config, std::span<const TrainingPair> pairs,
                  const objectives::ObjectiveSpec& objective,
                  const Schedule& schedule,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Continues training from `init` (its config must carry the right head).
TrainResult train_from(ModelParams init, std::span<const TrainingPair> pairs,
                       const objectives::ObjectiveSpec& objective,
                       const Schedule& schedule,
                       const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace pdfembed::encoder
