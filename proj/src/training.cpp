// SPDX-License-Identifier: Apache-2.0
#include "pdfembed/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "pdfembed/error.hpp"

namespace pdfembed::encoder {

namespace {

// Runs fn(i) for i in [0, n) over up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t used = std::min(workers, n);
  pool.reserve(used);
  for (std::size_t w = 0; w < used; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += used) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

ModelConfig with_objective(ModelConfig config,
                           const objectives::ObjectiveSpec& objective) {
  config.head = objective.head();
  config.temperature = objective.temperature;
  return config;
}

}  // namespace

GradientResult compute_gradients(const ModelParams& params,
                                 std::span<const TrainingPair> pairs,
                                 std::span<const std::size_t> indices,
                                 const objectives::ObjectiveSpec& objective,
                                 ModelParams& grads, int threads) {
  if (indices.empty()) {
    throw Error(ErrorKind::InvalidArgument, "empty batch");
  }
  const auto n = indices.size();
  std::vector<ForwardCache> cache_real(n);
  std::vector<ForwardCache> cache_gen(n);
  std::vector<objectives::PairExample> examples(n);

  parallel_for(n, threads, [&](std::size_t b) {
    const auto& pair = pairs[indices[b]];
    examples[b].real = forward(params, pair.real, cache_real[b]);
    examples[b].generated = forward(params, pair.generated, cache_gen[b]);
    examples[b].level = pair.level;
  });

  const levelpdf::LevelGrid grid(params.config().max_level);
  auto batch = objectives::evaluate(objective, examples, grid);

  std::fill(grads.values().begin(), grads.values().end(), 0.0);
  if (batch.skipped) {
    return {batch.loss, true};
  }

  std::vector<ModelParams> per_pair(n, ModelParams::zeros(params.config()));
  parallel_for(n, threads, [&](std::size_t b) {
    backward(params, cache_real[b], batch.d_real[b], per_pair[b]);
    backward(params, cache_gen[b], batch.d_generated[b], per_pair[b]);
  });
  auto out = grads.values();
  for (const auto& g : per_pair) {
    auto in = g.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
  }
  return {batch.loss, false};
}

GradientResult compute_gradients(const ModelParams& params,
                                 std::span<const TrainingPair> pairs,
                                 const objectives::ObjectiveSpec& objective,
                                 ModelParams& grads, int threads) {
  std::vector<std::size_t> all(pairs.size());
  std::iota(all.begin(), all.end(), 0);
  return compute_gradients(params, pairs, all, objective, grads, threads);
}

double batch_loss(const ModelParams& params, std::span<const TrainingPair> pairs,
                  const objectives::ObjectiveSpec& objective) {
  std::vector<objectives::PairExample> examples;
  examples.reserve(pairs.size());
  for (const auto& pair : pairs) {
    examples.push_back({forward(params, pair.real), forward(params, pair.generated),
                        pair.level});
  }
  const levelpdf::LevelGrid grid(params.config().max_level);
  return objectives::evaluate(objective, examples, grid).loss;
}

double cosine_lr(double base_lr, long step, long total_steps) {
  if (total_steps <= 0) return base_lr;
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

TrainResult train(ModelConfig config, std::span<const TrainingPair> pairs,
                  const objectives::ObjectiveSpec& objective,
                  const Schedule& schedule,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config = with_objective(config, objective);
  return train_from(ModelParams::initialize(config, schedule.seed), pairs,
                    objective, schedule, on_epoch);
}

TrainResult train_from(ModelParams init, std::span<const TrainingPair> pairs,
                       const objectives::ObjectiveSpec& objective,
                       const Schedule& schedule,
                       const std::function<void(const EpochRecord&)>& on_epoch) {
  objective.validate();
  if (pairs.empty()) {
    throw Error(ErrorKind::InvalidArgument, "training set is empty");
  }
  if (schedule.epochs < 0 || schedule.batch_size < 1 || !(schedule.base_lr >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "invalid training schedule");
  }
  if (init.config().head != objective.head()) {
    throw Error(ErrorKind::InvalidArgument,
                "model head does not match objective " + objective.name());
  }

  TrainResult result{std::move(init), {}, {}, 0};
  auto& params = result.params;
  auto grads = ModelParams::zeros(params.config());
  std::vector<double> velocity(params.values().size(), 0.0);

  const auto n = pairs.size();
  const auto bs = static_cast<std::size_t>(schedule.batch_size);
  const long steps_per_epoch = static_cast<long>((n + bs - 1) / bs);
  const long total_steps = steps_per_epoch * schedule.epochs;

  // Shuffling draws from its own stream so it never perturbs initialization.
  std::mt19937_64 rng(schedule.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(n);
  long step = 0;

  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    int used = 0;
    int skipped = 0;
    for (std::size_t start = 0; start < n; start += bs, ++step) {
      const std::size_t stop = std::min(n, start + bs);
      std::span<const std::size_t> batch(order.data() + start, stop - start);
      const double lr = cosine_lr(schedule.base_lr, step, total_steps);

      GradientResult g;
      try {
        g = compute_gradients(params, pairs, batch, objective, grads, schedule.threads);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NonFinite) throw;
        throw Error(ErrorKind::Divergence,
                    "non-finite value at step " + std::to_string(step) + ": " + e.what());
      }
      if (!std::isfinite(g.loss)) {
        throw Error(ErrorKind::Divergence,
                    "loss became non-finite at step " + std::to_string(step));
      }
      if (g.skipped) {
        ++skipped;
        ++result.skipped_batches;
      } else {
        auto p = params.values();
        auto dp = grads.values();
        for (std::size_t i = 0; i < p.size(); ++i) {
          velocity[i] = schedule.momentum * velocity[i] + dp[i];
          p[i] -= lr * velocity[i];
        }
        if (!std::all_of(p.begin(), p.end(), [](double v) { return std::isfinite(v); })) {
          throw Error(ErrorKind::Divergence,
                      "parameters became non-finite at step " + std::to_string(step));
        }
        loss_sum += g.loss;
        ++used;
      }
      result.steps.push_back({step, epoch, lr, g.loss, g.skipped, result.skipped_batches});
    }
    EpochRecord rec{epoch, used > 0 ? loss_sum / used : 0.0, skipped};
    result.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace pdfembed::encoder
