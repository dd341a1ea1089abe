// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations used only by tests. None of these
// call into the library code they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "pdfembed/gallery.hpp"
#include "pdfembed/synthgen.hpp"
#include "pdfembed/training.hpp"

namespace oracle {

// ------------------------------------------------------------ supervision pdfs

inline std::vector<double> grid_points(int n) {
  std::vector<double> x;
  for (int i = 0; i <= n; ++i) x.push_back(static_cast<double>(i) / n);
  return x;
}

/// Plain bisection with a geometric midpoint, run to exhaustion.
template <class F>
double geometric_root(F residual, double lo, double hi) {
  for (int it = 0; it < 400; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (residual(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::sqrt(lo * hi);
}

struct PdfOracle {
  std::vector<double> values;
  double param = 0.0;
};

inline PdfOracle gaussian(int level, double a, int n) {
  const auto x = grid_points(n);
  const double mu = x[static_cast<std::size_t>(level)];
  auto eval = [&](double s) {
    std::vector<double> v;
    for (double xi : x) v.push_back(a * std::exp(-(xi - mu) * (xi - mu) / (2 * s * s)));
    return v;
  };
  auto residual = [&](double s) {
    double t = 0;
    for (double v : eval(s)) t += v;
    return t - 1.0;
  };
  const double s = geometric_root(residual, 1e-9, 1e9);
  return {eval(s), s};
}

inline PdfOracle exponential(int level, double a, int n) {
  const auto x = grid_points(n);
  const double mu = x[static_cast<std::size_t>(level)];
  auto eval = [&](double lam) {
    std::vector<double> v;
    for (double xi : x) v.push_back(a * lam * std::exp(-lam * std::abs(xi - mu)));
    return v;
  };
  auto residual = [&](double lam) {
    double t = 0;
    for (double v : eval(lam)) t += v;
    return t - 1.0;
  };
  const double lam = geometric_root(residual, 1e-6, 1e3);
  return {eval(lam), lam};
}

/// Linear family solved numerically for the slope rather than in closed form.
inline PdfOracle linear(int level, double a, int n) {
  const auto x = grid_points(n);
  const double mu = x[static_cast<std::size_t>(level)];
  auto eval = [&](double beta) {
    std::vector<double> v;
    for (double xi : x) v.push_back(a - beta * std::abs(xi - mu));
    return v;
  };
  double lo = 0.0;
  double hi = 100.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    double t = 0;
    for (double v : eval(mid)) t += v;
    if (t > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double beta = 0.5 * (lo + hi);
  return {eval(beta), beta};
}

// ------------------------------------------------------------ matcher

struct BruteMatch {
  std::uint64_t id;
  int level;
  double peak;
};

/// Recomputes every cosine from scratch (no reliance on stored unit norms)
/// and ranks with a tuple comparison.
inline std::vector<BruteMatch> brute_force(const pdfembed::VectorSet& query,
                                           const pdfembed::gallery::EmbeddingStore& store,
                                           int min_level) {
  const auto& q = query.vectors();
  const std::size_t levels = q.rows();
  const std::size_t dim = q.cols();
  std::vector<BruteMatch> out;
  for (std::size_t e = 0; e < store.size(); ++e) {
    const auto rec = store.record(e);
    std::vector<double> h(levels);
    for (std::size_t l = 0; l < levels; ++l) {
      double dot = 0, qq = 0, ss = 0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double a = q(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
        const double b = rec[l * dim + k];
        dot += a * b;
        qq += a * a;
        ss += b * b;
      }
      h[l] = std::clamp(dot / (std::sqrt(qq) * std::sqrt(ss)), -1.0, 1.0);
    }
    int level = 0;
    bool saturated = true;
    for (std::size_t l = 0; l < levels; ++l) {
      if (h[l] > h[static_cast<std::size_t>(level)]) level = static_cast<int>(l);
      if (h[l] < 1.0 - 1e-6) saturated = false;
    }
    if (saturated) level = static_cast<int>(levels) - 1;
    if (level >= min_level) out.push_back({store.id(e), level, h[static_cast<std::size_t>(level)]});
  }
  std::sort(out.begin(), out.end(), [](const BruteMatch& a, const BruteMatch& b) {
    return std::make_tuple(-a.level, -a.peak, a.id) < std::make_tuple(-b.level, -b.peak, b.id);
  });
  return out;
}

inline pdfembed::VectorSet random_set(std::mt19937_64& rng, int levels, int dim) {
  std::normal_distribution<double> nd(0.0, 1.0);
  pdfembed::Matrix m(levels, dim);
  for (int r = 0; r < levels; ++r)
    for (int c = 0; c < dim; ++c) m(r, c) = nd(rng);
  return pdfembed::VectorSet(m);
}

// ------------------------------------------------------------ gradients

struct GradientCheck {
  int sampled = 0;
  int failures = 0;
  double worst = 0.0;  // max |analytic - numeric| / max(1, |numeric|)
};

inline pdfembed::encoder::ModelConfig small_config() {
  pdfembed::encoder::ModelConfig c;
  c.embed_dim = 16;
  c.num_layers = 1;
  c.num_heads = 2;
  return c;
}

inline std::vector<pdfembed::encoder::TrainingPair> small_batch(int n_pairs, std::uint64_t seed) {
  pdfembed::synthgen::SynthConfig sc;
  sc.seed = seed;
  std::vector<pdfembed::encoder::TrainingPair> pairs;
  for (int i = 0; i < n_pairs; ++i) {
    // Distinct labels so scalar objectives see label variance.
    auto p = pdfembed::synthgen::gen_pair(sc, i % (sc.max_level + 1), static_cast<std::uint64_t>(i));
    pairs.push_back({p.real, p.replica, p.level});
  }
  return pairs;
}

/// Central differences with step 1e-4 on `samples` random parameters.
inline GradientCheck check_gradients(const pdfembed::objectives::ObjectiveSpec& objective,
                                     int samples, std::uint64_t seed, double tolerance = 1e-4) {
  using namespace pdfembed::encoder;
  auto config = small_config();
  config.head = objective.head();
  config.temperature = objective.temperature;
  auto params = ModelParams::initialize(config, seed);
  const auto pairs = small_batch(6, seed + 1);

  auto grads = ModelParams::zeros(config);
  compute_gradients(params, pairs, objective, grads);

  std::mt19937_64 rng(seed + 2);
  std::uniform_int_distribution<std::size_t> pick(0, params.values().size() - 1);
  GradientCheck out;
  const double step = 1e-4;
  for (int s = 0; s < samples; ++s) {
    const std::size_t i = pick(rng);
    const double keep = params.values()[i];
    params.values()[i] = keep + step;
    const double up = batch_loss(params, pairs, objective);
    params.values()[i] = keep - step;
    const double down = batch_loss(params, pairs, objective);
    params.values()[i] = keep;
    const double numeric = (up - down) / (2 * step);
    const double err = std::abs(grads.values()[i] - numeric) / std::max(1.0, std::abs(numeric));
    out.worst = std::max(out.worst, err);
    ++out.sampled;
    if (!(err < tolerance)) ++out.failures;
  }
  return out;
}

inline std::vector<pdfembed::objectives::ObjectiveSpec> all_objectives() {
  std::vector<pdfembed::objectives::ObjectiveSpec> out;
  for (const char* name : {"kl-gauss", "kl-linear", "kl-exp", "pcc", "rd", "regression", "onehot",
                           "labelsmooth"}) {
    out.push_back(pdfembed::objectives::ObjectiveSpec::from_name(name));
  }
  return out;
}

}  // namespace oracle
