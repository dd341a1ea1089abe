// SPDX-License-Identifier: Apache-2.0
#include "pdfembed/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pdfembed/error.hpp"
#include "pdfembed/protocols.hpp"

namespace pdfembed::objectives {

namespace {

constexpr double kLabelSmoothingEpsilon = 0.5;

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorKind::DimensionMismatch,
                "predictions and labels must be nonempty and equally long");
  }
}

std::vector<double> log_softmax(std::span<const double> h, double temperature) {
  const double top = *std::max_element(h.begin(), h.end()) / temperature;
  double total = 0.0;
  for (double v : h) total += std::exp(v / temperature - top);
  const double log_z = top + std::log(total);
  std::vector<double> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = h[i] / temperature - log_z;
  return out;
}

}  // namespace

void ObjectiveSpec::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorKind::InvalidArgument, "temperature must be positive");
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "epsilon must lie in [0, 1)");
  }
  if (kind == Kind::KL && !(family.amplitude > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "amplitude must be positive");
  }
}

encoder::Head ObjectiveSpec::head() const {
  switch (kind) {
    case Kind::PCC:
    case Kind::RD:
    case Kind::Regression:
      return encoder::Head::Scalar;
    default:
      return encoder::Head::Distribution;
  }
}

std::string ObjectiveSpec::name() const {
  switch (kind) {
    case Kind::KL:
      switch (family.kind) {
        case levelpdf::Family::Gaussian: return "kl-gauss";
        case levelpdf::Family::Linear: return "kl-linear";
        case levelpdf::Family::Exponential: return "kl-exp";
      }
      break;
    case Kind::PCC: return "pcc";
    case Kind::RD: return "rd";
    case Kind::Regression: return "regression";
    case Kind::OneHot: return "onehot";
    case Kind::LabelSmooth: return "labelsmooth";
  }
  return "unknown";
}

ObjectiveSpec ObjectiveSpec::from_name(std::string_view name) {
  ObjectiveSpec spec;
  auto kl = [&](levelpdf::Family f) {
    spec.kind = Kind::KL;
    spec.family = {f, levelpdf::default_amplitude(f)};
  };
  if (name == "kl-gauss") kl(levelpdf::Family::Gaussian);
  else if (name == "kl-linear") kl(levelpdf::Family::Linear);
  else if (name == "kl-exp") kl(levelpdf::Family::Exponential);
  else if (name == "pcc") spec.kind = Kind::PCC;
  else if (name == "rd") spec.kind = Kind::RD;
  else if (name == "regression") spec.kind = Kind::Regression;
  else if (name == "onehot") spec.kind = Kind::OneHot;
  else if (name == "labelsmooth") {
    spec.kind = Kind::LabelSmooth;
    spec.epsilon = kLabelSmoothingEpsilon;
  } else {
    throw Error(ErrorKind::InvalidArgument,
                "unknown objective '" + std::string(name) + "'");
  }
  return spec;
}

double kl_loss(std::span<const double> g, std::span<const double> q) {
  if (g.size() != q.size() || g.empty()) {
    throw Error(ErrorKind::DimensionMismatch, "KL inputs differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(q[i] > 0.0)) {
      throw Error(ErrorKind::InvalidArgument,
                  "KL domain error: predicted probability " +
                      std::to_string(i) + " is not positive");
    }
    if (g[i] > 0.0) total += g[i] * std::log(g[i] / q[i]);
  }
  return total;
}

std::vector<double> smoothed_target(int level, int max_level, double epsilon) {
  if (level < 0 || level > max_level) {
    throw Error(ErrorKind::OutOfRange, "level outside [0, N]");
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "epsilon must lie in [0, 1)");
  }
  const auto n = static_cast<std::size_t>(max_level) + 1;
  std::vector<double> t(n, epsilon / static_cast<double>(n));
  t[static_cast<std::size_t>(level)] += 1.0 - epsilon;
  return t;
}

double classification_objective(std::span<const double> q, int level,
                                double epsilon) {
  const auto t = smoothed_target(level, static_cast<int>(q.size()) - 1, epsilon);
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(q[i] > 0.0)) {
      throw Error(ErrorKind::InvalidArgument,
                  "cross-entropy domain error: predicted probability " +
                      std::to_string(i) + " is not positive");
    }
    total -= t[i] * std::log(q[i]);
  }
  return total;
}

ScalarLoss pcc_objective(std::span<const double> predictions,
                         std::span<const double> labels) {
  check_same_length(predictions, labels);
  const double r = protocols::pcc(predictions, labels);

  const auto n = static_cast<double>(predictions.size());
  const double mean_p = std::accumulate(predictions.begin(), predictions.end(), 0.0) / n;
  const double mean_l = std::accumulate(labels.begin(), labels.end(), 0.0) / n;
  double s_pp = 0.0;
  double s_ll = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    s_pp += (predictions[i] - mean_p) * (predictions[i] - mean_p);
    s_ll += (labels[i] - mean_l) * (labels[i] - mean_l);
  }
  // d r / d p_i = (l_i - mean_l) / sqrt(S_pp S_ll) - r (p_i - mean_p) / S_pp
  ScalarLoss out{1.0 - r, std::vector<double>(predictions.size())};
  const double denom = std::sqrt(s_pp) * std::sqrt(s_ll);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double dr = (labels[i] - mean_l) / denom - r * (predictions[i] - mean_p) / s_pp;
    out.grad[i] = -dr;
  }
  return out;
}

ScalarLoss rd_objective(std::span<const double> predictions,
                        std::span<const double> labels, int max_level) {
  check_same_length(predictions, labels);
  const auto n = static_cast<double>(predictions.size());
  ScalarLoss out{0.0, std::vector<double>(predictions.size())};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!(labels[i] >= 0.0 && labels[i] <= max_level)) {
      throw Error(ErrorKind::OutOfRange, "label outside [0, N]");
    }
    const double worst = std::max(max_level - labels[i], labels[i]);
    const double gap = predictions[i] - labels[i];
    out.value += std::abs(gap) / worst;
    out.grad[i] = sign(gap) / (worst * n);
  }
  out.value /= n;
  return out;
}

ScalarLoss regression_objective(std::span<const double> predictions,
                                std::span<const double> labels) {
  check_same_length(predictions, labels);
  const auto n = static_cast<double>(predictions.size());
  ScalarLoss out{0.0, std::vector<double>(predictions.size())};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double gap = predictions[i] - labels[i];
    out.value += std::abs(gap);
    out.grad[i] = sign(gap) / n;
  }
  out.value /= n;
  return out;
}

double scalar_head(double h0, int max_level, double temperature) {
  return max_level * sigmoid(h0 / temperature);
}

BatchGradient evaluate(const ObjectiveSpec& spec,
                       std::span<const PairExample> batch,
                       const levelpdf::LevelGrid& grid) {
  spec.validate();
  if (batch.empty()) {
    throw Error(ErrorKind::InvalidArgument, "empty batch");
  }
  const int max_level = grid.max_level();
  const std::size_t levels = grid.size();
  const auto n = static_cast<double>(batch.size());
  const double tau = spec.temperature;

  std::vector<std::vector<double>> h(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& ex = batch[b];
    if (ex.level < 0 || ex.level > max_level) {
      throw Error(ErrorKind::OutOfRange,
                  "pair level " + std::to_string(ex.level) + " outside [0, N]");
    }
    if (ex.real.count() != levels) {
      throw Error(ErrorKind::DimensionMismatch,
                  "vector set size does not match the level grid");
    }
    h[b] = encoder::predict_raw(ex.real, ex.generated);
  }

  BatchGradient out;
  std::vector<std::vector<double>> d_h(batch.size(), std::vector<double>(levels, 0.0));

  if (spec.head() == encoder::Head::Distribution) {
    // One target per level, shared across the batch.
    std::vector<std::vector<double>> targets(levels);
    for (int l = 0; l <= max_level; ++l) {
      auto& t = targets[static_cast<std::size_t>(l)];
      switch (spec.kind) {
        case Kind::KL: t = levelpdf::solve(spec.family, l, grid).values; break;
        case Kind::OneHot: t = smoothed_target(l, max_level, 0.0); break;
        case Kind::LabelSmooth: t = smoothed_target(l, max_level, spec.epsilon); break;
        default: break;
      }
    }
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto& t = targets[static_cast<std::size_t>(batch[b].level)];
      const auto log_q = log_softmax(h[b], tau);
      double loss = 0.0;
      double t_sum = 0.0;
      for (std::size_t i = 0; i < levels; ++i) {
        t_sum += t[i];
        if (t[i] > 0.0) {
          loss -= t[i] * log_q[i];
          if (spec.kind == Kind::KL) loss += t[i] * std::log(t[i]);
        }
      }
      out.loss += loss / n;
      // d/dz_i of -sum_j t_j log q_j is q_i sum_j t_j - t_i, with z = h / tau.
      for (std::size_t i = 0; i < levels; ++i) {
        d_h[b][i] = (std::exp(log_q[i]) * t_sum - t[i]) / (tau * n);
      }
    }
  } else {
    std::vector<double> preds(batch.size());
    std::vector<double> labels(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      preds[b] = scalar_head(h[b][0], max_level, tau);
      labels[b] = batch[b].level;
    }
    ScalarLoss loss;
    switch (spec.kind) {
      case Kind::PCC:
        try {
          loss = pcc_objective(preds, labels);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::ZeroVariance) throw;
          out.skipped = true;
          loss = ScalarLoss{0.0, std::vector<double>(batch.size(), 0.0)};
        }
        break;
      case Kind::RD: loss = rd_objective(preds, labels, max_level); break;
      default: loss = regression_objective(preds, labels); break;
    }
    out.loss = loss.value;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const double s = preds[b] / max_level;
      // d s / d h0 = N sigma (1 - sigma) / tau
      d_h[b][0] = loss.grad[b] * max_level * s * (1.0 - s) / tau;
    }
  }

  if (!std::isfinite(out.loss)) {
    throw Error(ErrorKind::NonFinite, "batch loss is not finite");
  }
  out.d_real.resize(batch.size());
  out.d_generated.resize(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    encoder::cosine_backward(batch[b].real, batch[b].generated, d_h[b],
                             out.d_real[b], out.d_generated[b]);
  }
  return out;
}

}  // namespace pdfembed::objectives
