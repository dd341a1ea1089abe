// SPDX-License-Identifier: Apache-2.0
//
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>

#include "oracles.hpp"
#include "pdfembed/error.hpp"
#include "pdfembed/gallery.hpp"
#include "pdfembed/inference.hpp"
#include "pdfembed/levelpdf.hpp"
#include "pdfembed/protocols.hpp"
#include "pdfembed/synthgen.hpp"
#include "pdfembed/training.hpp"

using namespace pdfembed;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("[%s] %d %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

double seconds(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const levelpdf::LevelGrid kGrid(5);

std::vector<double> valid_amplitudes(levelpdf::Family f, int level) {
  using levelpdf::Family;
  switch (f) {
    case Family::Gaussian: return {0.2, 0.35, 0.5, 0.65, 0.8, 0.95};
    case Family::Linear: {
      const double lo = 1.0 / 6.0;
      const double hi = levelpdf::linear_max_amplitude(kGrid.point(static_cast<std::size_t>(level)), kGrid);
      std::vector<double> out;
      for (int k = 0; k <= 5; ++k) out.push_back(lo + (hi - lo) * k / 5.0);
      return out;
    }
    case Family::Exponential: return {0.1, 0.6, 0.9, 1.2, 1.5, 1.8};
  }
  return {};
}

Outcome pdf_constraints() {
  const auto start = Clock::now();
  int cases = 0;
  double worst_sum = 0.0;
  bool ok = true;
  for (auto f : {levelpdf::Family::Gaussian, levelpdf::Family::Linear, levelpdf::Family::Exponential}) {
    for (int l = 0; l <= 5; ++l) {
      for (double a : valid_amplitudes(f, l)) {
        const auto pdf = levelpdf::solve({f, a}, l, kGrid);
        const double s = std::accumulate(pdf.values.begin(), pdf.values.end(), 0.0);
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
        const double peak = pdf.values[static_cast<std::size_t>(l)];
        for (double v : pdf.values) ok = ok && v >= 0.0 && v <= peak;
        ++cases;
      }
    }
  }
  const double t = seconds(start);
  return {ok && worst_sum <= 1e-9 && t < 1.0,
          fmt("%d cases, max |sum-1| %.2e, nonnegative and peaked at mu: %s, runtime %.3fs < 1s", cases, worst_sum,
              ok ? "yes" : "no", t)};
}

Outcome shape_suite() {
  const auto start = Clock::now();
  int checked = 0;
  int violations = 0;
  for (auto f : {levelpdf::Family::Gaussian, levelpdf::Family::Linear, levelpdf::Family::Exponential}) {
    for (int l = 0; l <= 5; ++l) {
      for (double a : valid_amplitudes(f, l)) {
        const levelpdf::PdfFamily fam{f, a};
        try {
          const auto rep = levelpdf::validate_shape(levelpdf::solve(fam, l, kGrid), fam, kGrid, 1e-12);
          checked += static_cast<int>(rep.checked.size());
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::ShapeViolation) throw;
          ++violations;
        }
      }
    }
  }
  const double t = seconds(start);
  return {violations == 0 && checked > 0 && t < 1.0,
          fmt("%d second differences checked at tol 1e-12, %d violations, runtime %.3fs < 1s", checked, violations, t)};
}

Outcome metric_fidelity() {
  const auto a = protocols::deviations(0, 3, 5);
  const auto b = protocols::deviations(2, 5, 5);
  const auto c = protocols::deviations(4, 4, 5);
  const bool worked = a.relative == 1.0 && a.absolute == 0.6 && b.relative == 0.6 && b.absolute == 0.6 &&
                      c.relative == 0.0 && c.absolute == 0.0;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> x(3 + t % 50), pos, neg;
    for (auto& v : x) v = nd(rng);
    const double k = std::exp(nd(rng));
    const double off = 10 * nd(rng);
    for (double v : x) {
      pos.push_back(k * v + off);
      neg.push_back(-k * v + off);
    }
    worst = std::max({worst, std::abs(protocols::pcc(x, pos) - 1.0), std::abs(protocols::pcc(x, neg) + 1.0)});
  }
  return {worked && worst <= 1e-12,
          fmt("(0,3)->S=%.17g T=%.17g; (2,5)->S=%.17g T=%.17g; exact->(%g,%g); affine PCC max error %.2e", a.relative,
              a.absolute, b.relative, b.absolute, c.relative, c.absolute, worst)};
}

Outcome gradient_oracle() {
  const auto start = Clock::now();
  std::string detail;
  bool ok = true;
  for (const auto& spec : oracle::all_objectives()) {
    const auto r = oracle::check_gradients(spec, 100, 2024);
    ok = ok && r.sampled == 100 && r.failures == 0;
    detail += fmt("%s %.1e; ", spec.name().c_str(), r.worst);
  }
  const double t = seconds(start);
  ok = ok && t < 60.0;
  return {ok, "worst relative error per objective (tol 1e-4): " + detail + fmt("runtime %.1fs < 60s", t)};
}

Outcome end_to_end() {
  const auto start = Clock::now();
  synthgen::SynthConfig sc;
  sc.seed = 1000;
  const auto all = synthgen::generate(sc, 2400);
  const std::vector<encoder::TrainingPair> train(all.begin(), all.begin() + 2000);
  const std::vector<encoder::TrainingPair> test(all.begin() + 2000, all.end());

  encoder::Schedule schedule;  // 15 epochs, lr 0.05, batch 32, momentum 0.9
  schedule.seed = 0;

  auto run = [&](objectives::ObjectiveSpec spec) {
    const auto r = encoder::train(encoder::ModelConfig{}, train, spec, schedule);
    const auto p = encoder::predict_pairs(r.params, test);
    return std::pair{protocols::pcc(p.scores, p.labels), protocols::rd(p.scores, p.labels, 5)};
  };
  auto exp_spec = objectives::ObjectiveSpec::from_name("kl-exp");
  exp_spec.family.amplitude = 0.1;
  const auto [pcc_exp, rd_exp] = run(exp_spec);
  const auto [pcc_one, rd_one] = run(objectives::ObjectiveSpec::from_name("onehot"));
  const double t = seconds(start);
  const bool ok = pcc_exp >= 0.8 && rd_exp <= 0.2 && rd_exp < rd_one && t < 600.0;
  return {ok, fmt("kl-exp(A=0.1) PCC %.4f (>=0.8) RD %.4f (<=0.2); onehot PCC %.4f RD %.4f; RD exp < onehot: %s; "
                  "runtime %.1fs < 600s",
                  pcc_exp, rd_exp, pcc_one, rd_one, rd_exp < rd_one ? "yes" : "no", t)};
}

Outcome matcher_oracle() {
  std::mt19937_64 rng(99);
  gallery::EmbeddingStore store(5, 32);
  for (std::uint64_t i = 0; i < 1000; ++i) store.add(i * 31 + 5, oracle::random_set(rng, 6, 32));
  int mismatches = 0;
  std::size_t compared = 0;
  for (int q = 0; q < 100; ++q) {
    const auto query = oracle::random_set(rng, 6, 32);
    const int min_level = q % 6;
    const auto fast = gallery::match_one(query, store, min_level);
    const auto slow = oracle::brute_force(query, store, min_level);
    if (fast.size() != slow.size()) {
      ++mismatches;
      continue;
    }
    for (std::size_t i = 0; i < fast.size(); ++i) {
      if (fast[i].gallery_id != slow[i].id || fast[i].level != slow[i].level) {
        ++mismatches;
        break;
      }
    }
    compared += fast.size();
  }
  return {mismatches == 0,
          fmt("100 queries x 1000 entries, %zu ranked results compared, %d mismatching queries", compared, mismatches)};
}

Outcome timing_sanity() {
  const auto params = encoder::ModelParams::initialize(encoder::ModelConfig{}, 3);
  synthgen::SynthConfig sc;
  sc.seed = 5;
  const auto pairs = synthgen::generate(sc, 200);
  gallery::EmbeddingStore store(5, 32);
  std::vector<Image> queries;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    store.add(i, encoder::forward(params, pairs[i].real));
    queries.push_back(pairs[i].generated);
  }
  const auto rep = gallery::scan(params, queries, store);
  const double ratio = rep.timing.encode_seconds_per_image / rep.timing.match_seconds_per_pair;
  return {ratio >= 100.0, fmt("encode %.3e s/img, match %.3e s/pair (median, %zu pairs), ratio %.0fx >= 100x",
                              rep.timing.encode_seconds_per_image, rep.timing.match_seconds_per_pair,
                              rep.timing.timed_pairs, ratio)};
}

Outcome argmax_invariance() {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> log_scale(-8.0, 8.0);
  int changed = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto a = oracle::random_set(rng, 6, 1 + t % 32);
    const auto b = oracle::random_set(rng, 6, 1 + t % 32);
    const int base = encoder::predict_level(a, b, kGrid).level;
    const int moved =
        encoder::predict_level(a.scaled(std::exp(log_scale(rng))), b.scaled(std::exp(log_scale(rng))), kGrid).level;
    if (base != moved) ++changed;
  }
  return {changed == 0, fmt("1000 random rescalings, %d level changes", changed)};
}

}  // namespace

int main() {
  criterion(1, "pdf constraints", pdf_constraints);
  criterion(2, "pdf shape", shape_suite);
  criterion(3, "metric fidelity", metric_fidelity);
  criterion(4, "gradient oracle", gradient_oracle);
  criterion(5, "end-to-end learning", end_to_end);
  criterion(6, "matcher oracle", matcher_oracle);
  criterion(7, "timing sanity", timing_sanity);
  criterion(8, "argmax invariance", argmax_invariance);
  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
