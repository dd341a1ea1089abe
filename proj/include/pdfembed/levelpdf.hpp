// SPDX-License-Identifier: Apache-2.0
//
// Conversion of an integer replication level into a discrete supervision
// distribution over the level grid {0, 1/N, ..., 1}.
//
// Every solver returns a vector g that sums to one, is nonnegative and is
// maximal at the normalized level mu = s / N. The family parameter
// (sigma, beta or lambda) is not an input: it is solved from the amplitude A
// and the sum-to-one constraint on the discrete grid.
#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pdfembed/error.hpp"

namespace pdfembed::levelpdf {

/// The N + 1 equally spaced points i / N on [0, 1].
class LevelGrid {
 public:
  explicit LevelGrid(int max_level);

  int max_level() const noexcept { return max_level_; }
  std::size_t size() const noexcept { return points_.size(); }
  double point(std::size_t i) const { return points_.at(i); }
  std::span<const double> points() const noexcept { return points_; }

  /// Index of the grid point equal to `x`; throws if `x` is not on the grid.
  int index_of(double x) const;

 private:
  int max_level_;
  std::vector<double> points_;
};

enum class Family { Gaussian, Linear, Exponential };

std::string_view to_string(Family family);
/// Accepts "gaussian"/"gauss", "linear", "exponential"/"exp".
Family parse_family(std::string_view name);

struct PdfFamily {
  Family kind = Family::Exponential;
  double amplitude = 1.0;
};

/// Amplitude used when the caller does not provide one.
double default_amplitude(Family family);

struct SupervisionPdf {
  Family family = Family::Exponential;
  double amplitude = 0.0;
  std::vector<double> values;
  int mu_index = 0;
  // sigma (gaussian), beta (linear) or lambda (exponential).
  double solved_param = 0.0;
};

/// s / N. Throws OutOfRange unless 0 <= level <= N.
double normalize_level(int level, const LevelGrid& grid);

/// g(x) = A - beta |x - mu|, beta from the closed form
/// beta = ((N + 1) A - 1) / sum_i |x_i - mu|.
SupervisionPdf solve_linear(double normalized_level, double amplitude,
                            const LevelGrid& grid);

/// g(x) = A exp(-(x - mu)^2 / (2 sigma^2)), sigma by bisection.
SupervisionPdf solve_gaussian(double normalized_level, double amplitude,
                              const LevelGrid& grid);

/// g(x) = A lambda exp(-lambda |x - mu|), lambda by bisection on [1e-6, 1e3].
SupervisionPdf solve_exponential(double normalized_level, double amplitude,
                                 const LevelGrid& grid);

/// Dispatch on the family for an integer level.
SupervisionPdf solve(const PdfFamily& family, int level, const LevelGrid& grid);

/// Largest A for which the linear family stays nonnegative at `mu`.
double linear_max_amplitude(double normalized_level, const LevelGrid& grid);

struct ShapeReport {
  // Second differences v[i-1] - 2 v[i] + v[i+1]; nullopt where the stencil
  // was not checked for this family.
  std::vector<std::optional<double>> second_differences;
  std::vector<int> checked;
};

/// Numerical counterpart of the curvature properties of each family:
/// gaussian concave on [mu - sigma, mu + sigma], linear straight away from
/// mu, exponential convex away from mu. Throws ShapeViolation naming the
/// first offending index.
ShapeReport validate_shape(const SupervisionPdf& pdf, const PdfFamily& family,
                           const LevelGrid& grid, double tolerance = 1e-12);

namespace detail {

struct RootResult {
  double root = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Bisection for an increasing-through-zero residual on [lo, hi].
/// Stops once |f| <= tolerance; throws Unsolvable on a missing sign change
/// or when `max_iterations` is exhausted.
template <typename F>
RootResult bisect(F&& f, double lo, double hi, double tolerance,
                  int max_iterations) {
  double f_lo = f(lo);
  double f_hi = f(hi);
  if (!(f_lo < 0.0 && f_hi > 0.0)) {
    throw Error(ErrorKind::Unsolvable,
                "no sign change of the residual on the search bracket");
  }
  for (int it = 1; it <= max_iterations; ++it) {
    double mid = 0.5 * (lo + hi);
    double f_mid = f(mid);
    if (std::abs(f_mid) <= tolerance) {
      return {mid, f_mid, it};
    }
    if (f_mid < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw Error(ErrorKind::Unsolvable, "bisection did not reach tolerance");
}

}  // namespace detail

}  // namespace pdfembed::levelpdf
