// SPDX-License-Identifier: Apache-2.0
#include "pdfembed/levelpdf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

namespace pdfembed::levelpdf {

namespace {

constexpr double kResidualTolerance = 1e-10;
constexpr int kMaxBisectionIterations = 200;
constexpr double kExponentialLo = 1e-6;
constexpr double kExponentialHi = 1e3;

std::string describe(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

void check_amplitude_finite(double amplitude) {
  if (!std::isfinite(amplitude) || amplitude <= 0.0) {
    throw Error(ErrorKind::InvalidArgument,
                "amplitude must be a positive finite number, got " +
                    describe(amplitude));
  }
}

SupervisionPdf make_pdf(Family family, double amplitude, int mu_index,
                        double param, std::vector<double> values) {
  SupervisionPdf pdf;
  pdf.family = family;
  pdf.amplitude = amplitude;
  pdf.mu_index = mu_index;
  pdf.solved_param = param;
  pdf.values = std::move(values);
  return pdf;
}

/// |x_i - x_mu| from the index gap, so points equidistant from mu get
/// bit-identical distances.
std::vector<double> distances(int mu, const LevelGrid& grid) {
  std::vector<double> d(grid.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = static_cast<double>(std::abs(static_cast<int>(i) - mu)) / grid.max_level();
  }
  return d;
}

}  // namespace

LevelGrid::LevelGrid(int max_level) : max_level_(max_level) {
  if (max_level < 1) {
    throw Error(ErrorKind::InvalidArgument, "max level must be >= 1");
  }
  points_.resize(static_cast<std::size_t>(max_level) + 1);
  for (int i = 0; i <= max_level; ++i) {
    points_[static_cast<std::size_t>(i)] =
        static_cast<double>(i) / static_cast<double>(max_level);
  }
}

int LevelGrid::index_of(double x) const {
  if (!std::isfinite(x) || x < -1e-12 || x > 1.0 + 1e-12) {
    throw Error(ErrorKind::OutOfRange,
                "normalized level outside [0, 1]: " + describe(x));
  }
  auto i = static_cast<int>(std::lround(x * max_level_));
  if (std::abs(points_[static_cast<std::size_t>(i)] - x) > 1e-12) {
    throw Error(ErrorKind::InvalidArgument,
                "normalized level is not a grid point: " + describe(x));
  }
  return i;
}

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Gaussian: return "gaussian";
    case Family::Linear: return "linear";
    case Family::Exponential: return "exp";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "gaussian" || name == "gauss") return Family::Gaussian;
  if (name == "linear") return Family::Linear;
  if (name == "exp" || name == "exponential") return Family::Exponential;
  throw Error(ErrorKind::InvalidArgument,
              "unknown pdf family '" + std::string(name) + "'");
}

double default_amplitude(Family family) {
  switch (family) {
    case Family::Gaussian: return 0.5;
    case Family::Linear: return 0.3;
    case Family::Exponential: return 1.0;
  }
  return 1.0;
}

double normalize_level(int level, const LevelGrid& grid) {
  if (level < 0 || level > grid.max_level()) {
    throw Error(ErrorKind::OutOfRange,
                "level " + std::to_string(level) + " outside [0, " +
                    std::to_string(grid.max_level()) + "]");
  }
  return grid.point(static_cast<std::size_t>(level));
}

double linear_max_amplitude(double normalized_level, const LevelGrid& grid) {
  const auto dist = distances(grid.index_of(normalized_level), grid);
  const double dist_sum = std::accumulate(dist.begin(), dist.end(), 0.0);
  const double dist_max = *std::max_element(dist.begin(), dist.end());
  // A - beta * dist_max >= 0 with beta = ((N+1) A - 1) / dist_sum.
  const auto n_points = static_cast<double>(grid.size());
  return dist_max / (n_points * dist_max - dist_sum);
}

SupervisionPdf solve_linear(double normalized_level, double amplitude,
                            const LevelGrid& grid) {
  check_amplitude_finite(amplitude);
  const int mu = grid.index_of(normalized_level);
  const auto n_points = static_cast<double>(grid.size());
  const auto dist = distances(mu, grid);
  const double dist_sum = std::accumulate(dist.begin(), dist.end(), 0.0);
  if (dist_sum <= 0.0) {
    throw Error(ErrorKind::DegenerateSlope, "sum of |x_i - mu| is zero");
  }

  // Allow the uniform case (N+1) A = 1 to within rounding.
  double excess = n_points * amplitude - 1.0;
  if (excess < -1e-12) {
    throw Error(ErrorKind::Unsolvable,
                "linear amplitude " + describe(amplitude) +
                    " is below 1/(N+1); the peak would be a minimum");
  }
  excess = std::max(excess, 0.0);
  const double beta = excess / dist_sum;

  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = amplitude - beta * dist[i];
    if (values[i] < 0.0) {
      throw Error(ErrorKind::NonnegativityViolated,
                  "linear amplitude " + describe(amplitude) +
                      " too large: value at index " + std::to_string(i) +
                      " is " + describe(values[i]) + " (max A " +
                      describe(linear_max_amplitude(normalized_level, grid)) +
                      ")");
    }
  }
  return make_pdf(Family::Linear, amplitude, mu, beta, std::move(values));
}

SupervisionPdf solve_gaussian(double normalized_level, double amplitude,
                              const LevelGrid& grid) {
  check_amplitude_finite(amplitude);
  const int mu = grid.index_of(normalized_level);
  const auto n_points = static_cast<double>(grid.size());
  const auto dist = distances(mu, grid);
  if (!(amplitude > 1.0 / n_points && amplitude < 1.0)) {
    throw Error(ErrorKind::Unsolvable,
                "gaussian amplitude " + describe(amplitude) +
                    " outside (1/(N+1), 1)");
  }

  auto values_at = [&](double sigma) {
    std::vector<double> v(grid.size());
    const double denom = 2.0 * sigma * sigma;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      v[i] = amplitude * std::exp(-(dist[i] * dist[i]) / denom);
    }
    return v;
  };
  // The sum rises monotonically from A to (N+1) A as sigma grows, so bisect
  // on log(sigma) to cover both very narrow and very wide solutions.
  auto residual = [&](double log_sigma) {
    auto v = values_at(std::exp(log_sigma));
    return std::accumulate(v.begin(), v.end(), 0.0) - 1.0;
  };

  const double lo = std::log(1e-4 / grid.max_level());
  double hi = 0.0;
  while (residual(hi) <= 0.0) {
    hi += std::log(10.0);
    if (hi > std::log(1e15)) {
      throw Error(ErrorKind::Unsolvable,
                  "gaussian sigma exceeds 1e15 without a sign change");
    }
  }
  auto root = detail::bisect(residual, lo, hi, kResidualTolerance,
                             kMaxBisectionIterations);
  const double sigma = std::exp(root.root);
  auto values = values_at(sigma);
  if (values[static_cast<std::size_t>(mu)] != amplitude) {
    throw Error(ErrorKind::Unsolvable, "gaussian peak differs from A");
  }
  return make_pdf(Family::Gaussian, amplitude, mu, sigma, std::move(values));
}

SupervisionPdf solve_exponential(double normalized_level, double amplitude,
                                 const LevelGrid& grid) {
  check_amplitude_finite(amplitude);
  const int mu = grid.index_of(normalized_level);
  const auto dist = distances(mu, grid);

  auto values_at = [&](double lambda) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      v[i] = amplitude * lambda * std::exp(-lambda * dist[i]);
    }
    return v;
  };
  auto residual = [&](double lambda) {
    auto v = values_at(lambda);
    return std::accumulate(v.begin(), v.end(), 0.0) - 1.0;
  };

  auto root = detail::bisect(residual, kExponentialLo, kExponentialHi,
                             kResidualTolerance, kMaxBisectionIterations);
  auto values = values_at(root.root);
  return make_pdf(Family::Exponential, amplitude, mu, root.root,
                  std::move(values));
}

SupervisionPdf solve(const PdfFamily& family, int level,
                     const LevelGrid& grid) {
  const double p = normalize_level(level, grid);
  switch (family.kind) {
    case Family::Gaussian: return solve_gaussian(p, family.amplitude, grid);
    case Family::Linear: return solve_linear(p, family.amplitude, grid);
    case Family::Exponential:
      return solve_exponential(p, family.amplitude, grid);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown family");
}

ShapeReport validate_shape(const SupervisionPdf& pdf, const PdfFamily& family,
                           const LevelGrid& grid, double tolerance) {
  if (pdf.values.size() != grid.size() || pdf.family != family.kind) {
    throw Error(ErrorKind::InvalidArgument,
                "pdf does not belong to this family/grid");
  }
  const auto& v = pdf.values;
  const int n = static_cast<int>(v.size());
  const double mu_x = grid.point(static_cast<std::size_t>(pdf.mu_index));

  ShapeReport report;
  report.second_differences.assign(v.size(), std::nullopt);

  for (int i = 1; i + 1 < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    bool check = false;
    switch (family.kind) {
      case Family::Gaussian: {
        // Whole stencil inside the concave band [mu - sigma, mu + sigma].
        const double sigma = pdf.solved_param;
        check = grid.point(ui - 1) >= mu_x - sigma - 1e-15 &&
                grid.point(ui + 1) <= mu_x + sigma + 1e-15;
        break;
      }
      case Family::Linear:
      case Family::Exponential:
        check = i != pdf.mu_index;
        break;
    }
    if (!check) continue;

    const double d2 = v[ui - 1] - 2.0 * v[ui] + v[ui + 1];
    report.second_differences[ui] = d2;
    report.checked.push_back(i);

    bool ok = true;
    switch (family.kind) {
      case Family::Gaussian: ok = d2 <= tolerance; break;
      case Family::Linear: ok = std::abs(d2) <= tolerance; break;
      case Family::Exponential: ok = d2 >= -tolerance; break;
    }
    if (!ok) {
      throw Error(ErrorKind::ShapeViolation,
                  std::string(to_string(family.kind)) +
                      " second difference at index " + std::to_string(i) +
                      " is " + describe(d2));
    }
  }
  return report;
}

}  // namespace pdfembed::levelpdf
