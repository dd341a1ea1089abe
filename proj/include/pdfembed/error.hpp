// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pdfembed {

enum class ErrorKind {
  InvalidArgument,
  OutOfRange,
  DimensionMismatch,
  ZeroNorm,
  DuplicateId,
  Parse,
  Io,
  CorruptFile,
  ShapeViolation,
  ZeroVariance,
  // Numerical failures.
  Unsolvable,
  NonnegativityViolated,
  DegenerateSlope,
  NonFinite,
  Divergence,
};

std::string_view to_string(ErrorKind kind);

/// True for failures of a numerical procedure (as opposed to bad input).
bool is_numerical(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pdfembed
