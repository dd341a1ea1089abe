// SPDX-License-Identifier: Apache-2.0
#include "pdfembed/error.hpp"

namespace pdfembed {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ZeroNorm: return "ZeroNorm";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::Io: return "Io";
    case ErrorKind::CorruptFile: return "CorruptFile";
    case ErrorKind::ShapeViolation: return "ShapeViolation";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::Unsolvable: return "Unsolvable";
    case ErrorKind::NonnegativityViolated: return "NonnegativityViolated";
    case ErrorKind::DegenerateSlope: return "DegenerateSlope";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::Divergence: return "Divergence";
  }
  return "Unknown";
}

bool is_numerical(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Unsolvable:
    case ErrorKind::NonnegativityViolated:
    case ErrorKind::DegenerateSlope:
    case ErrorKind::NonFinite:
    case ErrorKind::Divergence:
      return true;
    default:
      return false;
  }
}

}  // namespace pdfembed
