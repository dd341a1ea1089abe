// SPDX-License-Identifier: Apache-2.0
//
// Parameter checkpoints: "PDFE", u16 version, config block, every tensor as
// little-endian f32 in declaration order, trailing CRC32.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pdfembed/model.hpp"

namespace pdfembed::encoder {

inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const ModelParams& params);
ModelParams decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace pdfembed::encoder
