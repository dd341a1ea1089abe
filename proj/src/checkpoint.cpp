// SPDX-License-Identifier: Apache-2.0
#include "pdfembed/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "pdfembed/binary_io.hpp"
#include "pdfembed/error.hpp"

namespace pdfembed::encoder {

std::vector<std::uint8_t> encode_checkpoint(const ModelParams& params) {
  const auto& c = params.config();
  io::ByteWriter w;
  w.put_bytes("PDFE");
  w.put_u16(kCheckpointVersion);
  for (int v : {c.image_height, c.image_width, c.channels, c.patch_size,
                c.embed_dim, c.num_layers, c.num_heads, c.mlp_ratio,
                c.max_level}) {
    w.put_u32(static_cast<std::uint32_t>(v));
  }
  w.put_u8(static_cast<std::uint8_t>(c.head));
  w.put_u64(std::bit_cast<std::uint64_t>(c.temperature));
  w.put_u64(params.values().size());
  for (double v : params.values()) w.put_f32(static_cast<float>(v));
  w.put_crc();
  return w.bytes();
}

ModelParams decode_checkpoint(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(io::verify_crc(bytes));
  if (r.get_bytes(4) != "PDFE") {
    throw Error(ErrorKind::CorruptFile, "not a PDFE checkpoint");
  }
  const auto version = r.get_u16();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::CorruptFile,
                "unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig c;
  for (int* field : {&c.image_height, &c.image_width, &c.channels, &c.patch_size,
                     &c.embed_dim, &c.num_layers, &c.num_heads, &c.mlp_ratio,
                     &c.max_level}) {
    const auto v = r.get_u32();
    if (v > 1u << 20) throw Error(ErrorKind::CorruptFile, "implausible config value");
    *field = static_cast<int>(v);
  }
  const auto head = r.get_u8();
  if (head > 1) throw Error(ErrorKind::CorruptFile, "unknown head type");
  c.head = static_cast<Head>(head);
  c.temperature = std::bit_cast<double>(r.get_u64());
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::CorruptFile, e.what());
  }

  auto params = ModelParams::zeros(c);
  const auto count = r.get_u64();
  if (count != params.values().size() || r.remaining() != count * 4) {
    throw Error(ErrorKind::CorruptFile, "tensor payload does not match config");
  }
  for (auto& v : params.values()) {
    const float f = r.get_f32();
    if (!std::isfinite(f)) throw Error(ErrorKind::CorruptFile, "non-finite parameter");
    v = f;
  }
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  io::write_file(path, encode_checkpoint(params));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(io::read_file(path));
}

}  // namespace pdfembed::encoder
