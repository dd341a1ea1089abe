// SPDX-License-Identifier: Apache-2.0
#include "pdfembed/image.hpp"

#include <cmath>

#include "pdfembed/binary_io.hpp"
#include "pdfembed/error.hpp"

namespace pdfembed {

void write_image(const std::filesystem::path& path, const Image& image) {
  io::ByteWriter w;
  w.put_bytes("IMGF");
  w.put_u32(static_cast<std::uint32_t>(image.height));
  w.put_u32(static_cast<std::uint32_t>(image.width));
  w.put_u32(static_cast<std::uint32_t>(image.channels));
  for (float p : image.pixels) w.put_f32(p);
  io::write_file(path, w.bytes());
}

Image read_image(const std::filesystem::path& path) {
  auto bytes = io::read_file(path);
  io::ByteReader r(bytes);
  if (r.get_bytes(4) != "IMGF") {
    throw Error(ErrorKind::CorruptFile, path.string() + ": not an IMGF raster");
  }
  const auto h = r.get_u32();
  const auto w = r.get_u32();
  const auto c = r.get_u32();
  if (h == 0 || w == 0 || c == 0 || h > 1u << 15 || w > 1u << 15 || c > 64) {
    throw Error(ErrorKind::CorruptFile, path.string() + ": bad raster shape");
  }
  Image image(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  if (r.remaining() != image.pixels.size() * 4) {
    throw Error(ErrorKind::CorruptFile, path.string() + ": size mismatch");
  }
  for (auto& p : image.pixels) {
    p = r.get_f32();
    if (!std::isfinite(p)) {
      throw Error(ErrorKind::CorruptFile, path.string() + ": non-finite pixel");
    }
  }
  return image;
}

}  // namespace pdfembed
