#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "c2f/common.hpp"

namespace c2f {

struct PngImage {
  i64 height = 0;
  i64 width = 0;
  i64 channels = 0;  // 1 (gray) or 3 (rgb), 8-bit
  std::vector<std::uint8_t> data;  // row-major, interleaved channels

  std::uint8_t at(i64 y, i64 x, i64 c) const {
    return data[(y * width + x) * channels + c];
  }
};

PngImage read_png(const std::string& path);

// `data` is row-major; gray = 1 byte/px, rgb = 3 bytes/px.
void write_gray_png(const std::string& path, i64 height, i64 width,
                    const std::uint8_t* data);
void write_rgb_png(const std::string& path, i64 height, i64 width,
                   const std::uint8_t* data);

}  // namespace c2f
