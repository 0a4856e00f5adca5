#include <algorithm>
#include <cmath>

#include "c2f/camrender.hpp"
#include "c2f/pngio.hpp"

namespace c2f::camrender {

void write_mask_png(const std::string& path, const std::vector<double>& mask,
                    i64 height, i64 width) {
  require(static_cast<i64>(mask.size()) == height * width,
          "write_mask_png: size mismatch");
  std::vector<std::uint8_t> bytes(mask.size());
  for (size_t i = 0; i < mask.size(); ++i) {
    const double v = std::min(1.0, std::max(0.0, mask[i]));
    bytes[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  write_gray_png(path, height, width, bytes.data());
}

namespace {

inline void put(std::vector<std::uint8_t>& img, i64 h, i64 w, i64 y, i64 x,
                std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  if (y < 0 || y >= h || x < 0 || x >= w) return;
  const size_t o = static_cast<size_t>(y * w + x) * 3;
  img[o] = r;
  img[o + 1] = g;
  img[o + 2] = b;
}

void draw_circle(std::vector<std::uint8_t>& img, i64 h, i64 w, double cx,
                 double cy, double radius, std::uint8_t r, std::uint8_t g,
                 std::uint8_t b) {
  const int steps = 48;
  for (int s = 0; s < steps; ++s) {
    const double a = 2.0 * 3.14159265358979323846 * s / steps;
    put(img, h, w, static_cast<i64>(std::lround(cy + radius * std::sin(a))),
        static_cast<i64>(std::lround(cx + radius * std::cos(a))), r, g, b);
  }
}

void draw_cross(std::vector<std::uint8_t>& img, i64 h, i64 w, double cx,
                double cy, i64 arm, std::uint8_t r, std::uint8_t g,
                std::uint8_t b) {
  const i64 x = static_cast<i64>(std::lround(cx));
  const i64 y = static_cast<i64>(std::lround(cy));
  for (i64 d = -arm; d <= arm; ++d) {
    put(img, h, w, y + d, x + d, r, g, b);
    put(img, h, w, y + d, x - d, r, g, b);
  }
}

}  // namespace

void write_overlay_png(const std::string& path,
                       const std::vector<double>& image_rgb, i64 height,
                       i64 width, const std::vector<std::uint8_t>& gt_mask,
                       const std::vector<double>& rendered_mask,
                       const std::vector<double>& pred_kp,
                       const std::vector<double>& gt_kp,
                       const std::vector<double>& visibility) {
  const i64 npix = height * width;
  require(static_cast<i64>(image_rgb.size()) == npix * 3,
          "overlay: image must be H*W*3");
  require(static_cast<i64>(gt_mask.size()) == npix &&
              static_cast<i64>(rendered_mask.size()) == npix,
          "overlay: mask size mismatch");

  std::vector<std::uint8_t> img(npix * 3);
  for (i64 i = 0; i < npix; ++i) {
    const bool gt = gt_mask[i] != 0;
    const bool rd = rendered_mask[i] >= 0.5;
    double r = image_rgb[i * 3], g = image_rgb[i * 3 + 1],
           b = image_rgb[i * 3 + 2];
    // red = ground truth only, green = rendered only, yellow = overlap
    if (gt && rd) {
      r = 0.55 * r + 0.45;
      g = 0.55 * g + 0.45;
      b = 0.55 * b;
    } else if (gt) {
      r = 0.55 * r + 0.45;
      g = 0.55 * g;
      b = 0.55 * b;
    } else if (rd) {
      r = 0.55 * r;
      g = 0.55 * g + 0.45;
      b = 0.55 * b;
    }
    img[i * 3] = static_cast<std::uint8_t>(std::lround(std::min(1.0, r) * 255));
    img[i * 3 + 1] =
        static_cast<std::uint8_t>(std::lround(std::min(1.0, g) * 255));
    img[i * 3 + 2] =
        static_cast<std::uint8_t>(std::lround(std::min(1.0, b) * 255));
  }

  // rendered-mask boundary contour
  for (i64 y = 0; y < height; ++y)
    for (i64 x = 0; x < width; ++x) {
      const bool in = rendered_mask[y * width + x] >= 0.5;
      if (!in) continue;
      const bool edge =
          (x == 0 || rendered_mask[y * width + x - 1] < 0.5) ||
          (x == width - 1 || rendered_mask[y * width + x + 1] < 0.5) ||
          (y == 0 || rendered_mask[(y - 1) * width + x] < 0.5) ||
          (y == height - 1 || rendered_mask[(y + 1) * width + x] < 0.5);
      if (edge) put(img, height, width, y, x, 255, 255, 255);
    }

  const size_t nkp = visibility.size();
  for (size_t j = 0; j < nkp; ++j) {
    if (visibility[j] == 0.0) continue;
    if (gt_kp.size() >= (j + 1) * 2)
      draw_cross(img, height, width, gt_kp[j * 2], gt_kp[j * 2 + 1], 2, 255, 40,
                 40);
    if (pred_kp.size() >= (j + 1) * 2)
      draw_circle(img, height, width, pred_kp[j * 2], pred_kp[j * 2 + 1], 2.5,
                  40, 255, 40);
  }
  write_rgb_png(path, height, width, img.data());
}

}  // namespace c2f::camrender
