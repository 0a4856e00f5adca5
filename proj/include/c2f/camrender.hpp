#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "c2f/tensor.hpp"

namespace c2f::camrender {

// Pinhole camera, pixel centers at integer coordinates, principal point at
// the image center unless stated otherwise.
struct Camera {
  double f = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  i64 height = 0;
  i64 width = 0;

  static Camera centered(double f, i64 height, i64 width) {
    return Camera{f, (static_cast<double>(width) - 1.0) / 2.0,
                  (static_cast<double>(height) - 1.0) / 2.0, height, width};
  }
};

inline constexpr double kZNear = 1e-4;

// (u,v) = f*(x/z, y/z) + (cx, cy). Depths at or below kZNear are clamped
// (training must survive a mesh straying behind the camera); clamped points
// are counted into *clamp_count when provided and receive no depth gradient.
// `focal` is a scalar tensor so the camera parameter can be learned.
Tensor project(const Tensor& points, const Tensor& focal, const Camera& cam,
               i64* clamp_count = nullptr);

// Soft silhouette of projected triangles: per pixel,
//   mask = 1 - prod_f (1 - sigmoid(sharpness * d_f)),
// d_f the exact signed 2-d distance to face f (positive inside). No depth
// test. Faces only touch pixels within sigmoid reach of their bounding box;
// farther contributions are below f64 resolution by construction.
Tensor rasterize_projected(const Tensor& p, const std::vector<i64>& faces,
                           i64 height, i64 width, double sharpness);

// Convenience composition: project then rasterize.
Tensor rasterize_soft(const Tensor& vertices, const std::vector<i64>& faces,
                      const Tensor& focal, const Camera& cam, double sharpness);

// Bilinear sampling of every feature map at p (input-image pixel coords),
// channels concatenated per point: maps[i] is [D_i, h_i, w_i], result is
// [K, sum D_i]. Coordinates rescale to each map's resolution; out-of-bounds
// samples clamp to the border.
Tensor sample_features(const std::vector<Tensor>& maps, const Tensor& p,
                       i64 image_height, i64 image_width);

// Plain z-buffered rasterization for synthetic image generation (not
// differentiable). Depth is +inf outside the silhouette.
struct HardRender {
  std::vector<double> depth;   // H*W
  std::vector<double> shade;   // H*W, flat per-face n.l in [0,1]
  std::vector<std::uint8_t> mask;  // H*W, 0/1
};
HardRender render_hard(const std::vector<double>& vertices,
                       const std::vector<i64>& faces, const Camera& cam);

// 8-bit grayscale mask PNG (255 = foreground) from values in [0,1].
void write_mask_png(const std::string& path, const std::vector<double>& mask,
                    i64 height, i64 width);

// Fig-style overlay: ground-truth vs rendered silhouette as red/green with
// yellow overlap, mask boundary contour, predicted keypoints as circles and
// ground-truth keypoints as crosses.
void write_overlay_png(const std::string& path,
                       const std::vector<double>& image_rgb, i64 height,
                       i64 width, const std::vector<std::uint8_t>& gt_mask,
                       const std::vector<double>& rendered_mask,
                       const std::vector<double>& pred_kp,
                       const std::vector<double>& gt_kp,
                       const std::vector<double>& visibility);

}  // namespace c2f::camrender
