#include "radeval/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "radeval/error.hpp"

namespace radeval::geometry {

double iou(const BBox& a, const BBox& b) {
  const double ix_min = std::max(a.x_min, b.x_min);
  const double iy_min = std::max(a.y_min, b.y_min);
  const double ix_max = std::min(a.x_max, b.x_max);
  const double iy_max = std::min(a.y_max, b.y_max);
  const double inter =
      std::max(0.0, ix_max - ix_min) * std::max(0.0, iy_max - iy_min);
  const double uni = area(a) + area(b) - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

namespace {

constexpr double kNormalizedSlack = 1e-6;

void check_normalized(const BoxCoords& c) {
  for (double v : c) {
    if (v < -kNormalizedSlack || v > 1.0 + kNormalizedSlack) {
      throw MalformedAnnotationError("normalized coordinate " + std::to_string(v) +
                                     " outside [0, 1]");
    }
  }
}

void check_image_dims(int img_w, int img_h) {
  if (img_w <= 0 || img_h <= 0) {
    throw ContractError("image dimensions must be positive, got " + std::to_string(img_w) +
                        "x" + std::to_string(img_h));
  }
}

}  // namespace

BoxCoords convert(const BoxCoords& box, BoxFormat from, BoxFormat to, int img_w, int img_h) {
  check_image_dims(img_w, img_h);
  if (from == to) return box;

  if (from == BoxFormat::XywhCenterNormalized) {
    check_normalized(box);
    const double cx = box[0] * img_w;
    const double cy = box[1] * img_h;
    const double w = box[2] * img_w;
    const double h = box[3] * img_h;
    return {cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0};
  }

  // XyxyPixel -> XywhCenterNormalized
  if (box[2] < box[0] || box[3] < box[1]) {
    throw MalformedAnnotationError("xyxy box has max < min");
  }
  return {(box[0] + box[2]) / 2.0 / img_w, (box[1] + box[3]) / 2.0 / img_h,
          (box[2] - box[0]) / img_w, (box[3] - box[1]) / img_h};
}

LetterboxTransform LetterboxTransform::fit(int src_width, int src_height, int dst_width,
                                           int dst_height) {
  if (src_width <= 0 || src_height <= 0 || dst_width <= 0 || dst_height <= 0) {
    throw ContractError("letterbox dimensions must be positive");
  }
  LetterboxTransform t;
  t.src_width = src_width;
  t.src_height = src_height;
  t.dst_width = dst_width;
  t.dst_height = dst_height;
  t.scale = std::min(static_cast<double>(dst_width) / src_width,
                     static_cast<double>(dst_height) / src_height);
  t.pad_left = std::floor((dst_width - t.scale * src_width) / 2.0);
  t.pad_top = std::floor((dst_height - t.scale * src_height) / 2.0);
  return t;
}

BBox letterbox_apply(const LetterboxTransform& t, const BBox& b) {
  return {b.x_min * t.scale + t.pad_left, b.y_min * t.scale + t.pad_top,
          b.x_max * t.scale + t.pad_left, b.y_max * t.scale + t.pad_top};
}

BBox letterbox_invert(const LetterboxTransform& t, const BBox& b) {
  return {(b.x_min - t.pad_left) / t.scale, (b.y_min - t.pad_top) / t.scale,
          (b.x_max - t.pad_left) / t.scale, (b.y_max - t.pad_top) / t.scale};
}

}  // namespace radeval::geometry
