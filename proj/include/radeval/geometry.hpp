#pragma once

#include <array>

namespace radeval::geometry {

/// Axis-aligned box in pixels, half-open on both axes: [x_min, x_max) x
/// [y_min, y_max). Area is width * height with no fencepost correction.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
};

inline bool is_valid(const BBox& b) { return b.x_max >= b.x_min && b.y_max >= b.y_min; }

inline double area(const BBox& b) { return (b.x_max - b.x_min) * (b.y_max - b.y_min); }

/// Intersection over union in [0, 1]. Total on degenerate input: two
/// zero-area boxes give 0, never NaN.
double iou(const BBox& a, const BBox& b);

enum class BoxFormat {
  XyxyPixel,             // (x_min, y_min, x_max, y_max), pixels
  XywhCenterNormalized,  // (cx, cy, w, h), each in [0, 1] of image size
};

/// A box as a bare 4-tuple in the order its format declares.
using BoxCoords = std::array<double, 4>;

/// Re-expresses the same box in another convention. Normalized input more
/// than 1e-6 outside [0, 1] raises MalformedAnnotationError.
BoxCoords convert(const BoxCoords& box, BoxFormat from, BoxFormat to, int img_w, int img_h);

inline BoxCoords to_coords(const BBox& b) { return {b.x_min, b.y_min, b.x_max, b.y_max}; }
inline BBox to_bbox(const BoxCoords& c) { return {c[0], c[1], c[2], c[3]}; }

/// Aspect-preserving resize plus centered padding from a source image onto a
/// fixed destination canvas. scale = min(dst_w/src_w, dst_h/src_h); the pads
/// are floored so content lands on whole pixels, remainder going
/// bottom/right.
struct LetterboxTransform {
  int src_width = 0;
  int src_height = 0;
  int dst_width = 0;
  int dst_height = 0;
  double scale = 1.0;
  double pad_left = 0.0;
  double pad_top = 0.0;

  static LetterboxTransform fit(int src_width, int src_height, int dst_width, int dst_height);
};

/// Maps a source-space box into destination (letterboxed) space.
BBox letterbox_apply(const LetterboxTransform& t, const BBox& b);

/// Exact inverse of letterbox_apply.
BBox letterbox_invert(const LetterboxTransform& t, const BBox& b);

}  // namespace radeval::geometry
