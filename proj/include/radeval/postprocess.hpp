#pragma once

#include <array>
#include <string>
#include <vector>

#include "radeval/metrics.hpp"
#include "radeval/tensor.hpp"

namespace radeval::postprocess {

/// Prior box sizes for one detection-head scale.
struct AnchorLevel {
  int stride = 8;                              // pixels per grid cell
  std::vector<std::array<float, 2>> anchors;   // (w, h) in pixels
};

/// Per-scale anchor configuration; strides strictly increasing.
struct AnchorSet {
  std::vector<AnchorLevel> levels;
};

void validate(const AnchorSet& set);  // throws ContractError

/// Raw head output for one image at one scale. Tensor axes are
/// (anchor, grid_y, grid_x, channel); channels are t_x, t_y, t_w, t_h,
/// t_obj, then at least one class logit.
struct HeadGrid {
  Tensor values;
};

/// YOLOv5-convention decode. For cell (i, j) and anchor a:
///   center = ((2*sigmoid(t_x) - 0.5) + j, (2*sigmoid(t_y) - 0.5) + i) * stride
///   size   = (2*sigmoid(t_w))^2 * anchor_w, (2*sigmoid(t_h))^2 * anchor_h
///   confidence = sigmoid(t_obj) * max_c sigmoid(class_c)
/// Emits xyxy detections with confidence >= conf_threshold.
std::vector<metrics::Detection> decode_head(const HeadGrid& grid, const AnchorLevel& level,
                                            double conf_threshold,
                                            const std::string& image_id = {});

/// Greedy class-aware suppression: keep the highest-scored remaining
/// detection, drop same-class detections with IoU strictly above the
/// threshold against it. Output in descending score order (stable on ties).
std::vector<metrics::Detection> nms(const std::vector<metrics::Detection>& dets,
                                    double iou_threshold);

}  // namespace radeval::postprocess
