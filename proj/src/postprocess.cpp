#include "radeval/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "radeval/error.hpp"
#include "radeval/geometry.hpp"

namespace radeval::postprocess {

void validate(const AnchorSet& set) {
  if (set.levels.empty()) throw ContractError("anchor set has no levels");
  int prev_stride = 0;
  for (const auto& level : set.levels) {
    if (level.stride <= prev_stride) {
      throw ContractError("anchor strides must be strictly increasing");
    }
    prev_stride = level.stride;
    if (level.anchors.empty()) throw ContractError("anchor level has no anchors");
    for (const auto& a : level.anchors) {
      if (!(a[0] > 0.0f) || !(a[1] > 0.0f)) throw ContractError("anchors must be positive");
    }
  }
}

namespace {

// The mathematical range is the open interval (0, 1); keep the float result
// inside it even where exp saturates, so strict-range contracts (threshold
// 1.0 excludes everything, centers stay within the half-open band) hold for
// any finite logit.
inline double sigmoid(double v) {
  const double s = 1.0 / (1.0 + std::exp(-v));
  return std::clamp(s, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

}  // namespace

std::vector<metrics::Detection> decode_head(const HeadGrid& grid, const AnchorLevel& level,
                                            double conf_threshold,
                                            const std::string& image_id) {
  const Tensor& t = grid.values;
  const int n_anchors = t.n();
  const int grid_h = t.c();
  const int grid_w = t.h();
  const int channels = t.w();
  if (n_anchors != static_cast<int>(level.anchors.size())) {
    throw ContractError("grid anchor slots (" + std::to_string(n_anchors) +
                        ") do not match anchor level (" + std::to_string(level.anchors.size()) +
                        ")");
  }
  if (channels < 6) {
    throw ContractError("head grid needs t_x..t_obj plus at least one class logit, got " +
                        std::to_string(channels) + " channels");
  }
  if (level.stride <= 0) throw ContractError("stride must be positive");

  const int n_classes = channels - 5;
  std::vector<metrics::Detection> dets;
  for (int a = 0; a < n_anchors; ++a) {
    const double anchor_w = level.anchors[static_cast<std::size_t>(a)][0];
    const double anchor_h = level.anchors[static_cast<std::size_t>(a)][1];
    for (int i = 0; i < grid_h; ++i) {
      for (int j = 0; j < grid_w; ++j) {
        const double obj = sigmoid(t.at(a, i, j, 4));

        double best_class_prob = 0.0;
        int best_class = 0;
        for (int c = 0; c < n_classes; ++c) {
          const double p = sigmoid(t.at(a, i, j, 5 + c));
          if (p > best_class_prob) {
            best_class_prob = p;
            best_class = c;
          }
        }
        const double confidence = obj * best_class_prob;
        if (confidence < conf_threshold) continue;

        const double cx = (2.0 * sigmoid(t.at(a, i, j, 0)) - 0.5 + j) * level.stride;
        const double cy = (2.0 * sigmoid(t.at(a, i, j, 1)) - 0.5 + i) * level.stride;
        const double tw = 2.0 * sigmoid(t.at(a, i, j, 2));
        const double th = 2.0 * sigmoid(t.at(a, i, j, 3));
        const double w = tw * tw * anchor_w;
        const double h = th * th * anchor_h;

        metrics::Detection det;
        det.image_id = image_id;
        det.class_id = best_class;
        det.score = confidence;
        det.box = {cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0};
        dets.push_back(std::move(det));
      }
    }
  }
  return dets;
}

std::vector<metrics::Detection> nms(const std::vector<metrics::Detection>& dets,
                                    double iou_threshold) {
  if (!(iou_threshold > 0.0) || iou_threshold > 1.0) {
    throw ContractError("nms iou threshold must be in (0, 1], got " +
                        std::to_string(iou_threshold));
  }
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&dets](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  std::vector<metrics::Detection> kept;
  for (std::size_t idx : order) {
    const metrics::Detection& candidate = dets[idx];
    bool suppressed = false;
    for (const auto& keep : kept) {
      if (keep.class_id != candidate.class_id) continue;
      if (geometry::iou(keep.box, candidate.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(candidate);
  }
  return kept;
}

}  // namespace radeval::postprocess
