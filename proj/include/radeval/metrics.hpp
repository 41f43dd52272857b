#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "radeval/geometry.hpp"

namespace radeval::metrics {

/// A scored prediction, keyed by image and class.
struct Detection {
  std::string image_id;
  int class_id = 0;
  double score = 0.0;  // in [0, 1]
  geometry::BBox box;
};

/// A reference annotation, keyed by image and class.
struct GroundTruthBox {
  std::string image_id;
  int class_id = 0;
  geometry::BBox box;
};

enum class MatchFlag { TP, FP };

struct MatchOutcome {
  std::size_t detection_index = 0;  // index into the input detection list
  MatchFlag flag = MatchFlag::FP;
  std::optional<std::size_t> ground_truth_index;  // set iff flag == TP
};

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
};

/// Recall is non-decreasing along the curve.
using PRCurve = std::vector<PRPoint>;

inline constexpr int kNumStudyClasses = 4;  // negative / typical / indeterminate / atypical
using ConfusionMatrix = std::array<std::array<std::int64_t, kNumStudyClasses>, kNumStudyClasses>;

struct EvalReport {
  std::map<int, double> per_class_ap;
  double map_score = 0.0;
  double iou_threshold = 0.5;
  std::size_t n_detections = 0;
  std::size_t n_ground_truth = 0;
  std::optional<ConfusionMatrix> confusion;
};

/// Greedy matching: detections in descending score order (stable on ties), a
/// detection is TP iff some same-class, same-image, not-yet-matched ground
/// truth has IoU >= iou_threshold, taking the highest-IoU one. Each ground
/// truth is used at most once. Outcomes come back in the processed
/// (descending-score) order.
std::vector<MatchOutcome> match_detections(const std::vector<Detection>& dets,
                                           const std::vector<GroundTruthBox>& gts,
                                           double iou_threshold);

/// Point k is (cumTP_k / n_gt, cumTP_k / k). Recall is 0 throughout when
/// n_gt == 0. Outcomes must already be in descending-score order.
PRCurve pr_curve(const std::vector<MatchOutcome>& outcomes, std::size_t n_gt);

/// Area under the all-points precision envelope: sum over recall steps of
/// (r_i - r_{i-1}) * max{precision at recall >= r_i}. Empty curve gives 0.
double average_precision(const PRCurve& curve);

/// Unweighted arithmetic mean. Empty map raises UndefinedMetricError.
double mean_average_precision(const std::map<int, double>& per_class_ap);

/// Per-class match -> curve -> AP bundle, for callers that need the curves.
struct ClassEvaluation {
  std::vector<MatchOutcome> outcomes;
  PRCurve curve;
  double ap = 0.0;
  std::size_t n_ground_truth = 0;
  std::size_t n_detections = 0;
};

std::map<int, ClassEvaluation> evaluate_per_class(const std::vector<Detection>& dets,
                                                  const std::vector<GroundTruthBox>& gts,
                                                  double iou_threshold);

/// Full pipeline over every class present in either input. Classes seen only
/// in one of the two lists score AP 0.
EvalReport evaluate(const std::vector<Detection>& dets, const std::vector<GroundTruthBox>& gts,
                    double iou_threshold = 0.5);

/// M[t][p] counts samples with truth class t predicted as p. Classes are the
/// four study-level labels; out-of-range values raise
/// MalformedAnnotationError.
ConfusionMatrix confusion_matrix(const std::vector<int>& predicted,
                                 const std::vector<int>& truth);

/// Precision/recall per class; absent when the denominator is 0 (undefined,
/// distinct from 0).
struct ClassPrecisionRecall {
  std::optional<double> precision;
  std::optional<double> recall;
};

std::array<ClassPrecisionRecall, kNumStudyClasses> precision_recall_from_confusion(
    const ConfusionMatrix& m);

}  // namespace radeval::metrics
