#include "radeval/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "radeval/error.hpp"

namespace radeval::metrics {

namespace {

void check_iou_threshold(double t) {
  if (!(t > 0.0) || t > 1.0) {
    throw ContractError("iou threshold must be in (0, 1], got " + std::to_string(t));
  }
}

}  // namespace

std::vector<MatchOutcome> match_detections(const std::vector<Detection>& dets,
                                           const std::vector<GroundTruthBox>& gts,
                                           double iou_threshold) {
  check_iou_threshold(iou_threshold);

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&dets](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });

  std::vector<bool> gt_matched(gts.size(), false);
  std::vector<MatchOutcome> outcomes;
  outcomes.reserve(dets.size());
  for (std::size_t det_index : order) {
    const Detection& det = dets[det_index];
    MatchOutcome outcome;
    outcome.detection_index = det_index;

    std::size_t best_gt = gts.size();
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_matched[g] || gts[g].class_id != det.class_id || gts[g].image_id != det.image_id) {
        continue;
      }
      const double v = geometry::iou(det.box, gts[g].box);
      if (v >= iou_threshold && v > best_iou) {
        best_iou = v;
        best_gt = g;
      }
    }
    if (best_gt < gts.size()) {
      gt_matched[best_gt] = true;
      outcome.flag = MatchFlag::TP;
      outcome.ground_truth_index = best_gt;
    } else {
      outcome.flag = MatchFlag::FP;
    }
    outcomes.push_back(outcome);
  }
  return outcomes;
}

PRCurve pr_curve(const std::vector<MatchOutcome>& outcomes, std::size_t n_gt) {
  PRCurve curve;
  curve.reserve(outcomes.size());
  std::size_t cum_tp = 0;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    if (outcomes[k].flag == MatchFlag::TP) ++cum_tp;
    PRPoint p;
    p.recall = n_gt == 0 ? 0.0 : static_cast<double>(cum_tp) / static_cast<double>(n_gt);
    p.precision = static_cast<double>(cum_tp) / static_cast<double>(k + 1);
    curve.push_back(p);
  }
  return curve;
}

double average_precision(const PRCurve& curve) {
  if (curve.empty()) return 0.0;

  // Precision envelope from the right: envelope[i] = max precision over
  // points with recall >= recall[i] (the curve's recall is non-decreasing).
  std::vector<double> envelope(curve.size());
  double running = 0.0;
  for (std::size_t i = curve.size(); i-- > 0;) {
    running = std::max(running, curve[i].precision);
    envelope[i] = running;
  }

  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i].recall > prev_recall) {
      ap += (curve[i].recall - prev_recall) * envelope[i];
      prev_recall = curve[i].recall;
    }
  }
  return ap;
}

double mean_average_precision(const std::map<int, double>& per_class_ap) {
  if (per_class_ap.empty()) {
    throw UndefinedMetricError("mean average precision over zero classes");
  }
  double sum = 0.0;
  for (const auto& [cls, ap] : per_class_ap) sum += ap;
  return sum / static_cast<double>(per_class_ap.size());
}

std::map<int, ClassEvaluation> evaluate_per_class(const std::vector<Detection>& dets,
                                                  const std::vector<GroundTruthBox>& gts,
                                                  double iou_threshold) {
  check_iou_threshold(iou_threshold);
  std::set<int> classes;
  for (const auto& d : dets) classes.insert(d.class_id);
  for (const auto& g : gts) classes.insert(g.class_id);

  std::map<int, ClassEvaluation> result;
  for (int cls : classes) {
    std::vector<Detection> class_dets;
    std::vector<GroundTruthBox> class_gts;
    for (const auto& d : dets) {
      if (d.class_id == cls) class_dets.push_back(d);
    }
    for (const auto& g : gts) {
      if (g.class_id == cls) class_gts.push_back(g);
    }
    ClassEvaluation ce;
    ce.outcomes = match_detections(class_dets, class_gts, iou_threshold);
    ce.curve = pr_curve(ce.outcomes, class_gts.size());
    ce.ap = average_precision(ce.curve);
    ce.n_ground_truth = class_gts.size();
    ce.n_detections = class_dets.size();
    result.emplace(cls, std::move(ce));
  }
  return result;
}

EvalReport evaluate(const std::vector<Detection>& dets, const std::vector<GroundTruthBox>& gts,
                    double iou_threshold) {
  EvalReport report;
  report.iou_threshold = iou_threshold;
  report.n_detections = dets.size();
  report.n_ground_truth = gts.size();
  for (const auto& [cls, ce] : evaluate_per_class(dets, gts, iou_threshold)) {
    report.per_class_ap[cls] = ce.ap;
  }
  report.map_score = mean_average_precision(report.per_class_ap);
  return report;
}

ConfusionMatrix confusion_matrix(const std::vector<int>& predicted,
                                 const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) {
    throw ContractError("confusion matrix inputs differ in length: " +
                        std::to_string(predicted.size()) + " vs " + std::to_string(truth.size()));
  }
  ConfusionMatrix m{};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || t >= kNumStudyClasses || p < 0 || p >= kNumStudyClasses) {
      throw MalformedAnnotationError("study class out of range at index " + std::to_string(i));
    }
    ++m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return m;
}

std::array<ClassPrecisionRecall, kNumStudyClasses> precision_recall_from_confusion(
    const ConfusionMatrix& m) {
  std::array<ClassPrecisionRecall, kNumStudyClasses> out;
  for (std::size_t c = 0; c < kNumStudyClasses; ++c) {
    std::int64_t row_sum = 0;
    std::int64_t col_sum = 0;
    for (std::size_t k = 0; k < kNumStudyClasses; ++k) {
      row_sum += m[c][k];
      col_sum += m[k][c];
    }
    if (col_sum > 0) {
      out[c].precision = static_cast<double>(m[c][c]) / static_cast<double>(col_sum);
    }
    if (row_sum > 0) {
      out[c].recall = static_cast<double>(m[c][c]) / static_cast<double>(row_sum);
    }
  }
  return out;
}

}  // namespace radeval::metrics
