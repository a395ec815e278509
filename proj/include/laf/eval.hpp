#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "laf/detection.hpp"

namespace laf {

enum class MatchLabel {
  kTp,
  kFp,
  kIgnored,  // matched an ignore-flagged GT: neither TP nor FP
};

struct MatchResult {
  std::vector<MatchLabel> det_label;  // aligned with the detections
  std::vector<long> det_gt;           // matched GT index, -1 for FP
  std::vector<bool> gt_matched;       // aligned with the ground truth
};

// Indices of `dets` by descending score; equal scores keep input order.
std::vector<std::size_t> score_order(std::span<const Detection> dets);

// Greedy matching. Detections are visited in score_order; each takes the
// unmatched, non-ignored GT of its image and class with the highest IoU >= thresh
// (lowest index on IoU ties). Failing that, a detection overlapping an ignore GT
// by >= thresh is labelled kIgnored; otherwise it is a FP.
MatchResult match(std::span<const Detection> dets, std::span<const GroundTruth> gts, double iou_thresh);

// 101-point interpolated AP of a ranked TP/FP sequence over `num_gt` positives:
// mean over r in {0, 0.01, ..., 1} of the max precision at recall >= r.
double interpolated_ap(const std::vector<bool>& ranked_tp, std::size_t num_gt);

// AP of one class from a dataset-wide match; empty when the class has no
// non-ignored GT.
std::optional<double> average_precision(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                                        const MatchResult& m, int class_id);

inline constexpr std::size_t kNumIouThresholds = 10;

// 0.50, 0.55, ..., 0.95 computed as (50 + 5 i) / 100.
std::array<double, kNumIouThresholds> iou_thresholds();

struct ClassAp {
  int class_id = 0;
  std::size_t num_gt = 0;
  std::array<double, kNumIouThresholds> ap{};
};

struct EvalReport {
  std::vector<ClassAp> classes;  // classes with at least one non-ignored GT, ascending id
  double map50 = 0.0;
  double map50_95 = 0.0;
  double conf_thresh = 0.25;
  double precision = 0.0;  // micro-averaged at conf_thresh, IoU 0.5
  double recall = 0.0;
  std::size_t tp = 0, fp = 0, num_gt = 0;
};

// Throws EvalError when there is no non-ignored GT or a score lies outside [0, 1].
EvalReport evaluate(std::span<const Detection> dets, std::span<const GroundTruth> gts, double conf_thresh = 0.25);

// mAP at IoU 0.5 only; same conventions as evaluate.
double map_at(std::span<const Detection> dets, std::span<const GroundTruth> gts, double iou_thresh = 0.5);

}  // namespace laf
