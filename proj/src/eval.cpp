#include "laf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>

#include "laf/error.hpp"
#include "laf/losses.hpp"

namespace laf {

namespace {

using GroupKey = std::pair<std::string, int>;

void check_scores(std::span<const Detection> dets) {
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (!(dets[i].score >= 0.0 && dets[i].score <= 1.0)) {
      throw EvalError("detection " + std::to_string(i) + " has score outside [0, 1]");
    }
  }
}

std::set<int> gt_classes(std::span<const GroundTruth> gts) {
  std::set<int> out;
  for (const auto& g : gts) {
    if (!g.ignore) out.insert(g.class_id);
  }
  return out;
}

std::size_t count_gt(std::span<const GroundTruth> gts, int class_id) {
  return static_cast<std::size_t>(std::count_if(gts.begin(), gts.end(), [&](const GroundTruth& g) {
    return !g.ignore && g.class_id == class_id;
  }));
}

}  // namespace

std::vector<std::size_t> score_order(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  return order;
}

MatchResult match(std::span<const Detection> dets, std::span<const GroundTruth> gts, double iou_thresh) {
  std::map<GroupKey, std::vector<std::size_t>> groups;
  for (std::size_t g = 0; g < gts.size(); ++g) groups[{gts[g].image_id, gts[g].class_id}].push_back(g);

  MatchResult r;
  r.det_label.assign(dets.size(), MatchLabel::kFp);
  r.det_gt.assign(dets.size(), -1);
  r.gt_matched.assign(gts.size(), false);

  for (std::size_t d : score_order(dets)) {
    const auto it = groups.find({dets[d].image_id, dets[d].class_id});
    if (it == groups.end()) continue;
    long best = -1;
    double best_iou = iou_thresh;
    bool hits_ignore = false;
    for (std::size_t g : it->second) {
      const double v = iou(dets[d].box, gts[g].box);
      if (gts[g].ignore) {
        hits_ignore = hits_ignore || v >= iou_thresh;
      } else if (!r.gt_matched[g] && (v > best_iou || (best < 0 && v >= iou_thresh))) {
        best = static_cast<long>(g);
        best_iou = v;
      }
    }
    if (best >= 0) {
      r.det_label[d] = MatchLabel::kTp;
      r.det_gt[d] = best;
      r.gt_matched[static_cast<std::size_t>(best)] = true;
    } else if (hits_ignore) {
      r.det_label[d] = MatchLabel::kIgnored;
    }
  }
  return r;
}

double interpolated_ap(const std::vector<bool>& ranked_tp, std::size_t num_gt) {
  if (num_gt == 0) throw EvalError("interpolated_ap: no ground truth");
  const std::size_t n = ranked_tp.size();
  std::vector<double> recall(n), precision(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += ranked_tp[i] ? 1 : 0;
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

std::optional<double> average_precision(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                                        const MatchResult& m, int class_id) {
  const std::size_t num_gt = count_gt(gts, class_id);
  if (num_gt == 0) return std::nullopt;
  std::vector<bool> ranked;
  for (std::size_t d : score_order(dets)) {
    if (dets[d].class_id != class_id || m.det_label[d] == MatchLabel::kIgnored) continue;
    ranked.push_back(m.det_label[d] == MatchLabel::kTp);
  }
  return interpolated_ap(ranked, num_gt);
}

std::array<double, kNumIouThresholds> iou_thresholds() {
  std::array<double, kNumIouThresholds> t{};
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(50 + 5 * i) / 100.0;
  return t;
}

EvalReport evaluate(std::span<const Detection> dets, std::span<const GroundTruth> gts, double conf_thresh) {
  check_scores(dets);
  const std::set<int> classes = gt_classes(gts);
  if (classes.empty()) throw EvalError("evaluate: no non-ignored ground truth to evaluate against");

  EvalReport rep;
  rep.conf_thresh = conf_thresh;
  for (int c : classes) rep.classes.push_back({c, count_gt(gts, c), {}});

  const auto thresholds = iou_thresholds();
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    const MatchResult m = match(dets, gts, thresholds[t]);
    for (auto& row : rep.classes) row.ap[t] = *average_precision(dets, gts, m, row.class_id);
    if (t == 0) {
      for (std::size_t d = 0; d < dets.size(); ++d) {
        if (dets[d].score < conf_thresh || !classes.count(dets[d].class_id)) continue;
        if (m.det_label[d] == MatchLabel::kTp) ++rep.tp;
        if (m.det_label[d] == MatchLabel::kFp) ++rep.fp;
      }
    }
  }
  for (const auto& row : rep.classes) {
    rep.num_gt += row.num_gt;
    rep.map50 += row.ap[0];
    double mean = 0.0;
    for (double v : row.ap) mean += v;
    rep.map50_95 += mean / static_cast<double>(kNumIouThresholds);
  }
  const double k = static_cast<double>(rep.classes.size());
  rep.map50 /= k;
  rep.map50_95 /= k;
  rep.precision = rep.tp + rep.fp ? static_cast<double>(rep.tp) / static_cast<double>(rep.tp + rep.fp) : 0.0;
  rep.recall = static_cast<double>(rep.tp) / static_cast<double>(rep.num_gt);
  return rep;
}

double map_at(std::span<const Detection> dets, std::span<const GroundTruth> gts, double iou_thresh) {
  check_scores(dets);
  const std::set<int> classes = gt_classes(gts);
  if (classes.empty()) throw EvalError("evaluate: no non-ignored ground truth to evaluate against");
  const MatchResult m = match(dets, gts, iou_thresh);
  double sum = 0.0;
  for (int c : classes) sum += *average_precision(dets, gts, m, c);
  return sum / static_cast<double>(classes.size());
}

}  // namespace laf
