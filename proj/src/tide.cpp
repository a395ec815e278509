#include "laf/tide.hpp"

#include <algorithm>

#include "laf/error.hpp"
#include "laf/losses.hpp"

namespace laf {

std::string to_string(ErrorType t) {
  switch (t) {
    case ErrorType::kCls:
      return "Cls";
    case ErrorType::kLoc:
      return "Loc";
    case ErrorType::kBoth:
      return "Both";
    case ErrorType::kDupe:
      return "Dupe";
    case ErrorType::kBkg:
      return "Bkg";
    case ErrorType::kMiss:
      return "Miss";
  }
  return "?";
}

ErrorType parse_error_type(const std::string& name) {
  for (ErrorType t : kErrorTypes) {
    if (to_string(t) == name) return t;
  }
  throw EvalError("unknown error type '" + name + "' (expected Cls, Loc, Both, Dupe, Bkg or Miss)");
}

std::size_t ErrorLabels::count(ErrorType t) const {
  if (t == ErrorType::kMiss) return static_cast<std::size_t>(std::count(gt_miss.begin(), gt_miss.end(), true));
  return static_cast<std::size_t>(std::count(det.begin(), det.end(), std::optional<ErrorType>(t)));
}

ErrorLabels classify_errors(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                            const TideOptions& opts) {
  if (!(opts.bg > 0.0 && opts.bg <= opts.fg && opts.fg < 1.0)) {
    throw EvalError("tide: thresholds must satisfy 0 < bg <= fg < 1");
  }
  ErrorLabels out;
  out.base = match(dets, gts, opts.fg);
  out.det.assign(dets.size(), std::nullopt);
  out.det_target.assign(dets.size(), -1);
  std::vector<bool> targeted(gts.size(), false);

  for (std::size_t d : score_order(dets)) {
    if (out.base.det_label[d] != MatchLabel::kFp) continue;
    double same = 0.0, other = 0.0;
    long same_gt = -1, other_gt = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].ignore || gts[g].image_id != dets[d].image_id) continue;
      const double v = iou(dets[d].box, gts[g].box);
      const bool same_class = gts[g].class_id == dets[d].class_id;
      double& best = same_class ? same : other;
      long& idx = same_class ? same_gt : other_gt;
      if (v > best || (idx < 0 && v > 0.0)) {
        best = v;
        idx = static_cast<long>(g);
      }
    }
    ErrorType t;
    if (std::max(same, other) < opts.bg) {
      t = ErrorType::kBkg;
    } else if (other >= opts.fg) {
      t = ErrorType::kCls;
      out.det_target[d] = other_gt;
    } else if (same >= opts.fg) {
      t = ErrorType::kDupe;
    } else if (same >= opts.bg) {
      t = ErrorType::kLoc;
      out.det_target[d] = same_gt;
    } else {
      t = ErrorType::kBoth;
    }
    out.det[d] = t;
    if (out.det_target[d] >= 0) targeted[static_cast<std::size_t>(out.det_target[d])] = true;
  }

  out.gt_miss.assign(gts.size(), false);
  for (std::size_t g = 0; g < gts.size(); ++g) {
    out.gt_miss[g] = !gts[g].ignore && !out.base.gt_matched[g] && !targeted[g];
  }
  return out;
}

FixedSet oracle_fix(std::span<const Detection> dets, std::span<const GroundTruth> gts, const ErrorLabels& labels,
                    ErrorType type) {
  if (labels.det.size() != dets.size() || labels.gt_miss.size() != gts.size()) {
    throw EvalError("oracle_fix: labels were computed for a different detection or GT set");
  }
  FixedSet out;
  if (type == ErrorType::kMiss) {
    out.dets.assign(dets.begin(), dets.end());
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (!labels.gt_miss[g]) out.gts.push_back(gts[g]);
    }
    return out;
  }
  out.gts.assign(gts.begin(), gts.end());
  std::vector<bool> keep(dets.size(), true);
  std::vector<Detection> fixed(dets.begin(), dets.end());
  std::vector<bool> claimed(gts.size(), false);
  for (std::size_t d : score_order(dets)) {
    if (labels.det[d] != type) continue;
    if (type == ErrorType::kCls || type == ErrorType::kLoc) {
      const auto g = static_cast<std::size_t>(labels.det_target[d]);
      if (labels.base.gt_matched[g] || claimed[g]) {
        keep[d] = false;
        continue;
      }
      claimed[g] = true;
      fixed[d].box = gts[g].box;
      fixed[d].class_id = gts[g].class_id;
    } else {
      keep[d] = false;
    }
  }
  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (keep[d]) out.dets.push_back(std::move(fixed[d]));
  }
  return out;
}

namespace {

bool has_positive(const std::vector<GroundTruth>& gts) {
  return std::any_of(gts.begin(), gts.end(), [](const GroundTruth& g) { return !g.ignore; });
}

}  // namespace

TideReport tide_report(std::span<const Detection> dets, std::span<const GroundTruth> gts, const TideOptions& opts) {
  TideReport rep;
  rep.opts = opts;
  rep.base_map50 = map_at(dets, gts, 0.5);
  const ErrorLabels labels = classify_errors(dets, gts, opts);
  double total = 0.0;
  for (std::size_t i = 0; i < kErrorTypes.size(); ++i) {
    rep.count[i] = labels.count(kErrorTypes[i]);
    if (rep.count[i] == 0) continue;
    const FixedSet f = oracle_fix(dets, gts, labels, kErrorTypes[i]);
    // Removing every GT leaves nothing to score; such a fix is reported as zero.
    if (!has_positive(f.gts)) continue;
    rep.penalty[i] = 100.0 * (map_at(f.dets, f.gts, 0.5) - rep.base_map50);
    total += rep.penalty[i];
  }
  rep.residual = 100.0 * (1.0 - rep.base_map50) - total;
  return rep;
}

}  // namespace laf
