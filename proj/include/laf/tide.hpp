#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "laf/detection.hpp"
#include "laf/eval.hpp"

namespace laf {

enum class ErrorType { kCls, kLoc, kBoth, kDupe, kBkg, kMiss };

inline constexpr std::array<ErrorType, 6> kErrorTypes{ErrorType::kCls, ErrorType::kLoc, ErrorType::kBoth,
                                                      ErrorType::kDupe, ErrorType::kBkg, ErrorType::kMiss};

std::string to_string(ErrorType t);
ErrorType parse_error_type(const std::string& name);  // "Cls", "Loc", ...; EvalError otherwise

struct TideOptions {
  double fg = 0.5;  // foreground IoU
  double bg = 0.1;  // background IoU
};

struct ErrorLabels {
  MatchResult base;                                // matching at opts.fg
  std::vector<std::optional<ErrorType>> det;       // empty for TP and ignore matches
  std::vector<long> det_target;                    // GT a Cls/Loc fix snaps to, else -1
  std::vector<bool> gt_miss;

  std::size_t count(ErrorType t) const;
};

// False positives are labelled in this order, first hit wins:
//   Bkg   max IoU to every GT of the image < bg
//   Cls   IoU >= fg to a GT of another class
//   Dupe  IoU >= fg to a same-class GT (necessarily already matched)
//   Loc   IoU in [bg, fg) to a same-class GT
//   Both  IoU in [bg, fg) to a GT of another class
// Miss marks unmatched GT not targeted by any Cls or Loc detection.
ErrorLabels classify_errors(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                            const TideOptions& opts = {});

struct FixedSet {
  std::vector<Detection> dets;
  std::vector<GroundTruth> gts;
};

// Cls relabels and snaps to the target GT, Loc snaps to it; either deletes the
// detection when the target is already matched or claimed by a higher-scoring
// fix. Both, Dupe and Bkg delete the detection; Miss deletes the GT.
FixedSet oracle_fix(std::span<const Detection> dets, std::span<const GroundTruth> gts, const ErrorLabels& labels,
                    ErrorType type);

struct TideReport {
  TideOptions opts;
  double base_map50 = 0.0;             // fraction
  std::array<double, 6> penalty{};     // mAP@0.5 points, indexed like kErrorTypes
  std::array<std::size_t, 6> count{};
  double residual = 0.0;               // 100 (1 - base) minus the summed penalties
};

// Each penalty = mAP@0.5 after fixing that type alone - base, from one labelling.
TideReport tide_report(std::span<const Detection> dets, std::span<const GroundTruth> gts, const TideOptions& opts = {});

}  // namespace laf
