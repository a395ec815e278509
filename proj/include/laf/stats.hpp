#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "laf/detection.hpp"

namespace laf {

enum class SizeRule {
  kMaxSide,  // below t when max(w, h) < t
  kArea,     // below t when w * h < t^2
};

std::string to_string(SizeRule r);
SizeRule parse_size_rule(const std::string& name);  // "max-side" | "area"

bool below_threshold(const Box& b, double t, SizeRule rule);

struct HistogramBin {
  double lo = 0.0, hi = 0.0;  // area range [lo, hi), pixels^2
  std::size_t count = 0;
};

// log2-spaced area bins [2^k, 2^(k+1)), k = 0..23; the first bin also takes
// areas below 1 and the last everything above.
inline constexpr std::size_t kHistogramBins = 24;

struct StatsReport {
  SizeRule rule = SizeRule::kMaxSide;
  std::size_t total = 0;    // non-ignored instances
  std::size_t ignored = 0;  // excluded records
  std::vector<double> thresholds;
  std::vector<double> fractions;  // aligned with thresholds
  std::map<int, std::size_t> class_counts;
  std::vector<HistogramBin> histogram;
};

// Ignore-flagged records are excluded. Throws Error when nothing is left.
StatsReport size_stats(std::span<const GroundTruth> anns, const std::vector<double>& thresholds = {32, 16, 8},
                       SizeRule rule = SizeRule::kMaxSide);

}  // namespace laf
