#include "laf/stats.hpp"

#include <algorithm>
#include <cmath>

#include "laf/error.hpp"

namespace laf {

std::string to_string(SizeRule r) { return r == SizeRule::kMaxSide ? "max-side" : "area"; }

SizeRule parse_size_rule(const std::string& name) {
  if (name == "max-side") return SizeRule::kMaxSide;
  if (name == "area") return SizeRule::kArea;
  throw ConfigError("unknown size rule '" + name + "' (expected max-side or area)");
}

bool below_threshold(const Box& b, double t, SizeRule rule) {
  return rule == SizeRule::kMaxSide ? std::max(b.w, b.h) < t : b.w * b.h < t * t;
}

StatsReport size_stats(std::span<const GroundTruth> anns, const std::vector<double>& thresholds, SizeRule rule) {
  for (double t : thresholds) {
    if (!(t > 0.0)) throw ConfigError("size_stats: thresholds must be positive");
  }
  StatsReport rep;
  rep.rule = rule;
  rep.thresholds = thresholds;
  std::vector<std::size_t> below(thresholds.size(), 0);
  for (std::size_t k = 0; k < kHistogramBins; ++k) rep.histogram.push_back({std::ldexp(1.0, static_cast<int>(k)),
                                                                             std::ldexp(1.0, static_cast<int>(k) + 1), 0});
  for (const auto& a : anns) {
    if (a.ignore) {
      ++rep.ignored;
      continue;
    }
    ++rep.total;
    ++rep.class_counts[a.class_id];
    for (std::size_t i = 0; i < thresholds.size(); ++i) below[i] += below_threshold(a.box, thresholds[i], rule) ? 1 : 0;
    const double area = a.box.area();
    const int k = area < 1.0 ? 0 : static_cast<int>(std::floor(std::log2(area)));
    ++rep.histogram[static_cast<std::size_t>(std::clamp(k, 0, static_cast<int>(kHistogramBins) - 1))].count;
  }
  if (rep.total == 0) throw Error("size_stats: no non-ignored annotations");
  for (std::size_t n : below) rep.fractions.push_back(static_cast<double>(n) / static_cast<double>(rep.total));
  return rep;
}

}  // namespace laf
