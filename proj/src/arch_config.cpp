#include "laf/arch_config.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "laf/error.hpp"

namespace laf {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ConfigError("invalid config field '" + field + "': " + why);
}

}  // namespace

std::size_t ArchConfig::c2f_hidden(std::size_t width) const {
  return static_cast<std::size_t>(std::llround(static_cast<double>(width) * c2f_expansion));
}

std::size_t ArchConfig::neck_levels() const {
  // The neck fuses top-down from stride 16 and stops at the finest head.
  const std::size_t finest = *std::min_element(head_strides.begin(), head_strides.end());
  switch (finest) {
    case 4:
      return 3;
    case 8:
      return 2;
    case 16:
      return 1;
    default:
      return 0;
  }
}

ArchConfig ArchConfig::with_p5(bool on) const {
  ArchConfig out = *this;
  out.include_p5 = on;
  std::erase(out.head_strides, std::size_t{32});
  if (on) out.head_strides.push_back(32);
  return out;
}

void ArchConfig::validate() const {
  if (input_size == 0 || input_size % 32 != 0) fail("input_size", "must be a positive multiple of 32");
  if (stem_width == 0) fail("stem_width", "must be >= 1");
  if (stage_widths.size() != 4) fail("stage_widths", "exactly four stages are required");
  if (stage_repeats.size() != 4) fail("stage_repeats", "exactly four entries are required");
  if (pconv_ratio == 0) fail("pconv_ratio", "must be >= 1");
  if (se_ratio == 0) fail("se_ratio", "must be >= 1");
  if (!(c2f_expansion > 0.0)) fail("c2f_expansion", "must be > 0");
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t w = stage_widths[i];
    const std::string idx = "stage_widths[" + std::to_string(i) + "]";
    if (w == 0) fail(idx, "must be >= 1");
    if (w % pconv_ratio != 0) fail(idx, std::to_string(w) + " not divisible by pconv_ratio " + std::to_string(pconv_ratio));
    const double hidden = static_cast<double>(w) * c2f_expansion;
    if (std::abs(hidden - std::round(hidden)) > 1e-9 || c2f_hidden(w) == 0) {
      fail("c2f_expansion", "width " + std::to_string(w) + " * expansion is not a positive integer");
    }
    if (c2f_hidden(w) % pconv_ratio != 0) {
      fail("c2f_expansion", "C2f hidden width " + std::to_string(c2f_hidden(w)) + " not divisible by pconv_ratio");
    }
    if (stage_repeats[i] == 0) fail("stage_repeats[" + std::to_string(i) + "]", "must be >= 1");
  }
  if (stage_widths[3] % 2 != 0) fail("stage_widths[3]", "SPPF halves the last stage width; must be even");
  if (sppf_k % 2 == 0) fail("sppf_k", "must be odd");
  if (num_classes == 0) fail("num_classes", "must be >= 1");
  if (neck_repeats == 0) fail("neck_repeats", "must be >= 1");
  if (head_strides.empty()) fail("head_strides", "at least one head is required");
  std::vector<std::size_t> sorted = head_strides;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) fail("head_strides", "duplicate stride");
  for (std::size_t s : sorted) {
    if (s != 4 && s != 8 && s != 16 && s != 32) {
      fail("head_strides", "stride " + std::to_string(s) + " not in {4, 8, 16, 32}");
    }
  }
  const bool has32 = std::binary_search(sorted.begin(), sorted.end(), std::size_t{32});
  if (has32 != include_p5) fail("include_p5", "stride 32 must be present in head_strides iff include_p5");
  // Neck widths are the widths of the stages feeding each fused level.
  for (std::size_t lvl = 0; lvl < neck_levels(); ++lvl) {
    const std::size_t w = stage_widths[2 - lvl];
    if (w % se_ratio != 0) {
      fail("se_ratio", "neck width " + std::to_string(w) + " not divisible by se_ratio " + std::to_string(se_ratio));
    }
  }
}

}  // namespace laf
