#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace laf {

// Declarative description of the detector. Defaults give the three-head
// (strides 4/8/16) network with a PC-C2f backbone and an SE-gated neck.
struct ArchConfig {
  std::size_t input_size = 640;
  std::size_t stem_width = 16;
  std::vector<std::size_t> stage_widths{32, 64, 128, 256};
  std::vector<std::size_t> stage_repeats{1, 2, 2, 1};
  double c2f_expansion = 1.0;    // hidden width of a C2f block = width * expansion
  std::size_t neck_repeats = 2;  // PConv bottlenecks in each neck refinement block
  std::size_t pconv_ratio = 4;   // PConv convolves the first C / ratio channels
  std::size_t se_ratio = 16;     // SE bottleneck width = C / ratio
  std::size_t sppf_k = 5;
  std::vector<std::size_t> head_strides{4, 8, 16};
  bool include_p5 = false;
  std::size_t num_classes = 10;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the first offending field.
  void validate() const;

  // Hidden width of a C2f block of the given output width.
  std::size_t c2f_hidden(std::size_t width) const;

  // Number of top-down fusion levels (one DySample each) needed by the heads.
  std::size_t neck_levels() const;

  // Copy with the stride-32 head toggled; keeps head_strides consistent.
  ArchConfig with_p5(bool on) const;

  std::size_t prediction_channels() const { return 4 + num_classes; }
};

}  // namespace laf
