#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "laf/arch_config.hpp"
#include "laf/model.hpp"

namespace laf {

struct LayerCost {
  std::size_t params = 0;
  std::size_t macs = 0;
};

// params = C_out*C_in*k^2 (+C_out with bias); MACs = weight count * H_out * W_out.
LayerCost count_conv(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t h_out, std::size_t w_out,
                     bool bias = true);

// Two projections plus biases: 2*C^2/s + C/s + C. Throws ConfigError if s does not divide C.
std::size_t count_se(std::size_t channels, std::size_t ratio);

// Offset conv at the input resolution plus 4 MACs per output element for the
// bilinear gather. h_out, w_out are the upsampled extents.
LayerCost count_dysample(std::size_t channels, std::size_t h_out, std::size_t w_out);

struct FlopRow {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  std::size_t params = 0;
  std::size_t macs = 0;
};

// FLOPs are 2 * MACs; bias adds, activations, pooling and gate products are not counted.
struct FlopReport {
  std::size_t input_size = 0;
  std::vector<FlopRow> rows;
  std::size_t total_params = 0;
  std::size_t total_macs = 0;

  double gflops() const noexcept { return 2.0 * static_cast<double>(total_macs) / 1e9; }
  double mparams() const noexcept { return static_cast<double>(total_params) / 1e6; }
  // Sum over rows of one kind, as GFLOPs.
  double gflops_of(LayerKind kind) const noexcept;
};

LayerCost count_layer(const LayerSpec& spec);

// Walks enumerate_layers(cfg); totals at cfg.input_size.
FlopReport count_model(const ArchConfig& cfg);

struct PConvSavings {
  double full_macs = 0.0;     // 3x3 C->C then 1x1 C->C
  double partial_macs = 0.0;  // 3x3 on C/r channels then 1x1 C->C
  double ratio = 0.0;         // partial / full
};

PConvSavings pconv_block_savings(std::size_t channels, std::size_t ratio, std::size_t h, std::size_t w);

// Anchor band check used by `arch summary`.
struct AnchorVerdict {
  double params_m = 0.0, gflops = 0.0;
  double params_lo = 0.0, params_hi = 0.0, gflops_lo = 0.0, gflops_hi = 0.0;
  bool params_ok = false, gflops_ok = false;
};

inline constexpr double kReferenceParamsM = 2.3;
inline constexpr double kReferenceGflops = 9.0;
inline constexpr double kAnchorTolerance = 0.15;

AnchorVerdict anchor_verdict(const FlopReport& report);

}  // namespace laf
