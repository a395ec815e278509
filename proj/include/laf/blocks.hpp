#pragma once

// Building blocks of the detector: PConv, PC-C2f, SE gate, DySample, SPPF,
// attention-guided fusion and the decoupled head. Parameters are plain value
// types; the block functions are pure.

#include <Eigen/Core>

#include <cstddef>
#include <vector>

#include "laf/kernels.hpp"
#include "laf/tensor.hpp"

namespace laf {

// Squeeze-and-excitation projections: hidden = C / ratio.
struct SeParams {
  Eigen::MatrixXf w1;  // hidden x C
  Eigen::VectorXf b1;  // hidden
  Eigen::MatrixXf w2;  // C x hidden
  Eigen::VectorXf b2;  // C

  std::size_t channels() const noexcept { return static_cast<std::size_t>(w1.cols()); }
  std::size_t hidden() const noexcept { return static_cast<std::size_t>(w1.rows()); }
  std::size_t param_count() const noexcept {
    return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
  }
  static SeParams zeros(std::size_t channels, std::size_t hidden);
};

// 3x3 conv on the first C/r channels, then the standard 1x1; residual around both.
struct PConvBottleneck {
  ConvWeights partial;  // 3x3, C/r -> C/r
  ConvWeights mix;      // 1x1, C -> C, over Concat(partial out, bypass)
  ConvWeights project;  // 1x1, C -> C
};

struct C2fBlock {
  ConvWeights entry;  // 1x1, C_in -> 2c
  std::vector<PConvBottleneck> bottlenecks;
  ConvWeights exit;  // 1x1, (2 + n)c -> C_out
};

struct SppfBlock {
  ConvWeights entry;  // 1x1, C -> C/2
  ConvWeights exit;   // 1x1, 2C -> C
};

// Content-aware 2x upsampler: a 1x1 conv predicts 2*s*s = 8 offset channels.
struct DySampleParams {
  ConvWeights offset;  // 1x1, C -> 8, linear
};

struct FusionNode {
  DySampleParams up;
  SeParams gate;    // on the shallow (lateral) input
  ConvWeights mix;  // 1x1, C_deep + C_shallow -> C_shallow
  C2fBlock refine;
};

// Box and class branches, each one 3x3 C->C conv then a 1x1 predictor.
struct HeadBlock {
  ConvWeights box_conv;
  ConvWeights box_pred;  // C -> 4
  ConvWeights cls_conv;
  ConvWeights cls_pred;  // C -> K
};

enum class GateMode {
  kLearned,
  kOpen,  // alpha == 1 everywhere (saturated-bias limit); plain concat fusion
};

// Offsets scale and upsampling factor of DySample.
inline constexpr float kDySampleOffsetScale = 0.25f;
inline constexpr std::size_t kDySampleFactor = 2;
inline constexpr std::size_t kDySampleOffsetChannels = 2 * kDySampleFactor * kDySampleFactor;

// conv (same padding) + bias + activation.
Tensor conv_block(const Tensor& x, const ConvWeights& w, std::size_t stride, Activation act, ConvEngine engine);

// Concat(act(Conv3x3(first C/r channels)), remaining channels).
Tensor pconv_concat(const Tensor& x, const ConvWeights& partial, std::size_t ratio,
                    Activation act = Activation::kSilu, ConvEngine engine = ConvEngine::kDirect);

// Conv1x1(pconv_concat(...)), no activation after the mix.
Tensor pconv_forward(const Tensor& x, const ConvWeights& partial, const ConvWeights& mix, std::size_t ratio,
                     Activation act = Activation::kSilu, ConvEngine engine = ConvEngine::kDirect);

// x + SiLU(Conv1x1(PConv(x))).
Tensor pconv_bottleneck_forward(const Tensor& x, const PConvBottleneck& b, std::size_t ratio,
                                ConvEngine engine = ConvEngine::kDirect);

Tensor pc_c2f_forward(const Tensor& x, const C2fBlock& block, std::size_t ratio,
                      ConvEngine engine = ConvEngine::kDirect);

// alpha = sigmoid(W2 relu(W1 GAP(f) + b1) + b2), one row per batch item.
Eigen::MatrixXf se_gate(const Tensor& f, const SeParams& p);

// f scaled per (batch, channel) by alpha.
Tensor apply_gate(const Tensor& f, const Eigen::MatrixXf& alpha);

// Sampling positions for a 2x upsample: half-pixel static grid plus 0.25 * raw offsets.
// `offsets` is (N, 8, H, W); channels 0-3 hold column offsets and 4-7 row offsets
// for the sub-pixel phases (sy * 2 + sx).
SampleGridT<float> dysample_grid(const Tensor& offsets);

Tensor dysample_up2(const Tensor& x, const DySampleParams& p, ConvEngine engine = ConvEngine::kDirect);

Tensor sppf_forward(const Tensor& x, const SppfBlock& block, std::size_t k, ConvEngine engine = ConvEngine::kDirect);

// SiLU(Conv1x1(Concat(DySample(deep), alpha * shallow))) at the shallow resolution.
Tensor ag_fusion(const Tensor& deep, const Tensor& shallow, const SeParams& gate, const DySampleParams& up,
                 const ConvWeights& mix, GateMode mode = GateMode::kLearned, ConvEngine engine = ConvEngine::kDirect);

// (N, 4 + K, H, W): box regression channels first, then class logits.
Tensor head_forward(const Tensor& f, const HeadBlock& head, ConvEngine engine = ConvEngine::kDirect);

}  // namespace laf
