#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "laf/arch_config.hpp"
#include "laf/blocks.hpp"
#include "laf/kernels.hpp"
#include "laf/tensor.hpp"

namespace laf {

enum class LayerKind {
  kConv,      // c_in -> c_out, k x k, stride; output h_out x w_out
  kSeGate,    // c_in = gated channels, c_out = bottleneck width; h_out x w_out = gated map
  kDySample,  // c_in = channels, c_out = offset channels; h_out x w_out = upsampled output
};

// One parameterised layer of the graph. The builder and the FLOP accountant
// both consume the same enumeration, so they cannot disagree.
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t k = 1;
  std::size_t stride = 1;
  std::size_t h_out = 0;
  std::size_t w_out = 0;
};

// Instantiated network. Immutable after build_model; forward only reads it.
struct Model {
  ArchConfig config;
  ConvWeights stem;
  std::vector<ConvWeights> downsample;  // one per stage, 3x3 stride 2
  std::vector<C2fBlock> stages;
  SppfBlock sppf;
  ConvWeights p5_reduce;               // 1x1 lateral on the SPPF output
  std::vector<FusionNode> neck;        // stride 16, 8, 4 order (top-down)
  std::vector<std::size_t> head_strides;  // ascending
  std::vector<HeadBlock> heads;        // aligned with head_strides

  // Brute-force count over the stored weights and biases.
  std::size_t param_count() const;
  // FNV-1a over the bit patterns of every stored parameter, in storage order.
  std::uint64_t param_checksum() const;
};

// Layer list of the graph build_model produces, in construction order.
std::vector<LayerSpec> enumerate_layers(const ArchConfig& cfg);

// Deterministic build: one Rng seeded with cfg.seed draws every kernel in
// enumerate_layers order (see init_weights); SE projections draw W1 then W2
// row-major with bounds 1/sqrt(fan_in); all biases are zero.
Model build_model(const ArchConfig& cfg);

// Visits every parameter tensor of a model with its layer spec. Each call gets
// the spans of one layer (kernel then bias; W1, b1, W2, b2 for SE gates).
void for_each_layer(Model& m, const std::function<void(const LayerSpec&, std::vector<std::span<float>>)>& fn);

struct PredictionMaps {
  std::vector<std::size_t> strides;  // ascending
  std::vector<Tensor> maps;          // (N, 4 + K, input / stride, input / stride)

  const Tensor& at_stride(std::size_t stride) const;
};

// Shape and checksum of one intermediate tensor.
struct TapRecord {
  std::string name;
  Shape shape;
  double sum = 0.0;
  double abs_sum = 0.0;
  std::uint64_t hash = 0;  // FNV-1a over the float bit patterns
};

TapRecord make_tap(std::string name, const Tensor& t);

struct ForwardOptions {
  ConvEngine engine = ConvEngine::kGemm;
  std::vector<TapRecord>* taps = nullptr;  // filled when set
};

// Errors: input channels != 3 or spatial size != input_size (no implicit resize).
PredictionMaps forward(const Model& m, const Tensor& x, const ForwardOptions& opts = {});

// Synthetic input in [0, 1) drawn from a seeded Rng.
Tensor synthetic_image(std::size_t batch, std::size_t size, std::uint64_t seed);

std::string level_name(std::size_t stride);

}  // namespace laf
