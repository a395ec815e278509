#include "laf/blocks.hpp"

#include <string>

#include "laf/error.hpp"

namespace laf {

SeParams SeParams::zeros(std::size_t channels, std::size_t hidden) {
  const auto c = static_cast<Eigen::Index>(channels), m = static_cast<Eigen::Index>(hidden);
  return {Eigen::MatrixXf::Zero(m, c), Eigen::VectorXf::Zero(m), Eigen::MatrixXf::Zero(c, m),
          Eigen::VectorXf::Zero(c)};
}

Tensor conv_block(const Tensor& x, const ConvWeights& w, std::size_t stride, Activation act, ConvEngine engine) {
  Tensor y = conv2d(x, w, stride, w.k() / 2, engine);
  activation_inplace(y, act);
  return y;
}

Tensor pconv_concat(const Tensor& x, const ConvWeights& partial, std::size_t ratio, Activation act,
                    ConvEngine engine) {
  if (ratio == 0 || x.c() % ratio != 0) {
    throw ConfigError("pconv: channels " + std::to_string(x.c()) + " not divisible by ratio " +
                      std::to_string(ratio));
  }
  const std::size_t active = x.c() / ratio;
  if (partial.c_in() != active || partial.c_out() != active || partial.k() != 3) {
    throw ShapeError("pconv: partial conv must be 3x3 " + std::to_string(active) + "->" + std::to_string(active) +
                     ", got kernel " + partial.kernel.shape().str());
  }
  const std::vector<Tensor> parts{conv_block(x.slice_channels(0, active), partial, 1, act, engine),
                                  x.slice_channels(active, x.c() - active)};
  return concat_channels(std::span<const Tensor>(parts));
}

Tensor pconv_forward(const Tensor& x, const ConvWeights& partial, const ConvWeights& mix, std::size_t ratio,
                     Activation act, ConvEngine engine) {
  return conv_block(pconv_concat(x, partial, ratio, act, engine), mix, 1, Activation::kLinear, engine);
}

Tensor pconv_bottleneck_forward(const Tensor& x, const PConvBottleneck& b, std::size_t ratio, ConvEngine engine) {
  Tensor y = conv_block(pconv_forward(x, b.partial, b.mix, ratio, Activation::kSilu, engine), b.project, 1,
                        Activation::kSilu, engine);
  auto out = y.data();
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
  return y;
}

Tensor pc_c2f_forward(const Tensor& x, const C2fBlock& block, std::size_t ratio, ConvEngine engine) {
  if (block.bottlenecks.empty()) throw ConfigError("pc_c2f: repeats must be >= 1");
  const Tensor entry = conv_block(x, block.entry, 1, Activation::kSilu, engine);
  if (entry.c() % 2 != 0) throw ShapeError("pc_c2f: entry conv width " + std::to_string(entry.c()) + " is odd");
  const std::size_t half = entry.c() / 2;
  std::vector<Tensor> parts;
  parts.reserve(2 + block.bottlenecks.size());
  parts.push_back(entry.slice_channels(0, half));
  parts.push_back(entry.slice_channels(half, half));
  for (const auto& b : block.bottlenecks) parts.push_back(pconv_bottleneck_forward(parts.back(), b, ratio, engine));
  return conv_block(concat_channels(std::span<const Tensor>(parts)), block.exit, 1, Activation::kSilu, engine);
}

Eigen::MatrixXf se_gate(const Tensor& f, const SeParams& p) {
  if (f.c() != p.channels()) {
    throw ShapeError("se_gate: input C=" + std::to_string(f.c()) + " but gate expects C=" +
                     std::to_string(p.channels()));
  }
  const Tensor pooled = global_avg_pool(f);
  const auto n = static_cast<Eigen::Index>(f.n()), c = static_cast<Eigen::Index>(f.c());
  Eigen::MatrixXf alpha(n, c);
  for (Eigen::Index b = 0; b < n; ++b) {
    const Eigen::Map<const Eigen::VectorXf> squeeze(pooled.plane(static_cast<std::size_t>(b), 0).data(), c);
    const Eigen::VectorXf hidden = (p.w1 * squeeze + p.b1).cwiseMax(0.0f);
    const Eigen::VectorXf logits = p.w2 * hidden + p.b2;
    alpha.row(b) = logits.unaryExpr([](float v) { return detail::sigmoid(v); }).transpose();
  }
  return alpha;
}

Tensor apply_gate(const Tensor& f, const Eigen::MatrixXf& alpha) {
  if (static_cast<std::size_t>(alpha.rows()) != f.n() || static_cast<std::size_t>(alpha.cols()) != f.c()) {
    throw ShapeError("apply_gate: gate is " + std::to_string(alpha.rows()) + "x" + std::to_string(alpha.cols()) +
                     " for input " + f.shape().str());
  }
  Tensor out = f;
  for (std::size_t b = 0; b < f.n(); ++b) {
    for (std::size_t ch = 0; ch < f.c(); ++ch) {
      const float a = alpha(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(ch));
      for (float& v : out.plane(b, ch)) v *= a;
    }
  }
  return out;
}

SampleGridT<float> dysample_grid(const Tensor& offsets) {
  if (offsets.c() != kDySampleOffsetChannels) {
    throw ShapeError("dysample: offset tensor has " + std::to_string(offsets.c()) + " channels, expected " +
                     std::to_string(kDySampleOffsetChannels));
  }
  constexpr std::size_t s = kDySampleFactor;
  const std::size_t h = offsets.h(), w = offsets.w();
  SampleGridT<float> grid(offsets.n(), h * s, w * s);
  for (std::size_t b = 0; b < offsets.n(); ++b) {
    for (std::size_t oy = 0; oy < h * s; ++oy) {
      for (std::size_t ox = 0; ox < w * s; ++ox) {
        const std::size_t iy = oy / s, ix = ox / s, phase = (oy % s) * s + (ox % s);
        // Half-pixel alignment: output centre (o + 0.5) maps to input coordinate (o + 0.5) / s - 0.5.
        const float base_row = (static_cast<float>(oy) + 0.5f) / static_cast<float>(s) - 0.5f;
        const float base_col = (static_cast<float>(ox) + 0.5f) / static_cast<float>(s) - 0.5f;
        const std::size_t i = grid.index(b, oy, ox);
        grid.cols[i] = base_col + kDySampleOffsetScale * offsets(b, phase, iy, ix);
        grid.rows[i] = base_row + kDySampleOffsetScale * offsets(b, s * s + phase, iy, ix);
      }
    }
  }
  return grid;
}

Tensor dysample_up2(const Tensor& x, const DySampleParams& p, ConvEngine engine) {
  if (p.offset.c_out() != kDySampleOffsetChannels || p.offset.k() != 1) {
    throw ShapeError("dysample: offset generator must be 1x1 with " + std::to_string(kDySampleOffsetChannels) +
                     " outputs, got kernel " + p.offset.kernel.shape().str());
  }
  const Tensor offsets = conv2d(x, p.offset, 1, 0, engine);
  return bilinear_sample(x, dysample_grid(offsets));
}

Tensor sppf_forward(const Tensor& x, const SppfBlock& block, std::size_t k, ConvEngine engine) {
  if (k % 2 == 0) throw UnsupportedKernelError("sppf: kernel size must be odd, got " + std::to_string(k));
  std::vector<Tensor> taps;
  taps.reserve(4);
  taps.push_back(conv_block(x, block.entry, 1, Activation::kSilu, engine));
  for (int i = 0; i < 3; ++i) taps.push_back(maxpool_same(taps.back(), k));
  return conv_block(concat_channels(std::span<const Tensor>(taps)), block.exit, 1, Activation::kSilu, engine);
}

Tensor ag_fusion(const Tensor& deep, const Tensor& shallow, const SeParams& gate, const DySampleParams& up,
                 const ConvWeights& mix, GateMode mode, ConvEngine engine) {
  if (deep.h() * 2 != shallow.h() || deep.w() * 2 != shallow.w()) {
    throw ShapeError("ag_fusion: resolution ratio must be 2, deep " + deep.shape().str() + " vs shallow " +
                     shallow.shape().str());
  }
  const Tensor upsampled = dysample_up2(deep, up, engine);
  const Tensor gated = mode == GateMode::kOpen ? shallow : apply_gate(shallow, se_gate(shallow, gate));
  return conv_block(concat_channels(upsampled, gated), mix, 1, Activation::kSilu, engine);
}

Tensor head_forward(const Tensor& f, const HeadBlock& head, ConvEngine engine) {
  const Tensor box = conv_block(conv_block(f, head.box_conv, 1, Activation::kSilu, engine), head.box_pred, 1,
                                Activation::kLinear, engine);
  const Tensor cls = conv_block(conv_block(f, head.cls_conv, 1, Activation::kSilu, engine), head.cls_pred, 1,
                                Activation::kLinear, engine);
  return concat_channels(box, cls);
}

}  // namespace laf
