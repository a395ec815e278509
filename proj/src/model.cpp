#include "laf/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <type_traits>

#include "laf/error.hpp"
#include "laf/rng.hpp"

namespace laf {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_mix(std::uint64_t& h, std::span<const float> values) {
  for (float v : values) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int byte = 0; byte < 4; ++byte) {
      h ^= (bits >> (8 * byte)) & 0xffu;
      h *= kFnvPrime;
    }
  }
}

// Single enumeration of the parameterised graph. With a null model it only
// reports specs; with a model it also hands out the slot that owns each layer.
// `visit(spec, slot)` receives ConvWeights*, SeParams* or DySampleParams*.
// With `allocate` the model's containers are sized first (build); without, the
// model must already have this config's layout.
template <class Visit>
void walk_graph(const ArchConfig& cfg, Model* m, Visit&& visit, bool allocate = true) {
  cfg.validate();
  const std::size_t in = cfg.input_size;
  const std::size_t r = cfg.pconv_ratio;

  auto conv = [&](std::string name, std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride,
                  std::size_t h_out, ConvWeights* slot) {
    visit(LayerSpec{std::move(name), LayerKind::kConv, cin, cout, k, stride, h_out, h_out}, slot);
  };
  auto c2f = [&](const std::string& name, std::size_t cin, std::size_t cout, std::size_t repeats,
                 std::size_t h, C2fBlock* slot) {
    const std::size_t c = cfg.c2f_hidden(cout);
    if (slot && allocate) slot->bottlenecks.resize(repeats);
    conv(name + ".entry", cin, 2 * c, 1, 1, h, slot ? &slot->entry : nullptr);
    for (std::size_t i = 0; i < repeats; ++i) {
      PConvBottleneck* b = slot ? &slot->bottlenecks[i] : nullptr;
      const std::string bn = name + ".m" + std::to_string(i);
      conv(bn + ".partial", c / r, c / r, 3, 1, h, b ? &b->partial : nullptr);
      conv(bn + ".mix", c, c, 1, 1, h, b ? &b->mix : nullptr);
      conv(bn + ".project", c, c, 1, 1, h, b ? &b->project : nullptr);
    }
    conv(name + ".exit", (2 + repeats) * c, cout, 1, 1, h, slot ? &slot->exit : nullptr);
  };

  if (m && allocate) {
    m->config = cfg;
    m->downsample.assign(4, {});
    m->stages.assign(4, {});
    m->neck.assign(cfg.neck_levels(), {});
    m->head_strides = cfg.head_strides;
    std::sort(m->head_strides.begin(), m->head_strides.end());
    m->heads.assign(m->head_strides.size(), {});
  }

  // Backbone.
  conv("stem", 3, cfg.stem_width, 3, 2, in / 2, m ? &m->stem : nullptr);
  std::size_t prev = cfg.stem_width;
  for (std::size_t i = 0; i < 4; ++i) {
    const std::size_t h = in / (std::size_t{4} << i);
    const std::size_t w = cfg.stage_widths[i];
    conv("down" + std::to_string(i), prev, w, 3, 2, h, m ? &m->downsample[i] : nullptr);
    c2f("stage" + std::to_string(i), w, w, cfg.stage_repeats[i], h, m ? &m->stages[i] : nullptr);
    prev = w;
  }
  const std::size_t top = cfg.stage_widths[3];
  conv("sppf.entry", top, top / 2, 1, 1, in / 32, m ? &m->sppf.entry : nullptr);
  conv("sppf.exit", 2 * top, top, 1, 1, in / 32, m ? &m->sppf.exit : nullptr);

  // Top-down neck: reduce the SPPF map to the stride-16 width, then fuse level by level.
  const std::size_t reduced = cfg.stage_widths[2];
  conv("neck.p5_reduce", top, reduced, 1, 1, in / 32, m ? &m->p5_reduce : nullptr);
  std::size_t deep_c = reduced;
  for (std::size_t lvl = 0; lvl < cfg.neck_levels(); ++lvl) {
    const std::size_t stride = std::size_t{16} >> lvl;
    const std::size_t h = in / stride;
    const std::size_t c = cfg.stage_widths[2 - lvl];
    FusionNode* node = m ? &m->neck[lvl] : nullptr;
    const std::string name = "neck." + level_name(stride);
    visit(LayerSpec{name + ".dysample", LayerKind::kDySample, deep_c, kDySampleOffsetChannels, 1, 1, h, h},
          node ? &node->up : nullptr);
    visit(LayerSpec{name + ".se", LayerKind::kSeGate, c, c / cfg.se_ratio, 1, 1, h, h}, node ? &node->gate : nullptr);
    conv(name + ".mix", deep_c + c, c, 1, 1, h, node ? &node->mix : nullptr);
    c2f(name + ".refine", c, c, cfg.neck_repeats, h, node ? &node->refine : nullptr);
    deep_c = c;
  }

  // Heads, finest stride first.
  std::vector<std::size_t> strides = cfg.head_strides;
  std::sort(strides.begin(), strides.end());
  for (std::size_t i = 0; i < strides.size(); ++i) {
    const std::size_t s = strides[i];
    const std::size_t c = s == 32 ? reduced : cfg.stage_widths[s == 4 ? 0 : s == 8 ? 1 : 2];
    const std::size_t h = in / s;
    HeadBlock* head = m ? &m->heads[i] : nullptr;
    const std::string name = "head." + level_name(s);
    conv(name + ".box_conv", c, c, 3, 1, h, head ? &head->box_conv : nullptr);
    conv(name + ".box_pred", c, 4, 1, 1, h, head ? &head->box_pred : nullptr);
    conv(name + ".cls_conv", c, c, 3, 1, h, head ? &head->cls_conv : nullptr);
    conv(name + ".cls_pred", c, cfg.num_classes, 1, 1, h, head ? &head->cls_pred : nullptr);
  }
}

std::vector<std::span<float>> spans_of(ConvWeights& w) {
  return {w.kernel.data(), std::span<float>(w.bias)};
}
std::vector<std::span<float>> spans_of(SeParams& p) {
  return {std::span<float>(p.w1.data(), static_cast<std::size_t>(p.w1.size())),
          std::span<float>(p.b1.data(), static_cast<std::size_t>(p.b1.size())),
          std::span<float>(p.w2.data(), static_cast<std::size_t>(p.w2.size())),
          std::span<float>(p.b2.data(), static_cast<std::size_t>(p.b2.size()))};
}
std::vector<std::span<float>> spans_of(DySampleParams& p) { return spans_of(p.offset); }

// Hand traversal of the model structure, independent of walk_graph.
template <class Fn>
void each_conv(const Model& m, Fn&& fn) {
  auto c2f = [&](const C2fBlock& b) {
    fn(b.entry);
    for (const auto& bn : b.bottlenecks) {
      fn(bn.partial);
      fn(bn.mix);
      fn(bn.project);
    }
    fn(b.exit);
  };
  fn(m.stem);
  for (std::size_t i = 0; i < m.stages.size(); ++i) {
    fn(m.downsample[i]);
    c2f(m.stages[i]);
  }
  fn(m.sppf.entry);
  fn(m.sppf.exit);
  fn(m.p5_reduce);
  for (const auto& node : m.neck) {
    fn(node.up.offset);
    fn(node.mix);
    c2f(node.refine);
  }
  for (const auto& h : m.heads) {
    fn(h.box_conv);
    fn(h.box_pred);
    fn(h.cls_conv);
    fn(h.cls_pred);
  }
}

}  // namespace

std::string level_name(std::size_t stride) {
  switch (stride) {
    case 4:
      return "p2";
    case 8:
      return "p3";
    case 16:
      return "p4";
    case 32:
      return "p5";
    default:
      return "s" + std::to_string(stride);
  }
}

std::size_t Model::param_count() const {
  std::size_t total = 0;
  each_conv(*this, [&](const ConvWeights& w) { total += w.kernel.size() + w.bias.size(); });
  for (const auto& node : neck) total += node.gate.param_count();
  return total;
}

std::uint64_t Model::param_checksum() const {
  std::uint64_t h = kFnvOffset;
  each_conv(*this, [&](const ConvWeights& w) {
    fnv_mix(h, w.kernel.data());
    fnv_mix(h, w.bias);
  });
  for (const auto& node : neck) {
    const auto& g = node.gate;
    fnv_mix(h, std::span<const float>(g.w1.data(), static_cast<std::size_t>(g.w1.size())));
    fnv_mix(h, std::span<const float>(g.b1.data(), static_cast<std::size_t>(g.b1.size())));
    fnv_mix(h, std::span<const float>(g.w2.data(), static_cast<std::size_t>(g.w2.size())));
    fnv_mix(h, std::span<const float>(g.b2.data(), static_cast<std::size_t>(g.b2.size())));
  }
  return h;
}

std::vector<LayerSpec> enumerate_layers(const ArchConfig& cfg) {
  std::vector<LayerSpec> specs;
  walk_graph(cfg, nullptr, [&](const LayerSpec& s, auto*) { specs.push_back(s); });
  return specs;
}

Model build_model(const ArchConfig& cfg) {
  Model m;
  Rng rng(cfg.seed);
  walk_graph(cfg, &m, [&](const LayerSpec& s, auto* slot) {
    using Slot = std::remove_pointer_t<decltype(slot)>;
    if constexpr (std::is_same_v<Slot, ConvWeights>) {
      *slot = init_weights(rng, s.c_out, s.c_in, s.k);
    } else if constexpr (std::is_same_v<Slot, DySampleParams>) {
      slot->offset = init_weights(rng, s.c_out, s.c_in, 1);
    } else {
      *slot = SeParams::zeros(s.c_in, s.c_out);
      const float b1 = 1.0f / std::sqrt(static_cast<float>(s.c_in));
      const float b2 = 1.0f / std::sqrt(static_cast<float>(s.c_out));
      for (Eigen::Index i = 0; i < slot->w1.rows(); ++i)
        for (Eigen::Index j = 0; j < slot->w1.cols(); ++j) slot->w1(i, j) = rng.symmetric(b1);
      for (Eigen::Index i = 0; i < slot->w2.rows(); ++i)
        for (Eigen::Index j = 0; j < slot->w2.cols(); ++j) slot->w2(i, j) = rng.symmetric(b2);
    }
  });
  return m;
}

void for_each_layer(Model& m, const std::function<void(const LayerSpec&, std::vector<std::span<float>>)>& fn) {
  const ArchConfig cfg = m.config;
  walk_graph(cfg, &m, [&](const LayerSpec& s, auto* slot) { fn(s, spans_of(*slot)); }, /*allocate=*/false);
}

const Tensor& PredictionMaps::at_stride(std::size_t stride) const {
  for (std::size_t i = 0; i < strides.size(); ++i) {
    if (strides[i] == stride) return maps[i];
  }
  throw ShapeError("no prediction map at stride " + std::to_string(stride));
}

TapRecord make_tap(std::string name, const Tensor& t) {
  TapRecord rec{std::move(name), t.shape(), 0.0, 0.0, kFnvOffset};
  for (float v : t.data()) {
    rec.sum += static_cast<double>(v);
    rec.abs_sum += std::abs(static_cast<double>(v));
  }
  fnv_mix(rec.hash, t.data());
  return rec;
}

PredictionMaps forward(const Model& m, const Tensor& x, const ForwardOptions& opts) {
  const ArchConfig& cfg = m.config;
  if (x.c() != 3) throw ShapeError("forward: input must have 3 channels, got C=" + std::to_string(x.c()));
  if (x.h() != cfg.input_size || x.w() != cfg.input_size) {
    throw ShapeError("forward: input spatial size " + std::to_string(x.h()) + "x" + std::to_string(x.w()) +
                     " != configured input_size " + std::to_string(cfg.input_size));
  }
  const ConvEngine e = opts.engine;
  const std::size_t r = cfg.pconv_ratio;
  auto tap = [&](const std::string& name, const Tensor& t) {
    if (opts.taps) opts.taps->push_back(make_tap(name, t));
  };
  tap("input", x);

  Tensor cur = conv_block(x, m.stem, 2, Activation::kSilu, e);
  tap("stem", cur);
  std::vector<Tensor> stage_out;
  for (std::size_t i = 0; i < 4; ++i) {
    cur = conv_block(cur, m.downsample[i], 2, Activation::kSilu, e);
    cur = pc_c2f_forward(cur, m.stages[i], r, e);
    tap("stage" + std::to_string(i), cur);
    stage_out.push_back(cur);
  }
  cur = sppf_forward(cur, m.sppf, cfg.sppf_k, e);
  tap("sppf", cur);
  Tensor deep = conv_block(cur, m.p5_reduce, 1, Activation::kSilu, e);
  tap("neck.p5_reduce", deep);

  // Feature map per stride for the heads.
  std::vector<std::pair<std::size_t, Tensor>> levels;
  levels.emplace_back(32, deep);
  for (std::size_t lvl = 0; lvl < m.neck.size(); ++lvl) {
    const FusionNode& node = m.neck[lvl];
    const std::size_t stride = std::size_t{16} >> lvl;
    Tensor fused = ag_fusion(deep, stage_out[2 - lvl], node.gate, node.up, node.mix, GateMode::kLearned, e);
    deep = pc_c2f_forward(fused, node.refine, r, e);
    tap("neck." + level_name(stride), deep);
    levels.emplace_back(stride, deep);
  }

  PredictionMaps out;
  for (std::size_t i = 0; i < m.head_strides.size(); ++i) {
    const std::size_t s = m.head_strides[i];
    const auto it = std::find_if(levels.begin(), levels.end(), [&](const auto& p) { return p.first == s; });
    if (it == levels.end()) throw ShapeError("forward: no neck output at stride " + std::to_string(s));
    out.strides.push_back(s);
    out.maps.push_back(head_forward(it->second, m.heads[i], e));
    tap("head." + level_name(s), out.maps.back());
  }
  return out;
}

Tensor synthetic_image(std::size_t batch, std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  Tensor x(Shape{batch, 3, size, size});
  for (auto& v : x.data()) v = rng.uniform01();
  return x;
}

}  // namespace laf
