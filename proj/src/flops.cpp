#include "laf/flops.hpp"

#include "laf/blocks.hpp"
#include "laf/error.hpp"

namespace laf {

LayerCost count_conv(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t h_out, std::size_t w_out,
                     bool bias) {
  const std::size_t weights = c_out * c_in * k * k;
  return {weights + (bias ? c_out : 0), weights * h_out * w_out};
}

std::size_t count_se(std::size_t channels, std::size_t ratio) {
  if (ratio == 0 || channels % ratio != 0) {
    throw ConfigError("count_se: channels " + std::to_string(channels) + " not divisible by ratio " +
                      std::to_string(ratio));
  }
  const std::size_t hidden = channels / ratio;
  return 2 * channels * hidden + hidden + channels;
}

LayerCost count_dysample(std::size_t channels, std::size_t h_out, std::size_t w_out) {
  const std::size_t s = kDySampleFactor;
  LayerCost cost = count_conv(channels, kDySampleOffsetChannels, 1, h_out / s, w_out / s);
  cost.macs += 4 * channels * h_out * w_out;
  return cost;
}

LayerCost count_layer(const LayerSpec& spec) {
  switch (spec.kind) {
    case LayerKind::kConv:
      return count_conv(spec.c_in, spec.c_out, spec.k, spec.h_out, spec.w_out);
    case LayerKind::kSeGate: {
      const std::size_t params = count_se(spec.c_in, spec.c_in / spec.c_out);
      return {params, 2 * spec.c_in * spec.c_out};
    }
    case LayerKind::kDySample:
      return count_dysample(spec.c_in, spec.h_out, spec.w_out);
  }
  return {};
}

double FlopReport::gflops_of(LayerKind kind) const noexcept {
  std::size_t macs = 0;
  for (const auto& r : rows) {
    if (r.kind == kind) macs += r.macs;
  }
  return 2.0 * static_cast<double>(macs) / 1e9;
}

FlopReport count_model(const ArchConfig& cfg) {
  FlopReport report;
  report.input_size = cfg.input_size;
  for (const auto& spec : enumerate_layers(cfg)) {
    const LayerCost c = count_layer(spec);
    report.rows.push_back({spec.name, spec.kind, c.params, c.macs});
    report.total_params += c.params;
    report.total_macs += c.macs;
  }
  return report;
}

PConvSavings pconv_block_savings(std::size_t channels, std::size_t ratio, std::size_t h, std::size_t w) {
  if (ratio == 0 || channels % ratio != 0) {
    throw ConfigError("pconv_block_savings: channels " + std::to_string(channels) + " not divisible by ratio " +
                      std::to_string(ratio));
  }
  const double c = static_cast<double>(channels), cp = c / static_cast<double>(ratio);
  const double hw = static_cast<double>(h * w);
  PConvSavings s;
  s.full_macs = 9.0 * c * c * hw + c * c * hw;
  s.partial_macs = 9.0 * cp * cp * hw + c * c * hw;
  s.ratio = s.partial_macs / s.full_macs;
  return s;
}

AnchorVerdict anchor_verdict(const FlopReport& report) {
  AnchorVerdict v;
  v.params_m = report.mparams();
  v.gflops = report.gflops();
  v.params_lo = kReferenceParamsM * (1.0 - kAnchorTolerance);
  v.params_hi = kReferenceParamsM * (1.0 + kAnchorTolerance);
  v.gflops_lo = kReferenceGflops * (1.0 - kAnchorTolerance);
  v.gflops_hi = kReferenceGflops * (1.0 + kAnchorTolerance);
  v.params_ok = v.params_m >= v.params_lo && v.params_m <= v.params_hi;
  v.gflops_ok = v.gflops >= v.gflops_lo && v.gflops <= v.gflops_hi;
  return v;
}

}  // namespace laf
