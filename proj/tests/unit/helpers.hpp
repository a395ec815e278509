#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "laf/blocks.hpp"
#include "laf/kernels.hpp"
#include "laf/rng.hpp"
#include "laf/tensor.hpp"

namespace laf::test {

inline Tensor random_tensor(Shape s, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
  Rng rng(seed);
  Tensor t(s);
  for (auto& v : t.data()) v = lo + (hi - lo) * rng.uniform01();
  return t;
}

inline ConvWeights random_weights(std::size_t c_out, std::size_t c_in, std::size_t k, std::uint64_t seed,
                                  bool with_bias = true) {
  Rng rng(seed);
  ConvWeights w = init_weights(rng, c_out, c_in, k);
  if (with_bias) {
    for (auto& b : w.bias) b = rng.symmetric(0.5f);
  }
  return w;
}

// max |a - b| / max(max |b|, floor)
inline double max_rel_diff(const Tensor& a, const Tensor& b, double floor = 1e-12) {
  double diff = 0.0, scale = floor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i])));
    scale = std::max(scale, std::abs(static_cast<double>(b.data()[i])));
  }
  return diff / scale;
}

// Plain 2x bilinear upsampling, half-pixel centres, clamp to edge; double precision.
inline Tensor bilinear_up2_oracle(const Tensor& x) {
  Tensor out(Shape{x.n(), x.c(), 2 * x.h(), 2 * x.w()});
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t c = 0; c < x.c(); ++c)
      for (std::size_t oy = 0; oy < out.h(); ++oy)
        for (std::size_t ox = 0; ox < out.w(); ++ox) {
          double sy = std::clamp((oy + 0.5) / 2.0 - 0.5, 0.0, double(x.h() - 1));
          double sx = std::clamp((ox + 0.5) / 2.0 - 0.5, 0.0, double(x.w() - 1));
          const auto y0 = std::size_t(sy), x0 = std::size_t(sx);
          const auto y1 = std::min(y0 + 1, x.h() - 1), x1 = std::min(x0 + 1, x.w() - 1);
          const double fy = sy - double(y0), fx = sx - double(x0);
          out(n, c, oy, ox) = static_cast<float>((1 - fy) * ((1 - fx) * x(n, c, y0, x0) + fx * x(n, c, y0, x1)) +
                                                 fy * ((1 - fx) * x(n, c, y1, x0) + fx * x(n, c, y1, x1)));
        }
  return out;
}

inline SeParams random_se(std::size_t c, std::size_t hidden, std::uint64_t seed) {
  Rng rng(seed);
  SeParams p = SeParams::zeros(c, hidden);
  for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = rng.symmetric(1.0f);
  for (Eigen::Index i = 0; i < p.w2.size(); ++i) p.w2.data()[i] = rng.symmetric(1.0f);
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) p.b1[i] = rng.symmetric(0.5f);
  for (Eigen::Index i = 0; i < p.b2.size(); ++i) p.b2[i] = rng.symmetric(0.5f);
  return p;
}

inline std::string fixture(const std::string& name) { return std::string(LAF_FIXTURE_DIR) + "/" + name; }

}  // namespace laf::test
