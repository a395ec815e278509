#pragma once

// Forward-only kernels over NCHW tensors. Every kernel is a pure function of
// its inputs and returns a fresh tensor.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "laf/error.hpp"
#include "laf/rng.hpp"
#include "laf/tensor.hpp"

namespace laf {

// Convolution kernel of shape (C_out, C_in, k, k) plus one bias per output channel.
// Batch-norm is treated as folded into these two.
template <typename Scalar>
struct ConvWeightsT {
  TensorT<Scalar> kernel;
  std::vector<Scalar> bias;

  std::size_t c_out() const noexcept { return kernel.n(); }
  std::size_t c_in() const noexcept { return kernel.c(); }
  std::size_t k() const noexcept { return kernel.h(); }
  std::size_t param_count() const noexcept { return kernel.size() + bias.size(); }

  static ConvWeightsT zeros(std::size_t c_out, std::size_t c_in, std::size_t k) {
    return {TensorT<Scalar>(Shape{c_out, c_in, k, k}), std::vector<Scalar>(c_out, Scalar(0))};
  }
};

using ConvWeights = ConvWeightsT<float>;

enum class ConvEngine {
  kDirect,  // naive loop nest; the reference path
  kGemm,    // im2col + Eigen matrix product; must match kDirect to 1e-5 relative
};

enum class Activation { kLinear, kSilu, kRelu, kSigmoid };

namespace detail {

struct ConvGeometry {
  std::size_t k, stride, pad, h_out, w_out;
};

template <typename Scalar>
ConvGeometry check_conv(const TensorT<Scalar>& x, const ConvWeightsT<Scalar>& w, std::size_t stride,
                        std::size_t padding) {
  const std::size_t k = w.k();
  if (k != 1 && k != 3) {
    throw UnsupportedKernelError("conv2d: kernel size " + std::to_string(k) + " is not supported (expected 1 or 3)");
  }
  if (w.kernel.w() != k) {
    throw ShapeError("conv2d: kernel is not square: " + w.kernel.shape().str());
  }
  if (x.c() != w.c_in()) {
    throw ShapeError("conv2d: channel mismatch, input C=" + std::to_string(x.c()) + " but kernel C_in=" +
                     std::to_string(w.c_in()));
  }
  if (w.bias.size() != w.c_out()) {
    throw ShapeError("conv2d: bias length " + std::to_string(w.bias.size()) + " != C_out=" +
                     std::to_string(w.c_out()));
  }
  if (stride != 1 && stride != 2) {
    throw UnsupportedKernelError("conv2d: stride " + std::to_string(stride) + " is not supported (expected 1 or 2)");
  }
  if (x.h() + 2 * padding < k || x.w() + 2 * padding < k) {
    throw ShapeError("conv2d: spatial size " + std::to_string(x.h()) + "x" + std::to_string(x.w()) +
                     " too small for kernel " + std::to_string(k));
  }
  return {k, stride, padding, (x.h() + 2 * padding - k) / stride + 1, (x.w() + 2 * padding - k) / stride + 1};
}

template <typename Scalar>
Scalar sigmoid(Scalar v) {
  // Clamped so the result stays strictly inside (0, 1) even where the float saturates.
  constexpr Scalar lo = std::numeric_limits<Scalar>::min();
  constexpr Scalar hi = Scalar(1) - std::numeric_limits<Scalar>::epsilon() / 2;
  Scalar s;
  if (v >= Scalar(0)) {
    s = Scalar(1) / (Scalar(1) + std::exp(-v));
  } else {
    const Scalar e = std::exp(v);
    s = e / (Scalar(1) + e);
  }
  return std::clamp(s, lo, hi);
}

}  // namespace detail

// Reference cross-correlation. Output (N, C_out, (H+2p-k)/s+1, (W+2p-k)/s+1).
template <typename Scalar>
TensorT<Scalar> conv2d_direct(const TensorT<Scalar>& x, const ConvWeightsT<Scalar>& w, std::size_t stride,
                              std::size_t padding) {
  const auto g = detail::check_conv(x, w, stride, padding);
  const std::size_t n_batch = x.n(), c_in = x.c(), c_out = w.c_out(), h = x.h(), wd = x.w();
  TensorT<Scalar> out(Shape{n_batch, c_out, g.h_out, g.w_out});
  const auto p = static_cast<std::ptrdiff_t>(g.pad);
  for (std::size_t b = 0; b < n_batch; ++b) {
    for (std::size_t co = 0; co < c_out; ++co) {
      auto dst = out.plane(b, co);
      std::fill(dst.begin(), dst.end(), w.bias[co]);
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const auto src = x.plane(b, ci);
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            const Scalar wv = w.kernel(co, ci, ky, kx);
            if (wv == Scalar(0)) continue;
            // Valid output columns for this tap: 0 <= ox*s + kx - p < W.
            const auto dx = static_cast<std::ptrdiff_t>(kx) - p;
            const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(g.stride);
            std::ptrdiff_t ox_lo = dx >= 0 ? 0 : (-dx + s - 1) / s;
            std::ptrdiff_t ox_hi = (static_cast<std::ptrdiff_t>(wd) - 1 - dx);
            ox_hi = ox_hi < 0 ? -1 : std::min<std::ptrdiff_t>(ox_hi / s, static_cast<std::ptrdiff_t>(g.w_out) - 1);
            for (std::size_t oy = 0; oy < g.h_out; ++oy) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy) * s + static_cast<std::ptrdiff_t>(ky) - p;
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
              Scalar* drow = dst.data() + oy * g.w_out;
              const Scalar* srow = src.data() + static_cast<std::size_t>(iy) * wd;
              for (std::ptrdiff_t ox = ox_lo; ox <= ox_hi; ++ox) {
                drow[ox] += wv * srow[ox * s + dx];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

// im2col + GEMM through Eigen.
template <typename Scalar>
TensorT<Scalar> conv2d_gemm(const TensorT<Scalar>& x, const ConvWeightsT<Scalar>& w, std::size_t stride,
                            std::size_t padding) {
  using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const auto g = detail::check_conv(x, w, stride, padding);
  const std::size_t c_in = x.c(), c_out = w.c_out(), h = x.h(), wd = x.w();
  const std::size_t rows = c_in * g.k * g.k, cols = g.h_out * g.w_out;
  TensorT<Scalar> out(Shape{x.n(), c_out, g.h_out, g.w_out});
  const Eigen::Map<const RowMat> kmat(w.kernel.data().data(), static_cast<Eigen::Index>(c_out),
                                      static_cast<Eigen::Index>(rows));
  const Eigen::Map<const Vec> bias(w.bias.data(), static_cast<Eigen::Index>(c_out));
  RowMat col;
  for (std::size_t b = 0; b < x.n(); ++b) {
    Eigen::Map<RowMat> omat(out.plane(b, 0).data(), static_cast<Eigen::Index>(c_out),
                            static_cast<Eigen::Index>(cols));
    if (g.k == 1 && g.stride == 1 && g.pad == 0) {
      const Eigen::Map<const RowMat> xin(x.plane(b, 0).data(), static_cast<Eigen::Index>(c_in),
                                         static_cast<Eigen::Index>(cols));
      omat.noalias() = kmat * xin;
    } else {
      col.setZero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        const auto src = x.plane(b, ci);
        for (std::size_t ky = 0; ky < g.k; ++ky) {
          for (std::size_t kx = 0; kx < g.k; ++kx) {
            Scalar* dst = col.row(static_cast<Eigen::Index>((ci * g.k + ky) * g.k + kx)).data();
            for (std::size_t oy = 0; oy < g.h_out; ++oy) {
              const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
              for (std::size_t ox = 0; ox < g.w_out; ++ox) {
                const auto ix =
                    static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
                if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wd)) continue;
                dst[oy * g.w_out + ox] = src[static_cast<std::size_t>(iy) * wd + static_cast<std::size_t>(ix)];
              }
            }
          }
        }
      }
      omat.noalias() = kmat * col;
    }
    omat.colwise() += bias;
  }
  return out;
}

template <typename Scalar>
TensorT<Scalar> conv2d(const TensorT<Scalar>& x, const ConvWeightsT<Scalar>& w, std::size_t stride,
                       std::size_t padding, ConvEngine engine = ConvEngine::kDirect) {
  return engine == ConvEngine::kGemm ? conv2d_gemm(x, w, stride, padding) : conv2d_direct(x, w, stride, padding);
}

template <typename Scalar>
Scalar activate(Scalar v, Activation kind) {
  switch (kind) {
    case Activation::kLinear:
      return v;
    case Activation::kSilu:
      return v * detail::sigmoid(v);
    case Activation::kRelu:
      return v > Scalar(0) ? v : Scalar(0);
    case Activation::kSigmoid:
      return detail::sigmoid(v);
  }
  return v;
}

template <typename Scalar>
void activation_inplace(TensorT<Scalar>& x, Activation kind) {
  if (kind == Activation::kLinear) return;
  for (auto& v : x.data()) v = activate(v, kind);
}

template <typename Scalar>
TensorT<Scalar> activation(TensorT<Scalar> x, Activation kind) {
  activation_inplace(x, kind);
  return x;
}

// Channel concatenation of any number of parts; earlier parts come first.
template <typename Scalar>
TensorT<Scalar> concat_channels(std::span<const TensorT<Scalar>> parts) {
  if (parts.empty()) return {};
  const Shape& ref = parts.front().shape();
  std::size_t total_c = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.n != ref.n || s.h != ref.h || s.w != ref.w) {
      throw ShapeError("concat_channels: N/H/W mismatch, " + ref.str() + " vs " + s.str());
    }
    total_c += s.c;
  }
  TensorT<Scalar> out(Shape{ref.n, total_c, ref.h, ref.w});
  for (std::size_t b = 0; b < ref.n; ++b) {
    std::size_t dst_c = 0;
    for (const auto& p : parts) {
      for (std::size_t ch = 0; ch < p.c(); ++ch, ++dst_c) {
        const auto src = p.plane(b, ch);
        std::copy(src.begin(), src.end(), out.plane(b, dst_c).begin());
      }
    }
  }
  return out;
}

template <typename Scalar>
TensorT<Scalar> concat_channels(const TensorT<Scalar>& a, const TensorT<Scalar>& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
    const bool batch = a.n() != b.n();
    throw ShapeError(std::string("concat_channels: ") + (batch ? "batch" : "spatial") + " mismatch, " +
                     a.shape().str() + " vs " + b.shape().str());
  }
  const std::vector<TensorT<Scalar>> parts{a, b};
  return concat_channels(std::span<const TensorT<Scalar>>(parts));
}

// (N, C, 1, 1) spatial means, accumulated in double.
template <typename Scalar>
TensorT<Scalar> global_avg_pool(const TensorT<Scalar>& x) {
  if (x.h() == 0 || x.w() == 0) throw ShapeError("global_avg_pool: empty spatial extent " + x.shape().str());
  TensorT<Scalar> out(Shape{x.n(), x.c(), 1, 1});
  for (std::size_t b = 0; b < x.n(); ++b) {
    for (std::size_t ch = 0; ch < x.c(); ++ch) {
      double acc = 0.0;
      for (Scalar v : x.plane(b, ch)) acc += static_cast<double>(v);
      out(b, ch, 0, 0) = static_cast<Scalar>(acc / static_cast<double>(x.shape().plane()));
    }
  }
  return out;
}

// Stride-1 max pooling with (k-1)/2 padding that never wins (-inf border).
// Computed as a row pass then a column pass; the square window max is separable.
template <typename Scalar>
TensorT<Scalar> maxpool_same(const TensorT<Scalar>& x, std::size_t k) {
  if (k % 2 == 0) throw UnsupportedKernelError("maxpool_same: kernel size must be odd, got " + std::to_string(k));
  const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(k / 2);
  const auto h = static_cast<std::ptrdiff_t>(x.h()), w = static_cast<std::ptrdiff_t>(x.w());
  TensorT<Scalar> rows(x.shape()), out(x.shape());
  for (std::size_t b = 0; b < x.n(); ++b) {
    for (std::size_t ch = 0; ch < x.c(); ++ch) {
      const auto src = x.plane(b, ch);
      auto tmp = rows.plane(b, ch);
      auto dst = out.plane(b, ch);
      for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t xx = 0; xx < w; ++xx) {
          Scalar m = -std::numeric_limits<Scalar>::infinity();
          for (std::ptrdiff_t d = std::max<std::ptrdiff_t>(0, xx - r); d <= std::min(w - 1, xx + r); ++d) {
            m = std::max(m, src[static_cast<std::size_t>(y * w + d)]);
          }
          tmp[static_cast<std::size_t>(y * w + xx)] = m;
        }
      }
      for (std::ptrdiff_t y = 0; y < h; ++y) {
        for (std::ptrdiff_t xx = 0; xx < w; ++xx) {
          Scalar m = -std::numeric_limits<Scalar>::infinity();
          for (std::ptrdiff_t d = std::max<std::ptrdiff_t>(0, y - r); d <= std::min(h - 1, y + r); ++d) {
            m = std::max(m, tmp[static_cast<std::size_t>(d * w + xx)]);
          }
          dst[static_cast<std::size_t>(y * w + xx)] = m;
        }
      }
    }
  }
  return out;
}

// Four-neighbour interpolation stencil for one continuous (row, col) position.
template <typename Scalar>
struct BilinearTap {
  std::size_t y0, x0, y1, x1;
  Scalar w00, w01, w10, w11;  // w_<dy><dx>
};

// Clamp-to-edge: the position is clamped to [0, H-1] x [0, W-1] before weighting,
// so the weights are always nonnegative and sum to one.
template <typename Scalar>
BilinearTap<Scalar> bilinear_tap(Scalar row, Scalar col, std::size_t h, std::size_t w) {
  const Scalar ry = std::clamp(row, Scalar(0), static_cast<Scalar>(h - 1));
  const Scalar rx = std::clamp(col, Scalar(0), static_cast<Scalar>(w - 1));
  const auto y0 = static_cast<std::size_t>(std::floor(ry));
  const auto x0 = static_cast<std::size_t>(std::floor(rx));
  const std::size_t y1 = std::min(y0 + 1, h - 1), x1 = std::min(x0 + 1, w - 1);
  const Scalar fy = ry - static_cast<Scalar>(y0), fx = rx - static_cast<Scalar>(x0);
  return {y0, x0, y1, x1, (1 - fy) * (1 - fx), (1 - fy) * fx, fy * (1 - fx), fy * fx};
}

// Per-output sampling positions, shared by all channels of a batch item.
template <typename Scalar>
struct SampleGridT {
  std::size_t n = 0, h = 0, w = 0;
  std::vector<Scalar> rows, cols;  // length n*h*w each, row-major (n, y, x)

  SampleGridT() = default;
  SampleGridT(std::size_t n_, std::size_t h_, std::size_t w_)
      : n(n_), h(h_), w(w_), rows(n_ * h_ * w_), cols(n_ * h_ * w_) {}
  std::size_t index(std::size_t b, std::size_t y, std::size_t x) const noexcept { return (b * h + y) * w + x; }
};

template <typename Scalar>
TensorT<Scalar> bilinear_sample(const TensorT<Scalar>& x, const SampleGridT<Scalar>& grid) {
  if (grid.n != x.n()) {
    throw ShapeError("bilinear_sample: grid batch " + std::to_string(grid.n) + " != input batch " +
                     std::to_string(x.n()));
  }
  TensorT<Scalar> out(Shape{x.n(), x.c(), grid.h, grid.w});
  std::vector<BilinearTap<Scalar>> taps(grid.h * grid.w);
  for (std::size_t b = 0; b < x.n(); ++b) {
    for (std::size_t y = 0; y < grid.h; ++y) {
      for (std::size_t xx = 0; xx < grid.w; ++xx) {
        const auto i = grid.index(b, y, xx);
        taps[y * grid.w + xx] = bilinear_tap(grid.rows[i], grid.cols[i], x.h(), x.w());
      }
    }
    for (std::size_t ch = 0; ch < x.c(); ++ch) {
      const auto src = x.plane(b, ch);
      auto dst = out.plane(b, ch);
      const std::size_t wd = x.w();
      for (std::size_t i = 0; i < taps.size(); ++i) {
        const auto& t = taps[i];
        dst[i] = t.w00 * src[t.y0 * wd + t.x0] + t.w01 * src[t.y0 * wd + t.x1] + t.w10 * src[t.y1 * wd + t.x0] +
                 t.w11 * src[t.y1 * wd + t.x1];
      }
    }
  }
  return out;
}

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) kernel, fan_in = C_in*k*k, zero bias.
// Draws one value per kernel entry in (C_out, C_in, ky, kx) storage order.
inline ConvWeights init_weights(Rng& rng, std::size_t c_out, std::size_t c_in, std::size_t k) {
  auto w = ConvWeights::zeros(c_out, c_in, k);
  const float bound = 1.0f / std::sqrt(static_cast<float>(c_in * k * k));
  for (auto& v : w.kernel.data()) v = rng.symmetric(bound);
  return w;
}

}  // namespace laf
