#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "laf/error.hpp"

namespace laf {

// NCHW extents.
struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  constexpr std::size_t numel() const noexcept { return n * c * h * w; }
  constexpr std::size_t plane() const noexcept { return h * w; }
  friend constexpr bool operator==(const Shape&, const Shape&) = default;

  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
  }
};

// Dense NCHW tensor, row-major in (n, c, h, w) order.
template <typename Scalar>
class TensorT {
 public:
  using value_type = Scalar;

  TensorT() = default;
  explicit TensorT(Shape shape, Scalar fill = Scalar(0)) : shape_(shape), data_(shape.numel(), fill) {}
  TensorT(Shape shape, std::vector<Scalar> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.numel()) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_.str());
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t n() const noexcept { return shape_.n; }
  std::size_t c() const noexcept { return shape_.c; }
  std::size_t h() const noexcept { return shape_.h; }
  std::size_t w() const noexcept { return shape_.w; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<Scalar> data() noexcept { return data_; }
  std::span<const Scalar> data() const noexcept { return data_; }

  std::size_t offset(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return ((n * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  Scalar& operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) noexcept {
    return data_[offset(n, c, y, x)];
  }
  Scalar operator()(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[offset(n, c, y, x)];
  }

  // One H*W plane.
  std::span<Scalar> plane(std::size_t n, std::size_t c) noexcept {
    return std::span<Scalar>(data_).subspan(offset(n, c, 0, 0), shape_.plane());
  }
  std::span<const Scalar> plane(std::size_t n, std::size_t c) const noexcept {
    return std::span<const Scalar>(data_).subspan(offset(n, c, 0, 0), shape_.plane());
  }

  bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](Scalar v) { return std::isfinite(v); });
  }

  // Channels [begin, begin + count) as a new tensor.
  TensorT slice_channels(std::size_t begin, std::size_t count) const {
    if (begin + count > shape_.c) {
      throw ShapeError("channel slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                       ") exceeds C=" + std::to_string(shape_.c));
    }
    TensorT out(Shape{shape_.n, count, shape_.h, shape_.w});
    for (std::size_t b = 0; b < shape_.n; ++b) {
      for (std::size_t ch = 0; ch < count; ++ch) {
        auto src = plane(b, begin + ch);
        std::copy(src.begin(), src.end(), out.plane(b, ch).begin());
      }
    }
    return out;
  }

 private:
  Shape shape_{};
  std::vector<Scalar> data_;
};

using Tensor = TensorT<float>;

}  // namespace laf
