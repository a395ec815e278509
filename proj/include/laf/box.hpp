#pragma once

#include <algorithm>

namespace laf {

// Axis-aligned box in center form, pixels.
template <typename Scalar>
struct BoxT {
  Scalar cx{}, cy{}, w{}, h{};

  Scalar left() const noexcept { return cx - w / 2; }
  Scalar right() const noexcept { return cx + w / 2; }
  Scalar top() const noexcept { return cy - h / 2; }
  Scalar bottom() const noexcept { return cy + h / 2; }
  Scalar area() const noexcept { return w * h; }
  bool valid() const noexcept { return w > 0 && h > 0; }

  static BoxT from_ltwh(Scalar l, Scalar t, Scalar bw, Scalar bh) { return {l + bw / 2, t + bh / 2, bw, bh}; }

  friend bool operator==(const BoxT&, const BoxT&) = default;
};

using Box = BoxT<double>;

}  // namespace laf
