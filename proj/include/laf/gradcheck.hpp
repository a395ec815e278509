#pragma once

#include <cstddef>
#include <cstdint>

#include "laf/losses.hpp"

namespace laf {

struct GradCheckOptions {
  LossKind kind = LossKind::kIou;
  std::size_t pairs = 500;
  std::uint64_t seed = 0;
  double step = 1e-4;  // central-difference step, relative to max(w, h) of the predicted box
  WiouState state;     // mode and constants; the running mean is redrawn per pair
};

struct GradCheckResult {
  std::size_t pairs = 0;
  std::size_t resampled = 0;  // candidates rejected as too close to a kink
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
};

// Max-norm relative error ||g - g_fd||_inf / ||g_fd||_inf between the analytic
// gradient and central differences taken with the detached terms frozen.
double fd_relative_error(LossKind kind, const Box& a, const Box& b, const WiouState& st, double step,
                         detail::Vec4<double>* fd_out = nullptr);

// Random overlapping pairs (IoU > 0.05) kept at least 100 steps away from every
// min/max tie, so the difference stencil never straddles a kink.
GradCheckResult grad_check(const GradCheckOptions& opts);

}  // namespace laf
