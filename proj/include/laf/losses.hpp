#pragma once

// IoU-family box regression losses: IoU, CIoU and Wise-IoU v3, with analytic
// gradients w.r.t. the predicted box (cx, cy, w, h).
//
// Detached terms (treated as constants in the gradient, identical in the value
// path): the CIoU trade-off weight alpha, the enclosing extents W_g, H_g of the
// Wise-IoU distance factor, and the running mean. Everything else, including
// beta and the focusing coefficient, carries gradient.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "laf/box.hpp"
#include "laf/error.hpp"

namespace laf {

enum class LossKind { kIou, kCiou, kWiou };

enum class FocusMode {
  kPaperAlpha,  // (beta / delta)^gamma
  kReferenceR,  // beta / (delta * alpha_base^(beta - delta))
};

struct WiouState {
  double running_mean = 1.0;
  double momentum = 1.0 / 30.0;
  double delta = 3.0;
  double gamma = 1.9;
  double alpha_base = 1.9;  // reference-r mode only
  FocusMode mode = FocusMode::kPaperAlpha;
};

// m <- (1 - momentum) m + momentum * mean(batch). Pure; throws StateError on an
// empty batch or a loss outside [0, 1].
inline WiouState update_mean(WiouState st, std::span<const double> batch_liou) {
  if (batch_liou.empty()) throw StateError("update_mean: empty batch");
  double sum = 0.0;
  for (double v : batch_liou) {
    if (!(v >= 0.0 && v <= 1.0)) throw StateError("update_mean: IoU loss " + std::to_string(v) + " outside [0, 1]");
    sum += v;
  }
  st.running_mean = (1.0 - st.momentum) * st.running_mean + st.momentum * sum / static_cast<double>(batch_liou.size());
  return st;
}

namespace detail {

// Length of [lo_a, hi_a] n [lo_b, hi_b] and of their hull along one axis, with
// derivatives w.r.t. the centre c and extent e of the first interval. Ties in
// min/max take the half-half subgradient and clear `smooth`.
// Area from the rounded edges, so a box's overlap with itself equals its area
// bit for bit and IoU(a, a) is exactly 1.
template <typename S>
S edge_area(const BoxT<S>& a) {
  return (a.right() - a.left()) * (a.bottom() - a.top());
}

template <typename S>
struct AxisTerms {
  S overlap{}, d_overlap_c{}, d_overlap_e{};
  S hull{}, d_hull_c{}, d_hull_e{};
  bool smooth = true;
};

template <typename S>
AxisTerms<S> axis_terms(S c, S e, S lo_b, S hi_b) {
  const S lo_a = c - e / 2, hi_a = c + e / 2;
  const S half(0.5);
  auto pick = [&](bool first, bool tie) { return tie ? half : (first ? S(1) : S(0)); };
  AxisTerms<S> t;
  t.smooth = hi_a != hi_b && lo_a != lo_b;
  const S g_min_hi = pick(hi_a < hi_b, hi_a == hi_b);  // d min(hi_a, hi_b) / d hi_a
  const S g_max_lo = pick(lo_a > lo_b, lo_a == lo_b);  // d max(lo_a, lo_b) / d lo_a
  const S raw = std::min(hi_a, hi_b) - std::max(lo_a, lo_b);
  if (raw > 0) {
    t.overlap = raw;
    t.d_overlap_c = g_min_hi - g_max_lo;
    t.d_overlap_e = half * (g_min_hi + g_max_lo);
  } else if (raw == 0) {
    t.smooth = false;
  }
  const S g_max_hi = pick(hi_a > hi_b, hi_a == hi_b);
  const S g_min_lo = pick(lo_a < lo_b, lo_a == lo_b);
  t.hull = std::max(hi_a, hi_b) - std::min(lo_a, lo_b);
  t.d_hull_c = g_max_hi - g_min_lo;
  t.d_hull_e = half * (g_max_hi + g_min_lo);
  return t;
}

template <typename S>
using Vec4 = Eigen::Matrix<S, 4, 1>;

// IoU and its gradient in one pass.
template <typename S>
struct IouTerms {
  S iou{};
  Vec4<S> d_iou = Vec4<S>::Zero();
  S hull_w{}, hull_h{};
  Vec4<S> d_hull_w = Vec4<S>::Zero(), d_hull_h = Vec4<S>::Zero();
  bool smooth = true;
};

template <typename S>
IouTerms<S> iou_terms(const BoxT<S>& a, const BoxT<S>& b) {
  const AxisTerms<S> x = axis_terms(a.cx, a.w, b.left(), b.right());
  const AxisTerms<S> y = axis_terms(a.cy, a.h, b.top(), b.bottom());
  IouTerms<S> t;
  t.smooth = x.smooth && y.smooth;
  const S inter = x.overlap * y.overlap;
  const S uni = detail::edge_area(a) + detail::edge_area(b) - inter;
  t.iou = inter / uni;
  const Vec4<S> d_inter(x.d_overlap_c * y.overlap, x.overlap * y.d_overlap_c, x.d_overlap_e * y.overlap,
                        x.overlap * y.d_overlap_e);
  const Vec4<S> d_uni = Vec4<S>(0, 0, a.h, a.w) - d_inter;
  t.d_iou = (d_inter * uni - inter * d_uni) / (uni * uni);
  t.hull_w = x.hull;
  t.hull_h = y.hull;
  t.d_hull_w = Vec4<S>(x.d_hull_c, 0, x.d_hull_e, 0);
  t.d_hull_h = Vec4<S>(0, y.d_hull_c, 0, y.d_hull_e);
  return t;
}

template <typename S>
S aspect_term(const BoxT<S>& a, const BoxT<S>& b) {
  const S k = S(4) / (std::numbers::pi_v<S> * std::numbers::pi_v<S>);
  const S diff = std::atan(b.w / b.h) - std::atan(a.w / a.h);
  return k * diff * diff;
}

}  // namespace detail

template <typename S>
S iou(const BoxT<S>& a, const BoxT<S>& b) {
  const S iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const S ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0 || ih <= 0) return S(0);
  const S inter = iw * ih;
  return inter / (detail::edge_area(a) + detail::edge_area(b) - inter);
}

template <typename S>
struct Extent {
  S w{}, h{};
};

template <typename S>
Extent<S> enclosing_extent(const BoxT<S>& a, const BoxT<S>& b) {
  return {std::max(a.right(), b.right()) - std::min(a.left(), b.left()),
          std::max(a.bottom(), b.bottom()) - std::min(a.top(), b.top())};
}

template <typename S>
S center_distance_sq(const BoxT<S>& a, const BoxT<S>& b) {
  const S dx = a.cx - b.cx, dy = a.cy - b.cy;
  return dx * dx + dy * dy;
}

// Values that the gradient treats as constants, captured at one (a, b, state).
template <typename S>
struct Detached {
  S ciou_alpha{};
  S enclose_w{}, enclose_h{};
  S running_mean{};
};

// CIoU alpha = v / ((1 - IoU) + v), 0 when both vanish (identical boxes).
template <typename S>
Detached<S> detach(const BoxT<S>& a, const BoxT<S>& b, const WiouState& st) {
  Detached<S> d;
  const S v = detail::aspect_term(a, b);
  const S denom = (S(1) - iou(a, b)) + v;
  d.ciou_alpha = denom > 0 ? v / denom : S(0);
  const Extent<S> e = enclosing_extent(a, b);
  d.enclose_w = e.w;
  d.enclose_h = e.h;
  d.running_mean = static_cast<S>(st.running_mean);
  return d;
}

// 1 - IoU + rho^2 / c^2 + alpha * v, with c the hull diagonal and
// v = 4/pi^2 (atan(w_gt/h_gt) - atan(w/h))^2.
template <typename S>
S ciou_loss(const BoxT<S>& a, const BoxT<S>& b, S alpha) {
  const Extent<S> e = enclosing_extent(a, b);
  return S(1) - iou(a, b) + center_distance_sq(a, b) / (e.w * e.w + e.h * e.h) + alpha * detail::aspect_term(a, b);
}

template <typename S>
S ciou_loss(const BoxT<S>& a, const BoxT<S>& b) {
  return ciou_loss(a, b, detach(a, b, WiouState{}).ciou_alpha);
}

// exp(rho^2 / (W_g^2 + H_g^2)) with the given (detached) hull extents.
template <typename S>
S wiou_r(const BoxT<S>& a, const BoxT<S>& b, S enclose_w, S enclose_h) {
  return std::exp(center_distance_sq(a, b) / (enclose_w * enclose_w + enclose_h * enclose_h));
}

template <typename S>
S wiou_r(const BoxT<S>& a, const BoxT<S>& b) {
  const Extent<S> e = enclosing_extent(a, b);
  return wiou_r(a, b, e.w, e.h);
}

template <typename S>
S wiou_focus(S beta, const WiouState& st) {
  const S delta = static_cast<S>(st.delta);
  if (st.mode == FocusMode::kPaperAlpha) return std::pow(beta / delta, static_cast<S>(st.gamma));
  return beta / (delta * std::pow(static_cast<S>(st.alpha_base), beta - delta));
}

template <typename S>
S wiou_focus_derivative(S beta, const WiouState& st) {
  const S delta = static_cast<S>(st.delta), gamma = static_cast<S>(st.gamma);
  if (st.mode == FocusMode::kPaperAlpha) {
    return beta > 0 ? gamma / delta * std::pow(beta / delta, gamma - S(1)) : S(0);
  }
  const S base = static_cast<S>(st.alpha_base);
  return (S(1) - beta * std::log(base)) / (delta * std::pow(base, beta - delta));
}

template <typename S>
struct WiouResult {
  S loss{}, beta{}, focus{}, r{}, l_iou{};
};

// focus * R * L_IoU with beta = L_IoU / running_mean. Does not touch the state.
template <typename S>
WiouResult<S> wiou_loss(const BoxT<S>& a, const BoxT<S>& b, const WiouState& st, const Detached<S>& d) {
  if (!(d.running_mean > 0)) throw StateError("wiou_loss: running mean must be positive");
  WiouResult<S> out;
  out.l_iou = S(1) - iou(a, b);
  out.beta = out.l_iou / d.running_mean;
  out.focus = wiou_focus(out.beta, st);
  out.r = wiou_r(a, b, d.enclose_w, d.enclose_h);
  out.loss = out.focus * out.r * out.l_iou;
  return out;
}

template <typename S>
WiouResult<S> wiou_loss(const BoxT<S>& a, const BoxT<S>& b, const WiouState& st) {
  if (!(st.running_mean > 0)) throw StateError("wiou_loss: running mean must be positive");
  return wiou_loss(a, b, st, detach(a, b, st));
}

// Loss value with the detached terms supplied explicitly; at d = detach(a, b, st)
// it equals the plain loss. The finite-difference oracle holds d fixed.
template <typename S>
S loss_value(LossKind kind, const BoxT<S>& a, const BoxT<S>& b, const WiouState& st, const Detached<S>& d) {
  switch (kind) {
    case LossKind::kIou:
      return S(1) - iou(a, b);
    case LossKind::kCiou:
      return ciou_loss(a, b, d.ciou_alpha);
    case LossKind::kWiou:
      return wiou_loss(a, b, st, d).loss;
  }
  return S(0);
}

template <typename S>
S loss_value(LossKind kind, const BoxT<S>& a, const BoxT<S>& b, const WiouState& st = {}) {
  return loss_value(kind, a, b, st, detach(a, b, st));
}

template <typename S>
struct LossGrad {
  detail::Vec4<S> d = detail::Vec4<S>::Zero();  // d loss / d (cx, cy, w, h) of the predicted box
  bool smooth = true;  // false at min/max ties, edge contact or degenerate boxes
};

template <typename S>
LossGrad<S> grad(LossKind kind, const BoxT<S>& a, const BoxT<S>& b, const WiouState& st = {}) {
  using V = detail::Vec4<S>;
  LossGrad<S> g;
  if (!a.valid() || !b.valid()) {
    g.smooth = false;
    return g;
  }
  const detail::IouTerms<S> t = detail::iou_terms(a, b);
  g.smooth = t.smooth;
  const V d_liou = -t.d_iou;
  const S dx = a.cx - b.cx, dy = a.cy - b.cy;
  const S rho2 = dx * dx + dy * dy;
  const V d_rho2(2 * dx, 2 * dy, 0, 0);

  switch (kind) {
    case LossKind::kIou:
      g.d = d_liou;
      break;
    case LossKind::kCiou: {
      const Detached<S> det = detach(a, b, st);
      const S c2 = t.hull_w * t.hull_w + t.hull_h * t.hull_h;
      const V d_c2 = 2 * t.hull_w * t.d_hull_w + 2 * t.hull_h * t.d_hull_h;
      const S k = S(4) / (std::numbers::pi_v<S> * std::numbers::pi_v<S>);
      const S diff = std::atan(b.w / b.h) - std::atan(a.w / a.h);
      const S r2 = a.w * a.w + a.h * a.h;
      const V d_v(0, 0, -2 * k * diff * a.h / r2, 2 * k * diff * a.w / r2);
      g.d = d_liou + d_rho2 / c2 - rho2 * d_c2 / (c2 * c2) + det.ciou_alpha * d_v;
      break;
    }
    case LossKind::kWiou: {
      const Detached<S> det = detach(a, b, st);
      const WiouResult<S> w = wiou_loss(a, b, st, det);
      const V d_r = w.r * d_rho2 / (det.enclose_w * det.enclose_w + det.enclose_h * det.enclose_h);
      const S d_focus_d_liou = wiou_focus_derivative(w.beta, st) / det.running_mean;
      g.d = (d_focus_d_liou * w.l_iou + w.focus) * w.r * d_liou + w.focus * w.l_iou * d_r;
      break;
    }
  }
  return g;
}

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);  // "iou" | "ciou" | "wiou"
std::string to_string(FocusMode mode);
FocusMode parse_focus_mode(const std::string& name);  // "paper-alpha" | "reference-r"

}  // namespace laf
