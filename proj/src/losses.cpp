#include "laf/losses.hpp"

#include <algorithm>
#include <cmath>

#include "laf/gradcheck.hpp"
#include "laf/rng.hpp"

namespace laf {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kIou:
      return "iou";
    case LossKind::kCiou:
      return "ciou";
    case LossKind::kWiou:
      return "wiou";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "iou") return LossKind::kIou;
  if (name == "ciou") return LossKind::kCiou;
  if (name == "wiou") return LossKind::kWiou;
  throw ConfigError("unknown loss kind '" + name + "' (expected iou, ciou or wiou)");
}

std::string to_string(FocusMode mode) { return mode == FocusMode::kPaperAlpha ? "paper-alpha" : "reference-r"; }

FocusMode parse_focus_mode(const std::string& name) {
  if (name == "paper-alpha") return FocusMode::kPaperAlpha;
  if (name == "reference-r") return FocusMode::kReferenceR;
  throw ConfigError("unknown focus mode '" + name + "' (expected paper-alpha or reference-r)");
}

double fd_relative_error(LossKind kind, const Box& a, const Box& b, const WiouState& st, double step,
                         detail::Vec4<double>* fd_out) {
  const Detached<double> frozen = detach(a, b, st);
  const double h = step * std::max(a.w, a.h);
  detail::Vec4<double> fd;
  for (int i = 0; i < 4; ++i) {
    Box plus = a, minus = a;
    double* p = i == 0 ? &plus.cx : i == 1 ? &plus.cy : i == 2 ? &plus.w : &plus.h;
    double* m = i == 0 ? &minus.cx : i == 1 ? &minus.cy : i == 2 ? &minus.w : &minus.h;
    *p += h;
    *m -= h;
    fd[i] = (loss_value(kind, plus, b, st, frozen) - loss_value(kind, minus, b, st, frozen)) / (2.0 * h);
  }
  if (fd_out) *fd_out = fd;
  const detail::Vec4<double> g = grad(kind, a, b, st).d;
  const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1e-12);
  return (g - fd).cwiseAbs().maxCoeff() / scale;
}

namespace {

double min_tie_gap(const Box& a, const Box& b) {
  return std::min({std::abs(a.left() - b.left()), std::abs(a.right() - b.right()), std::abs(a.top() - b.top()),
                   std::abs(a.bottom() - b.bottom())});
}

}  // namespace

GradCheckResult grad_check(const GradCheckOptions& opts) {
  Rng rng(opts.seed);
  GradCheckResult res;
  double sum = 0.0;
  while (res.pairs < opts.pairs) {
    const Box b{rng.uniform(0, 200), rng.uniform(0, 200), rng.uniform(4, 80), rng.uniform(4, 80)};
    const Box a{b.cx + rng.uniform(-0.4, 0.4) * b.w, b.cy + rng.uniform(-0.4, 0.4) * b.h,
                b.w * std::exp(rng.uniform(-0.6, 0.6)), b.h * std::exp(rng.uniform(-0.6, 0.6))};
    WiouState st = opts.state;
    st.running_mean = rng.uniform(0.2, 1.0);
    const double h = opts.step * std::max(a.w, a.h);
    if (iou(a, b) <= 0.05 || min_tie_gap(a, b) < 100.0 * h || !grad(opts.kind, a, b, st).smooth) {
      ++res.resampled;
      continue;
    }
    const double err = fd_relative_error(opts.kind, a, b, st, opts.step);
    res.max_rel_error = std::max(res.max_rel_error, err);
    sum += err;
    ++res.pairs;
  }
  res.mean_rel_error = res.pairs ? sum / static_cast<double>(res.pairs) : 0.0;
  return res;
}

}  // namespace laf
