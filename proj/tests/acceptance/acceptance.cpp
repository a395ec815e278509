// Acceptance runner: one PASS/FAIL line per criterion.
//   laf_acceptance            run all
//   laf_acceptance A4 A9      run a subset
// Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "eval_oracles.hpp"
#include "helpers.hpp"
#include "laf/annotations_io.hpp"
#include "laf/blocks.hpp"
#include "laf/eval.hpp"
#include "laf/flops.hpp"
#include "laf/gradcheck.hpp"
#include "laf/losses.hpp"
#include "laf/model.hpp"
#include "laf/report.hpp"
#include "laf/stats.hpp"
#include "laf/tide.hpp"

using namespace laf;

namespace {

// Pinned tolerances and budgets.
constexpr double kParamLoM = 0.15, kParamHiM = 0.45;      // A2 param delta, millions
constexpr double kGflopLo = 0.6, kGflopHi = 1.8;          // A2 GFLOP delta
constexpr double kDySampleLo = 0.02, kDySampleHi = 0.12;  // A3, GFLOPs
constexpr double kFastBudgetS = 1.0;                      // A1-A3
constexpr double kForward640BudgetS = 30.0, kForward320BudgetS = 5.0;
constexpr double kGradTol = 1e-3;
constexpr std::size_t kGradPairs = 500;
constexpr double kGradBudgetS = 5.0;
constexpr double kScaleTol = 1e-9;
constexpr std::size_t kScalePairs = 1000;
constexpr double kMeanTol = 0.01;
constexpr int kMeanSteps = 200;
constexpr double kEvalAgreeTol = 1e-12;  // same arithmetic, allow reassociation only
constexpr double kHandAp = 0.8350, kHandApTol = 1e-4;
constexpr double kEvalBudgetS = 10.0, kTideBudgetS = 10.0;
constexpr double kVisDroneTolPoints = 2.0;
constexpr double kBilinearTol = 1e-5;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::string failures;
  void require(bool ok, const std::string& what) {
    if (ok) return;
    failures += (pass ? "FAILED: " : "; ") + what;
    pass = false;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(prec) << v;
  return o.str();
}

void a1(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const FlopReport r = count_model(ArchConfig{});
  const AnchorVerdict v = anchor_verdict(r);
  const double dt = seconds_since(t0);
  o.detail << "params " << fmt(r.mparams(), 3) << "M (band " << fmt(kReferenceParamsM * (1 - kAnchorTolerance), 3) << "-"
           << fmt(kReferenceParamsM * (1 + kAnchorTolerance), 3) << "), GFLOPs " << fmt(r.gflops(), 3) << " (band "
           << fmt(kReferenceGflops * (1 - kAnchorTolerance), 2) << "-" << fmt(kReferenceGflops * (1 + kAnchorTolerance), 2)
           << "), " << fmt(dt, 3) << " s. ";
  o.require(v.params_ok, "params outside band");
  o.require(v.gflops_ok, "GFLOPs outside band");
  o.require(dt < kFastBudgetS, "runtime");
}

void a2(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const ArchConfig base;
  const FlopReport r0 = count_model(base), r1 = count_model(base.with_p5(true));
  const double dt = seconds_since(t0);
  const double dp = r1.mparams() - r0.mparams(), dg = r1.gflops() - r0.gflops();
  o.detail << "param delta " << fmt(dp, 3) << "M [" << kParamLoM << ", " << kParamHiM << "], GFLOP delta " << fmt(dg, 3)
           << " [" << kGflopLo << ", " << kGflopHi << "], " << fmt(dt, 3) << " s. ";
  o.require(dp >= kParamLoM && dp <= kParamHiM, "param delta outside band");
  o.require(dg >= kGflopLo && dg <= kGflopHi, "GFLOP delta outside band");
  o.require(dt < kFastBudgetS, "runtime");
}

void a3(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const FlopReport r = count_model(ArchConfig{});
  std::size_t units = 0;
  for (const auto& row : r.rows) units += row.kind == LayerKind::kDySample ? 1 : 0;
  const double g = r.gflops_of(LayerKind::kDySample);
  const double dt = seconds_since(t0);
  o.detail << units << " units, " << fmt(g, 4) << " GFLOPs [" << kDySampleLo << ", " << kDySampleHi << "], " << fmt(dt, 3)
           << " s. ";
  o.require(units == 3, "expected three DySample units");
  o.require(g >= kDySampleLo && g <= kDySampleHi, "cost outside band");
  o.require(dt < kFastBudgetS, "runtime");
}

void a4(Outcome& o) {
  for (std::size_t size : {std::size_t{640}, std::size_t{320}}) {
    ArchConfig cfg;
    cfg.input_size = size;
    const Model m = build_model(cfg);
    const Tensor x = synthetic_image(1, size, 42);
    ForwardOptions opts;
    opts.engine = ConvEngine::kDirect;
    const auto t0 = std::chrono::steady_clock::now();
    const PredictionMaps p = forward(m, x, opts);
    const double dt = seconds_since(t0);
    const double budget = size == 640 ? kForward640BudgetS : kForward320BudgetS;
    o.detail << size << ": ";
    for (std::size_t s : {std::size_t{4}, std::size_t{8}, std::size_t{16}}) {
      const Shape want{1, 4 + cfg.num_classes, size / s, size / s};
      const Shape got = p.at_stride(s).shape();
      o.detail << got.str() << " ";
      o.require(got == want, "shape at stride " + std::to_string(s));
    }
    o.require(p.maps.size() == 3, "expected three heads");
    o.require(cfg.num_classes == 10, "K != 10");
    o.detail << fmt(dt, 2) << " s (budget " << budget << "). ";
    o.require(dt < budget, "runtime at " + std::to_string(size));
  }
}

void a5(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  for (LossKind k : {LossKind::kIou, LossKind::kCiou, LossKind::kWiou}) {
    GradCheckOptions opts;
    opts.kind = k;
    opts.pairs = kGradPairs;
    opts.state.mode = FocusMode::kPaperAlpha;
    const GradCheckResult r = grad_check(opts);
    o.detail << to_string(k) << " max " << std::scientific << std::setprecision(2) << r.max_rel_error << std::fixed
             << "; ";
    o.require(r.pairs == kGradPairs, "pair count");
    o.require(r.max_rel_error <= kGradTol, to_string(k) + " gradient error");
  }
  const double dt = seconds_since(t0);
  o.detail << fmt(dt, 2) << " s. ";
  o.require(dt < kGradBudgetS, "runtime");
}

void a6(Outcome& o) {
  for (FocusMode mode : {FocusMode::kPaperAlpha, FocusMode::kReferenceR}) {
    WiouState st;
    st.mode = mode;
    for (double b : {st.delta, 0.5 * st.delta, 3.0}) {
      st.delta = b;
      o.require(wiou_focus(b, st) == 1.0, "focus(beta = delta) != 1 in " + to_string(mode));
    }
  }
  Rng rng(60);
  bool r_one = true, zero = true;
  for (int i = 0; i < 100; ++i) {
    const Box a{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(1, 40), rng.uniform(1, 40)};
    const Box b{a.cx, a.cy, rng.uniform(1, 40), rng.uniform(1, 40)};
    r_one = r_one && wiou_r(a, b) == 1.0;
    WiouState st;
    st.running_mean = rng.uniform(0.05, 1.0);
    zero = zero && wiou_loss(a, a, st).loss == 0.0;
  }
  o.require(r_one, "R != 1 at coincident centres");
  o.require(zero, "loss != 0 at perfect overlap");

  double worst = 0.0;
  WiouState st;
  st.running_mean = 0.6;
  for (std::size_t i = 0; i < kScalePairs; ++i) {
    const Box b{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(1, 40), rng.uniform(1, 40)};
    const Box a{b.cx + rng.uniform(-0.4, 0.4) * b.w, b.cy + rng.uniform(-0.4, 0.4) * b.h,
                b.w * std::exp(rng.uniform(-0.5, 0.5)), b.h * std::exp(rng.uniform(-0.5, 0.5))};
    const double lam = std::exp(rng.uniform(-3, 3));
    const Box sa{a.cx * lam, a.cy * lam, a.w * lam, a.h * lam}, sb{b.cx * lam, b.cy * lam, b.w * lam, b.h * lam};
    const auto r0 = wiou_loss(a, b, st), r1 = wiou_loss(sa, sb, st);
    for (auto [u, v] : {std::pair{r0.loss, r1.loss}, {r0.beta, r1.beta}, {r0.r, r1.r}, {r0.focus, r1.focus}}) {
      worst = std::max(worst, std::abs(u - v) / std::max(std::abs(u), 1e-300));
    }
  }
  o.detail << "exact identities checked; scale invariance worst rel " << std::scientific << std::setprecision(2) << worst
           << " over " << kScalePairs << " pairs. ";
  o.require(worst <= kScaleTol, "scale invariance");
}

void a7(Outcome& o) {
  double worst = 0.0;
  for (double init : {1.0, 0.75, 0.5, 0.25, 0.1, 1e-3, 1e-9}) {
    for (double target : {0.0, 0.05, 0.3, 0.62, 0.9, 1.0}) {
      WiouState st;
      st.running_mean = init;
      const std::vector<double> batch(8, target);
      for (int i = 0; i < kMeanSteps; ++i) st = update_mean(st, batch);
      worst = std::max(worst, std::abs(st.running_mean - target));
    }
  }
  o.detail << "worst |mean - target| after " << kMeanSteps << " updates " << std::scientific << std::setprecision(2)
           << worst << ". ";
  o.require(worst < kMeanTol, "running mean did not converge");
}

// Exhaustive matching per image (images never compete for GT).
oracle::Labels brute_force_all(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts, double t) {
  oracle::Labels out;
  out.det.assign(dets.size(), 0);
  out.det_gt.assign(dets.size(), -1);
  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> by_image;
  for (std::size_t i = 0; i < dets.size(); ++i) by_image[dets[i].image_id].first.push_back(i);
  for (std::size_t i = 0; i < gts.size(); ++i) by_image[gts[i].image_id].second.push_back(i);
  for (const auto& [img, idx] : by_image) {
    std::vector<Detection> d;
    std::vector<GroundTruth> g;
    for (auto i : idx.first) d.push_back(dets[i]);
    for (auto i : idx.second) g.push_back(gts[i]);
    const oracle::Labels l = oracle::brute_force_match(d, g, t);
    for (std::size_t k = 0; k < d.size(); ++k) {
      out.det[idx.first[k]] = l.det[k];
      out.det_gt[idx.first[k]] = l.det_gt[k] < 0 ? -1 : static_cast<long>(idx.second[static_cast<std::size_t>(l.det_gt[k])]);
    }
  }
  return out;
}

void a8(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(80);
  std::size_t label_mismatch = 0, value_mismatch = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = oracle::random_fixture(rng, 10, 6);
    const EvalReport rep = evaluate(f.dets, f.gts);
    std::vector<int> classes;
    for (const auto& c : rep.classes) classes.push_back(c.class_id);
    std::vector<std::array<double, 10>> ap(classes.size());
    const auto thr = iou_thresholds();
    for (std::size_t ti = 0; ti < thr.size(); ++ti) {
      const oracle::Labels bf = brute_force_all(f.dets, f.gts, thr[ti]);
      const MatchResult m = match(f.dets, f.gts, thr[ti]);
      for (std::size_t i = 0; i < f.dets.size(); ++i) {
        const int got = m.det_label[i] == MatchLabel::kTp ? 1 : m.det_label[i] == MatchLabel::kFp ? 0 : 2;
        if (got != bf.det[i] || m.det_gt[i] != bf.det_gt[i]) ++label_mismatch;
      }
      for (std::size_t c = 0; c < classes.size(); ++c) {
        std::vector<int> seq;
        for (std::size_t d : oracle::ranked(f.dets)) {
          if (f.dets[d].class_id == classes[c] && bf.det[d] != 2) seq.push_back(bf.det[d]);
        }
        ap[c][ti] = oracle::ap_by_definition(seq, rep.classes[c].num_gt);
      }
    }
    double m50 = 0.0, m5095 = 0.0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      double mean = 0.0;
      for (std::size_t ti = 0; ti < 10; ++ti) {
        const double d = std::abs(ap[c][ti] - rep.classes[c].ap[ti]);
        worst = std::max(worst, d);
        value_mismatch += d > kEvalAgreeTol;
        mean += ap[c][ti];
      }
      m50 += ap[c][0];
      m5095 += mean / 10.0;
    }
    m50 /= static_cast<double>(classes.size());
    m5095 /= static_cast<double>(classes.size());
    value_mismatch += std::abs(m50 - rep.map50) > kEvalAgreeTol;
    value_mismatch += std::abs(m5095 - rep.map50_95) > kEvalAgreeTol;
  }
  const double hand = interpolated_ap({true, false, true}, 2);
  const double dt = seconds_since(t0);
  o.detail << "100 fixtures: " << label_mismatch << " label and " << value_mismatch << " AP mismatches (worst "
           << std::scientific << std::setprecision(1) << worst << std::fixed << "); hand AP " << fmt(hand, 6) << "; "
           << fmt(dt, 2) << " s. ";
  o.require(label_mismatch == 0, "match labels differ from brute force");
  o.require(value_mismatch == 0, "AP differs from brute force");
  o.require(std::abs(hand - kHandAp) <= kHandApTol, "hand-case AP");
  o.require(dt < kEvalBudgetS, "runtime");
}

// Ten separated GT; image i % 3 holds class i % 3. Perfect detections score
// 0.5 - 0.01 i so the ranking has no ties.
struct Injection {
  std::vector<GroundTruth> gts;
  std::vector<Detection> dets;
};

Injection inject(ErrorType dominant, ErrorType secondary) {
  Injection f;
  for (int i = 0; i < 10; ++i) f.gts.push_back({"img" + std::to_string(i % 3), i % 3, Box{20.0 + 40.0 * i, 50, 16, 20}, false});
  for (int i = 0; i < 10; ++i) f.dets.push_back({f.gts[static_cast<std::size_t>(i)].image_id, i % 3, 0.5 - 0.01 * i, f.gts[static_cast<std::size_t>(i)].box});
  const double loc_shift = 16.0 - 0.3 * 640.0 / 1.3 / 20.0;  // IoU 0.3 along x
  std::vector<std::size_t> drop;
  auto add = [&](ErrorType t, int n, double score, int first) {
    for (int k = 0; k < n; ++k) {
      const auto& g = f.gts[static_cast<std::size_t>(first + k)];
      const int other = (g.class_id + 1) % 3;
      switch (t) {
        case ErrorType::kCls:
          f.dets.push_back({g.image_id, other, score, g.box});
          break;
        case ErrorType::kLoc:
          f.dets.push_back({g.image_id, g.class_id, score, Box{g.box.cx + loc_shift, g.box.cy, 16, 20}});
          break;
        case ErrorType::kBoth:
          f.dets.push_back({g.image_id, other, score, Box{g.box.cx + loc_shift, g.box.cy, 16, 20}});
          break;
        case ErrorType::kDupe:
          // Outranks the exact detection, which becomes the duplicate.
          f.dets.push_back({g.image_id, g.class_id, score, Box{g.box.cx + 1, g.box.cy, 16, 20}});
          break;
        case ErrorType::kBkg:
          f.dets.push_back({g.image_id, g.class_id, score, Box{g.box.cx, g.box.cy + 300, 10, 10}});
          break;
        case ErrorType::kMiss:
          drop.push_back(static_cast<std::size_t>(first + k));
          break;
      }
    }
  };
  add(dominant, 3, 0.9, 0);
  add(secondary, 1, 0.45, 6);
  std::sort(drop.rbegin(), drop.rend());
  for (auto i : drop) f.dets.erase(f.dets.begin() + static_cast<long>(i));
  return f;
}

void a9(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  for (ErrorType dom : kErrorTypes) {
    const ErrorType sec = dom == ErrorType::kBkg ? ErrorType::kCls : ErrorType::kBkg;
    const Injection f = inject(dom, sec);
    const TideReport r = tide_report(f.dets, f.gts);
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < 6; ++i) {
      const ErrorType t = kErrorTypes[i];
      const std::size_t expect = t == dom ? 3 : t == sec ? 1 : 0;
      o.require(r.count[i] == expect, to_string(dom) + " fixture: " + to_string(t) + " count " +
                                          std::to_string(r.count[i]) + " != " + std::to_string(expect));
      o.require(r.penalty[i] >= 0.0, to_string(dom) + " fixture: negative " + to_string(t) + " penalty");
      if (expect == 0) o.require(r.penalty[i] == 0.0, to_string(dom) + " fixture: nonzero " + to_string(t) + " penalty");
      if (r.penalty[i] > r.penalty[argmax]) argmax = i;
    }
    o.require(kErrorTypes[argmax] == dom, to_string(dom) + " fixture: largest penalty is " + to_string(kErrorTypes[argmax]));
    o.detail << to_string(dom) << " " << fmt(r.penalty[argmax], 2) << "; ";
    if (dom == kErrorTypes.front()) {
      const std::string table = render_table(r);
      const auto j = to_json(r);
      for (ErrorType t : kErrorTypes) {
        o.require(table.find(to_string(t)) != std::string::npos, "table lacks column " + to_string(t));
        o.require(j.dump().find("\"" + to_string(t) + "\"") != std::string::npos, "json lacks " + to_string(t));
      }
    }
  }
  const double dt = seconds_since(t0);
  o.detail << "six columns present; " << fmt(dt, 2) << " s. ";
  o.require(dt < kTideBudgetS, "runtime");
}

void a10(Outcome& o) {
  const StatsReport r = size_stats(load_ground_truth(laf::test::fixture("stats_4box.jsonl")));
  o.detail << "fixture fractions " << fmt(r.fractions[0], 2) << "/" << fmt(r.fractions[1], 2) << "/"
           << fmt(r.fractions[2], 2) << "; ";
  o.require(r.fractions == std::vector<double>{0.75, 0.50, 0.25}, "fixture fractions");
  Rng rng(100);
  std::size_t violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<GroundTruth> anns;
    const auto n = rng.integer(1, 40);
    for (int i = 0; i < n; ++i) {
      anns.push_back({"x", static_cast<int>(rng.integer(0, 9)), Box{0, 0, rng.uniform(0.5, 120), rng.uniform(0.5, 120)},
                      false});
    }
    for (SizeRule rule : {SizeRule::kMaxSide, SizeRule::kArea}) {
      const auto f = size_stats(anns, {32, 16, 8}, rule).fractions;
      violations += !(f[2] <= f[1] && f[1] <= f[0]);
    }
  }
  o.detail << "nesting violations " << violations << "/2000; ";
  o.require(violations == 0, "nesting");
  if (const char* dir = std::getenv("LAF_VISDRONE_DIR"); dir && *dir) {
    const StatsReport v = size_stats(load_visdrone(dir));
    const double want[3] = {54, 22, 5};
    o.detail << "VisDrone " << fmt(100 * v.fractions[0], 1) << "/" << fmt(100 * v.fractions[1], 1) << "/"
             << fmt(100 * v.fractions[2], 1) << " over " << v.total << " boxes. ";
    for (int i = 0; i < 3; ++i) {
      o.require(std::abs(100 * v.fractions[static_cast<std::size_t>(i)] - want[i]) <= kVisDroneTolPoints,
                "VisDrone fraction " + std::to_string(i));
    }
  } else {
    o.detail << "real-data check skipped (set LAF_VISDRONE_DIR). ";
  }
}

std::string forward_digest() {
  const ArchConfig cfg;
  const Model m = build_model(cfg);
  std::vector<TapRecord> taps;
  ForwardOptions opts;
  opts.taps = &taps;
  const PredictionMaps p = forward(m, synthetic_image(1, cfg.input_size, 42), opts);
  return forward_manifest(taps, p).dump();
}

void a11(Outcome& o) {
  const std::string first = forward_digest(), second = forward_digest();
  o.require(first == second, "forward manifests differ");
  bool inside = true;
  for (std::uint64_t s = 0; s < 100; ++s) {
    SeParams p = laf::test::random_se(16, 4, 1000 + s);
    p.w2 *= static_cast<float>(1 + s * 100);
    const Eigen::MatrixXf a = se_gate(laf::test::random_tensor(Shape{2, 16, 3, 3}, 2000 + s, -50, 50), p);
    inside = inside && (a.array() > 0.0f).all() && (a.array() < 1.0f).all();
  }
  o.require(inside, "SE gate left (0, 1)");
  double worst = 0.0;
  const DySampleParams zero{ConvWeights::zeros(kDySampleOffsetChannels, 5, 1)};
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Tensor x = laf::test::random_tensor(Shape{1, 5, 3 + s % 6, 4 + s % 5}, 3000 + s, -3, 3);
    worst = std::max(worst, laf::test::max_rel_diff(dysample_up2(x, zero), laf::test::bilinear_up2_oracle(x)));
  }
  o.detail << "manifest " << first.size() << " bytes identical across runs; 100 SE gates inside (0,1); DySample vs "
           << "bilinear worst rel " << std::scientific << std::setprecision(1) << worst << ". ";
  o.require(worst <= kBilinearTol, "DySample zero offsets differ from bilinear");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> all{
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},  {"A6", a6},
      {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10}, {"A11", a11}};
  std::vector<std::string> want(argv + 1, argv + argc);
  int failed = 0, ran = 0;
  for (const auto& [id, fn] : all) {
    if (!want.empty() && std::find(want.begin(), want.end(), id) == want.end()) continue;
    ++ran;
    Outcome o;
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << std::left << std::setw(4) << id << o.detail.str() << o.failures << std::endl;
    failed += o.pass ? 0 : 1;
  }
  if (ran == 0) {
    std::cerr << "no such criterion\n";
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
