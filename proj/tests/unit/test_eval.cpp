#include <doctest.h>

#include <algorithm>

#include "eval_oracles.hpp"
#include "laf/error.hpp"
#include "laf/eval.hpp"

using namespace laf;

namespace {

GroundTruth gt(const std::string& img, int c, Box b, bool ignore = false) { return {img, c, b, ignore}; }
Detection det(const std::string& img, int c, double s, Box b) { return {img, c, s, b}; }

}  // namespace

TEST_CASE("match: perfect detections are all TP") {
  const std::vector<GroundTruth> g{gt("a", 0, {10, 10, 5, 5}), gt("a", 1, {30, 30, 8, 4}), gt("b", 0, {5, 5, 2, 2})};
  std::vector<Detection> d;
  for (const auto& x : g) d.push_back(det(x.image_id, x.class_id, 0.9, x.box));
  const MatchResult m = match(d, g, 0.5);
  for (auto l : m.det_label) CHECK(l == MatchLabel::kTp);
  for (bool b : m.gt_matched) CHECK(b);
}

TEST_CASE("match: duplicate on one GT gives TP then FP") {
  const std::vector<GroundTruth> g{gt("a", 0, {10, 10, 5, 5})};
  const std::vector<Detection> d{det("a", 0, 0.4, {10, 10, 5, 5}), det("a", 0, 0.8, {10.5, 10, 5, 5})};
  const MatchResult m = match(d, g, 0.5);
  CHECK(m.det_label[1] == MatchLabel::kTp);
  CHECK(m.det_label[0] == MatchLabel::kFp);
}

TEST_CASE("match: ignore-flagged GT matches are neither TP nor FP") {
  const std::vector<GroundTruth> g{gt("a", 0, {10, 10, 5, 5}, true), gt("a", 0, {40, 40, 5, 5})};
  const std::vector<Detection> d{det("a", 0, 0.9, {10, 10, 5, 5}), det("a", 0, 0.8, {40, 40, 5, 5})};
  const MatchResult m = match(d, g, 0.5);
  CHECK(m.det_label[0] == MatchLabel::kIgnored);
  CHECK(m.det_label[1] == MatchLabel::kTp);
  const EvalReport r = evaluate(d, g, 0.5);
  CHECK(r.map50 == 1.0);
  CHECK(r.fp == 0);
}

TEST_CASE("match agrees with the exhaustive assignment oracle on 50 small instances") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = oracle::random_fixture(rng, 1, 6);
    for (double t : {0.5, 0.75}) {
      const MatchResult m = match(f.dets, f.gts, t);
      const oracle::Labels o = oracle::brute_force_match(f.dets, f.gts, t);
      for (std::size_t i = 0; i < f.dets.size(); ++i) {
        CHECK(static_cast<int>(m.det_label[i]) == (o.det[i] == 1 ? 0 : o.det[i] == 0 ? 1 : 2));
        CHECK(m.det_gt[i] == o.det_gt[i]);
      }
    }
  }
}

TEST_CASE("average precision hand cases") {
  CHECK(interpolated_ap({true, true}, 2) == 1.0);
  CHECK(interpolated_ap({}, 3) == 0.0);
  CHECK(interpolated_ap({true, false, true}, 2) == doctest::Approx((51.0 + 50.0 * 2.0 / 3.0) / 101.0).epsilon(1e-15));
  CHECK(interpolated_ap({true, false, true}, 2) == doctest::Approx(0.8350).epsilon(1e-4));
  CHECK_THROWS_AS(interpolated_ap({true}, 0), EvalError);

  // The same ranking produced through matching.
  const std::vector<GroundTruth> g{gt("a", 0, {10, 10, 4, 4}), gt("b", 0, {10, 10, 4, 4})};
  const std::vector<Detection> d{det("a", 0, 0.9, {10, 10, 4, 4}), det("a", 0, 0.8, {30, 30, 4, 4}),
                                 det("b", 0, 0.7, {10, 10, 4, 4})};
  const MatchResult m = match(d, g, 0.5);
  CHECK(*average_precision(d, g, m, 0) == doctest::Approx(0.8349835).epsilon(1e-6));
  CHECK_FALSE(average_precision(d, g, m, 5).has_value());
}

TEST_CASE("evaluate: perfect detections") {
  std::vector<GroundTruth> g;
  std::vector<Detection> d;
  for (int c = 0; c < 10; ++c) {
    g.push_back(gt("img" + std::to_string(c % 3), c, {10.0 + 7 * c, 20, 6, 9}));
    d.push_back(det(g.back().image_id, c, 1.0, g.back().box));
  }
  const EvalReport r = evaluate(d, g);
  CHECK(r.classes.size() == 10);
  CHECK(r.map50 == 1.0);
  CHECK(r.map50_95 == 1.0);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
}

TEST_CASE("evaluate: errors") {
  const std::vector<Detection> d{det("a", 0, 0.5, {1, 1, 1, 1})};
  CHECK_THROWS_AS(evaluate(d, std::vector<GroundTruth>{}), EvalError);
  CHECK_THROWS_AS(evaluate(d, std::vector<GroundTruth>{gt("a", 0, {1, 1, 1, 1}, true)}), EvalError);
  const std::vector<Detection> bad{det("a", 0, 1.5, {1, 1, 1, 1})};
  CHECK_THROWS_AS(evaluate(bad, std::vector<GroundTruth>{gt("a", 0, {1, 1, 1, 1})}), EvalError);
}

TEST_CASE("evaluate agrees with a straight-line evaluator on 100 random fixtures") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = oracle::random_fixture(rng, 10, 6);
    const EvalReport r = evaluate(f.dets, f.gts, 0.3);
    const oracle::Summary s = oracle::straight_line_evaluate(f.dets, f.gts, 0.3);
    REQUIRE(r.classes.size() == s.ap.size());
    for (std::size_t c = 0; c < s.ap.size(); ++c)
      for (std::size_t t = 0; t < 10; ++t) CHECK(r.classes[c].ap[t] == doctest::Approx(s.ap[c][t]).epsilon(1e-12));
    CHECK(r.map50 == doctest::Approx(s.map50).epsilon(1e-12));
    CHECK(r.map50_95 == doctest::Approx(s.map5095).epsilon(1e-12));
    CHECK(r.precision == doctest::Approx(s.precision).epsilon(1e-12));
    CHECK(r.recall == doctest::Approx(s.recall).epsilon(1e-12));
  }
}

TEST_CASE("AP is non-increasing in the IoU threshold and mAP@[.5,.95] <= mAP@0.5") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = oracle::random_fixture(rng, 6, 6);
    const EvalReport r = evaluate(f.dets, f.gts);
    for (const auto& row : r.classes)
      for (std::size_t t = 1; t < 10; ++t) CHECK(row.ap[t] <= row.ap[t - 1] + 1e-15);
    CHECK(r.map50_95 <= r.map50 + 1e-15);
    for (double v : {r.map50, r.map50_95, r.precision, r.recall}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("removing a false positive never lowers AP") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = oracle::random_fixture(rng, 5, 6, 3, false);
    const MatchResult m = match(f.dets, f.gts, 0.5);
    const double base = map_at(f.dets, f.gts, 0.5);
    for (std::size_t i = 0; i < f.dets.size(); ++i) {
      if (m.det_label[i] != MatchLabel::kFp) continue;
      std::vector<Detection> fewer = f.dets;
      fewer.erase(fewer.begin() + static_cast<long>(i));
      CHECK(map_at(fewer, f.gts, 0.5) >= base - 1e-15);
    }
  }
}

TEST_CASE("input order only matters through score ties") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto f = oracle::random_fixture(rng, 5, 6);
    for (std::size_t i = 0; i < f.dets.size(); ++i) f.dets[i].score = 1.0 - 0.01 * static_cast<double>(i);
    const EvalReport a = evaluate(f.dets, f.gts);
    std::reverse(f.dets.begin(), f.dets.end());
    const EvalReport b = evaluate(f.dets, f.gts);
    CHECK(a.map50 == b.map50);
    CHECK(a.map50_95 == b.map50_95);
    CHECK(a.precision == b.precision);
  }
  // Ties: repeated runs over the same order are bit-identical.
  const auto f = oracle::random_fixture(rng, 5, 6);
  CHECK(evaluate(f.dets, f.gts).map50_95 == evaluate(f.dets, f.gts).map50_95);
}
