#include "laf/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "laf/error.hpp"

namespace laf {

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

std::vector<Detection> decode_detections(const PredictionMaps& maps, double conf_thresh, const std::string& image_id,
                                         std::size_t batch_index) {
  std::vector<Detection> out;
  for (std::size_t m = 0; m < maps.maps.size(); ++m) {
    const Tensor& t = maps.maps[m];
    if (t.c() < 5) throw ShapeError("decode: prediction map has " + std::to_string(t.c()) + " channels, need 4 + K");
    if (batch_index >= t.n()) throw ShapeError("decode: batch index out of range for " + t.shape().str());
    const double s = static_cast<double>(maps.strides[m]);
    const std::size_t k = t.c() - 4;
    for (std::size_t i = 0; i < t.h(); ++i) {
      for (std::size_t j = 0; j < t.w(); ++j) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c) {
          if (t(batch_index, 4 + c, i, j) > t(batch_index, 4 + best, i, j)) best = c;
        }
        const double logit = t(batch_index, 4 + best, i, j);
        const double score = 1.0 / (1.0 + std::exp(-logit));
        if (score < conf_thresh) continue;
        Detection d;
        d.image_id = image_id;
        d.class_id = static_cast<int>(best);
        d.score = score;
        d.box.cx = (static_cast<double>(j) + 0.5) * s + t(batch_index, 0, i, j) * s;
        d.box.cy = (static_cast<double>(i) + 0.5) * s + t(batch_index, 1, i, j) * s;
        constexpr double tiny = std::numeric_limits<double>::min();
        d.box.w = std::max(softplus(t(batch_index, 2, i, j)), tiny) * s;
        d.box.h = std::max(softplus(t(batch_index, 3, i, j)), tiny) * s;
        out.push_back(std::move(d));
      }
    }
  }
  return out;
}

}  // namespace laf
