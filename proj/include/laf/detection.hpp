#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "laf/box.hpp"
#include "laf/model.hpp"

namespace laf {

struct Detection {
  std::string image_id;
  int class_id = 0;
  double score = 0.0;  // in [0, 1]
  Box box;
};

struct GroundTruth {
  std::string image_id;
  int class_id = 0;
  Box box;
  bool ignore = false;
};

// NMS-free decode of one batch item. Per cell (i, j) of the stride-s map:
//   score  = sigmoid(max class logit), class = first argmax
//   centre = ((j + 0.5) s + dx s, (i + 0.5) s + dy s)
//   w, h   = softplus(raw) s
// Cells with score >= conf_thresh are emitted in (stride, i, j) order.
std::vector<Detection> decode_detections(const PredictionMaps& maps, double conf_thresh, const std::string& image_id,
                                         std::size_t batch_index = 0);

}  // namespace laf
