#pragma once

// Line-delimited JSON records, one object per line, blank lines skipped:
//   GT:        {"image_id": "0001", "class_id": 3, "bbox": [left, top, w, h], "ignore": false}
//   detection: the same plus "score" in [0, 1]; "ignore" not allowed
// image_id may be a string or an integer. Boxes are top-left on disk and
// converted to centre form on load. Unknown keys are rejected.

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "laf/detection.hpp"

namespace laf {

std::vector<GroundTruth> parse_ground_truth(std::istream& in);
std::vector<Detection> parse_detections(std::istream& in);

std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& path);
std::vector<Detection> load_detections(const std::filesystem::path& path);

// VisDrone-DET txt: "left,top,w,h,score,category,truncation,occlusion" per line,
// one file per image (image_id = file stem). Categories 1..10 map to classes
// 0..9, category 0 (ignored region) becomes an ignore record, 11 is dropped.
// `path` is a single .txt or a directory of them (sorted by name).
std::vector<GroundTruth> load_visdrone(const std::filesystem::path& path);

// format: "jsonl" or "visdrone".
std::vector<GroundTruth> load_annotations(const std::filesystem::path& path, const std::string& format = "jsonl");

std::string to_jsonl(const std::vector<GroundTruth>& gts);
std::string to_jsonl(const std::vector<Detection>& dets);

}  // namespace laf
