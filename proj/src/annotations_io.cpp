#include "laf/annotations_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "laf/error.hpp"

namespace laf {

namespace {

using nlohmann::json;

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read '" + path.string() + "'");
  return in;
}

std::string read_image_id(const json& v, std::size_t line) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError("image_id must be a string or integer", line);
}

double number(const json& v, const char* what, std::size_t line) {
  if (!v.is_number()) throw ParseError(std::string(what) + " must be a number", line);
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ParseError(std::string(what) + " is not finite", line);
  return x;
}

Box read_bbox(const json& v, std::size_t line) {
  if (!v.is_array() || v.size() != 4) throw ParseError("bbox must be [left, top, w, h]", line);
  const double l = number(v[0], "bbox left", line), t = number(v[1], "bbox top", line);
  const double w = number(v[2], "bbox w", line), h = number(v[3], "bbox h", line);
  if (!(w > 0.0) || !(h > 0.0)) throw ParseError("bbox has non-positive extent (w=" + v[2].dump() + ", h=" + v[3].dump() + ")", line);
  return Box::from_ltwh(l, t, w, h);
}

template <typename Fn>
void for_each_record(std::istream& in, const std::set<std::string>& allowed, Fn&& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    json rec;
    try {
      rec = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line);
    }
    if (!rec.is_object()) throw ParseError("record must be a JSON object", line);
    for (const auto& [key, _] : rec.items()) {
      if (!allowed.count(key)) throw ParseError("unknown key '" + key + "'", line);
    }
    for (const char* key : {"image_id", "class_id", "bbox"}) {
      if (!rec.contains(key)) throw ParseError(std::string("missing key '") + key + "'", line);
    }
    if (!rec["class_id"].is_number_integer()) throw ParseError("class_id must be an integer", line);
    fn(rec, line);
  }
}

}  // namespace

std::vector<GroundTruth> parse_ground_truth(std::istream& in) {
  std::vector<GroundTruth> out;
  for_each_record(in, {"image_id", "class_id", "bbox", "ignore"}, [&](const json& rec, std::size_t line) {
    GroundTruth g;
    g.image_id = read_image_id(rec["image_id"], line);
    g.class_id = rec["class_id"].get<int>();
    g.box = read_bbox(rec["bbox"], line);
    if (rec.contains("ignore")) {
      if (!rec["ignore"].is_boolean()) throw ParseError("ignore must be true or false", line);
      g.ignore = rec["ignore"].get<bool>();
    }
    out.push_back(std::move(g));
  });
  return out;
}

std::vector<Detection> parse_detections(std::istream& in) {
  std::vector<Detection> out;
  for_each_record(in, {"image_id", "class_id", "bbox", "score"}, [&](const json& rec, std::size_t line) {
    if (!rec.contains("score")) throw ParseError("missing key 'score'", line);
    Detection d;
    d.image_id = read_image_id(rec["image_id"], line);
    d.class_id = rec["class_id"].get<int>();
    d.box = read_bbox(rec["bbox"], line);
    d.score = number(rec["score"], "score", line);
    if (d.score < 0.0 || d.score > 1.0) throw ParseError("score outside [0, 1]", line);
    out.push_back(std::move(d));
  });
  return out;
}

std::vector<GroundTruth> load_ground_truth(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  try {
    return parse_ground_truth(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<Detection> load_detections(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  try {
    return parse_detections(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

namespace {

void parse_visdrone_file(const std::filesystem::path& file, std::vector<GroundTruth>& out) {
  auto in = open_or_throw(file);
  const std::string image_id = file.stem().string();
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream fields(text);
    double l = 0, t = 0, w = 0, h = 0, score = 0;
    int category = -1;
    if (!(fields >> l >> t >> w >> h >> score >> category)) {
      throw ParseError(file.string() + ": expected left,top,w,h,score,category,...", line);
    }
    if (category == 11) continue;
    if (category < 0 || category > 11) throw ParseError(file.string() + ": category out of range", line);
    if (!(w > 0.0) || !(h > 0.0)) throw ParseError(file.string() + ": bbox has non-positive extent", line);
    GroundTruth g;
    g.image_id = image_id;
    g.ignore = category == 0;
    g.class_id = category == 0 ? -1 : category - 1;
    g.box = Box::from_ltwh(l, t, w, h);
    out.push_back(std::move(g));
  }
}

}  // namespace

std::vector<GroundTruth> load_visdrone(const std::filesystem::path& path) {
  std::vector<GroundTruth> out;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) parse_visdrone_file(f, out);
  } else {
    parse_visdrone_file(path, out);
  }
  return out;
}

std::vector<GroundTruth> load_annotations(const std::filesystem::path& path, const std::string& format) {
  if (format == "jsonl") return load_ground_truth(path);
  if (format == "visdrone") return load_visdrone(path);
  throw ConfigError("unknown annotation format '" + format + "' (expected jsonl or visdrone)");
}

std::string to_jsonl(const std::vector<GroundTruth>& gts) {
  std::string out;
  for (const auto& g : gts) {
    json rec{{"image_id", g.image_id},
             {"class_id", g.class_id},
             {"bbox", {g.box.left(), g.box.top(), g.box.w, g.box.h}}};
    if (g.ignore) rec["ignore"] = true;
    out += rec.dump() + "\n";
  }
  return out;
}

std::string to_jsonl(const std::vector<Detection>& dets) {
  std::string out;
  for (const auto& d : dets) {
    const json rec{{"image_id", d.image_id},
                   {"class_id", d.class_id},
                   {"bbox", {d.box.left(), d.box.top(), d.box.w, d.box.h}},
                   {"score", d.score}};
    out += rec.dump() + "\n";
  }
  return out;
}

}  // namespace laf
