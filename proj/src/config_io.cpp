#include "laf/config_io.hpp"

#include <fstream>
#include <set>
#include <string>

#include "laf/error.hpp"

namespace laf {

namespace {

using nlohmann::json;

std::size_t get_size(const json& j, const std::string& key) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

std::vector<std::size_t> get_sizes(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError("config key '" + key + "' must be an array of integers");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_size(j[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

ArchConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{"input_size", "stem_width",   "stage_widths", "stage_repeats",
                                           "c2f_expansion", "neck_repeats", "pconv_ratio", "se_ratio",
                                           "sppf_k",     "head_strides", "include_p5",   "num_classes", "seed"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  ArchConfig c;
  if (j.contains("input_size")) c.input_size = get_size(j["input_size"], "input_size");
  if (j.contains("stem_width")) c.stem_width = get_size(j["stem_width"], "stem_width");
  if (j.contains("stage_widths")) c.stage_widths = get_sizes(j["stage_widths"], "stage_widths");
  if (j.contains("stage_repeats")) c.stage_repeats = get_sizes(j["stage_repeats"], "stage_repeats");
  if (j.contains("c2f_expansion")) {
    if (!j["c2f_expansion"].is_number()) throw ConfigError("config key 'c2f_expansion' must be a number");
    c.c2f_expansion = j["c2f_expansion"].get<double>();
  }
  if (j.contains("neck_repeats")) c.neck_repeats = get_size(j["neck_repeats"], "neck_repeats");
  if (j.contains("pconv_ratio")) c.pconv_ratio = get_size(j["pconv_ratio"], "pconv_ratio");
  if (j.contains("se_ratio")) c.se_ratio = get_size(j["se_ratio"], "se_ratio");
  if (j.contains("sppf_k")) c.sppf_k = get_size(j["sppf_k"], "sppf_k");
  if (j.contains("num_classes")) c.num_classes = get_size(j["num_classes"], "num_classes");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0) {
      throw ConfigError("config key 'seed' must be a non-negative integer");
    }
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("head_strides")) c.head_strides = get_sizes(j["head_strides"], "head_strides");
  if (j.contains("include_p5")) {
    if (!j["include_p5"].is_boolean()) throw ConfigError("config key 'include_p5' must be true or false");
    c.include_p5 = j["include_p5"].get<bool>();
    if (!j.contains("head_strides")) c = c.with_p5(c.include_p5);
  }
  c.validate();
  return c;
}

json config_to_json(const ArchConfig& c) {
  return json{{"input_size", c.input_size},     {"stem_width", c.stem_width},
              {"stage_widths", c.stage_widths}, {"stage_repeats", c.stage_repeats},
              {"c2f_expansion", c.c2f_expansion}, {"neck_repeats", c.neck_repeats},
              {"pconv_ratio", c.pconv_ratio},   {"se_ratio", c.se_ratio},
              {"sppf_k", c.sppf_k},             {"head_strides", c.head_strides},
              {"include_p5", c.include_p5},     {"num_classes", c.num_classes},
              {"seed", c.seed}};
}

ArchConfig load_config(const std::optional<std::filesystem::path>& path) {
  if (!path) {
    ArchConfig c;
    c.validate();
    return c;
  }
  std::ifstream in(*path);
  if (!in) throw ConfigError("cannot read config '" + path->string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path->string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace laf
