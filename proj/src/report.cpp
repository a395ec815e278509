#include "laf/report.hpp"

#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "laf/error.hpp"

namespace laf {

namespace {

using nlohmann::json;

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kConv:
      return "conv";
    case LayerKind::kSeGate:
      return "se";
    case LayerKind::kDySample:
      return "dysample";
  }
  return "?";
}

json shape_json(const Shape& s) { return json::array({s.n, s.c, s.h, s.w}); }

}  // namespace

std::string hex64(std::uint64_t v) { return fmt("%016llx", static_cast<unsigned long long>(v)); }

json to_json(const FlopReport& r, const AnchorVerdict& v) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"name", row.name}, {"kind", kind_name(row.kind)}, {"params", row.params}, {"macs", row.macs}});
  }
  return json{{"input_size", r.input_size},
              {"layers", rows},
              {"total_params", r.total_params},
              {"total_macs", r.total_macs},
              {"gflops", r.gflops()},
              {"dysample_gflops", r.gflops_of(LayerKind::kDySample)},
              {"se_params", [&] {
                 std::size_t n = 0;
                 for (const auto& row : r.rows) n += row.kind == LayerKind::kSeGate ? row.params : 0;
                 return n;
               }()},
              {"anchor",
               {{"reference_params_m", kReferenceParamsM},
                {"reference_gflops", kReferenceGflops},
                {"tolerance", kAnchorTolerance},
                {"params_m", v.params_m},
                {"params_band", {v.params_lo, v.params_hi}},
                {"params_ok", v.params_ok},
                {"gflops_band", {v.gflops_lo, v.gflops_hi}},
                {"gflops_ok", v.gflops_ok}}}};
}

std::string render_table(const FlopReport& r, const AnchorVerdict& v) {
  std::string out = fmt("%-34s %-9s %12s %16s\n", "layer", "kind", "params", "MACs");
  for (const auto& row : r.rows) {
    out += fmt("%-34s %-9s %12zu %16zu\n", row.name.c_str(), kind_name(row.kind), row.params, row.macs);
  }
  out += fmt("\ninput %zu x %zu\n", r.input_size, r.input_size);
  out += fmt("total params  %zu (%.3f M)\n", r.total_params, r.mparams());
  out += fmt("total MACs    %zu (%.3f GFLOPs)\n", r.total_macs, r.gflops());
  out += fmt("DySample      %.4f GFLOPs\n", r.gflops_of(LayerKind::kDySample));
  out += fmt("anchor params %.3f M in [%.3f, %.3f]: %s\n", v.params_m, v.params_lo, v.params_hi,
             v.params_ok ? "PASS" : "FAIL");
  out += fmt("anchor GFLOPs %.3f in [%.3f, %.3f]: %s\n", v.gflops, v.gflops_lo, v.gflops_hi,
             v.gflops_ok ? "PASS" : "FAIL");
  return out;
}

json to_json(const EvalReport& r) {
  json classes = json::array();
  for (const auto& c : r.classes) {
    classes.push_back({{"class_id", c.class_id}, {"num_gt", c.num_gt}, {"ap", c.ap}, {"ap50", c.ap[0]}});
  }
  return json{{"iou_thresholds", iou_thresholds()},
              {"classes", classes},
              {"map50", r.map50},
              {"map50_95", r.map50_95},
              {"conf_thresh", r.conf_thresh},
              {"precision", r.precision},
              {"recall", r.recall},
              {"tp", r.tp},
              {"fp", r.fp},
              {"num_gt", r.num_gt}};
}

std::string render_table(const EvalReport& r) {
  std::string out = fmt("%-8s %8s %10s %10s\n", "class", "gt", "AP50", "AP50:95");
  for (const auto& c : r.classes) {
    double mean = 0.0;
    for (double a : c.ap) mean += a;
    out += fmt("%-8d %8zu %10.4f %10.4f\n", c.class_id, c.num_gt, c.ap[0], mean / static_cast<double>(c.ap.size()));
  }
  out += fmt("\nmAP@0.5       %.4f\nmAP@[.5,.95]  %.4f\n", r.map50, r.map50_95);
  out += fmt("P / R @ %.2f   %.4f / %.4f  (TP %zu, FP %zu, GT %zu)\n", r.conf_thresh, r.precision, r.recall, r.tp,
             r.fp, r.num_gt);
  return out;
}

json to_json(const TideReport& r) {
  json penalties = json::object(), counts = json::object();
  for (std::size_t i = 0; i < kErrorTypes.size(); ++i) {
    penalties[to_string(kErrorTypes[i])] = r.penalty[i];
    counts[to_string(kErrorTypes[i])] = r.count[i];
  }
  json order = json::array();
  for (ErrorType t : kErrorTypes) order.push_back(to_string(t));
  return json{{"fg", r.opts.fg},       {"bg", r.opts.bg},         {"base_map50", r.base_map50},
              {"columns", order},      {"penalty", penalties},    {"count", counts},
              {"residual", r.residual}};
}

std::string render_table(const TideReport& r) {
  std::string head = fmt("%-8s", ""), pen = fmt("%-8s", "dAP50"), cnt = fmt("%-8s", "count");
  for (std::size_t i = 0; i < kErrorTypes.size(); ++i) {
    head += fmt("%8s", to_string(kErrorTypes[i]).c_str());
    pen += fmt("%8.2f", r.penalty[i]);
    cnt += fmt("%8zu", r.count[i]);
  }
  return head + "\n" + pen + "\n" + cnt + "\n" +
         fmt("\nbase mAP@0.5 %.4f  residual %.2f  (fg %.2f, bg %.2f)\n", r.base_map50, r.residual, r.opts.fg,
             r.opts.bg);
}

json to_json(const StatsReport& r) {
  json fractions = json::array();
  for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
    fractions.push_back({{"threshold", r.thresholds[i]}, {"fraction", r.fractions[i]}});
  }
  json classes = json::object();
  for (const auto& [c, n] : r.class_counts) classes[std::to_string(c)] = n;
  json hist = json::array();
  for (const auto& b : r.histogram) hist.push_back({{"lo", b.lo}, {"hi", b.hi}, {"count", b.count}});
  return json{{"rule", to_string(r.rule)},     {"total", r.total},        {"ignored", r.ignored},
              {"fractions", fractions},       {"class_counts", classes}, {"area_histogram", hist}};
}

std::string render_table(const StatsReport& r) {
  std::string out = fmt("instances %zu (ignored %zu), rule %s\n\n", r.total, r.ignored, to_string(r.rule).c_str());
  for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
    out += fmt("below %4.0fx%-4.0f %7.4f\n", r.thresholds[i], r.thresholds[i], r.fractions[i]);
  }
  out += "\nclass    count\n";
  for (const auto& [c, n] : r.class_counts) out += fmt("%-8d %zu\n", c, n);
  out += "\narea bin               count\n";
  for (const auto& b : r.histogram) {
    if (b.count) out += fmt("[%8.0f, %8.0f)  %zu\n", b.lo, b.hi, b.count);
  }
  return out;
}

json forward_manifest(const std::vector<TapRecord>& taps, const PredictionMaps& maps) {
  json t = json::array();
  for (const auto& tap : taps) {
    t.push_back({{"name", tap.name},
                 {"shape", shape_json(tap.shape)},
                 {"sum", tap.sum},
                 {"abs_sum", tap.abs_sum},
                 {"fnv1a", hex64(tap.hash)}});
  }
  json m = json::array();
  for (std::size_t i = 0; i < maps.maps.size(); ++i) {
    m.push_back({{"level", level_name(maps.strides[i])}, {"stride", maps.strides[i]},
                 {"shape", shape_json(maps.maps[i].shape())}});
  }
  return json{{"taps", t}, {"maps", m}};
}

std::string render_table(const std::vector<TapRecord>& taps) {
  std::string out = fmt("%-22s %-22s %16s %18s\n", "tap", "shape", "sum", "fnv1a");
  for (const auto& t : taps) {
    out += fmt("%-22s %-22s %16.6g %18s\n", t.name.c_str(), t.shape.str().c_str(), t.sum, hex64(t.hash).c_str());
  }
  return out;
}

json to_json(const RunManifest& m) {
  json inputs = json::array();
  for (const auto& d : m.inputs) inputs.push_back({{"path", d.path}, {"fnv1a", d.fnv1a}});
  return json{{"subcommand", m.subcommand}, {"config", m.config}, {"seed", m.seed},
              {"inputs", inputs},           {"version", m.version}};
}

InputDigest digest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
    h ^= static_cast<unsigned char>(*it);
    h *= 0x100000001b3ull;
  }
  return {path.string(), hex64(h)};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace laf
