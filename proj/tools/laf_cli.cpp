// laf: command-line front end for the detector toolkit.
//
//   laf arch summary     [--config F] [--input-size N] [--p5]
//   laf arch forward     [--config F] [--seed S] [--input-size N] [--batch B] [--engine direct|gemm]
//   laf loss eval        --pred "[cx,cy,w,h]" --gt "[cx,cy,w,h]" [--mean M] [--mode paper-alpha|reference-r]
//   laf loss grad-check  [--kind iou|ciou|wiou|all] [--pairs N] [--seed S] [--mode ...]
//   laf eval map         --gt F --det F [--conf 0.25]
//   laf eval tide        --gt F --det F [--fg 0.5] [--bg 0.1]
//   laf stats annotations --path P [--rule max-side|area] [--format jsonl|visdrone]
//
// Human tables go to stdout (JSON with --json). With --out DIR, or LAF_OUT_DIR
// set, <name>.json and <name>.manifest.json are written into DIR.
// Exit codes: 0 ok, 2 module error, other nonzero for usage errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "laf/annotations_io.hpp"
#include "laf/config_io.hpp"
#include "laf/error.hpp"
#include "laf/eval.hpp"
#include "laf/flops.hpp"
#include "laf/gradcheck.hpp"
#include "laf/losses.hpp"
#include "laf/model.hpp"
#include "laf/report.hpp"
#include "laf/stats.hpp"
#include "laf/tide.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Common {
  std::string out_dir;
  bool json_stdout = false;
};

fs::path resolve_out(const Common& c) {
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* env = std::getenv("LAF_OUT_DIR"); env && *env) return env;
  return {};
}

void emit(const Common& c, const std::string& name, const json& report, const std::string& table,
          const laf::RunManifest& manifest) {
  std::cout << (c.json_stdout ? report.dump(2) + "\n" : table);
  const fs::path dir = resolve_out(c);
  if (dir.empty()) return;
  laf::write_text(dir / (name + ".json"), report.dump(2) + "\n");
  laf::write_text(dir / (name + ".manifest.json"), laf::to_json(manifest).dump(2) + "\n");
}

laf::Box parse_box(const std::string& text, const char* what) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error&) {
    throw laf::ParseError(std::string(what) + ": expected a JSON array [cx, cy, w, h]");
  }
  if (!j.is_array() || j.size() != 4 || !std::all_of(j.begin(), j.end(), [](const json& v) { return v.is_number(); })) {
    throw laf::ParseError(std::string(what) + ": expected a JSON array [cx, cy, w, h]");
  }
  const laf::Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!b.valid()) throw laf::ParseError(std::string(what) + ": width and height must be positive");
  return b;
}

laf::ArchConfig config_with(const std::string& path, std::size_t input_size, std::optional<std::uint64_t> seed) {
  laf::ArchConfig cfg = laf::load_config(path.empty() ? std::nullopt : std::optional<fs::path>(path));
  if (input_size) cfg.input_size = input_size;
  if (seed) cfg.seed = *seed;
  cfg.validate();
  return cfg;
}

json vec_json(const laf::detail::Vec4<double>& v) { return json::array({v[0], v[1], v[2], v[3]}); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"laf: detector graph, FLOP accounting, box losses and detection evaluation"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Common common;
  app.add_option("--out", common.out_dir, "Directory for report and manifest files (overrides LAF_OUT_DIR)");
  app.add_flag("--json", common.json_stdout, "Print the machine-readable report instead of the table");
  app.set_version_flag("--version", std::string(LAF_VERSION));

  // arch
  auto* arch = app.add_subcommand("arch", "Network graph");
  arch->require_subcommand(1);
  std::string cfg_path;
  std::size_t input_size = 0;
  bool p5 = false;
  auto* summary = arch->add_subcommand("summary", "Parameter and FLOP report with the anchor verdict");
  summary->add_option("--config", cfg_path, "JSON config file")->check(CLI::ExistingFile);
  summary->add_option("--input-size", input_size, "Override input_size");
  summary->add_flag("--p5", p5, "Add the stride-32 head");

  auto* fwd = arch->add_subcommand("forward", "Run a forward pass on a synthetic image and dump tap checksums");
  std::uint64_t fwd_seed = 42;
  std::size_t batch = 1;
  std::string engine = "gemm";
  fwd->add_option("--config", cfg_path, "JSON config file")->check(CLI::ExistingFile);
  fwd->add_option("--seed", fwd_seed, "Seed for weights and the synthetic input")->capture_default_str();
  fwd->add_option("--input-size", input_size, "Override input_size");
  fwd->add_option("--batch", batch, "Batch size")->capture_default_str()->check(CLI::PositiveNumber);
  fwd->add_option("--engine", engine, "Convolution path")->check(CLI::IsMember({"direct", "gemm"}))->capture_default_str();

  // loss
  auto* loss = app.add_subcommand("loss", "Box regression losses");
  loss->require_subcommand(1);
  std::string mode = "paper-alpha";
  auto* leval = loss->add_subcommand("eval", "IoU, CIoU and Wise-IoU of one box pair");
  std::string pred_text, gt_text;
  double mean = 1.0;
  leval->add_option("--pred", pred_text, "Predicted box [cx,cy,w,h]")->required();
  leval->add_option("--gt", gt_text, "Ground-truth box [cx,cy,w,h]")->required();
  leval->add_option("--mean", mean, "Running mean of the IoU loss")->capture_default_str();
  leval->add_option("--mode", mode, "Focusing mode")->capture_default_str();

  auto* gcheck = loss->add_subcommand("grad-check", "Analytic vs central-difference gradients on random pairs");
  std::string kind = "all";
  std::size_t pairs = 500;
  std::uint64_t gc_seed = 0;
  gcheck->add_option("--kind", kind, "iou, ciou, wiou or all")->capture_default_str();
  gcheck->add_option("--pairs", pairs, "Pairs per loss")->capture_default_str()->check(CLI::PositiveNumber);
  gcheck->add_option("--seed", gc_seed, "Seed")->capture_default_str();
  gcheck->add_option("--mode", mode, "Focusing mode for wiou")->capture_default_str();

  // eval
  auto* ev = app.add_subcommand("eval", "Detection evaluation");
  ev->require_subcommand(1);
  std::string gt_path, det_path;
  double conf = 0.25;
  laf::TideOptions topts;
  auto* emap = ev->add_subcommand("map", "COCO-style mAP, precision and recall");
  emap->add_option("--gt", gt_path, "Ground truth JSONL")->required()->check(CLI::ExistingFile);
  emap->add_option("--det", det_path, "Detections JSONL")->required()->check(CLI::ExistingFile);
  emap->add_option("--conf", conf, "Confidence threshold for P/R")->capture_default_str();
  auto* etide = ev->add_subcommand("tide", "Six-way error decomposition");
  etide->add_option("--gt", gt_path, "Ground truth JSONL")->required()->check(CLI::ExistingFile);
  etide->add_option("--det", det_path, "Detections JSONL")->required()->check(CLI::ExistingFile);
  etide->add_option("--fg", topts.fg, "Foreground IoU")->capture_default_str();
  etide->add_option("--bg", topts.bg, "Background IoU")->capture_default_str();

  // stats
  auto* st = app.add_subcommand("stats", "Annotation statistics");
  st->require_subcommand(1);
  auto* sann = st->add_subcommand("annotations", "Small-object fractions, class counts, area histogram");
  std::string ann_path, rule = "max-side", format = "jsonl";
  sann->add_option("--path", ann_path, "Annotation file (or VisDrone directory)")->required()->check(CLI::ExistingPath);
  sann->add_option("--rule", rule, "max-side or area")->capture_default_str();
  sann->add_option("--format", format, "jsonl or visdrone")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    laf::RunManifest manifest;
    if (*summary) {
      laf::ArchConfig cfg = config_with(cfg_path, input_size, std::nullopt);
      if (p5) cfg = cfg.with_p5(true);
      cfg.validate();
      const laf::FlopReport r = laf::count_model(cfg);
      const laf::AnchorVerdict v = laf::anchor_verdict(r);
      manifest.subcommand = "arch summary";
      manifest.config = laf::config_to_json(cfg);
      manifest.seed = cfg.seed;
      if (!cfg_path.empty()) manifest.inputs.push_back(laf::digest_file(cfg_path));
      emit(common, "arch_summary", laf::to_json(r, v), laf::render_table(r, v), manifest);
    } else if (*fwd) {
      const laf::ArchConfig cfg = config_with(cfg_path, input_size, fwd_seed);
      const laf::Model model = laf::build_model(cfg);
      const laf::Tensor x = laf::synthetic_image(batch, cfg.input_size, fwd_seed);
      std::vector<laf::TapRecord> taps;
      laf::ForwardOptions opts;
      opts.engine = engine == "direct" ? laf::ConvEngine::kDirect : laf::ConvEngine::kGemm;
      opts.taps = &taps;
      const laf::PredictionMaps maps = laf::forward(model, x, opts);
      json report = laf::forward_manifest(taps, maps);
      report["param_count"] = model.param_count();
      report["param_checksum"] = laf::hex64(model.param_checksum());
      manifest.subcommand = "arch forward";
      manifest.config = laf::config_to_json(cfg);
      manifest.config["batch"] = batch;
      manifest.config["engine"] = engine;
      manifest.seed = fwd_seed;
      if (!cfg_path.empty()) manifest.inputs.push_back(laf::digest_file(cfg_path));
      emit(common, "arch_forward", report, laf::render_table(taps), manifest);
    } else if (*leval) {
      const laf::Box a = parse_box(pred_text, "--pred"), b = parse_box(gt_text, "--gt");
      laf::WiouState s;
      s.running_mean = mean;
      s.mode = laf::parse_focus_mode(mode);
      const auto w = laf::wiou_loss(a, b, s);
      const auto e = laf::enclosing_extent(a, b);
      const json report{{"iou", laf::iou(a, b)},
                        {"enclosing_extent", {e.w, e.h}},
                        {"ciou_loss", laf::ciou_loss(a, b)},
                        {"wiou", {{"loss", w.loss}, {"beta", w.beta}, {"focus", w.focus}, {"r", w.r},
                                  {"l_iou", w.l_iou}, {"mode", laf::to_string(s.mode)},
                                  {"running_mean", s.running_mean}}},
                        {"grad", {{"iou", vec_json(laf::grad(laf::LossKind::kIou, a, b, s).d)},
                                  {"ciou", vec_json(laf::grad(laf::LossKind::kCiou, a, b, s).d)},
                                  {"wiou", vec_json(laf::grad(laf::LossKind::kWiou, a, b, s).d)}}},
                        {"smooth", laf::grad(laf::LossKind::kWiou, a, b, s).smooth}};
      char buf[512];
      std::snprintf(buf, sizeof buf,
                    "IoU        %.6f\nCIoU loss  %.6f\nWIoU loss  %.6f  (beta %.6f, focus %.6f, R %.6f, %s)\n",
                    laf::iou(a, b), laf::ciou_loss(a, b), w.loss, w.beta, w.focus, w.r, laf::to_string(s.mode).c_str());
      manifest.subcommand = "loss eval";
      manifest.config = {{"pred", pred_text}, {"gt", gt_text}, {"mean", mean}, {"mode", mode}};
      emit(common, "loss_eval", report, buf, manifest);
    } else if (*gcheck) {
      std::vector<laf::LossKind> kinds;
      if (kind == "all") {
        kinds = {laf::LossKind::kIou, laf::LossKind::kCiou, laf::LossKind::kWiou};
      } else {
        kinds = {laf::parse_loss_kind(kind)};
      }
      json report = json::object();
      std::string table = "loss   pairs   resampled   max rel err   mean rel err\n";
      for (laf::LossKind k : kinds) {
        laf::GradCheckOptions o;
        o.kind = k;
        o.pairs = pairs;
        o.seed = gc_seed;
        o.state.mode = laf::parse_focus_mode(mode);
        const laf::GradCheckResult r = laf::grad_check(o);
        report[laf::to_string(k)] = {{"pairs", r.pairs}, {"resampled", r.resampled},
                                     {"max_rel_error", r.max_rel_error}, {"mean_rel_error", r.mean_rel_error}};
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-6s %5zu %11zu %13.3e %14.3e\n", laf::to_string(k).c_str(), r.pairs,
                      r.resampled, r.max_rel_error, r.mean_rel_error);
        table += buf;
      }
      manifest.subcommand = "loss grad-check";
      manifest.config = {{"kind", kind}, {"pairs", pairs}, {"mode", mode}, {"step", laf::GradCheckOptions{}.step}};
      manifest.seed = gc_seed;
      emit(common, "loss_grad_check", report, table, manifest);
    } else if (*emap || *etide) {
      const auto gts = laf::load_ground_truth(gt_path);
      const auto dets = laf::load_detections(det_path);
      manifest.inputs = {laf::digest_file(gt_path), laf::digest_file(det_path)};
      if (*emap) {
        const laf::EvalReport r = laf::evaluate(dets, gts, conf);
        manifest.subcommand = "eval map";
        manifest.config = {{"conf", conf}};
        emit(common, "eval_map", laf::to_json(r), laf::render_table(r), manifest);
      } else {
        const laf::TideReport r = laf::tide_report(dets, gts, topts);
        manifest.subcommand = "eval tide";
        manifest.config = {{"fg", topts.fg}, {"bg", topts.bg}};
        emit(common, "eval_tide", laf::to_json(r), laf::render_table(r), manifest);
      }
    } else if (*sann) {
      const laf::SizeRule sr = laf::parse_size_rule(rule);
      const auto anns = laf::load_annotations(ann_path, format);
      manifest.subcommand = "stats annotations";
      manifest.config = {{"rule", rule}, {"format", format}};
      if (fs::is_regular_file(ann_path)) manifest.inputs.push_back(laf::digest_file(ann_path));
      const bool any = std::any_of(anns.begin(), anns.end(), [](const laf::GroundTruth& g) { return !g.ignore; });
      if (!any) {
        // Nothing to measure: a zero-count report rather than an error.
        const json report{{"rule", rule}, {"total", 0}, {"ignored", anns.size()}, {"fractions", nullptr},
                          {"class_counts", json::object()}, {"area_histogram", json::array()}};
        emit(common, "stats_annotations", report,
             "instances 0 (ignored " + std::to_string(anns.size()) + "), no fractions\n", manifest);
      } else {
        const laf::StatsReport r = laf::size_stats(anns, {32, 16, 8}, sr);
        emit(common, "stats_annotations", laf::to_json(r), laf::render_table(r), manifest);
      }
    }
  } catch (const laf::Error& e) {
    const std::string kind_name = dynamic_cast<const laf::ParseError*>(&e)    ? "parse"
                                  : dynamic_cast<const laf::ConfigError*>(&e) ? "config"
                                  : dynamic_cast<const laf::ShapeError*>(&e)  ? "shape"
                                  : dynamic_cast<const laf::StateError*>(&e)  ? "state"
                                  : dynamic_cast<const laf::EvalError*>(&e)   ? "eval"
                                                                              : "error";
    std::cerr << json{{"error", {{"kind", kind_name}, {"message", e.what()}}}}.dump() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << json{{"error", {{"kind", "io"}, {"message", e.what()}}}}.dump() << "\n";
    return 2;
  }
  return 0;
}
