#pragma once

// Machine-readable (JSON) and human (plain table) renderings of every report.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "laf/arch_config.hpp"
#include "laf/eval.hpp"
#include "laf/flops.hpp"
#include "laf/model.hpp"
#include "laf/stats.hpp"
#include "laf/tide.hpp"

namespace laf {

nlohmann::json to_json(const FlopReport& r, const AnchorVerdict& v);
std::string render_table(const FlopReport& r, const AnchorVerdict& v);

nlohmann::json to_json(const EvalReport& r);
std::string render_table(const EvalReport& r);

nlohmann::json to_json(const TideReport& r);
std::string render_table(const TideReport& r);

nlohmann::json to_json(const StatsReport& r);
std::string render_table(const StatsReport& r);

// Per-tap shapes and checksums of one forward pass.
nlohmann::json forward_manifest(const std::vector<TapRecord>& taps, const PredictionMaps& maps);
std::string render_table(const std::vector<TapRecord>& taps);

struct InputDigest {
  std::string path;
  std::string fnv1a;  // 16 hex digits over the file bytes
};

// Everything needed to rerun a subcommand. No timestamps or host data, so equal
// manifests mean equal reports.
struct RunManifest {
  std::string subcommand;
  nlohmann::json config = nlohmann::json::object();  // resolved options and ArchConfig
  std::uint64_t seed = 0;
  std::vector<InputDigest> inputs;
  std::string version = LAF_VERSION;
};

nlohmann::json to_json(const RunManifest& m);

InputDigest digest_file(const std::filesystem::path& path);

std::string hex64(std::uint64_t v);

// Writes `text` to `path`, creating parent directories. Throws Error on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace laf
