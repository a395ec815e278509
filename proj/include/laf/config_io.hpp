#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "laf/arch_config.hpp"

namespace laf {

// Every ArchConfig field may appear; omitted fields keep their defaults.
// Unknown keys and wrong JSON types are rejected by name. When include_p5 is
// given without head_strides, stride 32 is added to or removed from the default
// head set. The result is validated.
ArchConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ArchConfig& cfg);

// Defaults when `path` is empty.
ArchConfig load_config(const std::optional<std::filesystem::path>& path);

}  // namespace laf
