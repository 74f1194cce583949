#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "llab/network.hpp"

namespace llab {

// On-disk snapshot. The header is self-describing (architecture, parameter
// layout, seed, epoch, dataset and schedule state), so analysis commands can
// rebuild everything they need from checkpoint files alone.
//
// Binary format, little-endian:
//   "LLAB" | u16 version | u64 header length | header JSON | float64 values
struct Checkpoint {
  NetworkSpec spec;
  ParamVector params;
  nlohmann::json meta;  // seed, epoch, dataset, schedule, free-form
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json network_spec_to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const nlohmann::json& j);

}  // namespace llab
