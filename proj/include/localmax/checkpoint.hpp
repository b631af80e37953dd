#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "localmax/adam.hpp"
#include "localmax/models.hpp"
#include "localmax/network.hpp"

namespace localmax {

inline constexpr const char* kCheckpointFormat = "localmax-checkpoint";
inline constexpr int kCheckpointVersion = 1;

nlohmann::json network_to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

nlohmann::json adam_to_json(const AdamState& s);
AdamState adam_from_json(const nlohmann::json& j);

nlohmann::json model_options_to_json(const ModelOptions& o);
ModelOptions model_options_from_json(const nlohmann::json& j);

nlohmann::json quad_model_to_json(const QuadModel& m);
QuadModel quad_model_from_json(const nlohmann::json& j);

/// Wraps `payload` with the format/version/kind header and writes it.
void write_checkpoint(const std::filesystem::path& path, const std::string& kind,
                      const nlohmann::json& header, const nlohmann::json& payload);

struct CheckpointFile {
  std::string kind;
  nlohmann::json header;
  nlohmann::json payload;
};

/// Throws CheckpointError on unreadable, truncated, corrupt or
/// wrong-version files.
CheckpointFile read_checkpoint(const std::filesystem::path& path);

void save_network(const std::filesystem::path& path, const Network& net, const std::string& role);
Network load_network(const std::filesystem::path& path);

void save_quad_model(const std::filesystem::path& path, const QuadModel& model);
QuadModel load_quad_model(const std::filesystem::path& path);

} // namespace localmax
