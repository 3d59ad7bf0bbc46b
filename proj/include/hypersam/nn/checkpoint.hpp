#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypersam/nn/layers.hpp"

namespace hypersam::nn {

inline constexpr const char* kCheckpointFormat = "hypersam-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct NamedMatrix {
  std::string name;
  Matrix value;
};

// Named tensors plus free-form metadata, stored as JSON with a versioned header.
struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedMatrix> tensors;

  const Matrix* find(const std::string& name) const;
};

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void append_params(Checkpoint& ckpt, const ParamList& params, const std::string& prefix = "");
// Copies values by name; throws CheckpointError on a missing name or shape mismatch.
void load_params(const Checkpoint& ckpt, const ParamList& params, const std::string& prefix = "");

}  // namespace hypersam::nn
