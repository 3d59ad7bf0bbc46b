#include "hypersam/nn/checkpoint.hpp"

#include <fstream>

#include "hypersam/errors.hpp"

namespace hypersam::nn {

using nlohmann::json;

const Matrix* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.value;
  }
  return nullptr;
}

json checkpoint_to_json(const Checkpoint& ckpt) {
  json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["meta"] = ckpt.meta;
  json tensors = json::array();
  for (const auto& t : ckpt.tensors) {
    std::vector<double> values(t.value.data(), t.value.data() + t.value.size());
    tensors.push_back({{"name", t.name}, {"shape", {t.value.rows(), t.value.cols()}}, {"values", values}});
  }
  j["tensors"] = std::move(tensors);
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw CheckpointError("not a checkpoint file");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version");
    }
    Checkpoint ckpt;
    ckpt.meta = j.value("meta", json::object());
    for (const auto& t : j.at("tensors")) {
      const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
      const auto values = t.at("values").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] * shape[1] != static_cast<Eigen::Index>(values.size())) {
        throw CheckpointError("tensor '" + t.at("name").get<std::string>() + "' has inconsistent shape");
      }
      Matrix m(shape[0], shape[1]);
      std::copy(values.begin(), values.end(), m.data());
      ckpt.tensors.push_back({t.at("name").get<std::string>(), std::move(m)});
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(ckpt).dump() << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingCheckpoint("checkpoint not found: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw CheckpointError("cannot parse checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

void append_params(Checkpoint& ckpt, const ParamList& params, const std::string& prefix) {
  for (const auto& p : params) ckpt.tensors.push_back({prefix + p.name, p.tensor.value()});
}

void load_params(const Checkpoint& ckpt, const ParamList& params, const std::string& prefix) {
  for (const auto& p : params) {
    const Matrix* m = ckpt.find(prefix + p.name);
    if (!m) throw CheckpointError("checkpoint lacks tensor '" + prefix + p.name + "'");
    if (m->rows() != p.tensor.rows() || m->cols() != p.tensor.cols()) {
      throw CheckpointError("shape mismatch for tensor '" + prefix + p.name + "'");
    }
    Tensor t = p.tensor;
    t.mutable_value() = *m;
  }
}

}  // namespace hypersam::nn
