#include <fstream>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "cssam/error.hpp"
#include "cssam/train.hpp"

namespace cssam::train {

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kBlob = "tensors.bin";

nlohmann::json tensor_entry(const std::string& name, const nn::Mat<float>& m, std::size_t offset, bool frozen) {
  return {{"name", name}, {"shape", {m.rows(), m.cols()}}, {"offset", offset}, {"frozen", frozen}};
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto blob = detail::open_for_write(dir / kBlob, true);
  nlohmann::json tensors = nlohmann::json::array();
  nlohmann::json moments = nlohmann::json::array();
  std::size_t offset = 0;
  auto emit = [&](nlohmann::json& table, const std::string& name, const nn::Mat<float>& m, bool frozen) {
    table.push_back(tensor_entry(name, m, offset, frozen));
    detail::write_f32(blob, m.data(), static_cast<std::size_t>(m.size()));
    offset += static_cast<std::size_t>(m.size()) * sizeof(float);
  };
  for (const auto& [name, m] : ckpt.params.tensors) emit(tensors, name, m, !ckpt.params.trainable(name));
  for (const auto& [name, m] : ckpt.adam.m) emit(moments, "m." + name, m, false);
  for (const auto& [name, v] : ckpt.adam.v) emit(moments, "v." + name, v, false);
  blob.close();
  if (!blob) throw IoError("failed writing " + (dir / kBlob).string());

  const nlohmann::json manifest = {
      {"format_version", kCheckpointVersion},
      {"model", to_json(ckpt.model)},
      {"train", to_json(ckpt.train)},
      {"epoch", ckpt.epoch},
      {"adam",
       {{"step", ckpt.adam.step}, {"beta1", ckpt.adam.beta1}, {"beta2", ckpt.adam.beta2}, {"eps", ckpt.adam.eps}}},
      {"blob_bytes", offset},
      {"tensors", tensors},
      {"moments", moments}};
  auto out = detail::open_for_write(dir / kManifest, false);
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + (dir / kManifest).string());
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  {
    std::ifstream in(dir / kManifest);
    if (!in) throw CheckpointError("no checkpoint manifest in " + dir.string());
    try {
      in >> manifest;
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(std::string("corrupt checkpoint manifest: ") + e.what());
    }
  }
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw CheckpointError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kCheckpointVersion) + ")");
    }
    Checkpoint ckpt;
    try {
      ckpt.model = model::model_config_from_json(manifest.at("model"));
      ckpt.train = train_config_from_json(manifest.at("train"));
    } catch (const ConfigError& e) {
      throw CheckpointError(std::string("checkpoint config is invalid: ") + e.what());
    }
    ckpt.epoch = manifest.at("epoch").get<int>();
    const auto& adam = manifest.at("adam");
    ckpt.adam.step = adam.at("step").get<std::int64_t>();
    ckpt.adam.beta1 = adam.at("beta1").get<double>();
    ckpt.adam.beta2 = adam.at("beta2").get<double>();
    ckpt.adam.eps = adam.at("eps").get<double>();

    std::vector<char> bytes;
    try {
      bytes = detail::read_file(dir / kBlob);
    } catch (const IoError& e) {
      throw CheckpointError(e.what());
    }
    const auto expected = manifest.at("blob_bytes").get<std::size_t>();
    if (bytes.size() != expected) {
      throw CheckpointError("checkpoint blob has " + std::to_string(bytes.size()) + " bytes, manifest expects " +
                            std::to_string(expected));
    }
    auto read = [&](const nlohmann::json& entry) {
      const auto rows = entry.at("shape").at(0).get<Eigen::Index>();
      const auto cols = entry.at("shape").at(1).get<Eigen::Index>();
      if (rows < 0 || cols < 0) throw CheckpointError("negative shape in checkpoint");
      nn::Mat<float> m(rows, cols);
      try {
        detail::read_f32(bytes, entry.at("offset").get<std::size_t>(), m.data(), static_cast<std::size_t>(m.size()));
      } catch (const DataError&) {
        throw CheckpointError("checkpoint blob is truncated at tensor " + entry.at("name").get<std::string>());
      }
      return m;
    };
    for (const auto& entry : manifest.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      ckpt.params.tensors.emplace(name, read(entry));
      if (entry.at("frozen").get<bool>()) ckpt.params.frozen.insert(name);
    }
    for (const auto& entry : manifest.at("moments")) {
      const auto full = entry.at("name").get<std::string>();
      if (full.size() < 3 || (full[0] != 'm' && full[0] != 'v') || full[1] != '.') {
        throw CheckpointError("bad moment entry " + full);
      }
      const auto name = full.substr(2);
      if (!ckpt.params.contains(name)) throw CheckpointError("moment for unknown tensor " + name);
      (full[0] == 'm' ? ckpt.adam.m : ckpt.adam.v)[name] = read(entry);
    }
    const nn::ShapeList shapes = model::param_shapes(ckpt.model);
    if (shapes.size() != ckpt.params.tensors.size()) {
      throw CheckpointError("checkpoint tensor set does not match its model config");
    }
    for (const auto& [name, shape] : shapes) {
      if (!ckpt.params.contains(name)) throw CheckpointError("checkpoint is missing tensor " + name);
      const auto& m = ckpt.params.at(name);
      if (m.rows() != shape.rows || m.cols() != shape.cols) throw CheckpointError("checkpoint tensor " + name + " has wrong shape");
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint manifest: ") + e.what());
  }
}

}  // namespace cssam::train
