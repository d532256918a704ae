#pragma once

#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "shoring/model.hpp"

namespace shoring {

inline constexpr char kCheckpointMagic[8] = {'S', 'H', 'C', 'K', '0', '0', '0', '1'};

// Single binary container: 8-byte magic, u64 manifest length, JSON manifest
// (name -> shape/dtype/byte offset into the data section, plus the model
// descriptor), then raw little-endian float64 data.
inline void save_checkpoint(const Model& model, const std::string& path) {
  nlohmann::json arrays = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const Tensor& t = model.params.values[i];
    arrays[model.params.names[i]] = {
        {"shape", t.shape}, {"dtype", "f64"}, {"offset", offset}};
    offset += t.numel() * sizeof(double);
  }
  nlohmann::json manifest = {{"model_spec", to_json(model.spec)}, {"arrays", std::move(arrays)}};
  std::string mjson = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  std::uint64_t mlen = mjson.size();
  out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
  out.write(mjson.data(), std::streamsize(mjson.size()));
  for (const auto& t : model.params.values)
    out.write(reinterpret_cast<const char*>(t.v.data()),
              std::streamsize(t.numel() * sizeof(double)));
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

inline Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  std::uint64_t mlen = 0;
  in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
  std::string mjson(mlen, '\0');
  in.read(mjson.data(), std::streamsize(mlen));
  nlohmann::json manifest = nlohmann::json::parse(mjson);

  Model model;
  model.spec = model_spec_from_json(manifest.at("model_spec"));
  // arrays are stored in ParamSet order; rebuild by ascending offset
  std::vector<std::pair<std::uint64_t, std::string>> order;
  for (const auto& [name, meta] : manifest.at("arrays").items())
    order.emplace_back(meta.at("offset").get<std::uint64_t>(), name);
  std::sort(order.begin(), order.end());
  for (const auto& [off, name] : order) {
    const auto& meta = manifest.at("arrays").at(name);
    Tensor t(meta.at("shape").get<std::vector<std::size_t>>());
    in.read(reinterpret_cast<char*>(t.v.data()), std::streamsize(t.numel() * sizeof(double)));
    if (!in) throw std::runtime_error("load_checkpoint: truncated data in " + path);
    model.params.add(name, std::move(t));
  }
  return model;
}

}  // namespace shoring
