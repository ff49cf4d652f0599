#include "dvse/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace dvse {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json nest_tensor(const std::vector<int>& shape, const std::vector<double>& data) {
  if (shape.size() == 1) return json(data);
  // rank 2: array of rows
  const int n = shape[0], m = shape[1];
  json rows = json::array();
  for (int i = 0; i < n; ++i) {
    rows.push_back(json(std::vector<double>(data.begin() + i * m,
                                            data.begin() + (i + 1) * m)));
  }
  return rows;
}

std::vector<double> flatten_tensor(const json& j, const std::vector<int>& shape) {
  std::vector<double> out;
  if (shape.size() == 1) {
    out = j.get<std::vector<double>>();
  } else {
    for (const auto& row : j) {
      auto r = row.get<std::vector<double>>();
      out.insert(out.end(), r.begin(), r.end());
    }
  }
  return out;
}

}  // namespace

void checkpoint_save(const DvseModel& model, const Normalizer& normalizer,
                     const CheckpointMeta& meta, const fs::path& path) {
  const DvseConfig& cfg = model.config();
  json j;
  j["version"] = kCheckpointVersion;
  j["conventions"] = {
      {"gru_variant", kGruVariantId},
      {"feature_layout", kFeatureLayoutId},
      {"v_ref_scale", kVrefScale},
      {"preint_scale", kPreintScale},
  };
  j["noise_net"] = {{"embed_dim", cfg.noise.embed_dim},
                    {"core", cfg.noise.core},
                    {"core_hidden", cfg.noise.core_hidden},
                    {"regression_hidden", cfg.noise.regression_hidden},
                    {"enabled", cfg.use_noise_net}};
  j["mtn"] = {{"blocks", cfg.mtn.blocks},
              {"layers_per_block", cfg.mtn.layers_per_block},
              {"kernel", cfg.mtn.kernel},
              {"channels", cfg.mtn.channels},
              {"head_hidden", cfg.mtn.head_hidden},
              {"enabled", cfg.use_mtn}};
  j["normalizer"] = {{"mean", normalizer.mean}, {"stddev", normalizer.stddev}};
  j["meta"] = {{"seed", meta.seed},
               {"epochs", meta.epochs},
               {"final_val_loss", meta.final_val_loss},
               {"test_trajectories", meta.test_trajectories}};
  json params = json::object();
  for (const auto& [name, t] : model.store().params) {
    params[name] = {{"shape", t.shape()}, {"data", nest_tensor(t.shape(), t.data())}};
  }
  j["params"] = std::move(params);

  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint_save: cannot write " + tmp.string());
    out << j.dump(1) << "\n";
    if (!out) throw IoError("checkpoint_save: write failed");
  }
  fs::rename(tmp, path);
}

LoadedCheckpoint checkpoint_load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("checkpoint_load: cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("checkpoint_load: parse error: " + std::string(e.what()));
  }
  LoadedCheckpoint ck;
  const auto version = j.at("version").get<std::string>();
  if (version != kCheckpointVersion) {
    throw std::invalid_argument("checkpoint_load: unsupported version " + version);
  }
  const auto& conv = j.at("conventions");
  if (conv.at("gru_variant").get<std::string>() != kGruVariantId ||
      conv.at("feature_layout").get<std::string>() != kFeatureLayoutId) {
    throw std::invalid_argument("checkpoint_load: convention mismatch");
  }
  const auto& nn_j = j.at("noise_net");
  ck.config.noise.embed_dim = nn_j.at("embed_dim").get<int>();
  ck.config.noise.core = nn_j.at("core").get<std::string>();
  ck.config.noise.core_hidden = nn_j.at("core_hidden").get<std::array<int, 2>>();
  ck.config.noise.regression_hidden = nn_j.at("regression_hidden").get<int>();
  ck.config.use_noise_net = nn_j.at("enabled").get<bool>();
  const auto& mtn_j = j.at("mtn");
  ck.config.mtn.blocks = mtn_j.at("blocks").get<int>();
  ck.config.mtn.layers_per_block = mtn_j.at("layers_per_block").get<int>();
  ck.config.mtn.kernel = mtn_j.at("kernel").get<int>();
  ck.config.mtn.channels = mtn_j.at("channels").get<int>();
  ck.config.mtn.head_hidden = mtn_j.at("head_hidden").get<int>();
  ck.config.use_mtn = mtn_j.at("enabled").get<bool>();
  ck.normalizer.mean = j.at("normalizer").at("mean").get<std::vector<double>>();
  ck.normalizer.stddev = j.at("normalizer").at("stddev").get<std::vector<double>>();
  const auto& meta = j.at("meta");
  ck.meta.seed = meta.at("seed").get<std::uint64_t>();
  ck.meta.epochs = meta.at("epochs").get<int>();
  ck.meta.final_val_loss = meta.at("final_val_loss").get<double>();
  ck.meta.test_trajectories =
      meta.at("test_trajectories").get<std::vector<std::string>>();
  for (const auto& [name, p] : j.at("params").items()) {
    auto shape = p.at("shape").get<std::vector<int>>();
    auto data = flatten_tensor(p.at("data"), shape);
    size_t expect = 1;
    for (int d : shape) expect *= d;
    if (data.size() != expect) {
      throw std::invalid_argument("checkpoint_load: shape/data mismatch for tensor " + name);
    }
    ck.params[name] = {std::move(shape), std::move(data)};
  }
  return ck;
}

DvseModel LoadedCheckpoint::instantiate() const {
  DvseModel model(config, /*init_seed=*/0);
  auto& store = model.store().params;
  if (store.size() != params.size()) {
    throw std::invalid_argument("checkpoint: parameter set mismatch");
  }
  for (auto& [name, t] : store) {
    auto it = params.find(name);
    if (it == params.end()) {
      throw std::invalid_argument("checkpoint: missing tensor " + name);
    }
    if (it->second.first != t.shape()) {
      throw std::invalid_argument("checkpoint: shape mismatch for tensor " + name);
    }
    t.data() = it->second.second;
  }
  return model;
}

}  // namespace dvse
