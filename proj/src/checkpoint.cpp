/*
 Copyright 2026 The cfvi Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/


#include "cfvi/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <vector>

#include <json.hpp>

#include "cfvi/errors.hpp"

namespace cfvi {

namespace {

using Json = nlohmann::ordered_json;

constexpr char kMagic[8] = {'C', 'F', 'V', 'I', 'C', 'K', 'P', 'T'};

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos, const std::string& path) {
  if (pos + sizeof(T) > in.size()) throw CheckpointError(path + ": truncated checkpoint");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(T);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ExperimentConfig& config,
                     const ValueEnsemble& ensemble, int iteration) {
  Json header;
  header["system"] = config.system;
  header["config_hash"] = config_hash(config);
  header["iteration"] = iteration;
  header["config"] = Json::parse(to_json(config));
  header["param_counts"] = Json::array();
  for (const auto& net : ensemble.nets()) header["param_counts"].push_back(net.num_params());
  const std::string text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& net : ensemble.nets()) {
    for (double p : net.params()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(p));
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError("cannot write checkpoint '" + tmp + "'");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw CheckpointError("cannot write checkpoint '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot read checkpoint '" + path + "'");
  const std::string in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (in.size() < sizeof kMagic || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError(path + ": not a cfvi checkpoint");
  }
  std::size_t pos = sizeof kMagic;
  const auto version = get_le<std::uint32_t>(in, pos, path);
  if (version != kCheckpointVersion) {
    throw CheckpointError(path + ": checkpoint schema version " + std::to_string(version) +
                          ", this build reads version " +
                          std::to_string(kCheckpointVersion));
  }
  const auto length = get_le<std::uint64_t>(in, pos, path);
  if (pos + length > in.size()) throw CheckpointError(path + ": truncated checkpoint");
  std::string config_text, hash;
  int iteration = 0;
  std::vector<long long> counts;
  try {
    const Json header = Json::parse(in.substr(pos, length));
    config_text = header.at("config").dump();
    hash = header.at("config_hash").get<std::string>();
    iteration = header.at("iteration").get<int>();
    counts = header.at("param_counts").get<std::vector<long long>>();
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path + ": corrupt header: " + e.what());
  }
  pos += length;

  ExperimentConfig config;
  try {
    config = parse_config(config_text, path + " (embedded config)");
  } catch (const ConfigError& e) {
    throw CheckpointError(path + ": " + e.what());
  }
  if (hash != config_hash(config)) {
    throw CheckpointError(path + ": config hash does not match the embedded config");
  }
  const TrainSetup setup = build_setup(config);
  ValueEnsemble ens(setup.problem.features(), setup.problem.model().desired_state(),
                    config.value_net, 0);
  if (counts.size() != ens.nets().size()) {
    throw CheckpointError(path + ": ensemble size does not match the stored config");
  }
  for (std::size_t k = 0; k < ens.nets().size(); ++k) {
    Vec& params = ens.nets()[k].params();
    if (counts[k] != params.size()) {
      throw CheckpointError(path + ": parameter count does not match the stored config");
    }
    for (Eigen::Index i = 0; i < params.size(); ++i) {
      params[i] = std::bit_cast<double>(get_le<std::uint64_t>(in, pos, path));
    }
  }
  if (pos != in.size()) throw CheckpointError(path + ": trailing bytes after parameters");
  Checkpoint ck{std::move(config), std::move(hash), iteration, std::move(ens)};
  return ck;
}

}  // namespace cfvi
