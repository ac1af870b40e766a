#include "mattekit/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>

using nlohmann::json;

namespace mattekit {

namespace {

json net_config_to_json(const NetConfig& c) {
  return json{{"block_channels", c.block_channels}, {"aspp_rates", c.aspp_rates},
              {"aspp_out_channels", c.aspp_out_channels}, {"msr_rates", c.msr_rates},
              {"msr_channels", c.msr_channels}, {"use_ia", c.use_ia}, {"use_msr", c.use_msr}};
}

NetConfig net_config_from_json(const json& j) {
  NetConfig c;
  c.block_channels = j.at("block_channels").get<std::vector<int>>();
  c.aspp_rates = j.at("aspp_rates").get<std::vector<int>>();
  c.aspp_out_channels = j.at("aspp_out_channels").get<int>();
  c.msr_rates = j.at("msr_rates").get<std::vector<int>>();
  c.msr_channels = j.at("msr_channels").get<int>();
  c.use_ia = j.at("use_ia").get<bool>();
  c.use_msr = j.at("use_msr").get<bool>();
  return c;
}

}  // namespace

const Parameter* Checkpoint::find(const std::string& name) const {
  for (const Parameter& p : tensors)
    if (p.name == name) return &p;
  return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json header;
  header["version"] = ckpt.version;
  header["net_config"] = net_config_to_json(ckpt.net_config);
  if (ckpt.state) {
    header["train_state"] = {{"iteration", ckpt.state->iteration},
                             {"epoch", ckpt.state->epoch},
                             {"adam_t", ckpt.state->adam_t},
                             {"sigma2_current", ckpt.state->sigma2_current}};
  }
  header["params"] = json::array();
  int64_t offset = 0;
  for (const Parameter& p : ckpt.tensors) {
    header["params"].push_back({{"name", p.name}, {"shape", p.shape}, {"offset", offset}});
    offset += static_cast<int64_t>(p.value.size());
  }
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  const uint64_t hlen = hs.size();
  char lenbuf[8];
  for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<char>((hlen >> (8 * i)) & 0xff);
  out.write(lenbuf, 8);
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const Parameter& p : ckpt.tensors)
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  if (!out) throw IoError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint: " + path);
  char lenbuf[8];
  in.read(lenbuf, 8);
  if (!in) throw IoError("checkpoint truncated: " + path);
  uint64_t hlen = 0;
  for (int i = 0; i < 8; ++i) hlen |= static_cast<uint64_t>(static_cast<unsigned char>(lenbuf[i])) << (8 * i);
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw IoError("checkpoint header truncated: " + path);
  json header = json::parse(hs);

  Checkpoint ckpt;
  ckpt.version = header.at("version").get<int>();
  if (ckpt.version != 1)
    throw ConfigError("unsupported checkpoint version " + std::to_string(ckpt.version) + " in " + path);
  ckpt.net_config = net_config_from_json(header.at("net_config"));
  if (header.contains("train_state")) {
    CheckpointState st;
    st.iteration = header["train_state"].at("iteration").get<int64_t>();
    st.epoch = header["train_state"].at("epoch").get<int>();
    st.adam_t = header["train_state"].at("adam_t").get<int64_t>();
    st.sigma2_current = header["train_state"].at("sigma2_current").get<double>();
    ckpt.state = st;
  }
  for (const auto& jp : header.at("params")) {
    Parameter p;
    p.name = jp.at("name").get<std::string>();
    p.shape = jp.at("shape").get<Shape>();
    p.value.resize(static_cast<size_t>(shape_numel(p.shape)));
    ckpt.tensors.push_back(std::move(p));
  }
  for (Parameter& p : ckpt.tensors) {
    in.read(reinterpret_cast<char*>(p.value.data()),
            static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    if (!in) throw IoError("checkpoint payload truncated: " + path);
  }
  return ckpt;
}

}  // namespace mattekit
