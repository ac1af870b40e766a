#include "mattekit/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mattekit {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
  std::vector<int> out;
  for (const std::string& s : split(v, ',')) {
    try {
      out.push_back(std::stoi(s));
    } catch (...) {
      throw ConfigError("config: bad integer '" + s + "' in " + key);
    }
  }
  return out;
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (...) {
    throw ConfigError("config: bad number '" + v + "' for " + key);
  }
}

int parse_int(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const int i = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (...) {
    throw ConfigError("config: bad integer '" + v + "' for " + key);
  }
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: bad boolean '" + v + "' for " + key);
}

std::string fmt_double(double d) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

void set_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "dataset.manifest") c.dataset.manifest = value;
  else if (key == "dataset.num_fg") c.dataset.num_fg = parse_int(value, key);
  else if (key == "dataset.bgs_per_fg") c.dataset.bgs_per_fg = parse_int(value, key);
  else if (key == "dataset.size") c.dataset.size = parse_int(value, key);
  else if (key == "dataset.trimap_kernel_min") c.dataset.trimap_kernel_min = parse_int(value, key);
  else if (key == "dataset.trimap_kernel_max") c.dataset.trimap_kernel_max = parse_int(value, key);
  else if (key == "net.block_channels") c.net.block_channels = parse_int_list(value, key);
  else if (key == "net.aspp_rates") c.net.aspp_rates = parse_int_list(value, key);
  else if (key == "net.aspp_out_channels") c.net.aspp_out_channels = parse_int(value, key);
  else if (key == "net.msr_rates") c.net.msr_rates = parse_int_list(value, key);
  else if (key == "net.msr_channels") c.net.msr_channels = parse_int(value, key);
  else if (key == "net.use_ia") c.net.use_ia = parse_bool(value, key);
  else if (key == "net.use_msr") c.net.use_msr = parse_bool(value, key);
  else if (key == "dgm.mu") c.dgm.mu = parse_double(value, key);
  else if (key == "dgm.sigma2_init") c.dgm.sigma2_init = parse_double(value, key);
  else if (key == "dgm.sigma2_step") c.dgm.sigma2_step = parse_double(value, key);
  else if (key == "dgm.step_interval") c.dgm.step_interval = parse_int(value, key);
  else if (key == "dgm.sigma2_cap") c.dgm.sigma2_cap = parse_double(value, key);
  else if (key == "dgm.normalize") {
    if (value == "raw_pdf") c.dgm.normalize = ResponseNormalize::RawPdf;
    else if (value == "peak_one") c.dgm.normalize = ResponseNormalize::PeakOne;
    else throw ConfigError("config: dgm.normalize must be raw_pdf or peak_one");
  } else if (key == "loss.kind") c.loss.kind = loss_kind_from_string(value);
  else if (key == "loss.region") {
    if (value == "unknown_only") c.loss.region = LossRegion::UnknownOnly;
    else if (value == "full_image") c.loss.region = LossRegion::FullImage;
    else throw ConfigError("config: loss.region must be unknown_only or full_image");
  } else if (key == "loss.epsilon_comp") c.loss.epsilon_comp = parse_double(value, key);
  else if (key == "loss.hybrid_exclusive") c.loss.hybrid_exclusive = parse_bool(value, key);
  else if (key == "optimizer.lr_init") c.optimizer.lr_init = parse_double(value, key);
  else if (key == "optimizer.lr_drops") {
    c.optimizer.lr_drops.clear();
    if (!value.empty() && value != "none") {
      for (const std::string& pair : split(value, ',')) {
        const auto colon = pair.find(':');
        if (colon == std::string::npos)
          throw ConfigError("config: lr_drops entries must be epoch:lr, got '" + pair + "'");
        c.optimizer.lr_drops.emplace_back(parse_int(pair.substr(0, colon), key),
                                          parse_double(pair.substr(colon + 1), key));
      }
    }
  } else if (key == "optimizer.beta1") c.optimizer.beta1 = parse_double(value, key);
  else if (key == "optimizer.beta2") c.optimizer.beta2 = parse_double(value, key);
  else if (key == "optimizer.eps") c.optimizer.eps = parse_double(value, key);
  else if (key == "train.epochs") c.train.epochs = parse_int(value, key);
  else if (key == "train.batch_size") c.train.batch_size = parse_int(value, key);
  else if (key == "train.seed") c.train.seed = static_cast<uint64_t>(std::stoull(value));
  else if (key == "train.out_dir") c.train.out_dir = value;
  else if (key == "train.dual_supervision") c.train.dual_supervision = parse_bool(value, key);
  else if (key == "train.crop_sizes") c.train.crop_sizes = parse_int_list(value, key);
  else if (key == "train.resolution") c.train.resolution = parse_int(value, key);
  else if (key == "train.checkpoint_every") c.train.checkpoint_every = parse_int(value, key);
  else throw ConfigError("config: unknown key '" + key + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  net.validate();
  dgm.validate();
  if (train.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (train.epochs < 1) throw ConfigError("config: epochs must be >= 1");
  if (train.resolution % 16 != 0)
    throw ConfigError("config: train.resolution must be divisible by 16");
  if (train.checkpoint_every < 1) throw ConfigError("config: checkpoint_every must be >= 1");
  int prev = -1;
  for (const auto& [epoch, lr] : optimizer.lr_drops) {
    if (epoch <= prev) throw ConfigError("config: lr_drops must be strictly increasing in epoch");
    if (lr <= 0.0) throw ConfigError("config: lr_drops rates must be positive");
    prev = epoch;
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config: " + path);
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value in " + path);
    set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void apply_override(ExperimentConfig& cfg, const std::string& key_value) {
  const auto eq = key_value.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override must be key=value, got '" + key_value + "'");
  set_key(cfg, trim(key_value.substr(0, eq)), trim(key_value.substr(eq + 1)));
}

std::string dump_config(const ExperimentConfig& c) {
  std::string out;
  out += "dataset.manifest = " + c.dataset.manifest + "\n";
  out += "dataset.num_fg = " + std::to_string(c.dataset.num_fg) + "\n";
  out += "dataset.bgs_per_fg = " + std::to_string(c.dataset.bgs_per_fg) + "\n";
  out += "dataset.size = " + std::to_string(c.dataset.size) + "\n";
  out += "dataset.trimap_kernel_min = " + std::to_string(c.dataset.trimap_kernel_min) + "\n";
  out += "dataset.trimap_kernel_max = " + std::to_string(c.dataset.trimap_kernel_max) + "\n";
  out += "net.block_channels = " + join_ints(c.net.block_channels) + "\n";
  out += "net.aspp_rates = " + join_ints(c.net.aspp_rates) + "\n";
  out += "net.aspp_out_channels = " + std::to_string(c.net.aspp_out_channels) + "\n";
  out += "net.msr_rates = " + join_ints(c.net.msr_rates) + "\n";
  out += "net.msr_channels = " + std::to_string(c.net.msr_channels) + "\n";
  out += std::string("net.use_ia = ") + (c.net.use_ia ? "true" : "false") + "\n";
  out += std::string("net.use_msr = ") + (c.net.use_msr ? "true" : "false") + "\n";
  out += "dgm.mu = " + fmt_double(c.dgm.mu) + "\n";
  out += "dgm.sigma2_init = " + fmt_double(c.dgm.sigma2_init) + "\n";
  out += "dgm.sigma2_step = " + fmt_double(c.dgm.sigma2_step) + "\n";
  out += "dgm.step_interval = " + std::to_string(c.dgm.step_interval) + "\n";
  out += "dgm.sigma2_cap = " + fmt_double(c.dgm.sigma2_cap) + "\n";
  out += std::string("dgm.normalize = ") +
         (c.dgm.normalize == ResponseNormalize::RawPdf ? "raw_pdf" : "peak_one") + "\n";
  out += "loss.kind = " + to_string(c.loss.kind) + "\n";
  out += std::string("loss.region = ") +
         (c.loss.region == LossRegion::UnknownOnly ? "unknown_only" : "full_image") + "\n";
  out += "loss.epsilon_comp = " + fmt_double(c.loss.epsilon_comp) + "\n";
  out += std::string("loss.hybrid_exclusive = ") + (c.loss.hybrid_exclusive ? "true" : "false") + "\n";
  out += "optimizer.lr_init = " + fmt_double(c.optimizer.lr_init) + "\n";
  std::string drops;
  for (size_t i = 0; i < c.optimizer.lr_drops.size(); ++i) {
    if (i) drops += ",";
    drops += std::to_string(c.optimizer.lr_drops[i].first) + ":" +
             fmt_double(c.optimizer.lr_drops[i].second);
  }
  out += "optimizer.lr_drops = " + (drops.empty() ? "none" : drops) + "\n";
  out += "optimizer.beta1 = " + fmt_double(c.optimizer.beta1) + "\n";
  out += "optimizer.beta2 = " + fmt_double(c.optimizer.beta2) + "\n";
  out += "optimizer.eps = " + fmt_double(c.optimizer.eps) + "\n";
  out += "train.epochs = " + std::to_string(c.train.epochs) + "\n";
  out += "train.batch_size = " + std::to_string(c.train.batch_size) + "\n";
  out += "train.seed = " + std::to_string(c.train.seed) + "\n";
  out += "train.out_dir = " + c.train.out_dir + "\n";
  out += std::string("train.dual_supervision = ") + (c.train.dual_supervision ? "true" : "false") + "\n";
  out += "train.crop_sizes = " + join_ints(c.train.crop_sizes) + "\n";
  out += "train.resolution = " + std::to_string(c.train.resolution) + "\n";
  out += "train.checkpoint_every = " + std::to_string(c.train.checkpoint_every) + "\n";
  return out;
}

}  // namespace mattekit
