#include "mattekit/net.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mattekit/rng.hpp"

namespace mattekit {

void NetConfig::validate() const {
  if (block_channels.size() != 5)
    throw ConfigError("net: exactly 5 encoder block widths required, got " +
                      std::to_string(block_channels.size()));
  for (int c : block_channels)
    if (c < 1) throw ConfigError("net: block widths must be >= 1");
  if (aspp_rates.empty()) throw ConfigError("net: aspp_rates must not be empty");
  if (std::set<int>(aspp_rates.begin(), aspp_rates.end()).size() != aspp_rates.size())
    throw ConfigError("net: aspp_rates must be distinct");
  for (int r : aspp_rates)
    if (r < 1) throw ConfigError("net: aspp rates must be >= 1");
  if (aspp_out_channels < 1) throw ConfigError("net: aspp_out_channels must be >= 1");
  if (use_msr) {
    if (msr_rates.empty()) throw ConfigError("net: msr_rates must not be empty");
    for (int r : msr_rates)
      if (r < 1) throw ConfigError("net: msr rates must be >= 1");
    if (msr_channels < 1) throw ConfigError("net: msr_channels must be >= 1");
  }
}

int MattingNet::add_param(const std::string& name, Shape shape) {
  Parameter p;
  p.name = name;
  p.shape = std::move(shape);
  p.value.assign(static_cast<size_t>(shape_numel(p.shape)), 0.0);
  params_.push_back(std::move(p));
  return static_cast<int>(params_.size()) - 1;
}

MattingNet::MattingNet(NetConfig config, uint64_t init_seed) : config_(std::move(config)) {
  config_.validate();
  const auto& bc = config_.block_channels;
  const int d = config_.aspp_out_channels;

  auto conv = [&](const std::string& name, int cout, int cin, int k, bool bias) {
    ConvRef r;
    r.w = add_param(name + ".weight", {cout, cin, k, k});
    if (bias) r.b = add_param(name + ".bias", {cout});
    return r;
  };
  auto tconv = [&](const std::string& name, int cin, int cout, bool bias) {
    ConvRef r;
    r.w = add_param(name + ".weight", {cin, cout, 4, 4});
    if (bias) r.b = add_param(name + ".bias", {cout});
    return r;
  };
  auto affine = [&](const std::string& name, int c) {
    AffineRef r;
    r.gamma = add_param(name + ".gamma", {c});
    r.beta = add_param(name + ".beta", {c});
    return r;
  };

  for (int k = 0; k < 5; ++k) {
    const std::string base = "enc.block" + std::to_string(k);
    const int cin = k == 0 ? NetConfig::input_channels : bc[static_cast<size_t>(k) - 1];
    const int cout = bc[static_cast<size_t>(k)];
    enc_[static_cast<size_t>(k)].conv1 = conv(base + ".conv1", cout, cin, 3, true);
    enc_[static_cast<size_t>(k)].affine = affine(base + ".affine", cout);
    enc_[static_cast<size_t>(k)].conv2 = conv(base + ".conv2", cout, cout, 3, true);
  }

  for (size_t i = 0; i < config_.aspp_rates.size(); ++i)
    aspp_branches_.push_back(conv("aspp.branch" + std::to_string(i), d, bc[4], 3, true));
  aspp_pool_ = conv("aspp.pool", d, bc[4], 1, true);
  aspp_fuse_ = conv("aspp.fuse", d, d * static_cast<int>(config_.aspp_rates.size() + 1), 3, true);
  aspp_affine_ = affine("aspp.affine", d);

  if (config_.use_ia) {
    for (int k = 0; k < 4; ++k) {
      const std::string base = "ia.imm" + std::to_string(k);
      imm_[static_cast<size_t>(k)].proj_low = conv(base + ".proj_low", d, bc[static_cast<size_t>(k)], 1, false);
      imm_[static_cast<size_t>(k)].proj_high =
          conv(base + ".proj_high", d, bc[static_cast<size_t>(k) + 1], 1, false);
      imm_[static_cast<size_t>(k)].up = tconv(base + ".up", d, d, false);
      iam_up_[static_cast<size_t>(k)] = tconv("ia.iam" + std::to_string(k) + ".up", d, d, false);
    }
  } else {
    for (int k = 0; k < 4; ++k) {
      const std::string base = "dec.skip" + std::to_string(k);
      skip_[static_cast<size_t>(k)].up = tconv(base + ".up", d, d, true);
      skip_[static_cast<size_t>(k)].fuse =
          conv(base + ".fuse", d, d + bc[static_cast<size_t>(k)], 3, true);
    }
  }

  predict_ = conv("head.predict", 1, d, 3, true);

  if (config_.use_msr) {
    for (size_t i = 0; i < config_.msr_rates.size(); ++i)
      msr_branches_.push_back(conv("msr.branch" + std::to_string(i), config_.msr_channels, 4, 3, true));
    msr_proj_ = conv("msr.proj", 1, config_.msr_channels, 1, true);
  }

  init_params(init_seed);
}

void MattingNet::init_params(uint64_t seed) {
  Rng rng(derive_seed(seed, 0x11117777ULL));
  for (Parameter& p : params_) {
    const bool is_weight = p.shape.size() == 4;
    const bool is_gamma = p.name.size() > 6 && p.name.rfind(".gamma") == p.name.size() - 6;
    // The refinement projection starts at zero so refinement begins as the
    // exact identity and learns a residual.
    const bool zero_init = p.name.rfind("msr.proj.", 0) == 0 || !is_weight;
    const bool is_transposed = p.name.find(".up.") != std::string::npos;
    const bool is_head = p.name.rfind("head.", 0) == 0;
    if (is_gamma) {
      std::fill(p.value.begin(), p.value.end(), 1.0);
    } else if (zero_init) {
      std::fill(p.value.begin(), p.value.end(), 0.0);
    } else {
      // He gain for convs feeding a ReLU; variance-preserving gain for the
      // purely linear paths (projections, upsamplers, refinement branches).
      // Transposed kernels see fan_in/stride^2 contributing taps per output
      // pixel. The prediction head stays small so the initial matte sits
      // near 0.5.
      const bool linear_path = is_transposed || p.name.rfind("ia.", 0) == 0 ||
                               p.name.rfind("msr.", 0) == 0 ||
                               p.name.rfind("aspp.branch", 0) == 0 ||
                               p.name.rfind("aspp.pool", 0) == 0;
      const int k = p.shape[2];
      const double fan_in = is_transposed ? p.shape[0] * (k / 2.0) * (k / 2.0)
                                          : static_cast<double>(p.shape[1]) * k * k;
      const double gain = is_head ? 1.0 : (linear_path ? 3.0 : 6.0);
      const double bound = std::sqrt(gain / fan_in);
      for (double& v : p.value) v = rng.uniform(-bound, bound);
    }
  }
}

int64_t MattingNet::param_count() const {
  int64_t n = 0;
  for (const Parameter& p : params_) n += static_cast<int64_t>(p.value.size());
  return n;
}

std::string MattingNet::describe() const {
  std::string out;
  for (const Parameter& p : params_) {
    out += p.name + " " + shape_str(p.shape) + " " + std::to_string(p.value.size()) + "\n";
  }
  out += "total " + std::to_string(param_count()) + "\n";
  return out;
}

MattingNet::Bound MattingNet::bind(Tape& tape, bool with_grad) const {
  Bound b;
  b.net_ = this;
  b.tape_ = &tape;
  b.leaves_.reserve(params_.size());
  for (const Parameter& p : params_)
    b.leaves_.push_back(Tensor::from_vector(p.shape, p.value, with_grad));
  return b;
}

MattingNet::Bound MattingNet::bind_leaves(Tape& tape, std::vector<Tensor> leaves) const {
  if (leaves.size() != params_.size())
    throw ConfigError("bind_leaves: expected " + std::to_string(params_.size()) + " leaves, got " +
                      std::to_string(leaves.size()));
  for (size_t i = 0; i < leaves.size(); ++i)
    if (leaves[i].shape() != params_[i].shape)
      throw ConfigError("bind_leaves: shape mismatch for '" + params_[i].name + "'");
  Bound b;
  b.net_ = this;
  b.tape_ = &tape;
  b.leaves_ = std::move(leaves);
  return b;
}

EncoderFeatures MattingNet::Bound::encoder_forward(const Tensor& input) const {
  if (input.shape().size() != 4 || input.dim(1) != NetConfig::input_channels)
    throw ConfigError("encoder: input must be N×4×H×W, got " + shape_str(input.shape()));
  if (input.dim(2) % 16 != 0 || input.dim(3) % 16 != 0)
    throw ConfigError("encoder: spatial size must be divisible by 16, got " +
                      shape_str(input.shape()));
  Tape& tape = *tape_;
  EncoderFeatures feats;
  Tensor x = input;
  for (int k = 0; k < 5; ++k) {
    const auto& blk = net_->enc_[static_cast<size_t>(k)];
    Conv2dSpec spec;
    spec.padding = 1;
    spec.stride = k == 0 ? 1 : 2;
    Tensor h = conv2d(tape, x, leaf(blk.conv1.w), leaf(blk.conv1.b), spec);
    h = channel_affine(tape, h, leaf(blk.affine.gamma), leaf(blk.affine.beta));
    h = relu(tape, h);
    h = conv2d(tape, h, leaf(blk.conv2.w), leaf(blk.conv2.b), Conv2dSpec{1, 1, 1});
    h = relu(tape, h);
    feats.f[static_cast<size_t>(k)] = h;
    x = h;
  }
  return feats;
}

Tensor MattingNet::Bound::aspp_forward(const Tensor& f4) const {
  Tape& tape = *tape_;
  const int s = std::min(f4.dim(2), f4.dim(3));
  const int max_rate = std::max(1, (s - 1) / 2);
  std::vector<Tensor> branches;
  for (size_t i = 0; i < net_->aspp_branches_.size(); ++i) {
    int rate = net_->config_.aspp_rates[i];
    if (rate > max_rate) {
      if (!net_->warned_rate_clamp_.exchange(true))
        warn("aspp: dilation rate " + std::to_string(rate) + " clamped to " +
             std::to_string(max_rate) + " for " + std::to_string(s) + "-pixel feature maps");
      rate = max_rate;
    }
    Conv2dSpec spec;
    spec.padding = rate;
    spec.dilation = rate;
    spec.pad_mode = PadMode::Replicate;
    branches.push_back(conv2d(tape, f4, leaf(net_->aspp_branches_[i].w),
                              leaf(net_->aspp_branches_[i].b), spec));
  }
  Tensor pooled = global_avg_pool(tape, f4);
  pooled = conv2d(tape, pooled, leaf(net_->aspp_pool_.w), leaf(net_->aspp_pool_.b));
  branches.push_back(broadcast_spatial(tape, pooled, f4.dim(2), f4.dim(3)));

  Tensor cat = concat_channels(tape, branches);
  Conv2dSpec fuse_spec;
  fuse_spec.padding = 1;
  fuse_spec.pad_mode = PadMode::Replicate;
  Tensor out = conv2d(tape, cat, leaf(net_->aspp_fuse_.w), leaf(net_->aspp_fuse_.b), fuse_spec);
  out = channel_affine(tape, out, leaf(net_->aspp_affine_.gamma), leaf(net_->aspp_affine_.beta));
  return relu(tape, out);
}

Tensor MattingNet::Bound::imm_forward(int stage, const Tensor& f_low, const Tensor& f_high) const {
  if (!net_->config_.use_ia) throw ConfigError("imm_forward: network built without IA");
  if (f_high.dim(2) * 2 != f_low.dim(2) || f_high.dim(3) * 2 != f_low.dim(3))
    throw ConfigError("imm: high-level feature must be at half the low-level resolution");
  Tape& tape = *tape_;
  const auto& p = net_->imm_[static_cast<size_t>(stage)];
  Tensor low = conv2d(tape, f_low, leaf(p.proj_low.w), Tensor{});
  Tensor high = conv2d(tape, f_high, leaf(p.proj_high.w), Tensor{});
  Tensor up = transposed_conv2d(tape, high, leaf(p.up.w), Tensor{});
  if (up.shape() != low.shape())
    throw ConfigError("imm: upsampled feature shape " + shape_str(up.shape()) +
                      " does not match projected low-level shape " + shape_str(low.shape()));
  return mul(tape, low, up);
}

Tensor MattingNet::Bound::iam_forward(int stage, const Tensor& f_imm, const Tensor& upstream) const {
  if (!net_->config_.use_ia) throw ConfigError("iam_forward: network built without IA");
  if (upstream.dim(2) * 2 != f_imm.dim(2) || upstream.dim(3) * 2 != f_imm.dim(3))
    throw ConfigError("iam: upstream feature must be at half the matched resolution");
  Tape& tape = *tape_;
  // One shared upsampling feeds both the sum and the product.
  Tensor u = transposed_conv2d(tape, upstream, leaf(net_->iam_up_[static_cast<size_t>(stage)].w), Tensor{});
  if (u.shape() != f_imm.shape())
    throw ConfigError("iam: upsampled shape " + shape_str(u.shape()) + " does not match " +
                      shape_str(f_imm.shape()));
  return mul(tape, add(tape, f_imm, u), u);
}

std::pair<Tensor, Tensor> MattingNet::Bound::predict_alpha(const Tensor& decoder_out) const {
  Tape& tape = *tape_;
  Tensor logits =
      conv2d(tape, decoder_out, leaf(net_->predict_.w), leaf(net_->predict_.b), Conv2dSpec{1, 1, 1});
  return {sigmoid(tape, logits), logits};
}

Tensor MattingNet::Bound::msr_forward(const Tensor& rgb, const Tensor& alpha_prelim,
                                      const Tensor& logits) const {
  if (!net_->config_.use_msr) return alpha_prelim;
  Tape& tape = *tape_;
  Tensor x = concat_channels(tape, {rgb, alpha_prelim});
  Tensor branch_sum;
  for (size_t i = 0; i < net_->msr_branches_.size(); ++i) {
    Conv2dSpec spec;
    spec.padding = net_->config_.msr_rates[i];
    spec.dilation = net_->config_.msr_rates[i];
    spec.pad_mode = PadMode::Replicate;
    Tensor b = conv2d(tape, x, leaf(net_->msr_branches_[i].w), leaf(net_->msr_branches_[i].b), spec);
    branch_sum = branch_sum.defined() ? add(tape, branch_sum, b) : b;
  }
  Tensor resid = conv2d(tape, branch_sum, leaf(net_->msr_proj_.w), leaf(net_->msr_proj_.b));
  return sigmoid(tape, add(tape, logits, resid));
}

NetForward MattingNet::Bound::full_forward(const Tensor& rgb, const Tensor& trimap_channel) const {
  Tape& tape = *tape_;
  if (rgb.shape().size() != 4 || rgb.dim(1) != 3)
    throw ConfigError("full_forward: rgb must be N×3×H×W");
  if (trimap_channel.shape().size() != 4 || trimap_channel.dim(1) != 1)
    throw ConfigError("full_forward: trimap channel must be N×1×H×W");
  NetForward out;
  Tensor input = concat_channels(tape, {rgb, trimap_channel});
  out.features = encoder_forward(input);
  out.aspp = aspp_forward(out.features.f[4]);

  Tensor up = out.aspp;
  if (net_->config_.use_ia) {
    for (int k = 3; k >= 0; --k) {
      Tensor matched = imm_forward(k, out.features.f[static_cast<size_t>(k)],
                                   out.features.f[static_cast<size_t>(k) + 1]);
      up = iam_forward(k, matched, up);
    }
  } else {
    for (int k = 3; k >= 0; --k) {
      const auto& p = net_->skip_[static_cast<size_t>(k)];
      Tensor u = transposed_conv2d(tape, up, leaf(p.up.w), leaf(p.up.b));
      Tensor cat = concat_channels(tape, {u, out.features.f[static_cast<size_t>(k)]});
      up = relu(tape, conv2d(tape, cat, leaf(p.fuse.w), leaf(p.fuse.b), Conv2dSpec{1, 1, 1}));
    }
  }

  auto [alpha, logits] = predict_alpha(up);
  out.alpha_prelim = alpha;
  out.logits_prelim = logits;
  out.alpha_refined = msr_forward(rgb, alpha, logits);
  out.bound_params = leaves_;
  return out;
}

NetForward MattingNet::forward(Tape& tape, const Tensor& rgb, const Tensor& trimap_channel,
                               bool with_grad) const {
  return bind(tape, with_grad).full_forward(rgb, trimap_channel);
}

}  // namespace mattekit
