#include "mattekit/gradcheck_suite.hpp"

#include <cmath>

#include "mattekit/gradcheck.hpp"
#include "mattekit/losses.hpp"
#include "mattekit/net.hpp"
#include "mattekit/ops.hpp"
#include "mattekit/rng.hpp"

namespace mattekit {

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Keeps coordinates away from the ReLU kink so central differences stay valid.
Tensor random_tensor_away_from_zero(Rng& rng, Shape shape, double margin = 0.1) {
  Tensor t = random_tensor(rng, std::move(shape));
  for (double& v : t.values())
    if (std::abs(v) < margin) v = v < 0.0 ? v - margin : v + margin;
  return t;
}

NetConfig tiny_net_config() {
  NetConfig cfg;
  cfg.block_channels = {2, 3, 4, 4, 4};
  cfg.aspp_rates = {1, 8, 16};  // clamps hard at these feature sizes
  cfg.aspp_out_channels = 4;
  cfg.msr_rates = {1, 2};
  cfg.msr_channels = 3;
  return cfg;
}

// The refinement projection is zero-initialized; give it real values so
// gradients flow everywhere during the check.
void randomize_params(MattingNet& net, uint64_t seed) {
  Rng rng(derive_seed(seed, 0xbeefULL));
  for (Parameter& p : net.params())
    for (double& v : p.value) v = rng.uniform(-0.3, 0.3);
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(double epsilon) {
  std::vector<GradCheckCase> cases;
  Rng rng(20240517);

  auto run = [&](const std::string& name, const TensorFn& f, std::vector<Tensor> inputs,
                 double tolerance) {
    GradCheckCase c;
    c.name = name;
    c.tolerance = tolerance;
    c.max_rel_err = check_gradients(f, inputs, epsilon, tolerance).worst;
    c.passed = c.max_rel_err < tolerance;
    cases.push_back(c);
  };

  const double tol = 1e-4;

  run("conv2d", [](Tape& t, const std::vector<Tensor>& in) {
        return mean(t, conv2d(t, in[0], in[1], in[2], Conv2dSpec{1, 1, 1}));
      },
      {random_tensor(rng, {1, 2, 5, 5}), random_tensor(rng, {3, 2, 3, 3}),
       random_tensor(rng, {3})},
      tol);

  run("conv2d_strided_dilated", [](Tape& t, const std::vector<Tensor>& in) {
        Conv2dSpec spec;
        spec.stride = 2;
        spec.padding = 2;
        spec.dilation = 2;
        return mean(t, conv2d(t, in[0], in[1], in[2], spec));
      },
      {random_tensor(rng, {1, 2, 9, 9}), random_tensor(rng, {2, 2, 3, 3}),
       random_tensor(rng, {2})},
      tol);

  run("conv2d_replicate_pad", [](Tape& t, const std::vector<Tensor>& in) {
        Conv2dSpec spec;
        spec.padding = 2;
        spec.dilation = 2;
        spec.pad_mode = PadMode::Replicate;
        return mean(t, conv2d(t, in[0], in[1], in[2], spec));
      },
      {random_tensor(rng, {1, 2, 6, 6}), random_tensor(rng, {2, 2, 3, 3}),
       random_tensor(rng, {2})},
      tol);

  run("transposed_conv2d", [](Tape& t, const std::vector<Tensor>& in) {
        return mean(t, transposed_conv2d(t, in[0], in[1], in[2]));
      },
      {random_tensor(rng, {1, 2, 4, 4}), random_tensor(rng, {2, 3, 4, 4}),
       random_tensor(rng, {3})},
      tol);

  run("add_mul_sub", [](Tape& t, const std::vector<Tensor>& in) {
        return mean(t, mul(t, add(t, in[0], in[1]), sub(t, in[0], in[2])));
      },
      {random_tensor(rng, {2, 3, 4, 4}), random_tensor(rng, {2, 3, 4, 4}),
       random_tensor(rng, {2, 3, 4, 4})},
      tol);

  run("relu", [](Tape& t, const std::vector<Tensor>& in) { return mean(t, relu(t, in[0])); },
      {random_tensor_away_from_zero(rng, {2, 2, 5, 5})}, tol);

  run("sigmoid", [](Tape& t, const std::vector<Tensor>& in) { return mean(t, sigmoid(t, in[0])); },
      {random_tensor(rng, {2, 2, 5, 5})}, tol);

  run("charbonnier", [](Tape& t, const std::vector<Tensor>& in) {
        return mean(t, charbonnier(t, in[0], 1e-6));
      },
      {random_tensor_away_from_zero(rng, {2, 2, 5, 5}, 0.05)}, tol);

  run("sum_scale", [](Tape& t, const std::vector<Tensor>& in) {
        return scale(t, sum(t, in[0]), 0.37);
      },
      {random_tensor(rng, {3, 7})}, tol);

  run("concat_channels", [](Tape& t, const std::vector<Tensor>& in) {
        return mean(t, mul(t, concat_channels(t, {in[0], in[1]}),
                           concat_channels(t, {in[1], in[0]})));
      },
      {random_tensor(rng, {1, 2, 4, 4}), random_tensor(rng, {1, 2, 4, 4})}, tol);

  run("global_avg_pool", [](Tape& t, const std::vector<Tensor>& in) {
        return mean(t, global_avg_pool(t, in[0]));
      },
      {random_tensor(rng, {2, 3, 5, 5})}, tol);

  run("broadcast_spatial", [](Tape& t, const std::vector<Tensor>& in) {
        return mean(t, mul(t, broadcast_spatial(t, in[0], 4, 4), in[1]));
      },
      {random_tensor(rng, {2, 3, 1, 1}), random_tensor(rng, {2, 3, 4, 4})}, tol);

  run("channel_affine", [](Tape& t, const std::vector<Tensor>& in) {
        return mean(t, channel_affine(t, in[0], in[1], in[2]));
      },
      {random_tensor(rng, {2, 3, 4, 4}), random_tensor(rng, {3}), random_tensor(rng, {3})}, tol);

  {
    Tensor alpha_g = random_tensor(rng, {1, 1, 6, 6}, 0.0, 1.0);
    Tensor response = random_tensor(rng, {1, 1, 6, 6}, 0.4, 0.8);
    Tensor mask = Tensor::zeros({1, 1, 6, 6});
    for (size_t i = 0; i < mask.values().size(); ++i) mask.values()[i] = i % 3 == 0 ? 1.0 : 0.0;
    run("weighted_alpha_loss", [alpha_g, response, mask](Tape& t, const std::vector<Tensor>& in) {
          return weighted_alpha_loss(t, in[0], alpha_g, response, mask);
        },
        {random_tensor(rng, {1, 1, 6, 6}, 0.02, 0.98)}, tol);

    run("l1_l2_hybrid_loss", [alpha_g, mask](Tape& t, const std::vector<Tensor>& in) {
          return l1_l2_hybrid_loss(t, in[0], alpha_g, mask);
        },
        {random_tensor(rng, {1, 1, 6, 6}, 0.02, 0.98)}, tol);

    Tensor fg = random_tensor(rng, {1, 3, 6, 6}, 0.0, 1.0);
    Tensor bg = random_tensor(rng, {1, 3, 6, 6}, 0.0, 1.0);
    Tensor comp = random_tensor(rng, {1, 3, 6, 6}, 0.0, 1.0);
    run("comp_plus_alpha_loss",
        [alpha_g, mask, fg, bg, comp](Tape& t, const std::vector<Tensor>& in) {
          return comp_plus_alpha_loss(t, in[0], alpha_g, fg, bg, comp, mask);
        },
        {random_tensor(rng, {1, 1, 6, 6}, 0.02, 0.98)}, tol);
  }

  // Network stages: data inputs plus the parameters the stage touches
  // (selected by name prefix) are all perturbed.
  const NetConfig tiny = tiny_net_config();
  auto net_stage_check = [&](const std::string& name, const std::vector<std::string>& prefixes,
                             const std::function<Tensor(MattingNet::Bound&, Tape&,
                                                        const std::vector<Tensor>&)>& stage,
                             std::vector<Tensor> extra_inputs, double tolerance) {
    auto net = std::make_shared<MattingNet>(tiny, 99);
    randomize_params(*net, 7);
    auto selected = std::make_shared<std::vector<size_t>>();
    for (size_t pi = 0; pi < net->params().size(); ++pi) {
      const std::string& pname = net->params()[pi].name;
      const bool match = prefixes.empty() ||
                         std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& pre) {
                           return pname.rfind(pre, 0) == 0;
                         });
      if (match) selected->push_back(pi);
    }
    std::vector<Tensor> inputs = std::move(extra_inputs);
    const size_t data_count = inputs.size();
    for (size_t pi : *selected)
      inputs.push_back(Tensor::from_vector(net->params()[pi].shape, net->params()[pi].value));
    TensorFn f = [net, stage, data_count, selected](Tape& tape, const std::vector<Tensor>& in) {
      std::vector<Tensor> leaves;
      leaves.reserve(net->params().size());
      size_t sel_pos = 0;
      for (size_t pi = 0; pi < net->params().size(); ++pi) {
        if (sel_pos < selected->size() && (*selected)[sel_pos] == pi) {
          leaves.push_back(in[data_count + sel_pos]);
          ++sel_pos;
        } else {
          leaves.push_back(Tensor::from_vector(net->params()[pi].shape, net->params()[pi].value));
        }
      }
      MattingNet::Bound bound = net->bind_leaves(tape, std::move(leaves));
      std::vector<Tensor> data(in.begin(), in.begin() + static_cast<int64_t>(data_count));
      return stage(bound, tape, data);
    };
    run(name, f, inputs, tolerance);
  };

  net_stage_check("encoder_forward", {"enc."},
                  [](MattingNet::Bound& b, Tape& t, const std::vector<Tensor>& in) {
                    EncoderFeatures f = b.encoder_forward(in[0]);
                    Tensor acc = mean(t, f.f[4]);
                    for (int k = 0; k < 4; ++k) acc = add(t, acc, mean(t, f.f[static_cast<size_t>(k)]));
                    return acc;
                  },
                  {random_tensor(rng, {1, 4, 16, 16})}, tol);

  net_stage_check("aspp_forward", {"aspp."},
                  [](MattingNet::Bound& b, Tape& t, const std::vector<Tensor>& in) {
                    return mean(t, b.aspp_forward(in[0]));
                  },
                  {random_tensor(rng, {1, 4, 4, 4})}, tol);

  net_stage_check("imm_forward", {"ia.imm3."},
                  [](MattingNet::Bound& b, Tape& t, const std::vector<Tensor>& in) {
                    return mean(t, b.imm_forward(3, in[0], in[1]));
                  },
                  {random_tensor(rng, {1, 4, 8, 8}), random_tensor(rng, {1, 4, 4, 4})}, tol);

  net_stage_check("iam_forward", {"ia.iam2."},
                  [](MattingNet::Bound& b, Tape& t, const std::vector<Tensor>& in) {
                    return mean(t, b.iam_forward(2, in[0], in[1]));
                  },
                  {random_tensor(rng, {1, 4, 8, 8}), random_tensor(rng, {1, 4, 4, 4})}, tol);

  net_stage_check("predict_alpha", {"head."},
                  [](MattingNet::Bound& b, Tape& t, const std::vector<Tensor>& in) {
                    return mean(t, b.predict_alpha(in[0]).first);
                  },
                  {random_tensor(rng, {1, 4, 8, 8})}, tol);

  net_stage_check("msr_forward", {"head.", "msr."},
                  [](MattingNet::Bound& b, Tape& t, const std::vector<Tensor>& in) {
                    auto [alpha, logits] = b.predict_alpha(in[1]);
                    return mean(t, b.msr_forward(in[0], alpha, logits));
                  },
                  {random_tensor(rng, {1, 3, 8, 8}, 0.0, 1.0), random_tensor(rng, {1, 4, 8, 8})},
                  tol);

  {
    Tensor trimap_ch = random_tensor(rng, {1, 1, 16, 16}, 0.0, 1.0);
    net_stage_check("full_network", {},
                    [trimap_ch](MattingNet::Bound& b, Tape& t, const std::vector<Tensor>& in) {
                      NetForward fw = b.full_forward(in[0], trimap_ch);
                      return add(t, mean(t, fw.alpha_refined), mean(t, fw.alpha_prelim));
                    },
                    {random_tensor(rng, {1, 3, 16, 16}, 0.0, 1.0)}, 1e-3);
  }

  return cases;
}

bool all_passed(const std::vector<GradCheckCase>& cases) {
  for (const GradCheckCase& c : cases)
    if (!c.passed) return false;
  return true;
}

}  // namespace mattekit
