#pragma once

#include <array>
#include <atomic>
#include <string>
#include <vector>

#include "mattekit/ops.hpp"
#include "mattekit/tensor.hpp"

namespace mattekit {

struct Parameter {
  std::string name;
  Shape shape;
  std::vector<double> value;
};

struct NetConfig {
  std::vector<int> block_channels{8, 16, 32, 48, 48};  // exactly 5 encoder blocks
  std::vector<int> aspp_rates{1, 8, 16};
  int aspp_out_channels = 16;  // also the decoder width
  std::vector<int> msr_rates{1, 2, 4};
  int msr_channels = 8;
  bool use_ia = true;   // false replaces the match/aggregate chain with skip-concat
  bool use_msr = true;  // false returns the preliminary alpha as refined
  static constexpr int input_channels = 4;  // RGB + trimap encoding

  void validate() const;
};

// Feature pyramid at scales 1, 1/2, 1/4, 1/8, 1/16 of the input.
struct EncoderFeatures {
  std::array<Tensor, 5> f;
};

struct NetForward {
  Tensor alpha_prelim;
  Tensor alpha_refined;
  Tensor logits_prelim;
  EncoderFeatures features;
  Tensor aspp;
  std::vector<Tensor> bound_params;  // leaves aligned with MattingNet::params()
};

// The matting network. Parameters persist across iterations; each forward
// materializes them as leaves on the caller's tape (define-by-run).
class MattingNet {
 public:
  MattingNet(NetConfig config, uint64_t init_seed);

  const NetConfig& config() const { return config_; }
  std::vector<Parameter>& params() { return params_; }
  const std::vector<Parameter>& params() const { return params_; }
  int64_t param_count() const;
  std::string describe() const;  // one line per parameter plus a total

  // Parameters materialized on one tape. Stage indices follow the level of
  // the low-resolution operand: stage 3 pairs block3/block4 features and
  // consumes the context head's output, stage 0 emits the full-resolution map.
  class Bound {
   public:
    EncoderFeatures encoder_forward(const Tensor& input) const;
    Tensor aspp_forward(const Tensor& f4) const;
    Tensor imm_forward(int stage, const Tensor& f_low, const Tensor& f_high) const;
    Tensor iam_forward(int stage, const Tensor& f_imm, const Tensor& upstream) const;
    // Returns (alpha, logits); alpha = sigmoid(logits).
    std::pair<Tensor, Tensor> predict_alpha(const Tensor& decoder_out) const;
    // Refinement residual is added to the preliminary logits, so all-zero
    // refinement weights reproduce alpha_prelim exactly.
    Tensor msr_forward(const Tensor& rgb, const Tensor& alpha_prelim, const Tensor& logits) const;
    NetForward full_forward(const Tensor& rgb, const Tensor& trimap_channel) const;

    const std::vector<Tensor>& leaves() const { return leaves_; }

   private:
    friend class MattingNet;
    const MattingNet* net_ = nullptr;
    Tape* tape_ = nullptr;
    std::vector<Tensor> leaves_;
    Tensor leaf(int idx) const { return idx < 0 ? Tensor{} : leaves_[static_cast<size_t>(idx)]; }
  };

  Bound bind(Tape& tape, bool with_grad) const;

  // Binding with caller-supplied leaves (aligned with params()); lets the
  // gradient checker differentiate through parameters it owns.
  Bound bind_leaves(Tape& tape, std::vector<Tensor> leaves) const;

  // bind + full_forward in one call.
  NetForward forward(Tape& tape, const Tensor& rgb, const Tensor& trimap_channel,
                     bool with_grad) const;

 private:
  struct ConvRef {
    int w = -1;
    int b = -1;  // -1 when the convolution is bias-free
  };
  struct AffineRef {
    int gamma = -1;
    int beta = -1;
  };
  struct BlockRef {
    ConvRef conv1;
    AffineRef affine;
    ConvRef conv2;
  };
  struct ImmRef {
    ConvRef proj_low;   // 1x1, no bias
    ConvRef proj_high;  // 1x1, no bias
    ConvRef up;         // transposed, no bias
  };
  struct SkipRef {
    ConvRef up;    // transposed, bias
    ConvRef fuse;  // 3x3 on concat(up, skip), bias
  };

  int add_param(const std::string& name, Shape shape);
  void init_params(uint64_t seed);

  NetConfig config_;
  std::vector<Parameter> params_;

  std::array<BlockRef, 5> enc_;
  std::vector<ConvRef> aspp_branches_;
  ConvRef aspp_pool_;
  ConvRef aspp_fuse_;
  AffineRef aspp_affine_;
  std::array<ImmRef, 4> imm_;
  std::array<ConvRef, 4> iam_up_;  // transposed, no bias
  std::array<SkipRef, 4> skip_;
  ConvRef predict_;
  std::vector<ConvRef> msr_branches_;
  ConvRef msr_proj_;

  mutable std::atomic<bool> warned_rate_clamp_{false};
};

}  // namespace mattekit
