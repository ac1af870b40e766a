#pragma once

#include <string>

#include "mattekit/tensor.hpp"

namespace mattekit {

enum class LossKind { GaussianL1Dynamic, GaussianL1Static, CompPlusAlpha, L1L2Hybrid, PlainL1 };
enum class LossRegion { UnknownOnly, FullImage };

LossKind loss_kind_from_string(const std::string& s);
std::string to_string(LossKind k);

struct LossConfig {
  LossKind kind = LossKind::GaussianL1Dynamic;
  LossRegion region = LossRegion::UnknownOnly;
  double epsilon_comp = 1e-6;    // charbonnier smoothing
  bool hybrid_exclusive = false;  // L2 only outside the transition band
};

// Mean over masked pixels of response * |alpha_p - alpha_g| (smoothed L1).
// alpha_g, response and mask are constants; the gradient at pixel i has
// magnitude response(i)/|mask|. An empty mask yields 0 with a warning.
Tensor weighted_alpha_loss(Tape& tape, const Tensor& alpha_p, const Tensor& alpha_g,
                           const Tensor& response, const Tensor& mask, double eps = 1e-6);

// weighted_alpha_loss with a unit response: the same code path, so the two
// agree bitwise when response == 1.
Tensor plain_l1_loss(Tape& tape, const Tensor& alpha_p, const Tensor& alpha_g, const Tensor& mask,
                     double eps = 1e-6);

// Masked mean smoothed |alpha_p - alpha_g| plus the masked mean per-channel
// smoothed compositing residual |alpha_p*F + (1-alpha_p)*B - I|, summed at
// equal weight. fg/bg/composite are N×3×H×W constants.
Tensor comp_plus_alpha_loss(Tape& tape, const Tensor& alpha_p, const Tensor& alpha_g,
                            const Tensor& fg, const Tensor& bg, const Tensor& composite,
                            const Tensor& mask, double eps = 1e-6);

// Per pixel: smoothed |alpha_p - alpha_g| on the transition band
// {0 < alpha_g < 1}, plus (alpha_p - alpha_g)^2 everywhere in the mask
// (or only outside the band when exclusive); masked mean.
Tensor l1_l2_hybrid_loss(Tape& tape, const Tensor& alpha_p, const Tensor& alpha_g,
                         const Tensor& mask, bool exclusive = false, double eps = 1e-6);

}  // namespace mattekit
