#include "mattekit/losses.hpp"

#include <cmath>

#include "mattekit/ops.hpp"

namespace mattekit {

namespace {

int64_t mask_count(const Tensor& mask) {
  int64_t n = 0;
  for (double m : mask.values())
    if (m != 0.0) ++n;
  return n;
}

Tensor zero_scalar() { return Tensor::zeros({1}); }

}  // namespace

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "gaussian_l1_dynamic") return LossKind::GaussianL1Dynamic;
  if (s == "gaussian_l1_static") return LossKind::GaussianL1Static;
  if (s == "comp_plus_alpha") return LossKind::CompPlusAlpha;
  if (s == "l1_l2_hybrid") return LossKind::L1L2Hybrid;
  if (s == "plain_l1") return LossKind::PlainL1;
  throw ConfigError("unknown loss kind: " + s);
}

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::GaussianL1Dynamic: return "gaussian_l1_dynamic";
    case LossKind::GaussianL1Static: return "gaussian_l1_static";
    case LossKind::CompPlusAlpha: return "comp_plus_alpha";
    case LossKind::L1L2Hybrid: return "l1_l2_hybrid";
    case LossKind::PlainL1: return "plain_l1";
  }
  return "?";
}

Tensor weighted_alpha_loss(Tape& tape, const Tensor& alpha_p, const Tensor& alpha_g,
                           const Tensor& response, const Tensor& mask, double eps) {
  if (alpha_p.shape() != alpha_g.shape() || alpha_p.shape() != response.shape() ||
      alpha_p.shape() != mask.shape())
    throw ConfigError("weighted_alpha_loss: shapes must match");
  const int64_t count = mask_count(mask);
  if (count == 0) {
    warn("weighted_alpha_loss: empty mask, loss is 0");
    return zero_scalar();
  }
  std::vector<double> w(mask.values().size());
  for (size_t i = 0; i < w.size(); ++i) w[i] = response.values()[i] * mask.values()[i];
  Tensor weights = Tensor::from_vector(alpha_p.shape(), std::move(w));
  Tensor resid = charbonnier(tape, sub(tape, alpha_p, alpha_g), eps);
  return scale(tape, sum(tape, mul(tape, weights, resid)), 1.0 / static_cast<double>(count));
}

Tensor plain_l1_loss(Tape& tape, const Tensor& alpha_p, const Tensor& alpha_g, const Tensor& mask,
                     double eps) {
  return weighted_alpha_loss(tape, alpha_p, alpha_g, Tensor::full(alpha_p.shape(), 1.0), mask, eps);
}

Tensor comp_plus_alpha_loss(Tape& tape, const Tensor& alpha_p, const Tensor& alpha_g,
                            const Tensor& fg, const Tensor& bg, const Tensor& composite,
                            const Tensor& mask, double eps) {
  if (alpha_p.shape() != alpha_g.shape() || alpha_p.shape() != mask.shape())
    throw ConfigError("comp_plus_alpha_loss: alpha shapes must match");
  if (fg.shape() != bg.shape() || fg.shape() != composite.shape() || fg.dim(1) != 3)
    throw ConfigError("comp_plus_alpha_loss: fg/bg/composite must be matching N×3×H×W");
  const int64_t count = mask_count(mask);
  if (count == 0) {
    warn("comp_plus_alpha_loss: empty mask, loss is 0");
    return zero_scalar();
  }

  Tensor alpha_term = plain_l1_loss(tape, alpha_p, alpha_g, mask, eps);

  // alpha*F + (1-alpha)*B - I  ==  alpha*(F-B) + (B-I), with constants folded.
  std::vector<double> fmb(fg.values().size()), bmi(fg.values().size()), mask3(fg.values().size());
  const int n = fg.dim(0), h = fg.dim(2), w = fg.dim(3);
  const int64_t hw = static_cast<int64_t>(h) * w;
  for (int64_t i = 0; i < static_cast<int64_t>(fg.values().size()); ++i) {
    fmb[static_cast<size_t>(i)] = fg.values()[static_cast<size_t>(i)] - bg.values()[static_cast<size_t>(i)];
    bmi[static_cast<size_t>(i)] =
        bg.values()[static_cast<size_t>(i)] - composite.values()[static_cast<size_t>(i)];
  }
  for (int bi = 0; bi < n; ++bi)
    for (int c = 0; c < 3; ++c)
      for (int64_t i = 0; i < hw; ++i)
        mask3[static_cast<size_t>(((static_cast<int64_t>(bi) * 3 + c) * hw + i))] =
            mask.values()[static_cast<size_t>(static_cast<int64_t>(bi) * hw + i)];

  Tensor a3 = concat_channels(tape, {alpha_p, alpha_p, alpha_p});
  Tensor pred_resid = add(tape, mul(tape, a3, Tensor::from_vector(fg.shape(), std::move(fmb))),
                          Tensor::from_vector(fg.shape(), std::move(bmi)));
  Tensor comp_abs = charbonnier(tape, pred_resid, eps);
  Tensor comp_term =
      scale(tape, sum(tape, mul(tape, Tensor::from_vector(fg.shape(), std::move(mask3)), comp_abs)),
            1.0 / (3.0 * static_cast<double>(count)));
  return add(tape, alpha_term, comp_term);
}

Tensor l1_l2_hybrid_loss(Tape& tape, const Tensor& alpha_p, const Tensor& alpha_g,
                         const Tensor& mask, bool exclusive, double eps) {
  if (alpha_p.shape() != alpha_g.shape() || alpha_p.shape() != mask.shape())
    throw ConfigError("l1_l2_hybrid_loss: shapes must match");
  const int64_t count = mask_count(mask);
  if (count == 0) {
    warn("l1_l2_hybrid_loss: empty mask, loss is 0");
    return zero_scalar();
  }
  std::vector<double> w_band(mask.values().size()), w_sq(mask.values().size());
  for (size_t i = 0; i < mask.values().size(); ++i) {
    const double g = alpha_g.values()[i];
    const bool band = g > 0.0 && g < 1.0;
    w_band[i] = band ? mask.values()[i] : 0.0;
    w_sq[i] = (exclusive && band) ? 0.0 : mask.values()[i];
  }
  Tensor resid = sub(tape, alpha_p, alpha_g);
  Tensor l1 = sum(tape, mul(tape, Tensor::from_vector(alpha_p.shape(), std::move(w_band)),
                            charbonnier(tape, resid, eps)));
  Tensor l2 = sum(tape, mul(tape, Tensor::from_vector(alpha_p.shape(), std::move(w_sq)),
                            mul(tape, resid, resid)));
  return scale(tape, add(tape, l1, l2), 1.0 / static_cast<double>(count));
}

}  // namespace mattekit
