#pragma once

#include "mattekit/tensor.hpp"

namespace mattekit {

enum class PadMode { Zero, Replicate };

struct Conv2dSpec {
  int stride = 1;
  int padding = 0;
  int dilation = 1;
  PadMode pad_mode = PadMode::Zero;
};

// input N×Cin×H×W, weight Cout×Cin×k×k, bias Cout (or undefined for none).
// H' = floor((H + 2p - d(k-1) - 1)/stride) + 1, same for W'.
Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
              const Conv2dSpec& spec = {});

// input N×Cin×H×W, weight Cin×Cout×k×k, bias Cout (or undefined).
// Output spatial size (H-1)*stride - 2*padding + k must equal stride*H
// (exact integer upsampling); the k=4, stride=2, padding=1 default doubles.
Tensor transposed_conv2d(Tape& tape, const Tensor& input, const Tensor& weight,
                         const Tensor& bias, int stride = 2, int padding = 1);

// Fixed weight for transposed_conv2d(stride=2, padding=1) that paints each
// input pixel into a 2×2 block: exact nearest-neighbor ×2 upsampling.
Tensor nearest_upsample2x_weight(int channels);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor relu(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);

// Smooth absolute value sqrt(x^2 + eps^2); gradient x/sqrt(x^2+eps^2).
Tensor charbonnier(Tape& tape, const Tensor& x, double eps);

Tensor sum(Tape& tape, const Tensor& x);               // scalar
Tensor scale(Tape& tape, const Tensor& x, double c);   // c is a constant
Tensor mean(Tape& tape, const Tensor& x);               // sum / numel

// All inputs N×Ci×H×W with matching N, H, W; concatenates on channels.
Tensor concat_channels(Tape& tape, const std::vector<Tensor>& xs);

Tensor global_avg_pool(Tape& tape, const Tensor& x);            // N×C×1×1
Tensor broadcast_spatial(Tape& tape, const Tensor& x, int h, int w);  // from N×C×1×1

// y[n,c,h,w] = x[n,c,h,w] * gamma[c] + beta[c]; per-channel affine used in
// place of batch normalization (no running statistics).
Tensor channel_affine(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta);

}  // namespace mattekit
