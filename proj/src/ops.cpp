#include "mattekit/ops.hpp"

#include <algorithm>
#include <cmath>

namespace mattekit {

namespace {

void require_4d(const Tensor& t, const char* op, const char* role) {
  if (t.shape().size() != 4)
    throw ConfigError(std::string(op) + ": " + role + " must be 4-D, got " + shape_str(t.shape()));
}

void require_finite(const Tensor& t, const char* op, const char* role) {
  if (!all_finite(t.values()))
    throw NumericError(std::string(op) + ": non-finite values in " + role);
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ConfigError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                      shape_str(b.shape()));
}

int conv_out_size(int in, int pad, int dil, int k, int stride) {
  return (in + 2 * pad - dil * (k - 1) - 1) / stride + 1;
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight, const Tensor& bias,
              const Conv2dSpec& spec) {
  require_4d(input, "conv2d", "input");
  require_4d(weight, "conv2d", "weight");
  const int n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int cout = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != cin)
    throw ConfigError("conv2d: weight expects " + std::to_string(weight.dim(1)) +
                      " input channels, input has " + std::to_string(cin));
  if (weight.dim(2) != weight.dim(3)) throw ConfigError("conv2d: kernel must be square");
  if (k < 1 || spec.stride < 1 || spec.dilation < 1)
    throw ConfigError("conv2d: kernel, stride and dilation must be >= 1");
  if (bias.defined() && (bias.shape().size() != 1 || bias.dim(0) != cout))
    throw ConfigError("conv2d: bias must have shape [" + std::to_string(cout) + "]");
  const int oh = conv_out_size(h, spec.padding, spec.dilation, k, spec.stride);
  const int ow = conv_out_size(w, spec.padding, spec.dilation, k, spec.stride);
  if (oh < 1 || ow < 1)
    throw ConfigError("conv2d: effective kernel does not fit padded input " + shape_str(input.shape()));
  require_finite(input, "conv2d", "input");
  require_finite(weight, "conv2d", "weight");
  if (bias.defined()) require_finite(bias, "conv2d", "bias");

  const bool needs_grad =
      input.requires_grad() || weight.requires_grad() || (bias.defined() && bias.requires_grad());
  Tensor out = Tensor::zeros({n, cout, oh, ow}, needs_grad);

  const bool repl = spec.pad_mode == PadMode::Replicate;
  const double* x = input.values().data();
  const double* wv = weight.values().data();
  double* y = out.values().data();
  for (int bi = 0; bi < n; ++bi) {
    for (int co = 0; co < cout; ++co) {
      const double b = bias.defined() ? bias.values()[static_cast<size_t>(co)] : 0.0;
      for (int yo = 0; yo < oh; ++yo) {
        for (int xo = 0; xo < ow; ++xo) {
          double acc = b;
          for (int ci = 0; ci < cin; ++ci) {
            const double* xp = x + (((int64_t)bi * cin + ci) * h) * w;
            const double* wp = wv + (((int64_t)co * cin + ci) * k) * k;
            for (int kh = 0; kh < k; ++kh) {
              int yi = yo * spec.stride - spec.padding + kh * spec.dilation;
              if (repl) yi = clampi(yi, 0, h - 1);
              else if (yi < 0 || yi >= h) continue;
              for (int kw = 0; kw < k; ++kw) {
                int xi = xo * spec.stride - spec.padding + kw * spec.dilation;
                if (repl) xi = clampi(xi, 0, w - 1);
                else if (xi < 0 || xi >= w) continue;
                acc += wp[kh * k + kw] * xp[(int64_t)yi * w + xi];
              }
            }
          }
          y[(((int64_t)bi * cout + co) * oh + yo) * ow + xo] = acc;
        }
      }
    }
  }

  if (needs_grad) {
    std::vector<Tensor> inputs{input, weight};
    if (bias.defined()) inputs.push_back(bias);
    tape.record(std::move(inputs), out,
                [input, weight, bias, out, spec, n, cin, cout, h, w, k, oh, ow, repl] {
      const double* go = out.grad().data();
      const double* x = input.values().data();
      const double* wv = weight.values().data();
      double* gx = input.requires_grad() ? input.grad().data() : nullptr;
      double* gw = weight.requires_grad() ? weight.grad().data() : nullptr;
      double* gb = (bias.defined() && bias.requires_grad()) ? bias.grad().data() : nullptr;
      for (int bi = 0; bi < n; ++bi) {
        for (int co = 0; co < cout; ++co) {
          for (int yo = 0; yo < oh; ++yo) {
            for (int xo = 0; xo < ow; ++xo) {
              const double g = go[(((int64_t)bi * cout + co) * oh + yo) * ow + xo];
              if (g == 0.0) continue;
              if (gb) gb[co] += g;
              for (int ci = 0; ci < cin; ++ci) {
                const int64_t xbase = (((int64_t)bi * cin + ci) * h) * w;
                const int64_t wbase = (((int64_t)co * cin + ci) * k) * k;
                for (int kh = 0; kh < k; ++kh) {
                  int yi = yo * spec.stride - spec.padding + kh * spec.dilation;
                  if (repl) yi = clampi(yi, 0, h - 1);
                  else if (yi < 0 || yi >= h) continue;
                  for (int kw = 0; kw < k; ++kw) {
                    int xi = xo * spec.stride - spec.padding + kw * spec.dilation;
                    if (repl) xi = clampi(xi, 0, w - 1);
                    else if (xi < 0 || xi >= w) continue;
                    if (gx) gx[xbase + (int64_t)yi * w + xi] += g * wv[wbase + kh * k + kw];
                    if (gw) gw[wbase + kh * k + kw] += g * x[xbase + (int64_t)yi * w + xi];
                  }
                }
              }
            }
          }
        }
      }
    });
  }
  return out;
}

Tensor transposed_conv2d(Tape& tape, const Tensor& input, const Tensor& weight,
                         const Tensor& bias, int stride, int padding) {
  require_4d(input, "transposed_conv2d", "input");
  require_4d(weight, "transposed_conv2d", "weight");
  const int n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int cout = weight.dim(1), k = weight.dim(2);
  if (weight.dim(0) != cin)
    throw ConfigError("transposed_conv2d: weight expects " + std::to_string(weight.dim(0)) +
                      " input channels, input has " + std::to_string(cin));
  if (weight.dim(2) != weight.dim(3)) throw ConfigError("transposed_conv2d: kernel must be square");
  const int oh = (h - 1) * stride - 2 * padding + k;
  const int ow = (w - 1) * stride - 2 * padding + k;
  if (oh != stride * h || ow != stride * w)
    throw ConfigError("transposed_conv2d: kernel " + std::to_string(k) + ", stride " +
                      std::to_string(stride) + ", padding " + std::to_string(padding) +
                      " does not scale spatial size by exactly " + std::to_string(stride));
  if (bias.defined() && (bias.shape().size() != 1 || bias.dim(0) != cout))
    throw ConfigError("transposed_conv2d: bias must have shape [" + std::to_string(cout) + "]");
  require_finite(input, "transposed_conv2d", "input");
  require_finite(weight, "transposed_conv2d", "weight");

  const bool needs_grad =
      input.requires_grad() || weight.requires_grad() || (bias.defined() && bias.requires_grad());
  Tensor out = Tensor::zeros({n, cout, oh, ow}, needs_grad);

  const double* x = input.values().data();
  const double* wv = weight.values().data();
  double* y = out.values().data();
  if (bias.defined()) {
    for (int bi = 0; bi < n; ++bi)
      for (int co = 0; co < cout; ++co)
        for (int64_t i = 0; i < (int64_t)oh * ow; ++i)
          y[(((int64_t)bi * cout + co) * oh) * ow + i] = bias.values()[static_cast<size_t>(co)];
  }
  for (int bi = 0; bi < n; ++bi) {
    for (int ci = 0; ci < cin; ++ci) {
      const double* xp = x + (((int64_t)bi * cin + ci) * h) * w;
      for (int co = 0; co < cout; ++co) {
        const double* wp = wv + (((int64_t)ci * cout + co) * k) * k;
        double* yp = y + (((int64_t)bi * cout + co) * oh) * ow;
        for (int yi = 0; yi < h; ++yi) {
          for (int xi = 0; xi < w; ++xi) {
            const double v = xp[(int64_t)yi * w + xi];
            if (v == 0.0) continue;
            for (int kh = 0; kh < k; ++kh) {
              const int yo = yi * stride - padding + kh;
              if (yo < 0 || yo >= oh) continue;
              for (int kw = 0; kw < k; ++kw) {
                const int xo = xi * stride - padding + kw;
                if (xo < 0 || xo >= ow) continue;
                yp[(int64_t)yo * ow + xo] += v * wp[kh * k + kw];
              }
            }
          }
        }
      }
    }
  }

  if (needs_grad) {
    std::vector<Tensor> inputs{input, weight};
    if (bias.defined()) inputs.push_back(bias);
    tape.record(std::move(inputs), out,
                [input, weight, bias, out, stride, padding, n, cin, cout, h, w, k, oh, ow] {
      const double* go = out.grad().data();
      const double* x = input.values().data();
      const double* wv = weight.values().data();
      double* gx = input.requires_grad() ? input.grad().data() : nullptr;
      double* gw = weight.requires_grad() ? weight.grad().data() : nullptr;
      double* gb = (bias.defined() && bias.requires_grad()) ? bias.grad().data() : nullptr;
      if (gb) {
        for (int bi = 0; bi < n; ++bi)
          for (int co = 0; co < cout; ++co)
            for (int64_t i = 0; i < (int64_t)oh * ow; ++i)
              gb[co] += go[(((int64_t)bi * cout + co) * oh) * ow + i];
      }
      for (int bi = 0; bi < n; ++bi) {
        for (int ci = 0; ci < cin; ++ci) {
          const int64_t xbase = (((int64_t)bi * cin + ci) * h) * w;
          for (int co = 0; co < cout; ++co) {
            const int64_t wbase = (((int64_t)ci * cout + co) * k) * k;
            const double* gp = go + (((int64_t)bi * cout + co) * oh) * ow;
            for (int yi = 0; yi < h; ++yi) {
              for (int xi = 0; xi < w; ++xi) {
                double acc = 0.0;
                for (int kh = 0; kh < k; ++kh) {
                  const int yo = yi * stride - padding + kh;
                  if (yo < 0 || yo >= oh) continue;
                  for (int kw = 0; kw < k; ++kw) {
                    const int xo = xi * stride - padding + kw;
                    if (xo < 0 || xo >= ow) continue;
                    const double g = gp[(int64_t)yo * ow + xo];
                    acc += g * wv[wbase + kh * k + kw];
                    if (gw) gw[wbase + kh * k + kw] += g * x[xbase + (int64_t)yi * w + xi];
                  }
                }
                if (gx) gx[xbase + (int64_t)yi * w + xi] += acc;
              }
            }
          }
        }
      }
    });
  }
  return out;
}

Tensor nearest_upsample2x_weight(int channels) {
  // Separable [0,1,1,0] profile per axis; identity across channels.
  Tensor w = Tensor::zeros({channels, channels, 4, 4});
  for (int c = 0; c < channels; ++c)
    for (int kh = 1; kh <= 2; ++kh)
      for (int kw = 1; kw <= 2; ++kw)
        w.values()[(((size_t)c * channels + c) * 4 + kh) * 4 + kw] = 1.0;
  return w;
}

namespace {

template <typename Fwd, typename Bwd>
Tensor binary_pointwise(Tape& tape, const char* name, const Tensor& a, const Tensor& b,
                        Fwd fwd, Bwd bwd) {
  require_same_shape(name, a, b);
  const bool needs_grad = a.requires_grad() || b.requires_grad();
  Tensor out = Tensor::zeros(a.shape(), needs_grad);
  const size_t count = a.values().size();
  for (size_t i = 0; i < count; ++i) out.values()[i] = fwd(a.values()[i], b.values()[i]);
  if (needs_grad) {
    tape.record({a, b}, out, [a, b, out, bwd, count] {
      const double* go = out.grad().data();
      double* ga = a.requires_grad() ? a.grad().data() : nullptr;
      double* gb = b.requires_grad() ? b.grad().data() : nullptr;
      for (size_t i = 0; i < count; ++i) {
        auto [da, db] = bwd(a.values()[i], b.values()[i]);
        if (ga) ga[i] += go[i] * da;
        if (gb) gb[i] += go[i] * db;
      }
    });
  }
  return out;
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_pointwise(tape, "add", a, b, [](double x, double y) { return x + y; },
                          [](double, double) { return std::pair<double, double>{1.0, 1.0}; });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_pointwise(tape, "sub", a, b, [](double x, double y) { return x - y; },
                          [](double, double) { return std::pair<double, double>{1.0, -1.0}; });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_pointwise(tape, "mul", a, b, [](double x, double y) { return x * y; },
                          [](double x, double y) { return std::pair<double, double>{y, x}; });
}

Tensor relu(Tape& tape, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
  const size_t count = x.values().size();
  for (size_t i = 0; i < count; ++i) out.values()[i] = x.values()[i] > 0.0 ? x.values()[i] : 0.0;
  if (x.requires_grad()) {
    tape.record({x}, out, [x, out, count] {
      const auto& go = out.grad();
      auto& gx = x.grad();
      for (size_t i = 0; i < count; ++i)
        if (x.values()[i] > 0.0) gx[i] += go[i];
    });
  }
  return out;
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
  const size_t count = x.values().size();
  for (size_t i = 0; i < count; ++i) {
    const double v = x.values()[i];
    // Split by sign so exp never overflows.
    out.values()[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  if (x.requires_grad()) {
    tape.record({x}, out, [x, out, count] {
      const auto& go = out.grad();
      auto& gx = x.grad();
      for (size_t i = 0; i < count; ++i) {
        const double y = out.values()[i];
        gx[i] += go[i] * y * (1.0 - y);
      }
    });
  }
  return out;
}

Tensor charbonnier(Tape& tape, const Tensor& x, double eps) {
  Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
  const size_t count = x.values().size();
  for (size_t i = 0; i < count; ++i) {
    const double v = x.values()[i];
    out.values()[i] = std::sqrt(v * v + eps * eps);
  }
  if (x.requires_grad()) {
    tape.record({x}, out, [x, out, count] {
      const auto& go = out.grad();
      auto& gx = x.grad();
      for (size_t i = 0; i < count; ++i) gx[i] += go[i] * x.values()[i] / out.values()[i];
    });
  }
  return out;
}

Tensor sum(Tape& tape, const Tensor& x) {
  Tensor out = Tensor::zeros({1}, x.requires_grad());
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  out.values()[0] = acc;
  if (x.requires_grad()) {
    tape.record({x}, out, [x, out] {
      const double g = out.grad()[0];
      auto& gx = x.grad();
      for (double& gv : gx) gv += g;
    });
  }
  return out;
}

Tensor scale(Tape& tape, const Tensor& x, double c) {
  Tensor out = Tensor::zeros(x.shape(), x.requires_grad());
  const size_t count = x.values().size();
  for (size_t i = 0; i < count; ++i) out.values()[i] = x.values()[i] * c;
  if (x.requires_grad()) {
    tape.record({x}, out, [x, out, c, count] {
      const auto& go = out.grad();
      auto& gx = x.grad();
      for (size_t i = 0; i < count; ++i) gx[i] += go[i] * c;
    });
  }
  return out;
}

Tensor mean(Tape& tape, const Tensor& x) {
  return scale(tape, sum(tape, x), 1.0 / static_cast<double>(x.size()));
}

Tensor concat_channels(Tape& tape, const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ConfigError("concat_channels: no inputs");
  for (const Tensor& t : xs) require_4d(t, "concat_channels", "input");
  const int n = xs[0].dim(0), h = xs[0].dim(2), w = xs[0].dim(3);
  int ctotal = 0;
  bool needs_grad = false;
  for (const Tensor& t : xs) {
    if (t.dim(0) != n || t.dim(2) != h || t.dim(3) != w)
      throw ConfigError("concat_channels: inputs disagree on batch or spatial size");
    ctotal += t.dim(1);
    needs_grad = needs_grad || t.requires_grad();
  }
  Tensor out = Tensor::zeros({n, ctotal, h, w}, needs_grad);
  const int64_t hw = (int64_t)h * w;
  int coff = 0;
  for (const Tensor& t : xs) {
    const int c = t.dim(1);
    for (int bi = 0; bi < n; ++bi)
      std::copy_n(t.values().data() + (int64_t)bi * c * hw, c * hw,
                  out.values().data() + ((int64_t)bi * ctotal + coff) * hw);
    coff += c;
  }
  if (needs_grad) {
    tape.record(xs, out, [xs, out, n, ctotal, hw] {
      const double* go = out.grad().data();
      int coff = 0;
      for (const Tensor& t : xs) {
        const int c = t.dim(1);
        if (t.requires_grad()) {
          double* gt = t.grad().data();
          for (int bi = 0; bi < n; ++bi) {
            const double* src = go + ((int64_t)bi * ctotal + coff) * hw;
            double* dst = gt + (int64_t)bi * c * hw;
            for (int64_t i = 0; i < c * hw; ++i) dst[i] += src[i];
          }
        }
        coff += c;
      }
    });
  }
  return out;
}

Tensor global_avg_pool(Tape& tape, const Tensor& x) {
  require_4d(x, "global_avg_pool", "input");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor out = Tensor::zeros({n, c, 1, 1}, x.requires_grad());
  const int64_t hw = (int64_t)h * w;
  for (int64_t nc = 0; nc < (int64_t)n * c; ++nc) {
    double acc = 0.0;
    for (int64_t i = 0; i < hw; ++i) acc += x.values()[nc * hw + i];
    out.values()[static_cast<size_t>(nc)] = acc / static_cast<double>(hw);
  }
  if (x.requires_grad()) {
    tape.record({x}, out, [x, out, n, c, hw] {
      const auto& go = out.grad();
      auto& gx = x.grad();
      for (int64_t nc = 0; nc < (int64_t)n * c; ++nc) {
        const double g = go[static_cast<size_t>(nc)] / static_cast<double>(hw);
        for (int64_t i = 0; i < hw; ++i) gx[nc * hw + i] += g;
      }
    });
  }
  return out;
}

Tensor broadcast_spatial(Tape& tape, const Tensor& x, int h, int w) {
  require_4d(x, "broadcast_spatial", "input");
  if (x.dim(2) != 1 || x.dim(3) != 1)
    throw ConfigError("broadcast_spatial: input spatial size must be 1×1, got " +
                      shape_str(x.shape()));
  const int n = x.dim(0), c = x.dim(1);
  Tensor out = Tensor::zeros({n, c, h, w}, x.requires_grad());
  const int64_t hw = (int64_t)h * w;
  for (int64_t nc = 0; nc < (int64_t)n * c; ++nc)
    for (int64_t i = 0; i < hw; ++i)
      out.values()[nc * hw + i] = x.values()[static_cast<size_t>(nc)];
  if (x.requires_grad()) {
    tape.record({x}, out, [x, out, n, c, hw] {
      const auto& go = out.grad();
      auto& gx = x.grad();
      for (int64_t nc = 0; nc < (int64_t)n * c; ++nc) {
        double acc = 0.0;
        for (int64_t i = 0; i < hw; ++i) acc += go[nc * hw + i];
        gx[static_cast<size_t>(nc)] += acc;
      }
    });
  }
  return out;
}

Tensor channel_affine(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  require_4d(x, "channel_affine", "input");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (gamma.shape() != Shape{c} || beta.shape() != Shape{c})
    throw ConfigError("channel_affine: gamma/beta must have shape [" + std::to_string(c) + "]");
  const bool needs_grad = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
  Tensor out = Tensor::zeros(x.shape(), needs_grad);
  const int64_t hw = (int64_t)h * w;
  for (int bi = 0; bi < n; ++bi)
    for (int ci = 0; ci < c; ++ci) {
      const double g = gamma.values()[static_cast<size_t>(ci)];
      const double b = beta.values()[static_cast<size_t>(ci)];
      const int64_t base = ((int64_t)bi * c + ci) * hw;
      for (int64_t i = 0; i < hw; ++i) out.values()[base + i] = x.values()[base + i] * g + b;
    }
  if (needs_grad) {
    tape.record({x, gamma, beta}, out, [x, gamma, beta, out, n, c, hw] {
      const double* go = out.grad().data();
      const double* xv = x.values().data();
      double* gx = x.requires_grad() ? x.grad().data() : nullptr;
      double* ggamma = gamma.requires_grad() ? gamma.grad().data() : nullptr;
      double* gbeta = beta.requires_grad() ? beta.grad().data() : nullptr;
      for (int bi = 0; bi < n; ++bi)
        for (int ci = 0; ci < c; ++ci) {
          const int64_t base = ((int64_t)bi * c + ci) * hw;
          const double g = gamma.values()[static_cast<size_t>(ci)];
          double dgamma = 0.0, dbeta = 0.0;
          for (int64_t i = 0; i < hw; ++i) {
            const double gr = go[base + i];
            if (gx) gx[base + i] += gr * g;
            dgamma += gr * xv[base + i];
            dbeta += gr;
          }
          if (ggamma) ggamma[ci] += dgamma;
          if (gbeta) gbeta[ci] += dbeta;
        }
    });
  }
  return out;
}

}  // namespace mattekit
