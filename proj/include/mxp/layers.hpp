#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mxp/tensor.hpp"

namespace mxp {

// Dense layer, bias-free. y = x * w with x: B×I, w: I×J.
inline Tensor dense_forward(const Tensor& x, const Tensor& w) {
  return matmul(x, w);
}

struct DenseGrads {
  Tensor grad_x;  // B×I
  Tensor grad_w;  // I×J
};

inline DenseGrads dense_backward(const Tensor& x, const Tensor& w,
                                 const Tensor& grad_y) {
  if (grad_y.rank() != 2 || grad_y.dim(0) != x.dim(0) ||
      grad_y.dim(1) != w.dim(1)) {
    throw DimensionError("dense_backward: grad shape mismatch");
  }
  return {matmul_bt(grad_y, w), matmul_at(x, grad_y)};
}

inline Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::max(0.0, y[i]);
  return y;
}

// Subgradient 0 at the kink.
inline Tensor relu_backward(const Tensor& x, const Tensor& grad) {
  if (!x.same_shape(grad)) throw DimensionError("relu_backward: shape mismatch");
  Tensor gx = grad;
  for (std::size_t i = 0; i < gx.size(); ++i) {
    if (x[i] <= 0.0) gx[i] = 0.0;
  }
  return gx;
}

struct ConvParams {
  Tensor kernels;       // outC×inC×kH×kW
  std::size_t stride = 1;
  std::size_t padding = 0;
};

namespace detail {
inline std::size_t conv_out_dim(std::size_t in, std::size_t k, std::size_t s,
                                std::size_t p) {
  const std::size_t padded = in + 2 * p;
  if (padded < k) throw DimensionError("conv2d: kernel larger than padded input");
  return (padded - k) / s + 1;
}
}  // namespace detail

// Cross-correlation (no kernel flip), explicit zero padding.
inline Tensor conv2d_forward(const Tensor& x, const ConvParams& p) {
  if (x.rank() != 4 || p.kernels.rank() != 4) {
    throw DimensionError("conv2d: expects B×C×H×W input and O×C×kH×kW kernels");
  }
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = p.kernels.dim(0), kH = p.kernels.dim(2),
                    kW = p.kernels.dim(3);
  if (p.kernels.dim(1) != C) throw DimensionError("conv2d: channel mismatch");
  const std::size_t oH = detail::conv_out_dim(H, kH, p.stride, p.padding);
  const std::size_t oW = detail::conv_out_dim(W, kW, p.stride, p.padding);

  Tensor y({B, O, oH, oW});
  const long pad = static_cast<long>(p.padding);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < O; ++o) {
      for (std::size_t oh = 0; oh < oH; ++oh) {
        for (std::size_t ow = 0; ow < oW; ++ow) {
          double acc = 0.0;
          for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t r = 0; r < kH; ++r) {
              const long ih = static_cast<long>(oh * p.stride + r) - pad;
              if (ih < 0 || ih >= static_cast<long>(H)) continue;
              for (std::size_t s = 0; s < kW; ++s) {
                const long iw = static_cast<long>(ow * p.stride + s) - pad;
                if (iw < 0 || iw >= static_cast<long>(W)) continue;
                acc += x(b, c, ih, iw) * p.kernels(o, c, r, s);
              }
            }
          }
          y(b, o, oh, ow) = acc;
        }
      }
    }
  }
  return y;
}

struct ConvGrads {
  Tensor grad_x;
  Tensor grad_k;
};

inline ConvGrads conv2d_backward(const Tensor& x, const ConvParams& p,
                                 const Tensor& grad_y) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = p.kernels.dim(0), kH = p.kernels.dim(2),
                    kW = p.kernels.dim(3);
  const std::size_t oH = grad_y.dim(2), oW = grad_y.dim(3);
  if (grad_y.dim(0) != B || grad_y.dim(1) != O) {
    throw DimensionError("conv2d_backward: grad shape mismatch");
  }
  ConvGrads g{Tensor(x.shape()), Tensor(p.kernels.shape())};
  const long pad = static_cast<long>(p.padding);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < O; ++o) {
      for (std::size_t oh = 0; oh < oH; ++oh) {
        for (std::size_t ow = 0; ow < oW; ++ow) {
          const double gy = grad_y(b, o, oh, ow);
          if (gy == 0.0) continue;
          for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t r = 0; r < kH; ++r) {
              const long ih = static_cast<long>(oh * p.stride + r) - pad;
              if (ih < 0 || ih >= static_cast<long>(H)) continue;
              for (std::size_t s = 0; s < kW; ++s) {
                const long iw = static_cast<long>(ow * p.stride + s) - pad;
                if (iw < 0 || iw >= static_cast<long>(W)) continue;
                g.grad_x(b, c, ih, iw) += gy * p.kernels(o, c, r, s);
                g.grad_k(o, c, r, s) += gy * x(b, c, ih, iw);
              }
            }
          }
        }
      }
    }
  }
  return g;
}

struct MaxPoolResult {
  Tensor out;          // B×C×H/2×W/2
  IndexArray winners;  // flat (h*W+w) index of the winning cell per window
};

// Non-overlapping 2×2 max, ties to the lowest flat index.
inline MaxPoolResult maxpool2x2_forward(const Tensor& x) {
  if (x.rank() != 4) throw DimensionError("maxpool2x2: expects B×C×H×W");
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % 2 != 0 || W % 2 != 0) {
    throw DimensionError("maxpool2x2: spatial dims must be even");
  }
  MaxPoolResult r{Tensor({B, C, H / 2, W / 2}), {}};
  r.winners.shape = {B, C, H / 2, W / 2};
  r.winners.data.resize(r.out.size());
  std::size_t n = 0;
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t oh = 0; oh < H / 2; ++oh) {
        for (std::size_t ow = 0; ow < W / 2; ++ow) {
          double best = kNegInf;
          std::size_t best_flat = 0;
          for (std::size_t dh = 0; dh < 2; ++dh) {
            for (std::size_t dw = 0; dw < 2; ++dw) {
              const std::size_t h = 2 * oh + dh, w = 2 * ow + dw;
              const double v = x(b, c, h, w);
              if (v > best) {
                best = v;
                best_flat = h * W + w;
              }
            }
          }
          r.out[n] = best;
          r.winners.data[n] = best_flat;
          ++n;
        }
      }
    }
  }
  return r;
}

inline Tensor maxpool2x2_backward(const std::vector<std::size_t>& x_shape,
                                  const IndexArray& winners,
                                  const Tensor& grad) {
  Tensor gx(x_shape);
  const std::size_t W = x_shape[3];
  const std::size_t plane = x_shape[2] * W;
  const std::size_t C = x_shape[1];
  const std::size_t out_plane = grad.dim(2) * grad.dim(3);
  for (std::size_t n = 0; n < grad.size(); ++n) {
    const std::size_t bc = n / out_plane;  // combined (b,c) index
    const std::size_t flat = winners.data[n];
    if (flat >= plane) throw InternalError("maxpool winner out of range");
    gx[bc * plane + flat] += grad[n];
  }
  (void)C;
  return gx;
}

struct XentResult {
  double loss = 0.0;
  Tensor grad_logits;
};

// Mean softmax cross-entropy with log-sum-exp stabilization.
// grad = (softmax - onehot) / B.
inline XentResult softmax_xent(const Tensor& logits,
                               const std::vector<std::size_t>& labels) {
  if (logits.rank() != 2) throw DimensionError("softmax_xent: expects B×K");
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  if (labels.size() != B) throw DimensionError("softmax_xent: label count");
  XentResult r;
  r.grad_logits = Tensor({B, K});
  double total = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    if (labels[b] >= K) throw ArgumentError("softmax_xent: label out of range");
    const double* row = logits.data() + b * K;
    double mx = row[0];
    for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, row[k]);
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) sum += std::exp(row[k] - mx);
    const double lse = mx + std::log(sum);
    total += lse - row[labels[b]];
    for (std::size_t k = 0; k < K; ++k) {
      double p = std::exp(row[k] - lse);
      r.grad_logits(b, k) = (p - (k == labels[b] ? 1.0 : 0.0)) / B;
    }
  }
  r.loss = total / B;
  if (!std::isfinite(r.loss)) throw NumericFault("softmax_xent: non-finite loss");
  return r;
}

}  // namespace mxp
