#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mxp/layers.hpp"
#include "mxp/maxplus.hpp"
#include "mxp/pruning.hpp"
#include "mxp/tensor.hpp"

namespace mxp {

// The five architectures spanned by the experiments: the max-plus MLP, its
// two shallow baselines, and the two CNN variants.
enum class Arch {
  MaxplusMlp,
  SoftmaxLinear,
  MaxoutLinear,
  CnnMaxplus,
  CnnPlain,
};

inline std::string arch_name(Arch a) {
  switch (a) {
    case Arch::MaxplusMlp: return "maxplus-mlp";
    case Arch::SoftmaxLinear: return "softmax-linear";
    case Arch::MaxoutLinear: return "maxout-linear";
    case Arch::CnnMaxplus: return "cnn-maxplus";
    case Arch::CnnPlain: return "cnn-plain";
  }
  throw ArgumentError("unknown architecture");
}

inline Arch arch_from_name(const std::string& s) {
  if (s == "maxplus-mlp") return Arch::MaxplusMlp;
  if (s == "softmax-linear") return Arch::SoftmaxLinear;
  if (s == "maxout-linear") return Arch::MaxoutLinear;
  if (s == "cnn-maxplus") return Arch::CnnMaxplus;
  if (s == "cnn-plain") return Arch::CnnPlain;
  throw ArgumentError("unknown architecture: " + s);
}

// CNN trunk channel widths (the fc sizes are fixed by the architecture table;
// channel counts are a pinned choice).
inline constexpr std::size_t kConv1Channels = 32;
inline constexpr std::size_t kConv2Channels = 64;
inline constexpr std::size_t kFc1Units = 384;
inline constexpr std::size_t kFc2Units = 192;
inline constexpr std::size_t kClasses = 10;

struct Model {
  Arch arch = Arch::MaxplusMlp;
  std::size_t maxout_group = 2;

  // input geometry
  std::size_t channels = 1, rows = 28, cols = 28;

  // shallow family
  Tensor wf;  // I×J (maxplus), I×10 (softmax), I×(10·g) (maxout)
  Tensor wm;  // J×10 max-plus weights; also the cnn-maxplus head (192×10)

  // cnn trunk: conv(5×5) → maxpool → conv(5×5) → maxpool → fc → fc → head
  Tensor conv1;  // 32×C×5×5
  Tensor conv2;  // 64×32×5×5
  Tensor fc1;    // flatten×384
  Tensor fc2;    // 384×192
  Tensor fc3;    // 192×10, cnn-plain head

  // When set, the final (dense + max-plus) pair is replaced by the pruned
  // uneven-group head.
  std::optional<PrunedHead> pruned_head;

  std::size_t input_dim() const { return channels * rows * cols; }
  bool is_cnn() const { return arch == Arch::CnnMaxplus || arch == Arch::CnnPlain; }

  MaxPlusBlock head_block() const {
    if (arch == Arch::MaxplusMlp) return MaxPlusBlock{wf, wm};
    if (arch == Arch::CnnMaxplus) return MaxPlusBlock{fc2, wm};
    throw ArgumentError("head_block: architecture has no max-plus head");
  }
};

inline Tensor glorot_uniform(SeededRng& rng, std::size_t fan_in,
                             std::size_t fan_out,
                             std::vector<std::size_t> shape) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return seeded_uniform(rng, std::move(shape), -bound, bound);
}

// All parameters are a pure function of the rng state: wf and conv kernels
// Glorot-uniform, wm uniform in [-0.05, 0.05].
inline Model init_model(Arch arch, std::size_t channels, std::size_t rows,
                        std::size_t cols, std::size_t units_J,
                        std::size_t maxout_group, SeededRng& rng) {
  Model m;
  m.arch = arch;
  m.maxout_group = maxout_group;
  m.channels = channels;
  m.rows = rows;
  m.cols = cols;
  const std::size_t I = m.input_dim();
  switch (arch) {
    case Arch::MaxplusMlp:
      m.wf = glorot_uniform(rng, I, units_J, {I, units_J});
      m.wm = seeded_uniform(rng, {units_J, kClasses}, -0.05, 0.05);
      break;
    case Arch::SoftmaxLinear:
      m.wf = glorot_uniform(rng, I, kClasses, {I, kClasses});
      break;
    case Arch::MaxoutLinear: {
      if (maxout_group == 0) throw ArgumentError("maxout group must be positive");
      const std::size_t J = kClasses * maxout_group;
      m.wf = glorot_uniform(rng, I, J, {I, J});
      break;
    }
    case Arch::CnnMaxplus:
    case Arch::CnnPlain: {
      if (rows % 4 != 0 || cols % 4 != 0) {
        throw DimensionError("cnn architectures require H, W divisible by 4");
      }
      const std::size_t fan1 = channels * 25, fan2 = kConv1Channels * 25;
      m.conv1 = glorot_uniform(rng, fan1, kConv1Channels * 25,
                               {kConv1Channels, channels, 5, 5});
      m.conv2 = glorot_uniform(rng, fan2, kConv2Channels * 25,
                               {kConv2Channels, kConv1Channels, 5, 5});
      const std::size_t flat = kConv2Channels * (rows / 4) * (cols / 4);
      m.fc1 = glorot_uniform(rng, flat, kFc1Units, {flat, kFc1Units});
      m.fc2 = glorot_uniform(rng, kFc1Units, kFc2Units, {kFc1Units, kFc2Units});
      if (arch == Arch::CnnPlain) {
        m.fc3 = glorot_uniform(rng, kFc2Units, kClasses, {kFc2Units, kClasses});
      } else {
        m.wm = seeded_uniform(rng, {kFc2Units, kClasses}, -0.05, 0.05);
      }
      break;
    }
  }
  return m;
}

// Forward activations kept for the backward pass.
struct ForwardTrace {
  // cnn trunk
  Tensor x4;  // input as B×C×H×W
  Tensor c1, p1r, c2, p2r;        // conv outputs and relu'd pools
  MaxPoolResult p1, p2;
  Tensor flat, f1, f1r, f2, f2r;  // dense trunk activations
  // shallow / head
  Tensor y;            // pre-head dense output
  IndexArray winners;  // max-plus or maxout winners
  Tensor logits;
};

// Full forward pass; mask (if any) applies to the max-plus head only.
inline Tensor model_forward(const Model& m, const Tensor& x,
                            const DropMask* mask = nullptr,
                            ForwardTrace* trace = nullptr) {
  ForwardTrace local;
  ForwardTrace& t = trace ? *trace : local;

  const Tensor* head_in = &x;
  if (m.is_cnn()) {
    t.x4 = x.reshaped({x.dim(0), m.channels, m.rows, m.cols});
    t.c1 = conv2d_forward(t.x4, {m.conv1, 1, 2});
    t.p1 = maxpool2x2_forward(t.c1);
    t.p1r = relu_forward(t.p1.out);
    t.c2 = conv2d_forward(t.p1r, {m.conv2, 1, 2});
    t.p2 = maxpool2x2_forward(t.c2);
    t.p2r = relu_forward(t.p2.out);
    t.flat = t.p2r.reshaped({x.dim(0), t.p2r.size() / x.dim(0)});
    t.f1 = dense_forward(t.flat, m.fc1);
    t.f1r = relu_forward(t.f1);
    if (m.pruned_head) {
      // The pruned head replaces the (fc2 + max-plus) pair, so it consumes
      // the 384-unit activation directly.
      t.logits = pruned_forward(t.f1r, *m.pruned_head);
      return t.logits;
    }
    t.f2 = dense_forward(t.f1r, m.fc2);
    if (m.arch == Arch::CnnMaxplus) {
      // The max-plus head sits directly on the dense output; no activation in
      // between, so the block keeps its exact dilation form.
      head_in = &t.f2;
    } else {
      t.f2r = relu_forward(t.f2);
      head_in = &t.f2r;
    }
  }

  if (m.pruned_head) {
    t.logits = pruned_forward(x, *m.pruned_head);
    return t.logits;
  }

  switch (m.arch) {
    case Arch::MaxplusMlp:
    case Arch::CnnMaxplus: {
      if (m.arch == Arch::MaxplusMlp) {
        t.y = dense_forward(x, m.wf);
      } else {
        t.y = *head_in;  // cnn: the 192-unit dense output feeds the head
      }
      MaxPlusOut out = maxplus_forward(t.y, m.wm, mask);
      t.winners = std::move(out.winners);
      t.logits = std::move(out.z);
      break;
    }
    case Arch::SoftmaxLinear:
      t.logits = dense_forward(x, m.wf);
      break;
    case Arch::MaxoutLinear: {
      t.y = dense_forward(x, m.wf);
      MaxoutOut out = maxout_forward(t.y, m.maxout_group);
      t.winners = std::move(out.winners);
      t.logits = std::move(out.z);
      break;
    }
    case Arch::CnnPlain:
      t.logits = dense_forward(*head_in, m.fc3);
      break;
  }
  return t.logits;
}

struct ModelGrads {
  Tensor wf, wm, conv1, conv2, fc1, fc2, fc3;
};

// Backward through the whole model given d(loss)/d(logits).
inline ModelGrads model_backward(const Model& m, const Tensor& x,
                                 const ForwardTrace& t,
                                 const Tensor& grad_logits) {
  if (m.pruned_head) {
    throw ArgumentError("model_backward: pruned models are inference-only");
  }
  ModelGrads g;
  Tensor grad_head_in;  // gradient wrt the head's input activation

  switch (m.arch) {
    case Arch::MaxplusMlp: {
      MaxPlusGrads mg = maxplus_backward(grad_logits, t.winners, m.wf.dim(1));
      g.wm = std::move(mg.grad_wm);
      g.wf = matmul_at(x, mg.grad_y);  // input gradient not needed
      return g;
    }
    case Arch::SoftmaxLinear:
      g.wf = matmul_at(x, grad_logits);
      return g;
    case Arch::MaxoutLinear: {
      Tensor gy = maxout_backward(grad_logits, t.winners, m.wf.dim(1));
      g.wf = matmul_at(x, gy);
      return g;
    }
    case Arch::CnnMaxplus: {
      MaxPlusGrads mg = maxplus_backward(grad_logits, t.winners, kFc2Units);
      g.wm = std::move(mg.grad_wm);
      grad_head_in = std::move(mg.grad_y);
      break;
    }
    case Arch::CnnPlain: {
      DenseGrads dg = dense_backward(t.f2r, m.fc3, grad_logits);
      g.fc3 = std::move(dg.grad_w);
      grad_head_in = std::move(dg.grad_x);
      break;
    }
  }

  // shared cnn trunk
  Tensor gf2 = m.arch == Arch::CnnMaxplus ? std::move(grad_head_in)
                                          : relu_backward(t.f2, grad_head_in);
  DenseGrads d2 = dense_backward(t.f1r, m.fc2, gf2);
  g.fc2 = std::move(d2.grad_w);
  Tensor gf1 = relu_backward(t.f1, d2.grad_x);
  DenseGrads d1 = dense_backward(t.flat, m.fc1, gf1);
  g.fc1 = std::move(d1.grad_w);
  Tensor gflat = d1.grad_x.reshaped(t.p2r.shape());
  Tensor gp2 = relu_backward(t.p2.out, gflat);
  Tensor gc2 = maxpool2x2_backward(t.c2.shape(), t.p2.winners, gp2);
  ConvGrads cg2 = conv2d_backward(t.p1r, {m.conv2, 1, 2}, gc2);
  g.conv2 = std::move(cg2.grad_k);
  Tensor gp1 = relu_backward(t.p1.out, cg2.grad_x);
  Tensor gc1 = maxpool2x2_backward(t.c1.shape(), t.p1.winners, gp1);
  ConvGrads cg1 = conv2d_backward(t.x4, {m.conv1, 1, 2}, gc1);
  g.conv1 = std::move(cg1.grad_k);
  return g;
}

struct CnnPruneResult {
  Model pruned;
  PruneReport report;
  double reduction = 0.0;  // 1 - J_r / 192 on the second-last fc layer
};

// Prunes the max-plus head of a cnn-maxplus model: the 192-unit dense layer
// shrinks to the retained filters, the head becomes uneven groups.
inline CnnPruneResult prune_cnn_head(const Model& m, double s) {
  if (m.arch != Arch::CnnMaxplus || m.pruned_head) {
    throw ArgumentError("prune_cnn_head: expects an unpruned cnn-maxplus model");
  }
  CnnPruneResult r;
  MaxPlusBlock head{m.fc2, m.wm};
  PrunedHead pruned = prune_block(head, s, &r.report);
  r.reduction = 1.0 - static_cast<double>(pruned.retained_count()) / kFc2Units;
  r.pruned = m;
  r.pruned.pruned_head = std::move(pruned);
  return r;
}

}  // namespace mxp
