#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mxp/tensor.hpp"

namespace mxp {

// A bias-free dense layer (wf, I×J) followed by a max-plus layer (wm, J×K).
struct MaxPlusBlock {
  Tensor wf;  // I×J, finite
  Tensor wm;  // J×K, finite or -inf; every column needs one finite entry

  std::size_t input_dim() const { return wf.dim(0); }
  std::size_t units() const { return wf.dim(1); }
  std::size_t classes() const { return wm.dim(1); }

  void validate() const {
    if (wf.rank() != 2 || wm.rank() != 2 || wf.dim(1) != wm.dim(0)) {
      throw DimensionError("MaxPlusBlock: wf is I×J and wm is J×K with matching J");
    }
    if (!wf.all_finite()) throw DomainError("MaxPlusBlock: wf must be finite");
    const std::size_t J = wm.dim(0), K = wm.dim(1);
    for (std::size_t k = 0; k < K; ++k) {
      bool any = false;
      for (std::size_t j = 0; j < J; ++j) {
        const double v = wm(j, k);
        if (!legal_value(v)) throw NumericFault("MaxPlusBlock: illegal wm entry");
        if (std::isfinite(v)) any = true;
      }
      if (!any) throw DegenerateError("MaxPlusBlock: wm column entirely -inf");
    }
  }
};

// Per-connection (j,k) dropout mask; true = active.
struct DropMask {
  std::size_t J = 0;
  std::size_t K = 0;
  double ratio = 0.0;
  std::vector<std::uint8_t> on;  // row-major J×K

  bool active(std::size_t j, std::size_t k) const { return on[j * K + k] != 0; }
};

struct MaxPlusOut {
  Tensor z;            // B×K
  IndexArray winners;  // B×K, winning j per output
};

// z[b,k] = max over active j of (y[b,j] + wm[j,k]); ties to lowest j.
// Dropped connections are excluded from the max entirely.
inline MaxPlusOut maxplus_forward(const Tensor& y, const Tensor& wm,
                                  const DropMask* mask = nullptr) {
  if (y.rank() != 2 || wm.rank() != 2 || y.dim(1) != wm.dim(0)) {
    throw DimensionError("maxplus_forward: y is B×J, wm is J×K");
  }
  const std::size_t B = y.dim(0), J = y.dim(1), K = wm.dim(1);
  if (mask && (mask->J != J || mask->K != K)) {
    throw DimensionError("maxplus_forward: mask shape mismatch");
  }
  MaxPlusOut r{Tensor({B, K}), {{B, K}, std::vector<std::size_t>(B * K)}};
  for (std::size_t b = 0; b < B; ++b) {
    const double* yr = y.data() + b * J;
    for (std::size_t k = 0; k < K; ++k) {
      double best = kNegInf;
      std::size_t best_j = J;
      for (std::size_t j = 0; j < J; ++j) {
        if (mask && !mask->active(j, k)) continue;
        const double w = wm(j, k);
        if (w == kNegInf) continue;
        const double v = yr[j] + w;
        if (best_j == J || v > best) {
          best = v;
          best_j = j;
        }
      }
      if (best_j == J) {
        throw DegenerateError("maxplus_forward: no active connection for column " +
                              std::to_string(k));
      }
      r.z(b, k) = best;
      r.winners.data[b * K + k] = best_j;
    }
  }
  return r;
}

struct MaxPlusGrads {
  Tensor grad_y;   // B×J
  Tensor grad_wm;  // J×K
};

// Subgradient: all of grad_z[b,k] flows to the winning j.
inline MaxPlusGrads maxplus_backward(const Tensor& grad_z,
                                     const IndexArray& winners,
                                     std::size_t J) {
  const std::size_t B = grad_z.dim(0), K = grad_z.dim(1);
  if (winners.data.size() != B * K) {
    throw DimensionError("maxplus_backward: winners shape mismatch");
  }
  MaxPlusGrads g{Tensor({B, J}), Tensor({J, K})};
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t j = winners.data[b * K + k];
      if (j >= J) throw InternalError("maxplus_backward: winner out of range");
      const double gz = grad_z(b, k);
      g.grad_y(b, j) += gz;
      g.grad_wm(j, k) += gz;
    }
  }
  return g;
}

// Bernoulli(1-ratio) per connection; an all-dropped column gets one
// uniformly chosen entry switched back on.
inline DropMask draw_connection_mask(SeededRng& rng, std::size_t J,
                                     std::size_t K, double ratio) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw ArgumentError("draw_connection_mask: ratio must be in [0,1)");
  }
  DropMask m{J, K, ratio, std::vector<std::uint8_t>(J * K, 1)};
  if (ratio == 0.0) return m;
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t k = 0; k < K; ++k) {
      m.on[j * K + k] = rng.bernoulli(1.0 - ratio) ? 1 : 0;
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    bool any = false;
    for (std::size_t j = 0; j < J; ++j) any = any || m.on[j * K + k];
    if (!any) m.on[rng.uniform_index(J) * K + k] = 1;
  }
  return m;
}

struct FilterSelection {
  std::vector<std::size_t> argmax_rows;  // j_max per class, size K
  Tensor filters;                        // I×K, column k = wf[:, argmax_rows[k]]
};

// For each class column of wm, the filter whose wm weight is largest.
inline FilterSelection select_filters(const MaxPlusBlock& block) {
  block.validate();
  const std::size_t I = block.input_dim(), J = block.units(),
                    K = block.classes();
  FilterSelection sel;
  sel.argmax_rows.resize(K);
  sel.filters = Tensor({I, K});
  for (std::size_t k = 0; k < K; ++k) {
    double best = kNegInf;
    std::size_t best_j = J;
    for (std::size_t j = 0; j < J; ++j) {
      const double v = block.wm(j, k);
      if (v == kNegInf) continue;
      if (best_j == J || v > best) {
        best = v;
        best_j = j;
      }
    }
    sel.argmax_rows[k] = best_j;
    for (std::size_t i = 0; i < I; ++i) sel.filters(i, k) = block.wf(i, best_j);
  }
  return sel;
}

// Classes grouped by shared argmax row; groups of size >= 2 are collisions.
inline std::vector<std::vector<std::size_t>> detect_collisions(
    const MaxPlusBlock& block) {
  const FilterSelection sel = select_filters(block);
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> rows;
  for (std::size_t k = 0; k < sel.argmax_rows.size(); ++k) {
    const std::size_t j = sel.argmax_rows[k];
    bool found = false;
    for (std::size_t g = 0; g < rows.size(); ++g) {
      if (rows[g] == j) {
        groups[g].push_back(k);
        found = true;
        break;
      }
    }
    if (!found) {
      rows.push_back(j);
      groups.push_back({k});
    }
  }
  std::vector<std::vector<std::size_t>> collisions;
  for (auto& g : groups) {
    if (g.size() >= 2) collisions.push_back(g);
  }
  return collisions;
}

struct MaxoutOut {
  Tensor z;            // B×(J/g)
  IndexArray winners;  // winning j (absolute index into y) per unit
};

// Fixed-size contiguous grouping; the even-group baseline the pruned head
// is compared against.
inline MaxoutOut maxout_forward(const Tensor& y, std::size_t group_size) {
  if (y.rank() != 2) throw DimensionError("maxout_forward: expects B×J");
  const std::size_t B = y.dim(0), J = y.dim(1);
  if (group_size == 0 || J % group_size != 0) {
    throw DimensionError("maxout_forward: group size must divide J");
  }
  const std::size_t U = J / group_size;
  MaxoutOut r{Tensor({B, U}), {{B, U}, std::vector<std::size_t>(B * U)}};
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t u = 0; u < U; ++u) {
      double best = y(b, u * group_size);
      std::size_t best_j = u * group_size;
      for (std::size_t d = 1; d < group_size; ++d) {
        const std::size_t j = u * group_size + d;
        if (y(b, j) > best) {
          best = y(b, j);
          best_j = j;
        }
      }
      r.z(b, u) = best;
      r.winners.data[b * U + u] = best_j;
    }
  }
  return r;
}

inline Tensor maxout_backward(const Tensor& grad_z, const IndexArray& winners,
                              std::size_t J) {
  const std::size_t B = grad_z.dim(0), U = grad_z.dim(1);
  Tensor gy({B, J});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t u = 0; u < U; ++u) {
      gy(b, winners.data[b * U + u]) += grad_z(b, u);
    }
  }
  return gy;
}

// Difference-of-maxes form of a continuous piecewise-linear function:
// g(x) = max_j (w1[j]·x + b1[j]) - max_j (w2[j]·x + b2[j]).
struct PwlSpec {
  Tensor w1;  // k1×I
  Tensor b1;  // k1
  Tensor w2;  // k2×I
  Tensor b2;  // k2

  void validate() const {
    if (w1.rank() != 2 || w2.rank() != 2 || w1.dim(1) != w2.dim(1)) {
      throw DimensionError("PwlSpec: w1 and w2 must share the input width I");
    }
    if (b1.size() != w1.dim(0) || b2.size() != w2.dim(0)) {
      throw DimensionError("PwlSpec: bias lengths must match the filter counts");
    }
    if (!w1.all_finite() || !w2.all_finite() || !b1.all_finite() ||
        !b2.all_finite()) {
      throw DomainError("PwlSpec: all entries must be finite");
    }
  }
};

struct PwlBlock {
  MaxPlusBlock block;  // wf: I×(k1+k2), wm: (k1+k2)×2

  // g(x) = z1(x) - z2(x); exact, not approximate.
  double evaluate(std::span<const double> x) const {
    const std::size_t I = block.input_dim();
    if (x.size() != I) throw DimensionError("PwlBlock: input length");
    Tensor xb = Tensor::from({1, I}, std::vector<double>(x.begin(), x.end()));
    const Tensor y = matmul(xb, block.wf);
    const MaxPlusOut out = maxplus_forward(y, block.wm);
    return out.z(0, 0) - out.z(0, 1);
  }
};

// Stacks the two affine parts into one block: wf holds the k1+k2 filters,
// wm column 0 carries b1 over the first k1 units (-inf elsewhere) and
// column 1 carries b2 over the last k2.
inline PwlBlock build_pwl_block(const PwlSpec& spec) {
  spec.validate();
  const std::size_t k1 = spec.w1.dim(0), k2 = spec.w2.dim(0),
                    I = spec.w1.dim(1);
  PwlBlock p;
  p.block.wf = Tensor({I, k1 + k2});
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t j = 0; j < k1; ++j) p.block.wf(i, j) = spec.w1(j, i);
    for (std::size_t j = 0; j < k2; ++j) p.block.wf(i, k1 + j) = spec.w2(j, i);
  }
  p.block.wm = Tensor({k1 + k2, 2}, kNegInf);
  for (std::size_t j = 0; j < k1; ++j) p.block.wm(j, 0) = spec.b1[j];
  for (std::size_t j = 0; j < k2; ++j) p.block.wm(k1 + j, 1) = spec.b2[j];
  p.block.validate();
  return p;
}

}  // namespace mxp
