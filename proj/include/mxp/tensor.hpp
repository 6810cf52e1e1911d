#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "mxp/errors.hpp"

namespace mxp {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// A value is legal tensor content iff it is finite or -inf. -inf is the
// max-plus identity; +inf and NaN are never legal.
inline bool legal_value(double v) {
  return std::isfinite(v) || v == kNegInf;
}

// Dense row-major N-d array of doubles. The single numeric currency of the
// engine; value semantics throughout.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(checked_size(shape_), fill) {}

  static Tensor from(std::vector<std::size_t> shape, std::vector<double> data) {
    Tensor t;
    if (checked_size(shape) != data.size()) {
      throw DimensionError("Tensor::from: data length " +
                           std::to_string(data.size()) +
                           " does not match shape product " +
                           std::to_string(checked_size(shape)));
    }
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * shape_[1] + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k,
                     std::size_t l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k,
                    std::size_t l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  // Checks the content invariant: finite or -inf, nothing else.
  void check_values() const {
    for (double v : data_) {
      if (!legal_value(v)) {
        throw NumericFault("tensor holds an illegal value (NaN or +inf)");
      }
    }
  }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  Tensor reshaped(std::vector<std::size_t> new_shape) const {
    if (checked_size(new_shape) != data_.size()) {
      throw DimensionError("reshape: element count mismatch");
    }
    Tensor t = *this;
    t.shape_ = std::move(new_shape);
    return t;
  }

 private:
  static std::size_t checked_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
      if (d == 0) throw DimensionError("zero-sized dimension");
      n *= d;
    }
    return shape.empty() ? 0 : n;
  }

  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Integer companion to Tensor for argmax/winner bookkeeping.
struct IndexArray {
  std::vector<std::size_t> shape;
  std::vector<std::size_t> data;

  std::size_t operator()(std::size_t i, std::size_t j) const {
    return data[i * shape[1] + j];
  }
};

// Real matrix product, 64-bit accumulation. Operands must be finite:
// -inf belongs to the max-plus side of the algebra, not here.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw DimensionError("matmul: operands must be rank-2");
  }
  const std::size_t m = a.dim(0), n = a.dim(1), p = b.dim(1);
  if (b.dim(0) != n) {
    throw DimensionError("matmul: inner dimensions " + std::to_string(n) +
                         " vs " + std::to_string(b.dim(0)));
  }
  if (!a.all_finite() || !b.all_finite()) {
    throw DomainError("matmul: non-finite operand");
  }
  Tensor c({m, p});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  // ikj order keeps the inner loop contiguous in both b and c.
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = pa[i * n + k];
      if (aik == 0.0) continue;
      const double* brow = pb + k * p;
      double* crow = pc + i * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

// a * b^T without materializing the transpose (b is P×N, result M×P).
inline Tensor matmul_bt(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
    throw DimensionError("matmul_bt: shape mismatch");
  }
  const std::size_t m = a.dim(0), n = a.dim(1), p = b.dim(0);
  Tensor c({m, p});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      const double* ra = a.data() + i * n;
      const double* rb = b.data() + j * n;
      for (std::size_t k = 0; k < n; ++k) acc += ra[k] * rb[k];
      c(i, j) = acc;
    }
  }
  return c;
}

// a^T * b (a is N×M, result M×P).
inline Tensor matmul_at(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
    throw DimensionError("matmul_at: shape mismatch");
  }
  const std::size_t n = a.dim(0), m = a.dim(1), p = b.dim(1);
  Tensor c({m, p});
  for (std::size_t k = 0; k < n; ++k) {
    const double* ra = a.data() + k * m;
    const double* rb = b.data() + k * p;
    for (std::size_t i = 0; i < m; ++i) {
      const double aki = ra[i];
      if (aki == 0.0) continue;
      double* rc = c.data() + i * p;
      for (std::size_t j = 0; j < p; ++j) rc[j] += aki * rb[j];
    }
  }
  return c;
}

// Argmax along one axis, ties to the lowest index. A slice that is entirely
// -inf has no admissible winner and is rejected.
inline IndexArray argmax_axis(const Tensor& t, std::size_t axis) {
  if (axis >= t.rank()) throw DimensionError("argmax_axis: axis out of range");
  std::size_t outer = 1, inner = 1;
  const std::size_t d = t.dim(axis);
  for (std::size_t i = 0; i < axis; ++i) outer *= t.dim(i);
  for (std::size_t i = axis + 1; i < t.rank(); ++i) inner *= t.dim(i);

  IndexArray out;
  for (std::size_t i = 0; i < t.rank(); ++i) {
    if (i != axis) out.shape.push_back(t.dim(i));
  }
  if (out.shape.empty()) out.shape.push_back(1);
  out.data.resize(outer * inner);

  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      double best = kNegInf;
      std::size_t best_i = d;  // sentinel: nothing admissible yet
      for (std::size_t k = 0; k < d; ++k) {
        const double v = t[(o * d + k) * inner + in];
        if (best_i == d ? v > kNegInf : v > best) {
          best = v;
          best_i = k;
        }
      }
      if (best_i == d) {
        throw DegenerateError("argmax_axis: slice is entirely -inf");
      }
      out.data[o * inner + in] = best_i;
    }
  }
  return out;
}

// Deterministic xoshiro256** seeded through splitmix64. Identical seed gives
// an identical draw sequence within one build.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : s_) {
      // splitmix64 step
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0,1) with 53 bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    if (!(lo < hi)) throw ArgumentError("uniform: requires lo < hi");
    return lo + (hi - lo) * next_double();
  }

  // Unbiased integer draw in [0, n).
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw ArgumentError("uniform_index: empty range");
    const std::uint64_t bound = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= bound);
    return static_cast<std::size_t>(r % n);
  }

  bool bernoulli(double p) { return next_double() < p; }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

inline Tensor seeded_uniform(SeededRng& rng, std::vector<std::size_t> shape,
                             double lo, double hi) {
  if (!(lo < hi)) throw ArgumentError("seeded_uniform: requires lo < hi");
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = lo + (hi - lo) * rng.next_double();
  return t;
}

}  // namespace mxp
