#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mxp/dataset.hpp"
#include "mxp/maxplus.hpp"
#include "mxp/tensor.hpp"

namespace mxp {

// Threshold rule for one wm column: keep j with
// wm[j] >= s*max + (1-s)*min, over finite entries. Inclusive comparison so
// s=1 keeps exactly the argmax set.
inline std::vector<std::size_t> retained_set(std::span<const double> column,
                                             double s) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw ArgumentError("retained_set: threshold must be in [0,1]");
  }
  double lo = kNegInf, hi = kNegInf;
  bool any = false;
  for (double v : column) {
    if (v == kNegInf) continue;
    if (!any) {
      lo = hi = v;
      any = true;
    } else {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!any) throw DegenerateError("retained_set: column has no finite entry");
  const double cut = s * hi + (1.0 - s) * lo;
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < column.size(); ++j) {
    if (column[j] != kNegInf && column[j] >= cut) kept.push_back(j);
  }
  return kept;
}

// The pruned model: shared deduplicated filters plus per-class uneven groups
// of (filter index, max-plus offset) pairs.
struct PrunedHead {
  Tensor retained_filters;                  // I×J_r
  std::vector<std::size_t> retained_cols;   // original wf column per kept filter
  std::vector<std::vector<std::pair<std::size_t, double>>> groups;  // per class

  std::size_t retained_count() const { return retained_cols.size(); }
  std::size_t classes() const { return groups.size(); }

  std::size_t total_group_entries() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size();
    return n;
  }

  void validate() const {
    std::vector<bool> used(retained_count(), false);
    for (const auto& g : groups) {
      if (g.empty()) throw DegenerateError("PrunedHead: empty class group");
      for (const auto& [j, off] : g) {
        if (j >= retained_count()) throw InternalError("PrunedHead: index range");
        used[j] = true;
      }
    }
    for (bool u : used) {
      if (!u) throw InternalError("PrunedHead: unreferenced retained filter");
    }
  }
};

struct PruneReport {
  double threshold = 0.0;
  std::vector<std::size_t> per_class_counts;
  std::size_t retained = 0;  // J_r after deduplication
  double val_acc_before = -1.0, val_acc_after = -1.0;
  double test_acc_before = -1.0, test_acc_after = -1.0;
  double agreement = -1.0;
};

// Per-class threshold pruning with cross-class filter deduplication.
inline PrunedHead prune_block(const MaxPlusBlock& block, double s,
                              PruneReport* report = nullptr) {
  block.validate();
  const std::size_t I = block.input_dim(), J = block.units(),
                    K = block.classes();
  PrunedHead head;
  head.groups.resize(K);
  std::vector<std::size_t> col_to_new(J, J);  // J = not yet retained
  std::vector<double> column(J);
  std::vector<std::size_t> counts(K);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j < J; ++j) column[j] = block.wm(j, k);
    const auto kept = retained_set(column, s);
    counts[k] = kept.size();
    for (std::size_t j : kept) {
      if (col_to_new[j] == J) {
        col_to_new[j] = head.retained_cols.size();
        head.retained_cols.push_back(j);
      }
      head.groups[k].emplace_back(col_to_new[j], block.wm(j, k));
    }
  }
  head.retained_filters = Tensor({I, head.retained_cols.size()});
  for (std::size_t r = 0; r < head.retained_cols.size(); ++r) {
    const std::size_t j = head.retained_cols[r];
    for (std::size_t i = 0; i < I; ++i) {
      head.retained_filters(i, r) = block.wf(i, j);
    }
  }
  head.validate();
  if (report) {
    report->threshold = s;
    report->per_class_counts = counts;
    report->retained = head.retained_count();
  }
  return head;
}

// y_r = x * retained_filters; z[b,k] = max over the class group of
// (y_r[b,j] + offset).
inline Tensor pruned_forward(const Tensor& x, const PrunedHead& head) {
  const Tensor y = matmul(x, head.retained_filters);
  const std::size_t B = x.dim(0), K = head.classes();
  Tensor z({B, K});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t k = 0; k < K; ++k) {
      double best = kNegInf;
      for (const auto& [j, off] : head.groups[k]) {
        best = std::max(best, y(b, j) + off);
      }
      z(b, k) = best;
    }
  }
  return z;
}

struct EquivalenceResult {
  double agreement_fraction = 0.0;  // samples with |dz| identically zero
  double max_abs_delta = 0.0;
  std::size_t samples = 0;
  std::size_t exact = 0;
};

// Pruned vs unpruned outputs over a batch of inputs. Whenever a class's
// global winner is retained, the two maxes range over the same winning term,
// so agreement is bitwise, not approximate.
inline EquivalenceResult equivalence_check(const MaxPlusBlock& block,
                                           const PrunedHead& head,
                                           const Tensor& x) {
  const Tensor y = matmul(x, block.wf);
  const MaxPlusOut full = maxplus_forward(y, block.wm);
  const Tensor pruned = pruned_forward(x, head);
  EquivalenceResult r;
  r.samples = x.dim(0);
  const std::size_t K = block.classes();
  for (std::size_t b = 0; b < r.samples; ++b) {
    bool same = true;
    for (std::size_t k = 0; k < K; ++k) {
      const double d = full.z(b, k) - pruned(b, k);
      if (d < 0.0) {
        throw InternalError("equivalence_check: pruned output exceeds unpruned");
      }
      r.max_abs_delta = std::max(r.max_abs_delta, d);
      if (d != 0.0) same = false;
    }
    if (same) ++r.exact;
  }
  r.agreement_fraction =
      r.samples == 0 ? 1.0 : static_cast<double>(r.exact) / r.samples;
  return r;
}

inline double block_accuracy(const MaxPlusBlock& block, const Dataset& data,
                             std::size_t batch = 512) {
  std::size_t correct = 0;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    const std::size_t end = std::min(data.size(), start + batch);
    const Dataset chunk = data.slice(start, end);
    const Tensor y = matmul(chunk.images, block.wf);
    const MaxPlusOut out = maxplus_forward(y, block.wm);
    const IndexArray pred = argmax_axis(out.z, 1);
    for (std::size_t b = 0; b < end - start; ++b) {
      if (pred.data[b] == data.labels[start + b]) ++correct;
    }
  }
  return static_cast<double>(correct) / data.size();
}

inline double pruned_accuracy(const PrunedHead& head, const Dataset& data,
                              std::size_t batch = 512) {
  std::size_t correct = 0;
  for (std::size_t start = 0; start < data.size(); start += batch) {
    const std::size_t end = std::min(data.size(), start + batch);
    const Dataset chunk = data.slice(start, end);
    const Tensor z = pruned_forward(chunk.images, head);
    const IndexArray pred = argmax_axis(z, 1);
    for (std::size_t b = 0; b < end - start; ++b) {
      if (pred.data[b] == data.labels[start + b]) ++correct;
    }
  }
  return static_cast<double>(correct) / data.size();
}

struct SweepRow {
  double threshold = 0.0;
  std::size_t retained = 0;            // J_r after deduplication
  std::size_t total_group_entries = 0; // per-class counts summed
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by retained count, ascending
  double unpruned_val_accuracy = 0.0;
  double unpruned_test_accuracy = 0.0;
  // Baseline slots filled by the caller when baseline models are available.
  double softmax_test_accuracy = -1.0;
  double maxout_test_accuracy = -1.0;
};

// One pruning report per threshold, evaluated on both splits; the unpruned
// block's accuracy is the J_r = J reference row.
inline SweepResult sweep(const MaxPlusBlock& block, const Dataset& val_set,
                         const Dataset& test_set,
                         const std::vector<double>& s_grid) {
  if (s_grid.empty()) throw ArgumentError("sweep: empty threshold grid");
  SweepResult result;
  result.unpruned_val_accuracy = block_accuracy(block, val_set);
  result.unpruned_test_accuracy = block_accuracy(block, test_set);
  for (double s : s_grid) {
    PruneReport report;
    const PrunedHead head = prune_block(block, s, &report);
    SweepRow row;
    row.threshold = s;
    row.retained = head.retained_count();
    row.total_group_entries = head.total_group_entries();
    row.val_accuracy = pruned_accuracy(head, val_set);
    row.test_accuracy = pruned_accuracy(head, test_set);
    result.rows.push_back(row);
  }
  std::sort(result.rows.begin(), result.rows.end(),
            [](const SweepRow& a, const SweepRow& b) {
              return a.retained < b.retained;
            });
  return result;
}

}  // namespace mxp
