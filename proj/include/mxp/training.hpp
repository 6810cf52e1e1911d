#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <numeric>
#include <string>
#include <vector>

#include "mxp/dataset.hpp"
#include "mxp/model.hpp"
#include "mxp/model_io.hpp"
#include "mxp/tensor.hpp"

namespace mxp {

struct TrainConfig {
  std::uint64_t seed = 1;
  Arch arch = Arch::MaxplusMlp;
  std::size_t units_J = 144;
  std::size_t maxout_group = 2;
  double dropout_ratio = 0.0;
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double lr0 = 0.01;
  double decay_factor = 0.5;
  std::size_t decay_every_steps = 2000;
  double momentum = 0.9;
  std::string init_from;  // optional model file whose conv trunk seeds ours

  void validate() const {
    // epochs == 0 is legal: it yields the untrained model.
    if (units_J == 0 || batch_size == 0 || decay_every_steps == 0) {
      throw ArgumentError("TrainConfig: sizes must be positive");
    }
    if (!(dropout_ratio >= 0.0 && dropout_ratio < 1.0)) {
      throw ArgumentError("TrainConfig: dropout_ratio must be in [0,1)");
    }
    if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
      throw ArgumentError("TrainConfig: decay_factor must be in (0,1]");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
      throw ArgumentError("TrainConfig: momentum must be in [0,1)");
    }
    if (!(lr0 > 0.0)) throw ArgumentError("TrainConfig: lr0 must be positive");
  }
};

struct MetricsRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct MetricsLog {
  std::vector<MetricsRecord> records;
};

// Stepwise decay: lr0 * factor^floor(step / every).
inline double lr_at(std::size_t step, const TrainConfig& cfg) {
  const double e = static_cast<double>(step / cfg.decay_every_steps);
  return cfg.lr0 * std::pow(cfg.decay_factor, e);
}

// v <- momentum*v - lr*g; p <- p + v. -inf parameter entries are pinned.
inline void sgd_momentum_step(Tensor& p, const Tensor& g, Tensor& v, double lr,
                              double momentum) {
  if (!p.same_shape(g) || !p.same_shape(v)) {
    throw DimensionError("sgd_momentum_step: shape mismatch");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw NumericFault("sgd_momentum_step: non-finite gradient");
    }
    if (p[i] == kNegInf) continue;
    v[i] = momentum * v[i] - lr * g[i];
    p[i] += v[i];
  }
}

inline Model init_model(const TrainConfig& cfg, std::size_t channels,
                        std::size_t rows, std::size_t cols, SeededRng& rng) {
  cfg.validate();
  return init_model(cfg.arch, channels, rows, cols, cfg.units_J,
                    cfg.maxout_group, rng);
}

// Accuracy of argmax predictions; no mask ever, parameters untouched.
inline double evaluate(const Model& m, const Dataset& data,
                       std::size_t batch = 256) {
  const std::size_t n = data.size();
  if (n == 0) throw ArgumentError("evaluate: empty dataset");
  std::size_t correct = 0;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t end = std::min(n, start + batch);
    const Dataset chunk = data.slice(start, end);
    const Tensor logits = model_forward(m, chunk.images);
    const IndexArray pred = argmax_axis(logits, 1);
    for (std::size_t b = 0; b < end - start; ++b) {
      if (pred.data[b] == data.labels[start + b]) ++correct;
    }
  }
  return static_cast<double>(correct) / n;
}

struct TrainResult {
  Model model;
  MetricsLog log;
};

namespace detail {

struct Velocity {
  Tensor wf, wm, conv1, conv2, fc1, fc2, fc3;
};

inline void step_param(Tensor& p, const Tensor& g, Tensor& v, double lr,
                       double momentum) {
  if (p.size() == 0) return;
  if (v.size() == 0) v = Tensor(p.shape());
  sgd_momentum_step(p, g, v, lr, momentum);
}

}  // namespace detail

// Deterministic mini-batch SGD with momentum. Shuffles per epoch with the
// run's rng; draws a fresh connection mask per mini-batch when dropout is on
// and the architecture has a max-plus head.
inline TrainResult train(const TrainConfig& cfg, const Dataset& train_set,
                         const Dataset& val_set) {
  cfg.validate();
  train_set.validate();
  val_set.validate();
  SeededRng rng(cfg.seed);
  TrainResult r;
  r.model = init_model(cfg, train_set.channels, train_set.rows, train_set.cols,
                       rng);
  if (!cfg.init_from.empty()) {
    // Transfer learning: seed the convolutional trunk from a previously
    // trained model; shapes must match exactly.
    if (!r.model.is_cnn()) {
      throw ArgumentError("train: init_from applies to cnn architectures only");
    }
    const Model donor = load_model(cfg.init_from);
    if (!donor.conv1.same_shape(r.model.conv1) ||
        !donor.conv2.same_shape(r.model.conv2)) {
      throw ArgumentError("train: init_from conv trunk shapes do not match");
    }
    r.model.conv1 = donor.conv1;
    r.model.conv2 = donor.conv2;
  }

  const bool has_maxplus_head =
      cfg.arch == Arch::MaxplusMlp || cfg.arch == Arch::CnnMaxplus;
  const bool use_dropout = cfg.dropout_ratio > 0.0 && has_maxplus_head;

  detail::Velocity vel;
  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t I = train_set.images.dim(1);

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      const std::size_t B = end - start;
      Tensor x({B, I});
      std::vector<std::size_t> labels(B);
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t src = order[start + b];
        for (std::size_t i = 0; i < I; ++i) x(b, i) = train_set.images(src, i);
        labels[b] = train_set.labels[src];
      }

      DropMask mask;
      const DropMask* mask_ptr = nullptr;
      if (use_dropout) {
        const std::size_t J =
            cfg.arch == Arch::MaxplusMlp ? cfg.units_J : kFc2Units;
        mask = draw_connection_mask(rng, J, kClasses, cfg.dropout_ratio);
        mask_ptr = &mask;
      }

      ForwardTrace trace;
      const Tensor logits = model_forward(r.model, x, mask_ptr, &trace);
      const XentResult xe = softmax_xent(logits, labels);
      loss_sum += xe.loss;
      ++batches;
      const ModelGrads g = model_backward(r.model, x, trace, xe.grad_logits);

      const double lr = lr_at(step, cfg);
      detail::step_param(r.model.wf, g.wf, vel.wf, lr, cfg.momentum);
      detail::step_param(r.model.wm, g.wm, vel.wm, lr, cfg.momentum);
      detail::step_param(r.model.conv1, g.conv1, vel.conv1, lr, cfg.momentum);
      detail::step_param(r.model.conv2, g.conv2, vel.conv2, lr, cfg.momentum);
      detail::step_param(r.model.fc1, g.fc1, vel.fc1, lr, cfg.momentum);
      detail::step_param(r.model.fc2, g.fc2, vel.fc2, lr, cfg.momentum);
      detail::step_param(r.model.fc3, g.fc3, vel.fc3, lr, cfg.momentum);
      ++step;
    }
    MetricsRecord rec;
    rec.epoch = epoch + 1;
    rec.step = step;
    rec.lr = lr_at(step == 0 ? 0 : step - 1, cfg);
    rec.train_loss = batches ? loss_sum / batches : 0.0;
    rec.val_accuracy = evaluate(r.model, val_set);
    r.log.records.push_back(rec);
  }
  return r;
}

struct SeedStudyCell {
  std::uint64_t seed = 0;
  double dropout = 0.0;
  double final_accuracy = 0.0;
};

struct SeedStudyResult {
  std::vector<SeedStudyCell> cells;  // grid order: ratio-major, then seed

  struct RatioStats {
    double dropout = 0.0;
    double mean = 0.0, stddev = 0.0, min = 1.0, max = 0.0;
  };

  std::vector<RatioStats> per_ratio(const std::vector<double>& ratios) const {
    std::vector<RatioStats> out;
    for (double ratio : ratios) {
      RatioStats s;
      s.dropout = ratio;
      std::vector<double> accs;
      for (const auto& c : cells) {
        if (c.dropout == ratio) accs.push_back(c.final_accuracy);
      }
      for (double a : accs) {
        s.mean += a;
        s.min = std::min(s.min, a);
        s.max = std::max(s.max, a);
      }
      s.mean /= accs.size();
      for (double a : accs) s.stddev += (a - s.mean) * (a - s.mean);
      s.stddev = std::sqrt(s.stddev / accs.size());
      out.push_back(s);
    }
    return out;
  }
};

// One training run per (seed, ratio) pair; cells are independent and may run
// in parallel worker threads, merged in grid order.
inline SeedStudyResult seed_study(const TrainConfig& base,
                                  const std::vector<std::uint64_t>& seeds,
                                  const std::vector<double>& ratios,
                                  const Dataset& train_set,
                                  const Dataset& val_set,
                                  std::size_t workers = 1) {
  if (seeds.empty() || ratios.empty()) {
    throw ArgumentError("seed_study: empty grid");
  }
  std::vector<TrainConfig> cfgs;
  for (double ratio : ratios) {
    for (std::uint64_t seed : seeds) {
      TrainConfig c = base;
      c.seed = seed;
      c.dropout_ratio = ratio;
      cfgs.push_back(c);
    }
  }
  std::vector<double> accs(cfgs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
      accs[i] = train(cfgs[i], train_set, val_set).log.records.back().val_accuracy;
    }
  } else {
    std::vector<std::future<double>> futs;
    for (const auto& c : cfgs) {
      futs.push_back(std::async(std::launch::async, [&, c] {
        return train(c, train_set, val_set).log.records.back().val_accuracy;
      }));
    }
    for (std::size_t i = 0; i < futs.size(); ++i) accs[i] = futs[i].get();
  }
  SeedStudyResult r;
  std::size_t i = 0;
  for (double ratio : ratios) {
    for (std::uint64_t seed : seeds) {
      r.cells.push_back({seed, ratio, accs[i++]});
    }
  }
  return r;
}

}  // namespace mxp
