// Command-line entry point: every experiment is a subcommand with a written
// manifest, so any artifact can be reproduced from its manifest alone.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mxp/data_io.hpp"
#include "mxp/model_io.hpp"
#include "mxp/pruning.hpp"
#include "mxp/synthetic_digits.hpp"
#include "mxp/training.hpp"

namespace fs = std::filesystem;
using namespace mxp;

namespace {

constexpr const char* kToolVersion = "mxp 1.0.0";

// ---- config file: plain key=value lines, '#' comments; flags override ----

std::vector<std::pair<std::string, std::string>> read_config_file(
    const std::string& path) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open config file: " + path);
  std::string line;
  while (std::getline(f, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!key.empty()) kv.emplace_back(key, val);
  }
  return kv;
}

// ---- dataset flags shared by the training-style subcommands ----

struct DataOpts {
  std::string train_images, train_labels;
  std::string test_images, test_labels;
  std::size_t synthetic_train = 0;
  std::size_t synthetic_test = 0;
  std::uint64_t synthetic_seed = 12345;
  std::size_t val_holdout = 5000;
};

void add_data_flags(CLI::App* cmd, DataOpts& d) {
  cmd->add_option("--train-images", d.train_images, "IDX image file (train)");
  cmd->add_option("--train-labels", d.train_labels, "IDX label file (train)");
  cmd->add_option("--test-images", d.test_images, "IDX image file (test)");
  cmd->add_option("--test-labels", d.test_labels, "IDX label file (test)");
  cmd->add_option("--synthetic-train", d.synthetic_train,
                  "generate N synthetic training digits instead of reading IDX");
  cmd->add_option("--synthetic-test", d.synthetic_test,
                  "generate N synthetic test digits");
  cmd->add_option("--synthetic-seed", d.synthetic_seed,
                  "seed for the synthetic digit generator");
  cmd->add_option("--val-holdout", d.val_holdout,
                  "training samples held out as the validation split");
}

Dataset load_train(const DataOpts& d) {
  if (d.synthetic_train > 0) {
    return make_synthetic_digits(d.synthetic_train, d.synthetic_seed);
  }
  if (d.train_images.empty() || d.train_labels.empty()) {
    throw ArgumentError("need --train-images/--train-labels or --synthetic-train");
  }
  return load_idx(d.train_images, d.train_labels);
}

Dataset load_test(const DataOpts& d) {
  if (d.synthetic_test > 0) {
    // disjoint stream from the training draw
    return make_synthetic_digits(d.synthetic_test, d.synthetic_seed ^ 0x7e57da7aULL);
  }
  if (d.test_images.empty() || d.test_labels.empty()) {
    throw ArgumentError("need --test-images/--test-labels or --synthetic-test");
  }
  return load_idx(d.test_images, d.test_labels);
}

struct Split {
  Dataset train, val;
};

Split split_train_val(const Dataset& full, std::size_t holdout) {
  if (holdout == 0 || holdout >= full.size()) {
    throw ArgumentError("val holdout must be in (0, dataset size)");
  }
  return {full.slice(0, full.size() - holdout),
          full.slice(full.size() - holdout, full.size())};
}

// ---- manifest ----

void write_manifest(const fs::path& dir, const std::string& subcommand,
                    const std::vector<std::pair<std::string, std::string>>& kv,
                    double seconds) {
  std::ofstream f(dir / "manifest.txt");
  f << "tool " << kToolVersion << "\n";
  f << "subcommand " << subcommand << "\n";
  for (const auto& [k, v] : kv) f << k << " " << v << "\n";
  f << "wall_clock_seconds " << csv_format(seconds) << "\n";
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

std::vector<std::uint64_t> parse_u64_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoull(item));
  }
  return out;
}

// wm column reshaped for viewing: pads to the next perfect square with the
// column minimum when J is not square (noted in the filename).
std::pair<Tensor, bool> column_as_image(const Tensor& mat, std::size_t col) {
  const std::size_t J = mat.dim(0);
  std::size_t side = 1;
  while (side * side < J) ++side;
  const bool padded = side * side != J;
  double lo = mat(0, col);
  for (std::size_t j = 1; j < J; ++j) lo = std::min(lo, mat(j, col));
  Tensor img({side, side}, lo);
  for (std::size_t j = 0; j < J; ++j) img[j] = mat(j, col);
  return {img, padded};
}

// ---- subcommand bodies ----

int run_train(const TrainConfig& cfg, const DataOpts& data,
              const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  Dataset full = load_train(data);
  Split split = split_train_val(full, data.val_holdout);
  TrainResult r = train(cfg, split.train, split.val);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  save_model(r.model, (dir / "model.mxpl").string());
  CsvTable metrics = {{"epoch", "step", "lr", "train_loss", "val_accuracy"}};
  for (const auto& rec : r.log.records) {
    metrics.push_back({std::to_string(rec.epoch), std::to_string(rec.step),
                       csv_format(rec.lr), csv_format(rec.train_loss),
                       csv_format(rec.val_accuracy)});
  }
  export_csv(metrics, (dir / "metrics.csv").string());
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "train",
                 {{"arch", arch_name(cfg.arch)},
                  {"seed", std::to_string(cfg.seed)},
                  {"units", std::to_string(cfg.units_J)},
                  {"dropout", csv_format(cfg.dropout_ratio)},
                  {"epochs", std::to_string(cfg.epochs)},
                  {"batch", std::to_string(cfg.batch_size)},
                  {"lr0", csv_format(cfg.lr0)},
                  {"decay", csv_format(cfg.decay_factor)},
                  {"decay_steps", std::to_string(cfg.decay_every_steps)},
                  {"momentum", csv_format(cfg.momentum)},
                  {"init_from", cfg.init_from.empty() ? "-" : cfg.init_from},
                  {"train_images", data.train_images.empty() ? "-" : data.train_images},
                  {"train_labels", data.train_labels.empty() ? "-" : data.train_labels},
                  {"synthetic_train", std::to_string(data.synthetic_train)},
                  {"synthetic_seed", std::to_string(data.synthetic_seed)},
                  {"val_holdout", std::to_string(data.val_holdout)},
                  {"model", (dir / "model.mxpl").string()},
                  {"metrics", (dir / "metrics.csv").string()}},
                 secs);
  if (!r.log.records.empty()) {
    std::cout << "final val accuracy "
              << csv_format(r.log.records.back().val_accuracy) << "\n";
  }
  return 0;
}

int run_eval(const std::string& model_path, const DataOpts& data) {
  Model m = load_model(model_path);
  Dataset d = load_test(data);
  std::cout << "accuracy " << csv_format(evaluate(m, d)) << "\n";
  return 0;
}

int run_prune(const std::string& model_path, double threshold,
              const std::string& out_dir, const DataOpts& data) {
  const auto t0 = std::chrono::steady_clock::now();
  Model m = load_model(model_path);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  PruneReport report;
  Model pruned = m;
  if (m.arch == Arch::CnnMaxplus) {
    CnnPruneResult r = prune_cnn_head(m, threshold);
    pruned = std::move(r.pruned);
    report = r.report;
    std::cout << "parameter reduction " << csv_format(r.reduction) << "\n";
  } else if (m.arch == Arch::MaxplusMlp) {
    MaxPlusBlock block = m.head_block();
    pruned.pruned_head = prune_block(block, threshold, &report);
    pruned.wf = Tensor();
    pruned.wm = Tensor();
  } else {
    throw ArgumentError("prune: model has no max-plus head");
  }
  save_model(pruned, (dir / "pruned.mxpl").string());

  CsvTable rep = {{"threshold", "retained", "class", "group_size"}};
  for (std::size_t k = 0; k < report.per_class_counts.size(); ++k) {
    rep.push_back({csv_format(report.threshold), std::to_string(report.retained),
                   std::to_string(k), std::to_string(report.per_class_counts[k])});
  }
  export_csv(rep, (dir / "prune_report.csv").string());

  if (!data.test_images.empty() || data.synthetic_test > 0) {
    Dataset d = load_test(data);
    std::cout << "accuracy before " << csv_format(evaluate(m, d)) << "\n";
    std::cout << "accuracy after " << csv_format(evaluate(pruned, d)) << "\n";
  }
  std::cout << "retained filters " << report.retained << "\n";
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "prune",
                 {{"model", model_path},
                  {"threshold", csv_format(threshold)},
                  {"pruned_model", (dir / "pruned.mxpl").string()},
                  {"report", (dir / "prune_report.csv").string()}},
                 secs);
  return 0;
}

int run_sweep(const std::string& model_path, const std::string& grid,
              const std::string& out_dir, const DataOpts& data) {
  const auto t0 = std::chrono::steady_clock::now();
  Model m = load_model(model_path);
  if (m.arch != Arch::MaxplusMlp || m.pruned_head) {
    throw ArgumentError("sweep: expects an unpruned maxplus-mlp model");
  }
  const std::vector<double> s_grid = parse_double_list(grid);
  Dataset full = load_train(data);
  Split split = split_train_val(full, data.val_holdout);
  Dataset test = load_test(data);

  SweepResult r = sweep(m.head_block(), split.val, test, s_grid);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  CsvTable table = {{"threshold", "retained", "group_entries", "val_accuracy",
                     "test_accuracy"}};
  for (const auto& row : r.rows) {
    table.push_back({csv_format(row.threshold), std::to_string(row.retained),
                     std::to_string(row.total_group_entries),
                     csv_format(row.val_accuracy), csv_format(row.test_accuracy)});
  }
  table.push_back({"unpruned", std::to_string(m.wf.dim(1)), "-",
                   csv_format(r.unpruned_val_accuracy),
                   csv_format(r.unpruned_test_accuracy)});
  export_csv(table, (dir / "sweep.csv").string());
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "sweep",
                 {{"model", model_path},
                  {"grid", grid},
                  {"table", (dir / "sweep.csv").string()}},
                 secs);
  std::cout << "sweep rows " << r.rows.size() << "\n";
  return 0;
}

int run_seed_study(const TrainConfig& base, const std::string& seeds,
                   const std::string& ratios, const std::string& out_dir,
                   const DataOpts& data, std::size_t workers) {
  const auto t0 = std::chrono::steady_clock::now();
  Dataset full = load_train(data);
  Split split = split_train_val(full, data.val_holdout);
  const auto seed_list = parse_u64_list(seeds);
  const auto ratio_list = parse_double_list(ratios);
  SeedStudyResult r =
      seed_study(base, seed_list, ratio_list, split.train, split.val, workers);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  CsvTable cells = {{"seed", "dropout", "final_val_accuracy"}};
  for (const auto& c : r.cells) {
    cells.push_back({std::to_string(c.seed), csv_format(c.dropout),
                     csv_format(c.final_accuracy)});
  }
  export_csv(cells, (dir / "seed_study.csv").string());
  CsvTable stats = {{"dropout", "mean", "stddev", "min", "max"}};
  for (const auto& s : r.per_ratio(ratio_list)) {
    stats.push_back({csv_format(s.dropout), csv_format(s.mean),
                     csv_format(s.stddev), csv_format(s.min), csv_format(s.max)});
  }
  export_csv(stats, (dir / "seed_study_stats.csv").string());
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "seed-study",
                 {{"arch", arch_name(base.arch)},
                  {"units", std::to_string(base.units_J)},
                  {"epochs", std::to_string(base.epochs)},
                  {"seeds", seeds},
                  {"ratios", ratios},
                  {"cells", (dir / "seed_study.csv").string()},
                  {"stats", (dir / "seed_study_stats.csv").string()}},
                 secs);
  std::cout << "seed-study cells " << r.cells.size() << "\n";
  return 0;
}

int run_viz(const std::string& model_path, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  Model m = load_model(model_path);
  if (m.arch != Arch::MaxplusMlp || m.pruned_head) {
    throw ArgumentError("viz: expects an unpruned maxplus-mlp model");
  }
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  const MaxPlusBlock block = m.head_block();
  const std::size_t K = block.classes();

  // wm columns as images
  for (std::size_t k = 0; k < K; ++k) {
    auto [img, padded] = column_as_image(block.wm, k);
    const std::string name =
        "wm_class" + std::to_string(k) + (padded ? "_padded" : "") + ".pgm";
    export_pgm(img, (dir / name).string());
  }
  // selected (active) filters per class
  const FilterSelection sel = select_filters(block);
  for (std::size_t k = 0; k < K; ++k) {
    Tensor filt({m.rows, m.cols});
    for (std::size_t i = 0; i < filt.size(); ++i) filt[i] = sel.filters(i, k);
    export_pgm(filt, (dir / ("filter_class" + std::to_string(k) + ".pgm")).string());
  }
  // low-weight filters: columns with the smallest wm column-max
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t j = 0; j < block.units(); ++j) {
    double mx = block.wm(j, 0);
    for (std::size_t k = 1; k < K; ++k) mx = std::max(mx, block.wm(j, k));
    ranked.emplace_back(mx, j);
  }
  std::sort(ranked.begin(), ranked.end());
  const std::size_t n_low = std::min<std::size_t>(8, ranked.size());
  for (std::size_t i = 0; i < n_low; ++i) {
    const std::size_t j = ranked[i].second;
    Tensor filt({m.rows, m.cols});
    for (std::size_t p = 0; p < filt.size(); ++p) filt[p] = block.wf(p, j);
    export_pgm(filt, (dir / ("low_filter_" + std::to_string(j) + ".pgm")).string());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(dir, "viz", {{"model", model_path}}, secs);
  std::cout << "wrote " << (2 * K + n_low) << " images\n";
  return 0;
}

int run_approx(const std::string& which, std::size_t grid_steps,
               const std::string& out_path) {
  PwlSpec spec;
  std::function<double(double)> target;
  SeededRng rng(2024);
  if (which == "abs") {
    spec.w1 = Tensor::from({2, 1}, {1, -1});
    spec.b1 = Tensor({2}, 0.0);
    spec.w2 = Tensor::from({1, 1}, {0.0});
    spec.b2 = Tensor({1}, 0.0);
    target = [](double x) { return std::abs(x); };
  } else if (which == "relu") {
    spec.w1 = Tensor::from({2, 1}, {1, 0});
    spec.b1 = Tensor({2}, 0.0);
    spec.w2 = Tensor::from({1, 1}, {0.0});
    spec.b2 = Tensor({1}, 0.0);
    target = [](double x) { return std::max(x, 0.0); };
  } else if (which == "random") {
    const std::size_t k = 5;
    spec.w1 = seeded_uniform(rng, {k, 1}, -2, 2);
    spec.b1 = seeded_uniform(rng, {k}, -1, 1);
    spec.w2 = seeded_uniform(rng, {k, 1}, -2, 2);
    spec.b2 = seeded_uniform(rng, {k}, -1, 1);
    target = [&spec, k](double x) {
      double m1 = kNegInf, m2 = kNegInf;
      for (std::size_t j = 0; j < k; ++j) {
        m1 = std::max(m1, spec.w1(j, 0) * x + spec.b1[j]);
        m2 = std::max(m2, spec.w2(j, 0) * x + spec.b2[j]);
      }
      return m1 - m2;
    };
  } else {
    throw ArgumentError("approx: --pwl must be abs, relu or random");
  }
  PwlBlock block = build_pwl_block(spec);
  CsvTable table = {{"x", "block", "target", "abs_error"}};
  double worst = 0.0;
  for (std::size_t i = 0; i <= grid_steps; ++i) {
    const double x = -2.0 + 4.0 * i / grid_steps;
    const double got = block.evaluate(std::span(&x, 1));
    const double want = target(x);
    worst = std::max(worst, std::abs(got - want));
    table.push_back({csv_format(x), csv_format(got), csv_format(want),
                     csv_format(std::abs(got - want))});
  }
  if (!out_path.empty()) export_csv(table, out_path);
  std::cout << "max abs error " << worst << "\n";
  return worst <= 1e-12 ? 0 : 3;
}

// Finite-difference check, independent of every backward pass: forward only.
double fd_loss_grad_worst(const std::function<double(Tensor&)>& loss,
                          Tensor& params, const Tensor& analytic) {
  double worst = 0.0;
  const double eps = 1e-5;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + eps;
    const double up = loss(params);
    params[i] = saved - eps;
    const double down = loss(params);
    params[i] = saved;
    const double num = (up - down) / (2 * eps);
    const double denom = std::max({std::abs(num), std::abs(analytic[i]), 1e-8});
    worst = std::max(worst, std::abs(num - analytic[i]) / denom);
  }
  return worst;
}

int run_gradcheck() {
  SeededRng rng(99);
  bool all_ok = true;
  auto report = [&](const std::string& name, double worst) {
    const bool ok = worst < 1e-5;
    all_ok = all_ok && ok;
    std::cout << (ok ? "PASS " : "FAIL ") << name << " max rel err " << worst
              << "\n";
  };

  {  // dense
    Tensor x = seeded_uniform(rng, {2, 5}, -1, 1);
    Tensor w = seeded_uniform(rng, {5, 3}, -1, 1);
    Tensor lw = seeded_uniform(rng, {2, 3}, -1, 1);
    DenseGrads g = dense_backward(x, w, lw);
    auto loss = [&](Tensor& wp) {
      Tensor y = dense_forward(x, wp);
      double s = 0;
      for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * lw[i];
      return s;
    };
    report("dense", fd_loss_grad_worst(loss, w, g.grad_w));
  }
  {  // relu (off the kink)
    Tensor x = seeded_uniform(rng, {3, 3}, 0.2, 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i % 2) x[i] = -x[i];
    }
    Tensor lw = seeded_uniform(rng, {3, 3}, -1, 1);
    Tensor g = relu_backward(x, lw);
    auto loss = [&](Tensor& xp) {
      Tensor y = relu_forward(xp);
      double s = 0;
      for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * lw[i];
      return s;
    };
    report("relu", fd_loss_grad_worst(loss, x, g));
  }
  {  // conv2d
    Tensor x = seeded_uniform(rng, {1, 2, 6, 6}, -1, 1);
    Tensor k = seeded_uniform(rng, {3, 2, 3, 3}, -1, 1);
    ConvParams p{k, 1, 1};
    Tensor y = conv2d_forward(x, p);
    Tensor lw = seeded_uniform(rng, y.shape(), -1, 1);
    ConvGrads g = conv2d_backward(x, p, lw);
    auto loss = [&](Tensor& kp) {
      Tensor yy = conv2d_forward(x, {kp, 1, 1});
      double s = 0;
      for (std::size_t i = 0; i < yy.size(); ++i) s += yy[i] * lw[i];
      return s;
    };
    Tensor kc = k;
    report("conv2d", fd_loss_grad_worst(loss, kc, g.grad_k));
  }
  {  // maxpool
    Tensor x = seeded_uniform(rng, {2, 2, 4, 4}, -1, 1);
    MaxPoolResult mp = maxpool2x2_forward(x);
    Tensor lw = seeded_uniform(rng, mp.out.shape(), -1, 1);
    Tensor g = maxpool2x2_backward(x.shape(), mp.winners, lw);
    auto loss = [&](Tensor& xp) {
      Tensor y = maxpool2x2_forward(xp).out;
      double s = 0;
      for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * lw[i];
      return s;
    };
    report("maxpool2x2", fd_loss_grad_worst(loss, x, g));
  }
  {  // softmax cross-entropy
    Tensor logits = seeded_uniform(rng, {4, 10}, -2, 2);
    std::vector<std::size_t> labels = {0, 3, 7, 9};
    XentResult r = softmax_xent(logits, labels);
    auto loss = [&](Tensor& lp) { return softmax_xent(lp, labels).loss; };
    report("softmax_xent", fd_loss_grad_worst(loss, logits, r.grad_logits));
  }
  {  // max-plus
    Tensor y = seeded_uniform(rng, {2, 6}, -1, 1);
    Tensor wm = seeded_uniform(rng, {6, 4}, -1, 1);
    Tensor lw = seeded_uniform(rng, {2, 4}, -1, 1);
    MaxPlusOut f = maxplus_forward(y, wm);
    MaxPlusGrads g = maxplus_backward(lw, f.winners, 6);
    auto loss = [&](Tensor& wp) {
      Tensor z = maxplus_forward(y, wp).z;
      double s = 0;
      for (std::size_t i = 0; i < z.size(); ++i) s += z[i] * lw[i];
      return s;
    };
    report("maxplus", fd_loss_grad_worst(loss, wm, g.grad_wm));
  }
  {  // maxout head
    Tensor y = seeded_uniform(rng, {2, 6}, -1, 1);
    Tensor lw = seeded_uniform(rng, {2, 3}, -1, 1);
    MaxoutOut f = maxout_forward(y, 2);
    Tensor g = maxout_backward(lw, f.winners, 6);
    auto loss = [&](Tensor& yp) {
      Tensor z = maxout_forward(yp, 2).z;
      double s = 0;
      for (std::size_t i = 0; i < z.size(); ++i) s += z[i] * lw[i];
      return s;
    };
    report("maxout", fd_loss_grad_worst(loss, y, g));
  }
  return all_ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Max-plus network training, pruning and analysis"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "key=value config file; flags override");

  TrainConfig cfg;
  std::string arch_str = "maxplus-mlp";
  DataOpts data;
  std::string out_dir = "out";
  std::string model_path, grid = "0.8,0.9,0.95,0.99,1.0";
  std::string seeds = "1,2,3", ratios = "0,0.5";
  double threshold = 1.0;
  std::size_t workers = 1;
  std::string pwl = "abs", approx_out;
  std::size_t grid_steps = 1000;

  auto add_train_flags = [&](CLI::App* c) {
    c->add_option("--arch", arch_str, "architecture");
    c->add_option("--units", cfg.units_J, "max-plus units J");
    c->add_option("--dropout", cfg.dropout_ratio, "connection dropout ratio");
    c->add_option("--seed", cfg.seed, "run seed");
    c->add_option("--epochs", cfg.epochs, "training epochs");
    c->add_option("--batch", cfg.batch_size, "mini-batch size");
    c->add_option("--lr0", cfg.lr0, "initial learning rate");
    c->add_option("--decay", cfg.decay_factor, "lr decay factor");
    c->add_option("--decay-steps", cfg.decay_every_steps, "steps between decays");
    c->add_option("--momentum", cfg.momentum, "momentum coefficient");
    c->add_option("--maxout-group", cfg.maxout_group, "maxout group size");
    c->add_option("--init-from", cfg.init_from, "model file donating conv trunk");
  };

  CLI::App* c_train = app.add_subcommand("train", "train a model");
  add_train_flags(c_train);
  add_data_flags(c_train, data);
  c_train->add_option("--out", out_dir, "output directory");

  CLI::App* c_eval = app.add_subcommand("eval", "evaluate a saved model");
  c_eval->add_option("--model", model_path, "model file")->required();
  add_data_flags(c_eval, data);

  CLI::App* c_prune = app.add_subcommand("prune", "threshold-prune a model head");
  c_prune->add_option("--model", model_path, "model file")->required();
  c_prune->add_option("--threshold", threshold, "threshold s in [0,1]");
  c_prune->add_option("--out", out_dir, "output directory");
  add_data_flags(c_prune, data);

  CLI::App* c_sweep = app.add_subcommand("sweep", "accuracy vs retained filters");
  c_sweep->add_option("--model", model_path, "model file")->required();
  c_sweep->add_option("--grid", grid, "comma-separated thresholds");
  c_sweep->add_option("--out", out_dir, "output directory");
  add_data_flags(c_sweep, data);

  CLI::App* c_study = app.add_subcommand("seed-study", "seed × dropout grid");
  add_train_flags(c_study);
  add_data_flags(c_study, data);
  c_study->add_option("--seeds", seeds, "comma-separated seeds");
  c_study->add_option("--ratios", ratios, "comma-separated dropout ratios");
  c_study->add_option("--workers", workers, "parallel training workers");
  c_study->add_option("--out", out_dir, "output directory");

  CLI::App* c_viz = app.add_subcommand("viz", "export weight/filter images");
  c_viz->add_option("--model", model_path, "model file")->required();
  c_viz->add_option("--out", out_dir, "output directory");

  CLI::App* c_approx = app.add_subcommand("approx", "piecewise-linear block demo");
  c_approx->add_option("--pwl", pwl, "abs, relu or random");
  c_approx->add_option("--grid-steps", grid_steps, "evaluation grid size");
  c_approx->add_option("--out", approx_out, "grid CSV path");

  app.add_subcommand("gradcheck", "finite-difference suites for every layer");

  // config file values act as defaults; command-line flags override them
  try {
    if (argc > 1) {
      for (int i = 1; i < argc - 1; ++i) {
        if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
      }
      if (!config_path.empty()) {
        for (const auto& [k, v] : read_config_file(config_path)) {
          if (k == "arch") arch_str = v;
          else if (k == "units") cfg.units_J = std::stoull(v);
          else if (k == "dropout") cfg.dropout_ratio = std::stod(v);
          else if (k == "seed") cfg.seed = std::stoull(v);
          else if (k == "epochs") cfg.epochs = std::stoull(v);
          else if (k == "batch") cfg.batch_size = std::stoull(v);
          else if (k == "lr0") cfg.lr0 = std::stod(v);
          else if (k == "decay") cfg.decay_factor = std::stod(v);
          else if (k == "decay_steps") cfg.decay_every_steps = std::stoull(v);
          else if (k == "momentum") cfg.momentum = std::stod(v);
          else throw ArgumentError("config file: unknown key " + k);
        }
      }
    }
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // --help is success; any parse error is usage
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    cfg.arch = arch_from_name(arch_str);
    if (c_train->parsed()) return run_train(cfg, data, out_dir);
    if (c_eval->parsed()) return run_eval(model_path, data);
    if (c_prune->parsed()) return run_prune(model_path, threshold, out_dir, data);
    if (c_sweep->parsed()) return run_sweep(model_path, grid, out_dir, data);
    if (c_study->parsed()) {
      return run_seed_study(cfg, seeds, ratios, out_dir, data, workers);
    }
    if (c_viz->parsed()) return run_viz(model_path, out_dir);
    if (c_approx->parsed()) return run_approx(pwl, grid_steps, approx_out);
    return run_gradcheck();
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericFault& e) {
    std::cerr << "numeric fault: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
