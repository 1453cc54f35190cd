#include "cli/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "sparsenorm/csv.hpp"
#include "sparsenorm/dropout_bench.hpp"
#include "sparsenorm/experiments.hpp"
#include "sparsenorm/verify_suite.hpp"

namespace sparsenorm::cli {

namespace {

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

void require_file(const std::string& path, const std::string& flag) {
  require(!path.empty(), "--" + flag + " is required");
  require(std::filesystem::is_regular_file(path), "--" + flag + ": no such file: " + path);
}

char single_char(const std::string& s, const std::string& flag) {
  if (s == "\\t" || s == "tab") return '\t';
  require(s.size() == 1, "--" + flag + " must be a single character");
  return s[0];
}

// ------------------------------------------------------------------ verify

class Verify : public Command {
 public:
  std::string name() const override { return "verify"; }
  std::string description() const override { return "Monte Carlo checks of the expectation identities"; }
  std::uint64_t seed() const override { return s_.seed; }

  void declare(Params& p) override {
    p.add("trials", s_.trials, "trials per estimate (T1, T2, T4)");
    p.add("seed", s_.seed, "base seed");
    p.add("theorems", theorems_, "subset of t1,t2,t3,t4");
    p.add("t3-configs", s_.t3_configs, "random configurations per convex activation");
    p.add("t3-trials", s_.t3_trials, "trials per convex configuration");
    p.add("mask-grid", s_.t4_grid, "mask means for the flatness check");
    p.add("sn", sn_, "normalisation in the flatness check: off, known_mu or estimated");
    p.add("sn-constant", sn_constant_, "K1 for known_mu, K for estimated");
    p.add("negative-control", s_.t4_negative_control, "also run the unnormalised control");
  }

  int execute(const std::string& out_dir, Streams io, std::vector<std::string>& outputs) override {
    s_.t1 = s_.t2 = s_.t3 = s_.t4 = false;
    for (const auto& t : theorems_) {
      if (t == "t1") s_.t1 = true;
      else if (t == "t2") s_.t2 = true;
      else if (t == "t3") s_.t3 = true;
      else if (t == "t4") s_.t4 = true;
      else throw ConfigError("unknown theorem '" + t + "'");
    }
    if (sn_ == "off") s_.t4_sn = theory::SnSetting::off();
    else if (sn_ == "known_mu") s_.t4_sn = theory::SnSetting::known_mu(sn_constant_);
    else if (sn_ == "estimated") s_.t4_sn = theory::SnSetting::estimated(sn_constant_);
    else throw ConfigError("unknown sn setting '" + sn_ + "'");
    require(s_.trials >= 2 && s_.t3_trials >= 2, "trials must be at least 2");
    require(!s_.t4 || !s_.t4_grid.empty(), "--mask-grid is empty");
    for (double m : s_.t4_grid) require(m >= 0.0 && m <= 1.0, "mask means must lie in [0, 1]");

    const auto rows = theory::run_verify_suite(s_);
    const auto path = join(out_dir, "theorems.csv");
    theory::write_theorem_csv(path, rows);
    outputs.push_back(path);
    std::size_t failed = 0;
    for (const auto& r : rows) {
      failed += r.pass ? 0 : 1;
      if (!r.pass) io.out << "FAIL " << theory::to_string(r.id) << ' ' << r.label << '\n';
    }
    io.out << rows.size() - failed << '/' << rows.size() << " theorem checks passed\n";
    return failed == 0 ? 0 : 1;
  }

 private:
  theory::VerifySettings s_{};
  std::vector<std::string> theorems_{"t1", "t2", "t3", "t4"};
  std::string sn_ = "known_mu";
  double sn_constant_ = 1.0;
};

// ----------------------------------------------------------- train-autorec

class TrainAutoRec : public Command {
 public:
  std::string name() const override { return "train-autorec"; }
  std::string description() const override { return "Train and evaluate the rating autoencoder"; }
  std::uint64_t seed() const override { return seed_; }

  void declare(Params& p) override {
    p.add("data", data_, "MovieLens u.data");
    p.add("encoding", encoding_, "user_vector or item_vector");
    p.add("strategy", strategy_, "zero, zero_sn, mean or median");
    p.add("hidden", hidden_, "hidden units");
    p.add("lambda", lambda_, "decoupled weight decay on the weight matrices");
    p.add("l2", l2_, "coupled L2 penalty (l2 / 2) ||W||^2 added to the loss");
    p.add("lr", lr_, "Adam learning rate");
    p.add("epochs", epochs_, "maximum epochs");
    p.add("patience", patience_, "early stopping patience (0: off)");
    p.add("batch", batch_, "minibatch size (0: full batch)");
    p.add("seed", seed_, "seed for the split, initialisation and batches");
    p.add("test-fraction", test_fraction_, "fraction of ratings held out for test");
    p.add("valid-fraction", valid_fraction_, "fraction of the rest held out for validation");
  }

  int execute(const std::string& out_dir, Streams io, std::vector<std::string>& outputs) override {
    require_file(data_, "data");
    AutoRecExperiment exp;
    exp.data_path = data_;
    exp.encoding = parse_encoding(encoding_);
    exp.strategy = ImputationStrategy::parse_kind(strategy_);
    exp.split = {seed_, test_fraction_, valid_fraction_};
    exp.model.hidden = hidden_;
    exp.model.l2 = l2_;
    exp.model.train.weight_decay = lambda_;
    exp.model.train.learning_rate = lr_;
    exp.model.train.max_epochs = epochs_;
    exp.model.train.early_stop_patience = patience_;
    exp.model.train.batch_size = batch_ == 0 ? std::nullopt : std::optional<std::size_t>(batch_);
    exp.model.train.seed = seed_;
    exp.model.train.validate();

    const auto inputs = prepare_autorec_inputs(data_, exp.encoding, exp.split);
    io.err << "train-autorec: " << inputs.splits.train.size() << " train, " << inputs.splits.valid.size()
           << " valid, " << inputs.splits.test.size() << " test ratings\n";
    const auto run = run_autorec(exp, inputs, [&](const EpochRecord& r) {
      if (r.epoch % 25 == 0) io.err << "epoch " << r.epoch << " train " << r.train_metric << " valid " << r.valid_metric << '\n';
    });

    const auto ckpt = join(out_dir, "autorec.ckpt");
    std::ofstream c(ckpt, std::ios::binary);
    write_autorec(c, run.fit.model);
    c.close();
    outputs.push_back(ckpt);

    const auto metrics = join(out_dir, "metrics.csv");
    CsvWriter csv(metrics, {"epoch", "split", "rmse"});
    for (const auto& h : run.fit.history) {
      csv << h.epoch << "train" << h.train_metric;
      csv.end_row();
      if (!inputs.splits.valid.empty()) {
        csv << h.epoch << "valid" << h.valid_metric;
        csv.end_row();
      }
    }
    csv << run.fit.best_epoch << "test" << run.test_rmse;
    csv.end_row();
    csv.close();
    outputs.push_back(metrics);
    io.out << "strategy " << strategy_ << " best_epoch " << run.fit.best_epoch << " test_rmse "
           << format_double(run.test_rmse) << '\n';
    return 0;
  }

 private:
  std::string data_, encoding_ = "user_vector", strategy_ = "zero";
  static inline const AutoRecConfig kDefaults{};
  std::size_t hidden_ = kDefaults.hidden, epochs_ = kDefaults.train.max_epochs,
              patience_ = kDefaults.train.early_stop_patience, batch_ = kDefaults.train.batch_size.value_or(0);
  double lambda_ = kDefaults.train.weight_decay, l2_ = kDefaults.l2, lr_ = kDefaults.train.learning_rate, test_fraction_ = RatingSplit{}.test_fraction,
         valid_fraction_ = RatingSplit{}.valid_fraction;
  std::uint64_t seed_ = 1;
};

// ------------------------------------------------------------------- sweep

class Sweep : public Command {
 public:
  std::string name() const override { return "sweep"; }
  std::string description() const override { return "Resample input sparsity for trained AutoRec instances"; }
  std::uint64_t seed() const override { return seed_; }

  void declare(Params& p) override {
    p.add("checkpoint", checkpoint_, "AutoRec checkpoint");
    p.add("data", data_, "MovieLens u.data used for training");
    p.add("instance", instances_, "1-based instance ids (user or item)");
    p.add("random-instances", random_instances_, "draw this many test instances when --instance is empty");
    p.add("min-observed", min_observed_, "minimum training ratings for drawn instances");
    p.add("levels", levels_, "observed-count levels (default: evenly spaced)");
    p.add("level-count", level_count_, "number of default levels");
    p.add("samples", samples_, "sub-masks per level");
    p.add("seed", seed_, "sampling seed");
    p.add("target-means", target_means_, "also write per-instance observed count and mean rating");
  }

  int execute(const std::string& out_dir, Streams io, std::vector<std::string>& outputs) override {
    require_file(checkpoint_, "checkpoint");
    require_file(data_, "data");
    std::ifstream c(checkpoint_, std::ios::binary);
    AutoRecModel model;
    try {
      model = read_autorec(c);
    } catch (const std::exception& e) {
      throw ConfigError("bad checkpoint " + checkpoint_ + ": " + e.what());
    }
    const auto inputs = prepare_autorec_inputs(data_, model.encoding, model.split);
    require(inputs.train.feature_dim() == model.net.spec.input_dim(), "checkpoint does not match the data dimensions");

    std::vector<std::size_t> picked;
    for (auto id : instances_) {
      require(id >= 1 && id <= inputs.train.size(), "--instance " + std::to_string(id) + " out of range");
      picked.push_back(id - 1);
    }
    if (picked.empty()) picked = pick_sweep_instances(inputs, model.encoding, random_instances_, min_observed_, seed_);

    const auto sweep_model = autorec_sweep_model(model, model.strategy.name());
    std::vector<SweepReport> reports;
    const auto metrics_path = join(out_dir, "metrics.csv");
    CsvWriter metrics(metrics_path, {"instance_id", "strategy", "slope", "pearson_r", "range", "monotone_std"});
    for (auto i : picked) {
      const auto& inst = inputs.train[i];
      require(inst.observed_count() >= 1.0, "instance " + std::to_string(i + 1) + " has no training ratings");
      SweepConfig cfg;
      cfg.samples_per_level = samples_;
      cfg.seed = seed_;
      cfg.levels = levels_.empty() ? default_levels(static_cast<std::size_t>(inst.observed_count()), level_count_)
                                   : levels_;
      auto report = sparsity_sweep(sweep_model, inst, std::to_string(i + 1), cfg);
      const auto m = vsp_metrics(report);
      metrics << report.instance_id << report.strategy << m.slope << m.pearson_r << m.range
              << (m.monotone_std ? "true" : "false");
      metrics.end_row();
      io.out << "instance " << report.instance_id << " strategy " << report.strategy << " slope "
             << format_double(m.slope) << " pearson_r " << format_double(m.pearson_r) << " range "
             << format_double(m.range) << " monotone_std " << (m.monotone_std ? "true" : "false") << '\n';
      reports.push_back(std::move(report));
    }
    metrics.close();

    const auto samples_path = join(out_dir, "sweep.csv");
    write_sweep_samples(samples_path, reports);
    outputs.push_back(samples_path);
    for (const auto& r : reports) {
      const auto path = join(out_dir, reports.size() == 1 ? "summary.csv" : "summary_" + r.instance_id + ".csv");
      write_sweep_summary(path, r);
      outputs.push_back(path);
    }
    outputs.push_back(metrics_path);

    if (target_means_) {
      const auto path = join(out_dir, "target_means.csv");
      CsvWriter csv(path, {"instance_id", "observed", "mean_rating"});
      for (std::size_t i = 0; i < inputs.train.size(); ++i) {
        const auto& inst = inputs.train[i];
        if (inst.observed_count() == 0.0) continue;
        csv << std::to_string(i + 1) << static_cast<std::size_t>(inst.observed_count())
            << inst.values().sum() / inst.observed_count();
        csv.end_row();
      }
      csv.close();
      outputs.push_back(path);
    }
    return 0;
  }

 private:
  std::string checkpoint_, data_;
  std::vector<std::size_t> instances_, levels_;
  std::size_t random_instances_ = 10, min_observed_ = 50, level_count_ = 10, samples_ = 50;
  std::uint64_t seed_ = 1;
  bool target_means_ = false;
};

// ----------------------------------------------------------- dropout-bench

class DropoutBench : public Command {
 public:
  std::string name() const override { return "dropout-bench"; }
  std::string description() const override { return "Plain versus normalised dropout across drop rates"; }
  std::uint64_t seed() const override { return seeds_.empty() ? 0 : seeds_.front(); }

  void declare(Params& p) override {
    p.add("data", data_, "delimited table with a header row");
    p.add("target", target_, "target column name");
    p.add("delimiter", delimiter_, "field delimiter (\\t for tab)");
    p.add("missing-token", missing_, "token marking a missing value");
    p.add("drop-rates", rates_, "drop rates in [0, 1)");
    p.add("variants", variants_, "plain and/or sn");
    p.add("seeds", seeds_, "one run per seed; the seed also fixes the split");
    p.add("hidden", cfg_.hidden, "hidden layer widths");
    p.add("lr", cfg_.train.learning_rate, "Adam learning rate");
    p.add("batch", batch_, "minibatch size");
    p.add("epochs", cfg_.train.max_epochs, "maximum epochs");
    p.add("patience", cfg_.train.early_stop_patience, "early stopping patience (0: off)");
    p.add("test-fraction", cfg_.test_fraction, "fraction of rows held out for test");
    p.add("valid-fraction", cfg_.valid_fraction, "fraction of the rest held out for validation");
  }

  int execute(const std::string& out_dir, Streams io, std::vector<std::string>& outputs) override {
    require_file(data_, "data");
    require(!target_.empty(), "--target is required");
    for (double r : rates_) require(r >= 0.0 && r < 1.0, "drop rates must lie in [0, 1)");
    require(!rates_.empty() && !variants_.empty() && !seeds_.empty(), "rates, variants and seeds must be non-empty");
    require(!cfg_.hidden.empty(), "--hidden is empty");
    std::vector<DropoutVariant> variants;
    for (const auto& v : variants_) variants.push_back(parse_dropout_variant(v));
    cfg_.train.batch_size = batch_;
    cfg_.train.validate();

    const auto table = load_table(data_, {single_char(delimiter_, "delimiter"), missing_, target_});
    const auto rows = dropout_benchmark(table, rates_, variants, seeds_, cfg_);
    const auto results = join(out_dir, "results.csv");
    write_benchmark_csv(results, rows);
    outputs.push_back(results);

    const auto summary_path = join(out_dir, "summary.csv");
    CsvWriter csv(summary_path, {"rate", "plain_mean", "sn_mean", "gap", "vsp_degree"});
    for (const auto& s : summarize_benchmark(rows)) {
      csv << s.rate << s.plain_mean << s.sn_mean << s.gap() << vsp_degree(cfg_.hidden.front(), s.rate);
      csv.end_row();
      io.out << "rate " << format_double(s.rate) << " plain " << format_double(s.plain_mean) << " sn "
             << format_double(s.sn_mean) << '\n';
    }
    csv.close();
    outputs.push_back(summary_path);
    return 0;
  }

 private:
  std::string data_, target_, delimiter_ = ",", missing_;
  std::vector<double> rates_{0.1, 0.5, 0.9};
  std::vector<std::string> variants_{"plain", "sn"};
  std::vector<std::uint64_t> seeds_{1, 2, 3, 4, 5};
  std::size_t batch_ = 128;
  MlpConfig cfg_{};
};

// -------------------------------------------------------------- train-made

class TrainMade : public Command {
 public:
  std::string name() const override { return "train-made"; }
  std::string description() const override { return "Train the masked autoregressive density estimator"; }
  std::uint64_t seed() const override { return seed_; }

  void declare(Params& p) override {
    p.add("data", data_, "idx3-ubyte image file");
    p.add("threshold", threshold_, "binarisation threshold as a fraction of 255");
    p.add("limit", limit_, "use only the first N images (0: all)");
    p.add("hidden", hidden_, "hidden layer widths");
    p.add("sn-mode", sn_mode_, "off, input or all");
    p.add("ordering", ordering_, "natural or random");
    p.add("lr", lr_, "Adam learning rate");
    p.add("epochs", epochs_, "epochs");
    p.add("batch", batch_, "minibatch size");
    p.add("seed", seed_, "seed for the split, masks, initialisation and batches");
    p.add("test-fraction", test_fraction_, "fraction of images held out for test");
    p.add("valid-fraction", valid_fraction_, "fraction of the rest held out for validation");
  }

  int execute(const std::string& out_dir, Streams io, std::vector<std::string>& outputs) override {
    require_file(data_, "data");
    require(ordering_ == "natural" || ordering_ == "random", "--ordering must be natural or random");
    require(!hidden_.empty(), "--hidden is empty");
    const SnMode mode = parse_sn_mode(sn_mode_);
    Dataset images;
    try {
      images = load_mnist_binarized(data_, threshold_, limit_);
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
    const auto split = split_images(images, test_fraction_, valid_fraction_, seed_);

    MadeConfig cfg;
    cfg.hidden = hidden_;
    cfg.ordering_seed = ordering_ == "random" ? std::optional<std::uint64_t>(seed_) : std::nullopt;
    cfg.connectivity_seed = seed_;
    cfg.train.learning_rate = lr_;
    cfg.train.max_epochs = epochs_;
    cfg.train.batch_size = batch_;
    cfg.train.early_stop_patience = 0;
    cfg.train.seed = seed_;

    if (mode == SnMode::all) {
      const double err = made_mask_invariant_error(make_made(images.feature_dim(), mode, 1.0, cfg));
      io.err << "train-made: normalised mask row-sum error " << err << '\n';
      if (err > 1e-12) {
        io.out << "mask row-sum invariant violated: " << format_double(err) << '\n';
        return 1;
      }
    }
    io.err << "train-made: " << split.train.size() << " train, " << split.valid.size() << " valid, "
           << split.test.size() << " test images, K " << compute_K(split.train) << '\n';
    const auto fit = train_made(split.train, split.valid, mode, cfg, [&](const EpochRecord& r) {
      io.err << "epoch " << r.epoch << " train " << r.train_metric << " valid " << r.valid_metric << '\n';
    });
    const double test_nll = eval_nll(fit.model, split.test);

    const auto ckpt = join(out_dir, "made.ckpt");
    std::ofstream c(ckpt, std::ios::binary);
    write_made(c, fit.model);
    c.close();
    outputs.push_back(ckpt);

    const auto path = join(out_dir, "nll.csv");
    CsvWriter csv(path, {"epoch", "split", "nll"});
    for (const auto& h : fit.history) {
      csv << h.epoch << "train" << h.train_metric;
      csv.end_row();
      if (!split.valid.empty()) {
        csv << h.epoch << "valid" << h.valid_metric;
        csv.end_row();
      }
    }
    csv << fit.history.back().epoch << "test" << test_nll;
    csv.end_row();
    csv.close();
    outputs.push_back(path);
    io.out << "sn_mode " << sn_mode_ << " test_nll " << format_double(test_nll) << '\n';
    return 0;
  }

 private:
  std::string data_, sn_mode_ = "off", ordering_ = "natural";
  double threshold_ = 0.5, lr_ = 0.005, test_fraction_ = 0.2, valid_fraction_ = 0.1;
  std::size_t limit_ = 0, epochs_ = 20, batch_ = 100;
  std::vector<std::size_t> hidden_{500};
  std::uint64_t seed_ = 1;
};

// ------------------------------------------------------------------ impute

class Impute : public Command {
 public:
  std::string name() const override { return "impute"; }
  std::string description() const override { return "Apply an imputation strategy to a delimited table"; }

  void declare(Params& p) override {
    p.add("data", data_, "delimited table with a header row");
    p.add("strategy", strategy_, "zero, zero_sn, mean or median");
    p.add("fit-data", fit_data_, "table the strategy statistics are fitted on (default: --data)");
    p.add("target", target_, "column passed through unchanged");
    p.add("delimiter", delimiter_, "field delimiter (\\t for tab)");
    p.add("missing-token", missing_, "token marking a missing value");
  }

  int execute(const std::string& out_dir, Streams io, std::vector<std::string>& outputs) override {
    require_file(data_, "data");
    if (!fit_data_.empty()) require_file(fit_data_, "fit-data");
    const TableOptions opts{single_char(delimiter_, "delimiter"), missing_,
                            target_.empty() ? std::nullopt : std::optional<std::string>(target_)};
    const auto table = load_table(data_, opts);
    const auto fit_table = fit_data_.empty() ? table : load_table(fit_data_, opts);
    require(fit_table.feature_names == table.feature_names, "--fit-data columns differ from --data");
    const auto strategy = fit_strategy(ImputationStrategy::parse_kind(strategy_), fit_table.features);
    const Eigen::MatrixXd x = strategy.apply(table.features);

    std::vector<std::string> header = table.feature_names;
    if (!target_.empty()) header.push_back(target_);
    const auto path = join(out_dir, "imputed.csv");
    CsvWriter csv(path, header);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) csv << x(i, j);
      if (!target_.empty()) csv << table.target(j);
      csv.end_row();
    }
    csv.close();
    outputs.push_back(path);
    io.out << "imputed " << x.cols() << " rows with " << strategy.name() << '\n';
    return 0;
  }

 private:
  std::string data_, strategy_ = "zero", fit_data_, target_, delimiter_ = ",", missing_;
};

}  // namespace

std::vector<std::unique_ptr<Command>> make_commands() {
  std::vector<std::unique_ptr<Command>> c;
  c.push_back(std::make_unique<Verify>());
  c.push_back(std::make_unique<TrainAutoRec>());
  c.push_back(std::make_unique<Sweep>());
  c.push_back(std::make_unique<DropoutBench>());
  c.push_back(std::make_unique<TrainMade>());
  c.push_back(std::make_unique<Impute>());
  return c;
}

}  // namespace sparsenorm::cli
