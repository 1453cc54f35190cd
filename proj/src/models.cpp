#include "sparsenorm/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "sparsenorm/checkpoint.hpp"
#include "sparsenorm/csv.hpp"
#include "sparsenorm/random.hpp"

namespace sparsenorm {

namespace {

void check_same_shape(const Dataset& a, const Dataset& b, const char* what) {
  if (a.feature_dim() != b.feature_dim() || a.size() != b.size())
    throw std::invalid_argument(std::string(what) + ": datasets differ in shape");
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("bad number '" + s + "'");
  return v;
}

// Index permutation for one epoch; identity order for full batch.
std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (shuffle) std::shuffle(order.begin(), order.end(), rng);
  return order;
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx, std::size_t begin,
                               std::size_t end) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(end - begin));
  for (std::size_t i = begin; i < end; ++i) out.col(static_cast<Eigen::Index>(i - begin)) = m.col(static_cast<Eigen::Index>(idx[i]));
  return out;
}

}  // namespace

// ---------------------------------------------------------------- AutoRec

AutoRecObjective autorec_objective(const Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                                   const Eigen::MatrixXd& mask, double l2) {
  auto trace = forward_batch(net, inputs);
  const double count = mask.sum();
  const Eigen::MatrixXd resid = (trace.output() - targets).cwiseProduct(mask);
  AutoRecObjective obj;
  obj.loss = count > 0.0 ? resid.squaredNorm() / count : 0.0;
  const Eigen::MatrixXd grad = count > 0.0 ? Eigen::MatrixXd(resid * (2.0 / count))
                                           : Eigen::MatrixXd::Zero(resid.rows(), resid.cols());
  obj.grads = backward(net, trace, grad);
  if (l2 > 0.0) {
    for (std::size_t i = 0; i < net.layers(); ++i) {
      obj.loss += 0.5 * l2 * net.weights[i].squaredNorm();
      obj.grads.weights[i] += l2 * net.weights[i];
    }
  }
  return obj;
}

Eigen::MatrixXd autorec_predict(const AutoRecModel& model, const Dataset& inputs) {
  return predict(model.net, model.strategy.apply(inputs));
}

double clipped_rmse(const Eigen::MatrixXd& predictions, const Dataset& targets) {
  if (predictions.cols() != static_cast<Eigen::Index>(targets.size()) ||
      predictions.rows() != static_cast<Eigen::Index>(targets.feature_dim()))
    throw std::invalid_argument("clipped_rmse: shape mismatch");
  double se = 0.0, n = 0.0;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const auto& t = targets[j];
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      if (t.mask()(i) == 0.0) continue;
      const double p = std::clamp(predictions(i, static_cast<Eigen::Index>(j)), 1.0, 5.0);
      se += (p - t.values()(i)) * (p - t.values()(i));
      n += 1.0;
    }
  }
  return n > 0.0 ? std::sqrt(se / n) : 0.0;
}

double eval_rmse(const AutoRecModel& model, const Dataset& train_inputs, const std::vector<RatingTriple>& test) {
  if (test.empty()) throw std::invalid_argument("eval_rmse: no test ratings");
  const Eigen::MatrixXd pred = autorec_predict(model, train_inputs);
  const bool by_user = model.encoding == Encoding::user_vector;
  double se = 0.0;
  for (const auto& t : test) {
    const auto inst = (by_user ? t.user_id : t.item_id) - 1;
    const auto feat = (by_user ? t.item_id : t.user_id) - 1;
    if (inst < 0 || feat < 0 || inst >= pred.cols() || feat >= pred.rows())
      throw std::invalid_argument("eval_rmse: test rating outside the model's index space");
    const double p = std::clamp(pred(feat, inst), 1.0, 5.0);
    se += (p - t.rating) * (p - t.rating);
  }
  return std::sqrt(se / static_cast<double>(test.size()));
}

AutoRecFit train_autorec(const Dataset& train, const Dataset& valid, const ImputationStrategy& strategy,
                         Encoding encoding, const AutoRecConfig& cfg,
                         const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.train.validate();
  if (cfg.hidden == 0) throw std::invalid_argument("AutoRec needs at least one hidden unit");
  if (train.empty()) throw std::invalid_argument("AutoRec training set is empty");
  const bool has_valid = valid.size() > 0 && valid.observed_total() > 0.0;
  if (valid.feature_dim() != train.feature_dim()) throw std::invalid_argument("train_autorec: dimension mismatch");
  if (valid.size() > 0) check_same_shape(train, valid, "train_autorec");

  const std::size_t d = train.feature_dim();
  NetworkSpec spec{{d, cfg.hidden, d}, {Activation::sigmoid(), Activation::identity()}, {true, true}};
  AutoRecFit fit;
  fit.model.net = build_network(spec, Init::xavier(), cfg.train.seed);
  fit.model.strategy = strategy;
  fit.model.encoding = encoding;

  const Eigen::MatrixXd inputs = strategy.apply(train);
  const Eigen::MatrixXd targets = train.values_matrix();
  const Eigen::MatrixXd mask = train.mask_matrix();
  const std::size_t N = train.size();
  const std::size_t B = cfg.train.batch_size.value_or(N);
  auto rng = make_rng(cfg.train.seed, 1);
  AdamState adam = AdamState::for_network(fit.model.net);
  EarlyStopping stopper(cfg.train.early_stop_patience);
  Network best = fit.model.net;

  for (std::size_t epoch = 1; epoch <= cfg.train.max_epochs; ++epoch) {
    auto order = epoch_order(N, B < N, rng);
    for (std::size_t b = 0; b < N; b += B) {
      const std::size_t e = std::min(N, b + B);
      AutoRecObjective obj = B >= N ? autorec_objective(fit.model.net, inputs, targets, mask, cfg.l2)
                                    : autorec_objective(fit.model.net, gather_columns(inputs, order, b, e),
                                                        gather_columns(targets, order, b, e),
                                                        gather_columns(mask, order, b, e), cfg.l2);
      adam_step(fit.model.net, obj.grads, adam, cfg.train);
    }
    const Eigen::MatrixXd pred = predict(fit.model.net, inputs);
    EpochRecord rec{epoch, clipped_rmse(pred, train), has_valid ? clipped_rmse(pred, valid) : 0.0};
    fit.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (!has_valid) {
      fit.best_epoch = epoch;
      continue;
    }
    if (stopper.update(rec.valid_metric)) {
      best = fit.model.net;
      fit.best_epoch = epoch;
    }
    if (stopper.should_stop()) break;
  }
  if (has_valid) fit.model.net = std::move(best);
  return fit;
}

// ------------------------------------------------------------------- MADE

SnMode parse_sn_mode(const std::string& name) {
  if (name == "off") return SnMode::off;
  if (name == "input") return SnMode::input;
  if (name == "all") return SnMode::all;
  throw std::invalid_argument("unknown sn mode '" + name + "'");
}

std::string to_string(SnMode m) {
  switch (m) {
    case SnMode::off: return "off";
    case SnMode::input: return "input";
    case SnMode::all: return "all";
  }
  return "off";
}

MadeMasks build_made_masks(const std::vector<std::size_t>& widths, std::optional<std::uint64_t> ordering_seed,
                           std::uint64_t connectivity_seed) {
  if (widths.size() < 3) throw std::invalid_argument("MADE needs at least one hidden layer");
  const std::size_t d = widths.front();
  if (d < 2) throw std::invalid_argument("MADE needs d >= 2");
  if (widths.back() != d) throw std::invalid_argument("MADE output width must equal input width");
  for (auto w : widths)
    if (w == 0) throw std::invalid_argument("MADE widths must be positive");

  MadeMasks out;
  out.order.resize(d);
  std::iota(out.order.begin(), out.order.end(), 0);
  if (ordering_seed) {
    auto rng = make_rng(*ordering_seed);
    std::shuffle(out.order.begin(), out.order.end(), rng);
  }
  std::vector<std::size_t> prev(d);
  for (std::size_t k = 0; k < d; ++k) prev[k] = out.order[k] + 1;

  auto rng = make_rng(connectivity_seed);
  std::uniform_int_distribution<std::size_t> deg(1, d - 1);
  for (std::size_t layer = 1; layer + 1 < widths.size(); ++layer) {
    std::vector<std::size_t> cur(widths[layer]);
    for (auto& c : cur) c = deg(rng);
    Eigen::MatrixXd M(static_cast<Eigen::Index>(cur.size()), static_cast<Eigen::Index>(prev.size()));
    for (std::size_t j = 0; j < cur.size(); ++j)
      for (std::size_t k = 0; k < prev.size(); ++k)
        M(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = cur[j] >= prev[k] ? 1.0 : 0.0;
    out.masks.push_back(std::move(M));
    prev = std::move(cur);
  }
  Eigen::MatrixXd M(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(prev.size()));
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < prev.size(); ++k)
      M(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = out.order[j] + 1 > prev[k] ? 1.0 : 0.0;
  out.masks.push_back(std::move(M));
  return out;
}

Eigen::MatrixXd normalize_mask(const Eigen::MatrixXd& M, std::size_t n_i) {
  if (n_i == 0) throw std::invalid_argument("normalize_mask: n_i must be positive");
  const double avg = M.sum() / static_cast<double>(n_i);
  Eigen::MatrixXd out = M;
  for (Eigen::Index j = 0; j < M.rows(); ++j) {
    const double row = M.row(j).sum();
    out.row(j) *= avg / std::max(row, 1.0);
  }
  return out;
}

MadeModel make_made(std::size_t d, SnMode sn_mode, double K, const MadeConfig& cfg) {
  std::vector<std::size_t> widths{d};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(d);
  MadeModel model;
  model.masks = build_made_masks(widths, cfg.ordering_seed, cfg.connectivity_seed);
  model.sn_mode = sn_mode;
  model.K = K;
  NetworkSpec spec = NetworkSpec::uniform(widths, Activation::relu());
  spec.activations.back() = Activation::identity();
  model.net = build_network(spec, Init::xavier(), cfg.train.seed);
  model.net.weights.back().setZero();
  for (std::size_t i = 0; i < model.masks.masks.size(); ++i) {
    const auto& M = model.masks.masks[i];
    model.net.connectivity.push_back(sn_mode == SnMode::all ? normalize_mask(M, static_cast<std::size_t>(M.rows())) : M);
  }
  return model;
}

Eigen::MatrixXd made_inputs(const MadeModel& model, const Dataset& data) {
  Eigen::MatrixXd x = data.values_matrix();
  if (model.sn_mode == SnMode::off) return x;
  return sparsity_normalize(x, data.mask_matrix(), model.K);
}

namespace {

Eigen::MatrixXd sigmoid_of(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p(z.rows(), z.cols());
  const auto sig = Activation::sigmoid();
  for (Eigen::Index i = 0; i < z.size(); ++i) p(i) = sig(z(i));
  return p;
}

double made_nll(const MadeModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& x) {
  return nll_from_probabilities(sigmoid_of(predict(model.net, inputs)), x);
}

}  // namespace

double nll_from_probabilities(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& x, double eps) {
  if (probs.rows() != x.rows() || probs.cols() != x.cols()) throw std::invalid_argument("nll: shape mismatch");
  if (x.cols() == 0) throw std::invalid_argument("nll: empty batch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double p = std::clamp(probs(i), eps, 1.0 - eps);
    total -= x(i) != 0.0 ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(x.cols());
}

double eval_nll(const MadeModel& model, const Dataset& test) {
  return made_nll(model, made_inputs(model, test), test.values_matrix());
}

MadeFit train_made(const Dataset& train, const Dataset& valid, SnMode sn_mode, const MadeConfig& cfg,
                   const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.train.validate();
  if (train.empty()) throw std::invalid_argument("MADE training set is empty");
  if (!valid.empty() && valid.feature_dim() != train.feature_dim())
    throw std::invalid_argument("train_made: dimension mismatch");
  MadeFit fit;
  fit.model = make_made(train.feature_dim(), sn_mode, compute_K(train), cfg);

  const Eigen::MatrixXd inputs = made_inputs(fit.model, train);
  const Eigen::MatrixXd x = train.values_matrix();
  const Eigen::MatrixXd v_inputs = valid.empty() ? Eigen::MatrixXd() : made_inputs(fit.model, valid);
  const Eigen::MatrixXd v_x = valid.empty() ? Eigen::MatrixXd() : valid.values_matrix();
  auto record = [&](std::size_t epoch) {
    EpochRecord rec{epoch, made_nll(fit.model, inputs, x), valid.empty() ? 0.0 : made_nll(fit.model, v_inputs, v_x)};
    fit.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  };
  record(0);

  const std::size_t N = train.size();
  const std::size_t B = cfg.train.batch_size.value_or(N);
  auto rng = make_rng(cfg.train.seed, 1);
  AdamState adam = AdamState::for_network(fit.model.net);
  EarlyStopping stopper(cfg.train.early_stop_patience);
  for (std::size_t epoch = 1; epoch <= cfg.train.max_epochs; ++epoch) {
    auto order = epoch_order(N, B < N, rng);
    for (std::size_t b = 0; b < N; b += B) {
      const std::size_t e = std::min(N, b + B);
      const Eigen::MatrixXd xb = gather_columns(x, order, b, e);
      auto trace = forward_batch(fit.model.net, gather_columns(inputs, order, b, e));
      // d/dz of the Bernoulli NLL with logits, averaged over the batch
      const Eigen::MatrixXd grad = (sigmoid_of(trace.output()) - xb) / static_cast<double>(e - b);
      adam_step(fit.model.net, backward(fit.model.net, trace, grad), adam, cfg.train);
    }
    record(epoch);
    if (!valid.empty() && (stopper.update(fit.history.back().valid_metric), stopper.should_stop())) break;
  }
  return fit;
}

double made_mask_invariant_error(const MadeModel& model) {
  double worst = 0.0;
  if (model.sn_mode != SnMode::all) return worst;
  for (std::size_t i = 0; i < model.masks.masks.size(); ++i) {
    const auto& M = model.masks.masks[i];
    const auto& S = model.net.connectivity[i];
    const double avg = M.sum() / static_cast<double>(M.rows());
    for (Eigen::Index j = 0; j < S.rows(); ++j)
      if (M.row(j).sum() > 0.0) worst = std::max(worst, std::abs(S.row(j).sum() - avg));
  }
  return worst;
}

// --------------------------------------------------------------- checkpoints

void write_autorec(std::ostream& out, const AutoRecModel& model) {
  write_network(out, model.net);
  out << "AUTOREC1\n"
      << "encoding " << to_string(model.encoding) << '\n'
      << "split_seed " << model.split.seed << '\n'
      << "test_fraction " << format_double(model.split.test_fraction) << '\n'
      << "valid_fraction " << format_double(model.split.valid_fraction) << '\n'
      << "END\n";
  model.strategy.write(out);
  if (!out) throw std::runtime_error("failed writing AutoRec checkpoint");
}

AutoRecModel read_autorec(std::istream& in) {
  AutoRecModel model;
  model.net = read_network(in);
  if (expect_line(in, "AUTOREC1 tag") != "AUTOREC1") throw std::runtime_error("expected AUTOREC1 section");
  while (true) {
    const std::string line = expect_line(in, "AUTOREC1 entry");
    if (line == "END") break;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw std::runtime_error("bad AUTOREC1 line '" + line + "'");
    const std::string key = line.substr(0, sp), value = line.substr(sp + 1);
    if (key == "encoding") model.encoding = parse_encoding(value);
    else if (key == "split_seed") model.split.seed = std::stoull(value);
    else if (key == "test_fraction") model.split.test_fraction = parse_double(value);
    else if (key == "valid_fraction") model.split.valid_fraction = parse_double(value);
    else throw std::runtime_error("unknown AUTOREC1 key '" + key + "'");
  }
  model.strategy = ImputationStrategy::read(in);
  const auto& w = model.net.spec.widths;
  if (w.size() != 3 || w.front() != w.back()) throw std::runtime_error("AutoRec checkpoint has wrong shape");
  return model;
}

void write_made(std::ostream& out, const MadeModel& model) {
  const Network& net = model.net;
  // connectivity is rebuilt from the binary masks on load
  Network plain = net;
  plain.connectivity.clear();
  write_network(out, plain);
  const std::size_t d = net.spec.input_dim();
  out << "MADE1\n" << d << ' ' << to_string(model.sn_mode) << '\n';
  write_f64(out, model.K);
  out << '\n';
  for (std::size_t k = 0; k < d; ++k) out << (k ? " " : "") << model.masks.order[k];
  out << '\n';
  for (const auto& M : model.masks.masks) {
    std::string bytes(static_cast<std::size_t>(M.size()), '\0');
    std::size_t n = 0;
    for (Eigen::Index r = 0; r < M.rows(); ++r)
      for (Eigen::Index c = 0; c < M.cols(); ++c) bytes[n++] = M(r, c) != 0.0 ? 1 : 0;
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  out << '\n';
  if (!out) throw std::runtime_error("failed writing MADE checkpoint");
}

MadeModel read_made(std::istream& in) {
  MadeModel model;
  model.net = read_network(in);
  if (expect_line(in, "MADE1 tag") != "MADE1") throw std::runtime_error("expected MADE1 section");
  std::istringstream head(expect_line(in, "MADE1 header"));
  std::size_t d = 0;
  std::string mode;
  if (!(head >> d >> mode) || d != model.net.spec.input_dim()) throw std::runtime_error("bad MADE1 header");
  model.sn_mode = parse_sn_mode(mode);
  model.K = read_f64(in);
  expect_line(in, "MADE1 K terminator");
  std::istringstream order(expect_line(in, "MADE1 ordering"));
  model.masks.order.resize(d);
  for (auto& o : model.masks.order)
    if (!(order >> o) || o >= d) throw std::runtime_error("bad MADE1 ordering");
  for (std::size_t i = 0; i < model.net.layers(); ++i) {
    const auto rows = static_cast<Eigen::Index>(model.net.spec.widths[i + 1]);
    const auto cols = static_cast<Eigen::Index>(model.net.spec.widths[i]);
    std::string bytes(static_cast<std::size_t>(rows * cols), '\0');
    if (!in.read(bytes.data(), static_cast<std::streamsize>(bytes.size())))
      throw std::runtime_error("MADE1 masks truncated");
    Eigen::MatrixXd M(rows, cols);
    std::size_t n = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        const char b = bytes[n++];
        if (b != 0 && b != 1) throw std::runtime_error("MADE1 mask is not binary");
        M(r, c) = b;
      }
    model.net.connectivity.push_back(model.sn_mode == SnMode::all ? normalize_mask(M, static_cast<std::size_t>(rows)) : M);
    model.masks.masks.push_back(std::move(M));
  }
  expect_line(in, "MADE1 terminator");
  model.net.validate();
  return model;
}

}  // namespace sparsenorm
