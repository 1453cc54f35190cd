#include "sparsenorm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "sparsenorm/random.hpp"

namespace sparsenorm {

AutoRecInputs prepare_autorec_inputs(const std::string& data_path, Encoding encoding, const RatingSplit& split) {
  AutoRecInputs in;
  in.data = load_movielens(data_path, encoding);
  in.splits = make_rating_splits(in.data.ratings, split);
  in.train = ratings_to_masked(in.splits.train, encoding, in.data.users, in.data.items).data;
  in.valid = ratings_to_masked(in.splits.valid, encoding, in.data.users, in.data.items).data;
  return in;
}

ImputationStrategy fit_strategy(ImputationStrategy::Kind kind, const Dataset& train) {
  switch (kind) {
    case ImputationStrategy::Kind::zero: return ImputationStrategy::zero();
    case ImputationStrategy::Kind::zero_sn: return ImputationStrategy::zero_sn(compute_K(train));
    case ImputationStrategy::Kind::mean: return ImputationStrategy::fit_mean(train);
    case ImputationStrategy::Kind::median: return ImputationStrategy::fit_median(train);
  }
  throw std::invalid_argument("unknown strategy");
}

AutoRecRun run_autorec(const AutoRecExperiment& exp, const AutoRecInputs& inputs,
                       const std::function<void(const EpochRecord&)>& on_epoch) {
  AutoRecRun run;
  run.fit = train_autorec(inputs.train, inputs.valid, fit_strategy(exp.strategy, inputs.train), exp.encoding, exp.model,
                          on_epoch);
  run.fit.model.split = exp.split;
  run.test_rmse = eval_rmse(run.fit.model, inputs.train, inputs.splits.test);
  return run;
}

SweepModel autorec_sweep_model(const AutoRecModel& model, const std::string& model_id) {
  return {model_id, model.strategy,
          [net = model.net](const Eigen::MatrixXd& x) -> Eigen::MatrixXd { return predict(net, x); }};
}

std::vector<std::size_t> pick_sweep_instances(const AutoRecInputs& inputs, Encoding encoding, std::size_t count,
                                              std::size_t min_observed, std::uint64_t seed) {
  std::vector<char> has_test(inputs.train.size(), 0);
  for (const auto& t : inputs.splits.test) {
    const auto inst = static_cast<std::size_t>((encoding == Encoding::user_vector ? t.user_id : t.item_id) - 1);
    if (inst < has_test.size()) has_test[inst] = 1;
  }
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < inputs.train.size(); ++i)
    if (has_test[i] && inputs.train[i].observed_count() >= static_cast<double>(min_observed)) eligible.push_back(i);
  if (eligible.size() < count)
    throw std::invalid_argument("only " + std::to_string(eligible.size()) + " eligible instances");
  auto rng = make_rng(seed, 5);
  std::shuffle(eligible.begin(), eligible.end(), rng);
  eligible.resize(count);
  std::sort(eligible.begin(), eligible.end());
  return eligible;
}

ImageSplits split_images(const Dataset& images, double test_fraction, double valid_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0) || !(valid_fraction >= 0.0 && valid_fraction < 1.0))
    throw std::invalid_argument("split fractions out of range");
  const std::size_t n = images.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed, 4);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  const auto n_valid = static_cast<std::size_t>(std::llround(valid_fraction * static_cast<double>(n - n_test)));
  if (n_test + n_valid >= n) throw std::invalid_argument("too few images to split");
  ImageSplits s{Dataset(images.feature_dim()), Dataset(images.feature_dim()), Dataset(images.feature_dim())};
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = i < n_test ? s.test : (i < n_test + n_valid ? s.valid : s.train);
    dst.add(images[order[i]]);
  }
  return s;
}

}  // namespace sparsenorm
