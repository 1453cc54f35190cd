#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sparsenorm/datasets.hpp"
#include "sparsenorm/models.hpp"
#include "sparsenorm/vsp.hpp"

namespace sparsenorm {

// ------------------------------------------------------------ AutoRec runs

struct AutoRecExperiment {
  std::string data_path;  // MovieLens u.data
  Encoding encoding = Encoding::user_vector;
  ImputationStrategy::Kind strategy = ImputationStrategy::Kind::zero;
  RatingSplit split{};
  AutoRecConfig model{};
};

struct AutoRecInputs {
  RatingData data;
  RatingSplits splits;
  Dataset train;  // training ratings, the model's inputs at every stage
  Dataset valid;
};

// Loads the ratings and rebuilds the split; identical for equal split settings.
AutoRecInputs prepare_autorec_inputs(const std::string& data_path, Encoding encoding, const RatingSplit& split);

// Strategy of the given kind fitted on the training instances.
ImputationStrategy fit_strategy(ImputationStrategy::Kind kind, const Dataset& train);

struct AutoRecRun {
  AutoRecFit fit;
  double test_rmse = 0.0;
};

AutoRecRun run_autorec(const AutoRecExperiment& exp, const AutoRecInputs& inputs,
                       const std::function<void(const EpochRecord&)>& on_epoch = nullptr);

SweepModel autorec_sweep_model(const AutoRecModel& model, const std::string& model_id);

// Instances with at least one test rating and at least `min_observed`
// training ratings, `count` of them drawn without replacement, ascending.
std::vector<std::size_t> pick_sweep_instances(const AutoRecInputs& inputs, Encoding encoding, std::size_t count,
                                              std::size_t min_observed, std::uint64_t seed);

// --------------------------------------------------------------- MADE runs

struct ImageSplits {
  Dataset train, valid, test;
};

// Shuffles before splitting (idx sources are often sorted by label).
ImageSplits split_images(const Dataset& images, double test_fraction, double valid_fraction, std::uint64_t seed);

}  // namespace sparsenorm
