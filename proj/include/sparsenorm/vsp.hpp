#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparsenorm/imputation.hpp"

namespace sparsenorm {

/// A trained model seen through the sweep: its imputation strategy and a
/// batched forward pass over strategy-applied inputs (d x B -> out x B).
struct SweepModel {
  std::string model_id;
  ImputationStrategy strategy = ImputationStrategy::zero();
  std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)> forward;
};

// Reduces one output column to a scalar; `original` is the unperturbed instance.
using Scalarizer = std::function<double(const Eigen::VectorXd& output, const MaskedInstance& original)>;

// Mean over the output coordinates observed in `original` when the output has
// the input's dimension (autoencoders); otherwise the single output, or the
// mean of all outputs.
double default_scalarize(const Eigen::VectorXd& output, const MaskedInstance& original);

struct SweepConfig {
  std::vector<std::size_t> levels;  // empty: default_levels(||m||_1)
  std::size_t samples_per_level = 50;
  Scalarizer scalarizer;  // empty: default_scalarize
  std::uint64_t seed = 0;
};

// `count` evenly spaced integers from 1 to `observed`, rounded and deduplicated.
std::vector<std::size_t> default_levels(std::size_t observed, std::size_t count = 10);

struct SweepLevel {
  std::size_t level = 0;
  std::vector<double> samples;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
};

struct SweepReport {
  std::string instance_id;
  std::string model_id;
  std::string strategy;
  std::vector<SweepLevel> levels;
};

// Each sample keeps a uniformly random size-k subset of the instance's observed
// coordinates and drops the rest. Level index i draws from rng stream (seed, i).
SweepReport sparsity_sweep(const SweepModel& model, const MaskedInstance& inst, const std::string& instance_id,
                           const SweepConfig& config);

struct VspMetrics {
  double slope = 0.0;
  double pearson_r = 0.0;
  double range = 0.0;
  bool monotone_std = false;  // least-squares slope of std against level is negative
};

VspMetrics vsp_metrics(const SweepReport& report);
// Same statistics from raw level/mean/std columns.
VspMetrics vsp_metrics(const std::vector<double>& levels, const std::vector<double>& means,
                       const std::vector<double>& stds);

// CSV writers: instance_id,strategy,level,sample_index,prediction and
// level,mean,std.
void write_sweep_samples(const std::string& path, const std::vector<SweepReport>& reports);
void write_sweep_summary(const std::string& path, const SweepReport& report);

}  // namespace sparsenorm
