#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sparsenorm/theory.hpp"

namespace sparsenorm::theory {

/// The theorem grid run by `verify` and the acceptance binary.
struct VerifySettings {
  std::size_t trials = 100000;  // T1, T2, T4
  std::uint64_t seed = 1;
  bool t1 = true, t2 = true, t3 = true, t4 = true;
  std::size_t t3_configs = 20;  // per convex activation
  std::size_t t3_trials = 5000;
  std::vector<double> t4_grid{0.25, 0.5, 0.75};
  SnSetting t4_sn = SnSetting::known_mu(1.0);
  bool t4_negative_control = true;
};

// One row per (theorem, config). Negative-control rows pass when the
// unnormalised estimates are *not* flat.
std::vector<TheoremReport> run_verify_suite(const VerifySettings& settings);

// theorem_id,config_hash,label,predicted,estimate,std_error,trials,pass
void write_theorem_csv(const std::string& path, const std::vector<TheoremReport>& rows);

}  // namespace sparsenorm::theory
