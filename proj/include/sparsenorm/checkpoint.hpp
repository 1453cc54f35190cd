#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparsenorm/network.hpp"

namespace sparsenorm {

// Network checkpoints:
//
//   SNNET1\n
//   <L> <n_0> ... <n_L>\n
//   for each layer: <activation tag>\n  W^i (row-major) then b^i as
//                   little-endian float64
//
// Any number of tagged sections may follow. Each starts with a line holding
// the section tag (e.g. "IMPUTE1"). Layers without bias are recorded in an
// optional "NOBIAS1" section listing the 1-based layer numbers.
inline constexpr const char* kNetworkMagic = "SNNET1";

void write_network(std::ostream& out, const Network& net);
Network read_network(std::istream& in);

// Little-endian float64 / raw helpers shared by the section writers.
void write_f64(std::ostream& out, double v);
double read_f64(std::istream& in);
void write_f64s(std::ostream& out, const Eigen::VectorXd& v);
Eigen::VectorXd read_f64s(std::istream& in, Eigen::Index n);

// Reads one '\n'-terminated text line; nullopt at end of stream.
std::optional<std::string> read_line(std::istream& in);
std::string expect_line(std::istream& in, const char* context);

}  // namespace sparsenorm
