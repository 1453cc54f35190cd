#include "sparsenorm/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sparsenorm {

void write_f64(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
  out.write(bytes, 8);
}

double read_f64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("checkpoint truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

void write_f64s(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) write_f64(out, v[i]);
}

Eigen::VectorXd read_f64s(std::istream& in, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = read_f64(in);
  return v;
}

std::optional<std::string> read_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  return line;
}

std::string expect_line(std::istream& in, const char* context) {
  auto line = read_line(in);
  if (!line) throw std::runtime_error(std::string("checkpoint truncated reading ") + context);
  return *line;
}

void write_network(std::ostream& out, const Network& net) {
  net.validate();
  out << kNetworkMagic << '\n' << net.layers();
  for (std::size_t w : net.spec.widths) out << ' ' << w;
  out << '\n';
  for (std::size_t i = 0; i < net.layers(); ++i) {
    out << net.spec.activations[i].to_string() << '\n';
    const Eigen::MatrixXd& w = net.weights[i];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) write_f64(out, w(r, c));
    write_f64s(out, net.biases[i]);
  }
  bool any_nobias = false;
  for (bool b : net.spec.use_bias) any_nobias |= !b;
  if (any_nobias) {
    out << "NOBIAS1\n";
    bool first = true;
    for (std::size_t i = 0; i < net.layers(); ++i) {
      if (net.spec.use_bias[i]) continue;
      out << (first ? "" : " ") << i + 1;
      first = false;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing network checkpoint");
}

Network read_network(std::istream& in) {
  if (expect_line(in, "magic") != kNetworkMagic) throw std::runtime_error("not a SNNET1 checkpoint");
  std::istringstream header(expect_line(in, "header"));
  std::size_t L = 0;
  if (!(header >> L) || L == 0) throw std::runtime_error("bad checkpoint header");
  Network net;
  net.spec.widths.resize(L + 1);
  for (auto& w : net.spec.widths)
    if (!(header >> w)) throw std::runtime_error("bad checkpoint widths");
  net.spec.use_bias.assign(L, true);
  for (std::size_t i = 0; i < L; ++i) {
    net.spec.activations.push_back(Activation::parse(expect_line(in, "activation")));
    auto rows = static_cast<Eigen::Index>(net.spec.widths[i + 1]);
    auto cols = static_cast<Eigen::Index>(net.spec.widths[i]);
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = read_f64(in);
    net.weights.push_back(std::move(w));
    net.biases.push_back(read_f64s(in, rows));
  }
  // Optional NOBIAS1 section directly after the layers.
  auto pos = in.tellg();
  auto line = read_line(in);
  if (line && *line == "NOBIAS1") {
    std::istringstream ids(expect_line(in, "NOBIAS1"));
    std::size_t id = 0;
    while (ids >> id) {
      if (id == 0 || id > L) throw std::runtime_error("bad NOBIAS1 layer id");
      net.spec.use_bias[id - 1] = false;
    }
  } else {
    in.clear();
    in.seekg(pos);
  }
  net.validate();
  return net;
}

}  // namespace sparsenorm
