#include "sparsenorm/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "sparsenorm/csv.hpp"
#include "sparsenorm/random.hpp"

namespace sparsenorm {

namespace {

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  if (first == last) return false;
  if constexpr (std::is_floating_point_v<T>) {
    if (*first == '+') ++first;
  }
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return in;
}

}  // namespace

Encoding parse_encoding(const std::string& name) {
  if (name == "user_vector" || name == "user") return Encoding::user_vector;
  if (name == "item_vector" || name == "item") return Encoding::item_vector;
  throw std::invalid_argument("unknown encoding '" + name + "'");
}

std::string to_string(Encoding e) { return e == Encoding::user_vector ? "user_vector" : "item_vector"; }

RatingData load_movielens(const std::string& path, Encoding encoding) {
  auto in = open_input(path);
  RatingData out;
  out.encoding = encoding;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto f = split_fields(line, '\t');
    if (f.size() != 4) throw ParseError(path, lineno, "expected 4 tab-separated fields, got " + std::to_string(f.size()));
    RatingTriple t;
    if (!parse_number(f[0], t.user_id) || !parse_number(f[1], t.item_id) || !parse_number(f[2], t.rating) ||
        !parse_number(f[3], t.timestamp))
      throw ParseError(path, lineno, "malformed field");
    if (t.user_id < 1 || t.item_id < 1) throw ParseError(path, lineno, "ids must be >= 1");
    out.users = std::max<std::size_t>(out.users, static_cast<std::size_t>(t.user_id));
    out.items = std::max<std::size_t>(out.items, static_cast<std::size_t>(t.item_id));
    out.ratings.push_back(t);
  }
  if (out.ratings.empty()) throw std::invalid_argument(path + ": no ratings");
  return out;
}

std::pair<std::vector<RatingTriple>, std::vector<RatingTriple>> split_ratings(const std::vector<RatingTriple>& ratings,
                                                                              double test_fraction,
                                                                              std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("test_fraction must lie in (0, 1)");
  const std::size_t n = ratings.size();
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<char> is_test(n, 0);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = 1;

  std::pair<std::vector<RatingTriple>, std::vector<RatingTriple>> out;
  out.first.reserve(n - n_test);
  out.second.reserve(n_test);
  for (std::size_t i = 0; i < n; ++i) (is_test[i] ? out.second : out.first).push_back(ratings[i]);
  return out;
}

RatingSplits make_rating_splits(const std::vector<RatingTriple>& ratings, const RatingSplit& split) {
  if (!(split.valid_fraction >= 0.0 && split.valid_fraction < 1.0))
    throw std::invalid_argument("valid_fraction must lie in [0, 1)");
  RatingSplits out;
  auto [rest, test] = split_ratings(ratings, split.test_fraction, split.seed);
  out.test = std::move(test);
  if (split.valid_fraction > 0.0) {
    auto [train, valid] = split_ratings(rest, split.valid_fraction, stream_seed(split.seed, 1));
    out.train = std::move(train);
    out.valid = std::move(valid);
  } else {
    out.train = std::move(rest);
  }
  return out;
}

RatingDataset ratings_to_masked(const std::vector<RatingTriple>& ratings, Encoding encoding, std::size_t users,
                                std::size_t items) {
  const bool by_user = encoding == Encoding::user_vector;
  const std::size_t n = by_user ? users : items;
  const std::size_t d = by_user ? items : users;
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
  Eigen::MatrixXd mask = values;
  RatingDataset out;
  for (const auto& t : ratings) {
    if (t.user_id < 1 || t.item_id < 1 || static_cast<std::size_t>(t.user_id) > users ||
        static_cast<std::size_t>(t.item_id) > items)
      throw std::invalid_argument("rating id outside dims");
    const auto inst = (by_user ? t.user_id : t.item_id) - 1;
    const auto feat = (by_user ? t.item_id : t.user_id) - 1;
    if (mask(feat, inst) != 0.0) ++out.duplicates;
    values(feat, inst) = t.rating;
    mask(feat, inst) = 1.0;
  }
  std::vector<MaskedInstance> instances;
  instances.reserve(n);
  for (Eigen::Index j = 0; j < values.cols(); ++j) instances.emplace_back(values.col(j), mask.col(j));
  out.data = Dataset(d, std::move(instances));
  return out;
}

std::vector<RatingTriple> masked_to_ratings(const Dataset& data, Encoding encoding) {
  const bool by_user = encoding == Encoding::user_vector;
  std::vector<RatingTriple> out;
  for (std::size_t j = 0; j < data.size(); ++j) {
    for (auto f : data[j].observed_indices()) {
      RatingTriple t;
      const auto inst = static_cast<std::int64_t>(j) + 1;
      const auto feat = static_cast<std::int64_t>(f) + 1;
      t.user_id = by_user ? inst : feat;
      t.item_id = by_user ? feat : inst;
      t.rating = data[j].values()(f);
      out.push_back(t);
    }
  }
  return out;
}

Dataset mcar_mask(const Eigen::MatrixXd& data, double missing_rate, std::uint64_t seed) {
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw std::invalid_argument("missing_rate must lie in [0, 1)");
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset out(static_cast<std::size_t>(data.cols()));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    Eigen::VectorXd m(data.cols());
    for (Eigen::Index j = 0; j < data.cols(); ++j) m(j) = u(rng) < missing_rate ? 0.0 : 1.0;
    out.add(MaskedInstance(data.row(i).transpose(), std::move(m)));
  }
  return out;
}

MinMaxScaler MinMaxScaler::fit(const Dataset& train) {
  const auto d = static_cast<Eigen::Index>(train.feature_dim());
  MinMaxScaler s;
  s.min_ = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::infinity());
  Eigen::VectorXd max = Eigen::VectorXd::Constant(d, -std::numeric_limits<double>::infinity());
  for (const auto& inst : train.instances()) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (inst.mask()(j) == 0.0) continue;
      s.min_(j) = std::min(s.min_(j), inst.values()(j));
      max(j) = std::max(max(j), inst.values()(j));
    }
  }
  s.range_.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!std::isfinite(s.min_(j))) {
      s.min_(j) = 0.0;
      s.range_(j) = 0.0;
    } else {
      s.range_(j) = max(j) - s.min_(j);
    }
  }
  return s;
}

double MinMaxScaler::transform(Eigen::Index feature, double value) const {
  if (range_(feature) <= 0.0) return 0.0;
  return (value - min_(feature)) / range_(feature);
}

Dataset MinMaxScaler::transform(const Dataset& data) const {
  if (static_cast<Eigen::Index>(data.feature_dim()) != min_.size())
    throw std::invalid_argument("scaler dimension mismatch");
  Dataset out(data.feature_dim());
  for (const auto& inst : data.instances()) {
    Eigen::VectorXd v = inst.values();
    for (Eigen::Index j = 0; j < v.size(); ++j)
      if (inst.mask()(j) != 0.0) v(j) = transform(j, v(j));
    out.add(MaskedInstance(std::move(v), inst.mask()));
  }
  return out;
}

IdxImages read_idx_images(const std::string& path, std::size_t limit) {
  auto in = open_input(path);
  auto be32 = [&](const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError(path, 0, std::string("truncated header: ") + what);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
  };
  const auto magic = be32("magic");
  if (magic != 0x00000803u) throw ParseError(path, 0, "bad idx magic number");
  IdxImages img;
  img.count = be32("count");
  img.rows = be32("rows");
  img.cols = be32("cols");
  if (limit > 0) img.count = std::min(img.count, limit);
  img.pixels.resize(img.count * img.rows * img.cols);
  if (!in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size())))
    throw ParseError(path, 0, "truncated pixel data");
  return img;
}

Dataset binarize_images(const IdxImages& images, double threshold) {
  const std::size_t d = images.rows * images.cols;
  const double cut = threshold * 255.0;
  Dataset out(d);
  for (std::size_t i = 0; i < images.count; ++i) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) v(static_cast<Eigen::Index>(j)) = images.pixels[i * d + j] >= cut ? 1.0 : 0.0;
    out.add(MaskedInstance(v, v));
  }
  return out;
}

Dataset load_mnist_binarized(const std::string& path, double threshold, std::size_t limit) {
  return binarize_images(read_idx_images(path, limit), threshold);
}

Table load_table(const std::string& path, const TableOptions& options) {
  auto in = open_input(path);
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  const auto header = split_fields(line, options.delimiter);
  std::optional<std::size_t> target_col;
  if (options.target) {
    auto it = std::find(header.begin(), header.end(), *options.target);
    if (it == header.end()) throw std::invalid_argument(path + ": no column named '" + *options.target + "'");
    target_col = static_cast<std::size_t>(it - header.begin());
  }
  Table t;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != target_col) t.feature_names.push_back(header[c]);
  const auto d = static_cast<Eigen::Index>(t.feature_names.size());
  t.features = Dataset(t.feature_names.size());
  std::vector<double> targets;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto f = split_fields(line, options.delimiter);
    if (f.size() != header.size())
      throw ParseError(path, lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                                         std::to_string(f.size()));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d), m = Eigen::VectorXd::Zero(d);
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < f.size(); ++c) {
      const bool missing = f[c] == options.missing_token;
      double x = 0.0;
      if (!missing && !parse_number(f[c], x)) throw ParseError(path, lineno, "malformed number '" + f[c] + "'");
      if (c == target_col) {
        if (missing) throw ParseError(path, lineno, "missing target");
        targets.push_back(x);
        continue;
      }
      if (!missing) {
        v(j) = x;
        m(j) = 1.0;
      }
      ++j;
    }
    t.features.add(MaskedInstance(std::move(v), std::move(m)));
  }
  if (t.features.empty()) throw std::invalid_argument(path + ": no data rows");
  if (target_col) t.target = Eigen::Map<Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));
  return t;
}

Table select_rows(const Table& table, const std::vector<std::size_t>& rows) {
  Table out;
  out.feature_names = table.feature_names;
  out.features = Dataset(table.features.feature_dim());
  if (table.target.size() > 0) out.target.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.add(table.features[rows[i]]);
    if (table.target.size() > 0) out.target(static_cast<Eigen::Index>(i)) = table.target(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace sparsenorm
