#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sparsenorm/imputation.hpp"

namespace sparsenorm {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct RatingTriple {
  std::int64_t user_id = 0;  // 1-based
  std::int64_t item_id = 0;  // 1-based
  double rating = 0.0;
  std::int64_t timestamp = 0;

  friend bool operator==(const RatingTriple&, const RatingTriple&) = default;
};

enum class Encoding { user_vector, item_vector };

Encoding parse_encoding(const std::string& name);
std::string to_string(Encoding e);

struct RatingData {
  std::vector<RatingTriple> ratings;
  std::size_t users = 0;  // max user id
  std::size_t items = 0;  // max item id
  Encoding encoding = Encoding::user_vector;

  // Instance axis and feature axis under the encoding.
  std::size_t instances() const { return encoding == Encoding::user_vector ? users : items; }
  std::size_t features() const { return encoding == Encoding::user_vector ? items : users; }
};

// Tab-separated "user\titem\trating\ttimestamp" lines (MovieLens u.data).
RatingData load_movielens(const std::string& path, Encoding encoding = Encoding::user_vector);

// Uniform split over rating entries; test size is llround(fraction * n).
// Both parts keep the original relative order.
std::pair<std::vector<RatingTriple>, std::vector<RatingTriple>> split_ratings(const std::vector<RatingTriple>& ratings,
                                                                              double test_fraction,
                                                                              std::uint64_t seed);

struct RatingSplit {
  std::uint64_t seed = 0;
  double test_fraction = 0.1;
  double valid_fraction = 0.05;  // of the non-test ratings; 0 disables validation
};

struct RatingSplits {
  std::vector<RatingTriple> train, valid, test;
};

// Test split with `seed`, then validation carved from the rest with stream 1.
RatingSplits make_rating_splits(const std::vector<RatingTriple>& ratings, const RatingSplit& split);

struct RatingDataset {
  Dataset data;
  std::size_t duplicates = 0;  // (user, item) pairs overwritten, last write wins
};

// One instance per user (item) with ratings on observed coordinates.
RatingDataset ratings_to_masked(const std::vector<RatingTriple>& ratings, Encoding encoding, std::size_t users,
                                std::size_t items);
// Inverse of ratings_to_masked (timestamps are not kept and come back as 0).
std::vector<RatingTriple> masked_to_ratings(const Dataset& data, Encoding encoding);

// Rows of `data` become instances; each cell is masked out independently.
Dataset mcar_mask(const Eigen::MatrixXd& data, double missing_rate, std::uint64_t seed);

/// Per-feature affine map onto [0, 1] fitted on observed training entries.
/// Constant or never-observed features map to 0; no clipping on other splits.
class MinMaxScaler {
 public:
  static MinMaxScaler fit(const Dataset& train);

  Dataset transform(const Dataset& data) const;
  double transform(Eigen::Index feature, double value) const;

  const Eigen::VectorXd& minimum() const { return min_; }
  const Eigen::VectorXd& range() const { return range_; }

 private:
  Eigen::VectorXd min_;
  Eigen::VectorXd range_;
};

struct IdxImages {
  std::size_t count = 0, rows = 0, cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols
};

// idx3-ubyte image file (magic 0x00000803). `limit` > 0 keeps the first images.
IdxImages read_idx_images(const std::string& path, std::size_t limit = 0);

// pixel >= threshold * 255 -> 1 else 0; the mask equals the value, so missing
// pixels are exactly the zeros.
Dataset load_mnist_binarized(const std::string& path, double threshold = 0.5, std::size_t limit = 0);
Dataset binarize_images(const IdxImages& images, double threshold);

struct TableOptions {
  char delimiter = ',';
  std::string missing_token;  // empty field by default
  std::optional<std::string> target;  // column name
};

struct Table {
  std::vector<std::string> feature_names;
  Dataset features;
  Eigen::VectorXd target;  // empty when no target column
};

// Delimited text with a header row.
Table load_table(const std::string& path, const TableOptions& options);

// Picks rows by index into a new table.
Table select_rows(const Table& table, const std::vector<std::size_t>& rows);

}  // namespace sparsenorm
