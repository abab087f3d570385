#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace topicopt {

/// Invalid user configuration (bad flag, bad field, violated config invariant).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input data that cannot be used (empty corpus, shape mismatch, bad file).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed structured input, with the position where parsing failed.
class ParseError : public DataError {
public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : DataError(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
        line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->push_back(std::move(message));
}

/// Dense row-major matrix of doubles.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> matrix_to_rows(const Matrix& m);

/// splitmix64-seeded xoshiro256**. Used instead of std distributions so that
/// every draw is bit-identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  double normal();
  /// Index drawn proportionally to the (non-negative) weights.
  std::size_t categorical(std::span<const double> weights);

private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent stream seed from a base seed and a stream tag.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

double squared_distance(std::span<const double> a, std::span<const double> b);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// 64-bit FNV-1a, used for manifest content hashes.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace topicopt
