#pragma once
// Shared aliases, error types and number formatting for the gpct headers.

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace gpct {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr const char* kVersion = "0.1.0";

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration / input files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or otherwise invalid numeric arguments.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Factorization failures and internal consistency violations.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorization of a Gram matrix failed.
class CholeskyError : public NumericalError {
 public:
  CholeskyError(std::size_t output_index, double smallest_pivot)
      : NumericalError("Cholesky factorization failed for output " + std::to_string(output_index + 1) +
                       " (smallest pivot " + std::to_string(smallest_pivot) + ")"),
        output_index_(output_index),
        smallest_pivot_(smallest_pivot) {}

  std::size_t output_index() const noexcept { return output_index_; }
  double smallest_pivot() const noexcept { return smallest_pivot_; }

 private:
  std::size_t output_index_;
  double smallest_pivot_;
};

/// A simulation left the admissible state region.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Shortest decimal representation that parses back to the same double.
/// Negative zero is written as "0".
inline std::string format_double(double value) {
  if (value == 0.0) return "0";
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) throw NumericalError("cannot format floating-point value");
  return std::string(buffer, end);
}

inline double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ConfigError("not a number: '" + std::string(text) + "'");
  return value;
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

}  // namespace gpct
