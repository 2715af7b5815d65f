#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace rispls {

// Error categories used across the library. Everything derives from
// rispls::error so callers can catch the whole family at the CLI boundary.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape/extent disagreement between operands.
struct dimension_error : error {
  using error::error;
};

// Value outside the mathematical domain of an operation (log of a
// nonpositive number, reduction over an empty axis, ...).
struct domain_error : error {
  using error::error;
};

// API misuse: non-scalar backward root, unknown node type, missing label.
struct usage_error : error {
  using error::error;
};

// Inconsistent model/layer/dataset dimensions detected at wiring time.
struct config_error : error {
  using error::error;
};

// Runtime failure during optimization (NaN gradients or loss).
struct training_error : error {
  using error::error;
};

// Attention over an empty in-neighbor set.
struct attention_error : error {
  using error::error;
};

struct io_error : error {
  using error::error;
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kSpeedOfLight = 299792458.0;

}  // namespace rispls
