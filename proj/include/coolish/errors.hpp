#pragma once

#include <stdexcept>
#include <string>

namespace coolish {

// Shape of an input does not match what the operation expects.
struct ShapeMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Design matrix is numerically rank deficient.
struct RankDeficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Too few observations for the requested fit (n <= p).
struct DegenerateSample : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// The closed-form solve is not available (q <= p+1 or singular Gram).
struct IllPosed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidConfig : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidBound : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Expression matrix is in the wrong pipeline stage for the operation.
struct StageError : std::logic_error {
  using std::logic_error::logic_error;
};

// A cell with zero total counts cannot be normalized.
struct EmptyCell : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input file could not be parsed.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace coolish
