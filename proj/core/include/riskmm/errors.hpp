#pragma once

#include <stdexcept>
#include <string>

namespace riskmm {

/// Base class for all riskmm failures. Catching this is enough to map any
/// library error onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A world position fell outside the BEV grid. Carries the offending axis.
class OutOfGrid : public Error {
 public:
  OutOfGrid(char axis, double value, double lo, double hi)
      : Error("position " + std::string(1, axis) + "=" + std::to_string(value) +
              " outside grid range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]"),
        axis_(axis) {}

  char axis() const { return axis_; }

 private:
  char axis_;
};

/// Array or matrix dimensions do not match the operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Missing or inconsistent configuration (absent pairwise weights, bad counts).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite reals are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid vehicle geometry (non-positive axle distance, degenerate box).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// The saddle-point system could not be factorized. Carries the smallest
/// pivot magnitude seen during elimination.
class SingularKKT : public Error {
 public:
  explicit SingularKKT(double min_pivot)
      : Error("singular KKT system, smallest pivot magnitude " + std::to_string(min_pivot)),
        min_pivot_(min_pivot) {}

  double min_pivot() const { return min_pivot_; }

 private:
  double min_pivot_;
};

/// The pinned speed-constraint system admits no solution.
class InfeasibleConstraint : public Error {
 public:
  using Error::Error;
};

/// Training loss exceeded the divergence guard. Carries the last epoch with a
/// stable loss value.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(int last_stable_epoch)
      : Error("training diverged after epoch " + std::to_string(last_stable_epoch)),
        last_stable_epoch_(last_stable_epoch) {}

  int last_stable_epoch() const { return last_stable_epoch_; }

 private:
  int last_stable_epoch_;
};

/// A metric is undefined on the given input (no ground truth, empty set).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

/// Scenario generation could not place vehicles without overlap.
class PlacementError : public Error {
 public:
  using Error::Error;
};

/// A requested delay reaches past the recorded history span.
class InsufficientHistory : public Error {
 public:
  using Error::Error;
};

/// File format violations (bad magic, truncated payload, unknown version).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace riskmm
