#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfglab {

// Base of all library errors. Subclasses carry the payload the caller needs to
// decide what to do next (retry with a larger v_max, abort the run, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Assumption checks that must pass before a solve is attempted.
class AssumptionFailure : public Error {
 public:
  using Error::Error;
};

class MaximizerOnBoundary : public Error {
 public:
  explicit MaximizerOnBoundary(const std::string& what) : Error(what) {}
};

class MinimizerOnBoundary : public Error {
 public:
  MinimizerOnBoundary(double t, std::size_t node, const std::string& what)
      : Error(what), t(t), node(node) {}
  double t;
  std::size_t node;
};

class GapViolated : public AssumptionFailure {
 public:
  GapViolated(std::size_t probe, double gap, const std::string& what)
      : AssumptionFailure(what), probe(probe), gap(gap) {}
  std::size_t probe;
  double gap;
};

class UnsupportedDimension : public Error {
 public:
  using Error::Error;
};

class SupportTooLarge : public Error {
 public:
  using Error::Error;
};

class NotLipschitz : public Error {
 public:
  NotLipschitz(double lip, const std::string& what) : Error(what), lip(lip) {}
  double lip;
};

class EscapedBox : public Error {
 public:
  EscapedBox(std::size_t node, const std::string& what) : Error(what), node(node) {}
  std::size_t node;
};

class NotReversible : public AssumptionFailure {
 public:
  using AssumptionFailure::AssumptionFailure;
};

class MinOnBoundary : public Error {
 public:
  MinOnBoundary(std::size_t node, const std::string& what) : Error(what), node(node) {}
  std::size_t node;
};

class CycleDetected : public Error {
 public:
  CycleDetected(std::size_t period, const std::string& what) : Error(what), period(period) {}
  std::size_t period;
};

class NoStabilization : public Error {
 public:
  NoStabilization(double horizon, double increment, const std::string& what)
      : Error(what), horizon(horizon), increment(increment) {}
  double horizon;
  double increment;
};

class RadiusTooSmall : public Error {
 public:
  using Error::Error;
};

class NonPositiveError : public Error {
 public:
  using Error::Error;
};

class LipschitzExceeded : public Error {
 public:
  LipschitzExceeded(double lip, const std::string& what) : Error(what), lip(lip) {}
  double lip;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mfglab
