#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rmfac {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
/// Per-channel delivery bits: 1 = delivered, 0 = denied.
using ChannelBits = Eigen::ArrayXi;

using Step = std::int64_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates a module contract (bad topology, bad config value).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, std::string field)
      : Error(what), line_(line), field_(std::move(field)) {}

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

/// Numerical blow-up in a plant or controller state.
class DivergenceFault : public Error {
 public:
  DivergenceFault(const std::string& what, Step k, std::size_t agent)
      : Error(what), step_(k), agent_(agent) {}

  Step step() const { return step_; }
  std::size_t agent() const { return agent_; }

 private:
  Step step_;
  std::size_t agent_;
};

class SingularityFault : public DivergenceFault {
 public:
  using DivergenceFault::DivergenceFault;
};

/// Largest singular value; the matrix norm used throughout.
double spectral_norm(const Mat& m);

bool all_finite(const Vec& v);

}  // namespace rmfac
