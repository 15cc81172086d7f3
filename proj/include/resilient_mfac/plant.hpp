#pragma once

#include "resilient_mfac/types.hpp"

#include <array>
#include <memory>
#include <span>
#include <vector>

namespace rmfac {

/// Constants w1..w5 of the two-channel benchmark plant.
struct PlantParams {
  std::array<double, 5> w{2.0, 1.0, 2.0, 2.0, 1.0};
  int output_dim = 2;
  int input_dim = 2;

  /// Throws ValidationError unless every w is positive and finite and both
  /// dimensions are 2.
  void validate() const;
  bool operator==(const PlantParams&) const = default;
};

struct PlantState {
  Vec y;
  Vec u_prev;
  Step k = 0;
};

/// Plant contract: y(k+1) = f(y(k), u(k), d(k)). Implementations are pure.
class PlantModel {
 public:
  virtual ~PlantModel() = default;
  virtual int output_dim() const = 0;
  virtual int input_dim() const = 0;
  /// k and agent only label faults.
  virtual Vec step(const Vec& y, const Vec& u, const Vec& d, Step k = 0,
                   std::size_t agent = 0) const = 0;
};

/// y1+ = y1 u1 / (1 + y1^w1) + w2 u1 + d1
/// y2+ = y2 u2 / (1 + y1^w3 + y2^w4) + w5 u2 + d2
/// Throws SingularityFault when a denominator magnitude drops below 1e-12 and
/// DivergenceFault on a non-finite result.
Vec step_benchmark_plant(const Vec& y, const Vec& u, const Vec& d, const PlantParams& params,
                         Step k = 0, std::size_t agent = 0);

class BenchmarkPlant final : public PlantModel {
 public:
  explicit BenchmarkPlant(PlantParams params) : params_(params) { params_.validate(); }
  int output_dim() const override { return params_.output_dim; }
  int input_dim() const override { return params_.input_dim; }
  Vec step(const Vec& y, const Vec& u, const Vec& d, Step k, std::size_t agent) const override {
    return step_benchmark_plant(y, u, d, params_, k, agent);
  }
  const PlantParams& params() const { return params_; }

 private:
  PlantParams params_;
};

struct DisturbanceSpec {
  double amplitude = 0.1;
  bool operator==(const DisturbanceSpec&) const = default;
};

/// d = A (cos(2 pi k / T), sin(2 pi k / T)). Throws std::invalid_argument if T <= 0.
Vec disturbance_at(const DisturbanceSpec& spec, Step k, double period);

/// One observed pair: input increment du(k) and the output increment dy(k+1) it produced.
struct IncrementPair {
  Vec dy_next;
  Vec du;
};

struct LipschitzStats {
  std::size_t eligible = 0;
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  double median_ratio = 0.0;
  double p95_ratio = 0.0;
  /// Max ratio in the second half of the trace exceeds 10x the first half.
  bool unbounded_growth = false;
};

/// Empirical ||dy(k+1)|| / ||du(k)|| over pairs with ||du|| > eps_input.
/// Throws std::invalid_argument("no eligible steps") when none qualify.
LipschitzStats lipschitz_probe(std::span<const IncrementPair> trace, double eps_input);

}  // namespace rmfac
