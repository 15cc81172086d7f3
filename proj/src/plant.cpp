#include "resilient_mfac/plant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rmfac {

void PlantParams::validate() const {
  for (std::size_t m = 0; m < w.size(); ++m) {
    if (!std::isfinite(w[m]) || w[m] <= 0.0) {
      throw ValidationError("plant: w" + std::to_string(m + 1) + " must be positive");
    }
  }
  if (output_dim != 2 || input_dim != 2) {
    throw ValidationError("plant: the benchmark plant has two outputs and two inputs");
  }
}

namespace {

// Integral exponents of negative bases are well defined; fractional ones are not.
double power(double base, double exponent) {
  if (base < 0.0 && exponent != std::floor(exponent)) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return std::pow(base, exponent);
}

constexpr double kMinDenominator = 1e-12;

}  // namespace

Vec step_benchmark_plant(const Vec& y, const Vec& u, const Vec& d, const PlantParams& params,
                         Step k, std::size_t agent) {
  if (y.size() != 2 || u.size() != 2 || d.size() != 2) {
    throw std::invalid_argument("step_benchmark_plant: y, u and d must have two entries");
  }
  const auto& w = params.w;
  const double den1 = 1.0 + power(y(0), w[0]);
  const double den2 = 1.0 + power(y(0), w[2]) + power(y(1), w[3]);
  if (std::abs(den1) < kMinDenominator || std::abs(den2) < kMinDenominator) {
    throw SingularityFault("plant denominator vanished at step " + std::to_string(k) +
                               " on agent " + std::to_string(agent + 1),
                           k, agent);
  }
  Vec next(2);
  next(0) = y(0) * u(0) / den1 + w[1] * u(0) + d(0);
  next(1) = y(1) * u(1) / den2 + w[4] * u(1) + d(1);
  if (!next.allFinite()) {
    throw DivergenceFault("plant output is not finite at step " + std::to_string(k) +
                              " on agent " + std::to_string(agent + 1),
                          k, agent);
  }
  return next;
}

Vec disturbance_at(const DisturbanceSpec& spec, Step k, double period) {
  if (!(period > 0.0)) throw std::invalid_argument("disturbance_at: period must be positive");
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(k) / period;
  Vec d(2);
  d << spec.amplitude * std::cos(phase), spec.amplitude * std::sin(phase);
  return d;
}

LipschitzStats lipschitz_probe(std::span<const IncrementPair> trace, double eps_input) {
  std::vector<double> ratios;
  std::vector<std::size_t> positions;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const double du = trace[t].du.norm();
    if (du > eps_input) {
      ratios.push_back(trace[t].dy_next.norm() / du);
      positions.push_back(t);
    }
  }
  if (ratios.empty()) throw std::invalid_argument("lipschitz_probe: no eligible steps");

  LipschitzStats stats;
  stats.eligible = ratios.size();
  double first_half = 0.0;
  double second_half = 0.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < ratios.size(); ++r) {
    sum += ratios[r];
    auto& half = positions[r] < trace.size() / 2 ? first_half : second_half;
    half = std::max(half, ratios[r]);
  }
  stats.mean_ratio = sum / static_cast<double>(ratios.size());
  stats.unbounded_growth = first_half > 0.0 && second_half > 10.0 * first_half;

  std::sort(ratios.begin(), ratios.end());
  stats.max_ratio = ratios.back();
  auto quantile = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(ratios.size() - 1)));
    return ratios[idx];
  };
  stats.median_ratio = quantile(0.5);
  stats.p95_ratio = quantile(0.95);
  return stats;
}

}  // namespace rmfac
