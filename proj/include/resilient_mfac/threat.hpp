#pragma once

#include "resilient_mfac/types.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace rmfac {

/// Bounded, output-dependent FDI signal on the two-channel benchmark:
///   delta_1 = A cos(c1 pi k/T) sin(y1) + A cos(c2 pi k/T) sin(y1) cos(y2)
///   delta_2 = A cos(c1 pi k/T) cos(y1) + A sin(c3 pi k/T) sin(y1) cos(y2)
/// with (c1, c2, c3) = multipliers. Each channel is bounded by 2A.
struct FdiSpec {
  double amplitude = 0.5;
  std::array<double, 3> multipliers{5.0, 4.0, 2.0};
  double horizon = 1500.0;
  bool operator==(const FdiSpec&) const = default;
};

Vec fdi_signal(const FdiSpec& spec, Step k, const Vec& y);

/// Half-open denial interval [on, off) in steps.
struct DosInterval {
  Step on = 0;
  Step off = 0;
  Step length() const { return off - on; }
  bool operator==(const DosInterval&) const = default;
};

/// Affine budgets: attack count n_a(k0,k) <= kappa_a + rate_a (k - k0),
/// denied duration Xi(k0,k) <= xi_a + rate_xi (k - k0).
struct DosBudget {
  double kappa_a = 10.0;
  double rate_a = 0.01;
  double xi_a = 100.0;
  double rate_xi = 0.15;
  bool operator==(const DosBudget&) const = default;
};

/// Per agent, per output channel, an ordered list of denial intervals.
struct DosSchedule {
  DosBudget budget;
  std::vector<std::vector<std::vector<DosInterval>>> intervals;  // [agent][channel]

  static DosSchedule empty(std::size_t n_agents, std::size_t n_channels, DosBudget budget = {});
  std::size_t n_agents() const { return intervals.size(); }
  std::size_t n_channels() const { return intervals.empty() ? 0 : intervals.front().size(); }
  bool operator==(const DosSchedule&) const = default;
};

/// h_{i,m}(k): 0 inside any interval, 1 otherwise. Out-of-range agents or
/// channels have no attacks.
int dos_coefficient(const DosSchedule& schedule, std::size_t agent, std::size_t channel, Step k);

ChannelBits dos_bits(const DosSchedule& schedule, std::size_t agent, std::size_t n_channels, Step k);

/// What the receiver sees. Absent channels carry NaN and present(m) == 0.
struct ReceivedSignal {
  Vec value;
  ChannelBits present;

  bool absent(Eigen::Index m) const { return present(m) == 0; }
  /// The literal model H (y + delta): absent channels read as zero.
  Vec literal() const;
};

/// y^a = H (y + delta) with denied channels marked absent.
ReceivedSignal apply_attack(const Vec& y, const Vec& delta, const ChannelBits& h);

enum class BudgetKind { kMalformed, kFrequency, kDuration };

struct BudgetViolation {
  std::size_t agent = 0;
  std::size_t channel = 0;
  BudgetKind kind = BudgetKind::kMalformed;
  Step k0 = 0;
  Step k1 = 0;       // window [k0, k1)
  double observed = 0.0;
  double allowed = 0.0;
  std::string describe() const;
};

struct DosValidation {
  bool valid = true;
  std::optional<BudgetViolation> first_violation;
};

/// Checks ordering (on < off <= next on, on >= 0) and both budgets over every
/// window inside [0, horizon]. Windows anchored at interval boundaries are
/// sufficient for affine budgets.
DosValidation validate_dos_schedule(const DosSchedule& schedule, Step horizon);

struct DosGeneratorSettings {
  Step min_length = 5;
  Step max_length = 30;
  Step min_gap = 40;
  Step max_gap = 150;
  bool operator==(const DosGeneratorSettings&) const = default;
};

/// Random schedule that satisfies the budget over [0, horizon]. Identical
/// seeds give identical schedules. Throws ValidationError when the budget
/// admits attacks but cannot fit a minimum-length interval, or when the
/// settings are inconsistent.
DosSchedule generate_dos_schedule(const DosBudget& budget, const DosGeneratorSettings& settings,
                                  std::size_t n_agents, std::size_t n_channels, Step horizon,
                                  std::uint64_t seed);

}  // namespace rmfac
