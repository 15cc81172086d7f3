#include "resilient_mfac/threat.hpp"

#include "resilient_mfac/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace rmfac {

Vec fdi_signal(const FdiSpec& spec, Step k, const Vec& y) {
  if (y.size() != 2) throw std::invalid_argument("fdi_signal: output must have two channels");
  const double t = std::numbers::pi * static_cast<double>(k) / spec.horizon;
  const double a = spec.amplitude;
  const auto& c = spec.multipliers;
  const double cross = std::sin(y(0)) * std::cos(y(1));
  Vec delta(2);
  delta(0) = a * std::cos(c[0] * t) * std::sin(y(0)) + a * std::cos(c[1] * t) * cross;
  delta(1) = a * std::cos(c[0] * t) * std::cos(y(0)) + a * std::sin(c[2] * t) * cross;
  return delta;
}

DosSchedule DosSchedule::empty(std::size_t n_agents, std::size_t n_channels, DosBudget budget) {
  DosSchedule s;
  s.budget = budget;
  s.intervals.assign(n_agents, std::vector<std::vector<DosInterval>>(n_channels));
  return s;
}

int dos_coefficient(const DosSchedule& schedule, std::size_t agent, std::size_t channel, Step k) {
  if (agent >= schedule.intervals.size()) return 1;
  const auto& channels = schedule.intervals[agent];
  if (channel >= channels.size()) return 1;
  const auto& list = channels[channel];
  // First interval whose end lies beyond k.
  auto it = std::upper_bound(list.begin(), list.end(), k,
                             [](Step value, const DosInterval& iv) { return value < iv.off; });
  return (it != list.end() && it->on <= k) ? 0 : 1;
}

ChannelBits dos_bits(const DosSchedule& schedule, std::size_t agent, std::size_t n_channels, Step k) {
  ChannelBits h(static_cast<Eigen::Index>(n_channels));
  for (std::size_t m = 0; m < n_channels; ++m) h(static_cast<Eigen::Index>(m)) = dos_coefficient(schedule, agent, m, k);
  return h;
}

Vec ReceivedSignal::literal() const { return (present == 0).select(Vec::Zero(value.size()), value); }

ReceivedSignal apply_attack(const Vec& y, const Vec& delta, const ChannelBits& h) {
  if (y.size() != delta.size() || y.size() != h.size()) {
    throw std::invalid_argument("apply_attack: dimension mismatch");
  }
  ReceivedSignal out;
  out.present = h;
  out.value = y + delta;
  for (Eigen::Index m = 0; m < y.size(); ++m) {
    if (h(m) == 0) out.value(m) = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::string BudgetViolation::describe() const {
  std::ostringstream os;
  os << "agent " << agent + 1 << " channel " << channel + 1 << ": ";
  switch (kind) {
    case BudgetKind::kMalformed:
      os << "intervals must satisfy 0 <= on < off <= next on (near step " << k0 << ")";
      return os.str();
    case BudgetKind::kFrequency:
      os << "frequency budget exceeded";
      break;
    case BudgetKind::kDuration:
      os << "duration budget exceeded";
      break;
  }
  os << " on window [" << k0 << ", " << k1 << "): " << observed << " > " << allowed;
  return os.str();
}

namespace {

constexpr double kBudgetSlack = 1e-9;

// Budget windows that end at the last interval of `list` (list[0..last]).
// Checking these for each appended interval covers every window once.
std::optional<BudgetViolation> check_tail(const std::vector<DosInterval>& list, std::size_t last,
                                          const DosBudget& b, Step horizon) {
  const Step end_on = list[last].on + 1;
  const Step end_off = std::min(list[last].off, horizon);
  double denied = 0.0;
  for (std::size_t a = last + 1; a-- > 0;) {
    denied += static_cast<double>(std::min(list[a].off, horizon) - list[a].on);
    const double count = static_cast<double>(last - a + 1);
    const double count_allowed = b.kappa_a + b.rate_a * static_cast<double>(end_on - list[a].on);
    if (count > count_allowed + kBudgetSlack) {
      return BudgetViolation{0, 0, BudgetKind::kFrequency, list[a].on, end_on, count, count_allowed};
    }
    const double duration_allowed = b.xi_a + b.rate_xi * static_cast<double>(end_off - list[a].on);
    if (denied > duration_allowed + kBudgetSlack) {
      return BudgetViolation{0, 0, BudgetKind::kDuration, list[a].on, end_off, denied, duration_allowed};
    }
  }
  return std::nullopt;
}

std::optional<BudgetViolation> check_channel(const std::vector<DosInterval>& list,
                                             const DosBudget& budget, Step horizon) {
  for (std::size_t n = 0; n < list.size(); ++n) {
    const bool ordered = list[n].on >= 0 && list[n].on < list[n].off &&
                         (n + 1 == list.size() || list[n].off <= list[n + 1].on);
    if (!ordered) return BudgetViolation{0, 0, BudgetKind::kMalformed, list[n].on, list[n].off, 0, 0};
  }
  for (std::size_t n = 0; n < list.size() && list[n].on < horizon; ++n) {
    if (auto v = check_tail(list, n, budget, horizon)) return v;
  }
  return std::nullopt;
}

}  // namespace

DosValidation validate_dos_schedule(const DosSchedule& schedule, Step horizon) {
  DosValidation result;
  for (std::size_t i = 0; i < schedule.intervals.size(); ++i) {
    for (std::size_t m = 0; m < schedule.intervals[i].size(); ++m) {
      if (auto v = check_channel(schedule.intervals[i][m], schedule.budget, horizon)) {
        v->agent = i;
        v->channel = m;
        result.valid = false;
        result.first_violation = v;
        return result;
      }
    }
  }
  return result;
}

DosSchedule generate_dos_schedule(const DosBudget& budget, const DosGeneratorSettings& settings,
                                  std::size_t n_agents, std::size_t n_channels, Step horizon,
                                  std::uint64_t seed) {
  if (budget.kappa_a < 0 || budget.rate_a < 0 || budget.xi_a < 0 || budget.rate_xi < 0) {
    throw ValidationError("DoS budget parameters must be non-negative");
  }
  if (settings.min_length < 1 || settings.max_length < settings.min_length ||
      settings.min_gap < 0 || settings.max_gap < settings.min_gap) {
    throw ValidationError("DoS generator: need 1 <= min_length <= max_length and 0 <= min_gap <= max_gap");
  }
  if (horizon < 1) throw ValidationError("DoS generator: horizon must be positive");

  DosSchedule schedule = DosSchedule::empty(n_agents, n_channels, budget);
  // A single attack needs a one-step window with count budget >= 1.
  if (budget.kappa_a + budget.rate_a < 1.0) return schedule;
  const auto min_len = static_cast<double>(settings.min_length);
  if (min_len > budget.xi_a + budget.rate_xi * min_len + kBudgetSlack) {
    throw ValidationError("DoS budget infeasible: duration budget cannot fit a minimum-length interval");
  }

  Rng rng(seed);
  for (auto& agent : schedule.intervals) {
    for (auto& list : agent) {
      Step t = rng.integer(0, settings.max_gap);
      while (t + settings.min_length <= horizon) {
        Step len = std::min(rng.integer(settings.min_length, settings.max_length), horizon - t);
        bool placed = false;
        for (; len >= settings.min_length; --len) {
          list.push_back({t, t + len});
          if (!check_tail(list, list.size() - 1, budget, horizon)) {
            placed = true;
            break;
          }
          list.pop_back();
        }
        const Step resume = placed ? list.back().off : t;
        t = resume + std::max<Step>(rng.integer(settings.min_gap, settings.max_gap), placed ? 0 : 1);
      }
    }
  }
  return schedule;
}

}  // namespace rmfac
