#pragma once

#include "resilient_mfac/controller.hpp"
#include "resilient_mfac/plant.hpp"
#include "resilient_mfac/threat.hpp"
#include "resilient_mfac/topology.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rmfac {

struct LeaderSegment {
  Step start = 0;
  Vec value;
};

/// Piecewise-constant leader output. When `attacked` is set the pinned agents
/// receive y0 + delta(k, y0) (FDI only; the leader link is never denied).
struct LeaderTrajectory {
  std::vector<LeaderSegment> segments;
  bool attacked = false;

  /// Value of the last segment with start <= k.
  Vec at(Step k) const;
};

/// A fully resolved, runnable scenario.
struct Scenario {
  explicit Scenario(Topology topo) : topology(std::move(topo)) {}

  Topology topology;
  std::vector<std::shared_ptr<const PlantModel>> plants;
  std::vector<Vec> initial_outputs;
  std::optional<LeaderTrajectory> leader;
  FdiSpec fdi;
  DisturbanceSpec disturbance;
  DosSchedule dos;
  ControllerGains gains;
  Mat phi_init;
  Step horizon = 1500;
  ControllerVariant variant = ControllerVariant::kProposed;
  std::uint64_t seed = 0;

  Eigen::Index output_dim() const;
  /// Hard checks only; throws ValidationError.
  void validate() const;
  /// Soft checks: spanning tree, gain ranges.
  std::vector<std::string> warnings() const;
};

struct StepRecord {
  Step k = 0;
  std::size_t agent = 0;
  Vec y;
  ReceivedSignal ya;
  Vec u;
  Vec xi;            // from true outputs
  Vec xi_received;   // from received outputs; NaN where unavailable
  ChannelBits xi_available;
  Vec chi;
  Vec chi_hat;
  Vec chi_tilde;
  Vec theta_hat;
  Vec d_hat;
  Vec delta_hat;
  Mat phi_hat;
  double phi_norm = 0.0;
  double gamma_radius = 0.0;
  bool reset = false;
  ChannelBits h;
};

struct FaultRecord {
  Step k = 0;
  std::size_t agent = 0;
  std::string message;
};

/// One record per (k, agent), k-major. A divergence fault truncates the trace.
struct SimTrace {
  std::size_t n_agents = 0;
  Eigen::Index output_dim = 0;
  std::vector<StepRecord> records;
  std::vector<std::optional<Vec>> leader;  // true y0(k), per logged step
  std::optional<FaultRecord> fault;

  Step steps() const;
  const StepRecord& at(Step k, std::size_t agent) const;
};

/// Runs k = 0..T-1 in the fixed order: read y(k); attack each channel; form
/// xi from received signals; hold denied channels; chi_tilde; PPJM update
/// with reset; control law; observer step; plant step with d(k). Every agent
/// reads the step-k snapshot before any state mutates. Throws ValidationError
/// for an invalid scenario; divergence ends the run with a fault record.
SimTrace run_scenario(const Scenario& scn);

/// Re-runs the controller pipeline from the received signals logged in a
/// trace; returns one output per logged record, k-major.
std::vector<ControlOutput> replay_controllers(const Scenario& scn, const SimTrace& trace);

struct ConsensusMetrics {
  std::vector<double> rms_xi;               // per agent, true xi
  std::vector<double> sup_xi;
  double network_rms_xi = 0.0;              // sqrt(mean over agents and steps of ||xi||^2)
  double max_disagreement = 0.0;            // sup_k max_{i,j} ||y_i - y_j||
  std::vector<Vec> mean_output;
  std::vector<double> mean_tracking_error;  // mean ||y_i - y0||; empty without a leader
};

/// Statistics over steps [begin, end). Throws std::invalid_argument on an
/// empty window or one outside the trace.
ConsensusMetrics consensus_metrics(const SimTrace& trace, Step begin, Step end);

/// out = F(u, z): u is the input block, z every other argument.
using BlockMap = std::function<Vec(const Vec& u, const Vec& z)>;

struct DcfdlProbe {
  Mat ppjm;            // mean-value Jacobian over u along u_prev -> u_now at z_now
  Mat point_jacobian;  // forward difference at (u_prev, z_now)
  Vec residual;        // mean-value Jacobian over z along z_prev -> z_now, times dz
  Vec observed_delta;  // F(u_now, z_now) - F(u_prev, z_prev)
  double reconstruction_error = 0.0;  // ||observed - (ppjm du + residual)||
  double relative_error = 0.0;        // reconstruction_error / ||observed||
};

/// Finite-difference probe of the compact-form linearisation
/// d_out = PPJM du + residual. PPJM and residual are integrated along the
/// increment path (Gauss-Legendre over central differences) rather than
/// derived from the observed increment, so reconstruction is a real check.
/// Throws std::invalid_argument for eps <= 0 and DivergenceFault on a
/// non-finite evaluation.
DcfdlProbe dcfdl_probe(const BlockMap& map, const Vec& u_prev, const Vec& u_now, const Vec& z_prev,
                       const Vec& z_now, double eps);

/// z = [y, d] for a single plant.
BlockMap plant_block_map(std::shared_ptr<const PlantModel> plant);

/// Attack-free lifted map for agent i: chi_i(k+1) as a function of u_i(k),
/// with z = [y_1..y_n, u_1..u_n, d, y0(k+1)] (agent i's own u slot in z is
/// ignored).
BlockMap lifted_error_map(const Topology& topo, std::vector<std::shared_ptr<const PlantModel>> plants,
                          std::size_t agent);

/// Drives the real observer with du = 0 and a frozen drive term c, so that
/// chi_tilde+ = (1 - l3) chi_tilde - c from chi_tilde(0) = 1. Returns the
/// measured ratio |e(k+1)| / |e(k)| of the distance to the fixed point -c/l3
/// at the last step still well above rounding. Throws std::invalid_argument
/// for l3 == 1 (deadbeat), steps < 2, or a start already at the fixed point.
double decay_harness(double l3, double c, int steps);

}  // namespace rmfac
