#include "resilient_mfac/engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rmfac {

Vec LeaderTrajectory::at(Step k) const {
  if (segments.empty()) throw std::logic_error("leader trajectory has no segments");
  const LeaderSegment* current = &segments.front();
  for (const auto& seg : segments) {
    if (seg.start <= k) current = &seg;
  }
  return current->value;
}

Eigen::Index Scenario::output_dim() const { return phi_init.rows(); }

void Scenario::validate() const {
  const std::size_t n = topology.n_agents();
  if (horizon < 1) throw ValidationError("scenario: horizon must be at least 1");
  if (plants.size() != n) throw ValidationError("scenario: need one plant per agent");
  if (initial_outputs.size() != n) throw ValidationError("scenario: need one initial output per agent");
  const auto ny = phi_init.rows();
  const auto nu = phi_init.cols();
  if (ny == 0 || nu == 0 || !phi_init.allFinite()) throw ValidationError("scenario: initial PPJM must be a finite non-empty matrix");
  for (std::size_t i = 0; i < n; ++i) {
    if (!plants[i]) throw ValidationError("scenario: missing plant for agent " + std::to_string(i + 1));
    if (plants[i]->output_dim() != ny || plants[i]->input_dim() != nu) {
      throw ValidationError("scenario: plant dimensions of agent " + std::to_string(i + 1) +
                            " do not match the initial PPJM");
    }
    if (initial_outputs[i].size() != ny || !initial_outputs[i].allFinite()) {
      throw ValidationError("scenario: bad initial output for agent " + std::to_string(i + 1));
    }
  }
  if (topology.has_leader() != leader.has_value()) {
    throw ValidationError("scenario: a leader trajectory is required iff some agent is pinned");
  }
  if (leader) {
    if (leader->segments.empty()) throw ValidationError("scenario: leader needs at least one segment");
    if (leader->segments.front().start != 0) throw ValidationError("scenario: first leader segment must start at step 0");
    for (std::size_t s = 0; s < leader->segments.size(); ++s) {
      const auto& seg = leader->segments[s];
      if (seg.value.size() != ny || !seg.value.allFinite()) throw ValidationError("scenario: bad leader segment value");
      if (s > 0 && seg.start <= leader->segments[s - 1].start) {
        throw ValidationError("scenario: leader segments must have increasing start steps");
      }
    }
  }
  if (!(fdi.horizon > 0.0)) throw ValidationError("scenario: FDI period must be positive");
  gains.validate();
  if (dos.n_agents() != 0 && dos.n_agents() != n) throw ValidationError("scenario: DoS schedule agent count mismatch");
  const auto report = validate_dos_schedule(dos, horizon);
  if (!report.valid) throw ValidationError("scenario: DoS schedule invalid: " + report.first_violation->describe());
}

std::vector<std::string> Scenario::warnings() const {
  std::vector<std::string> out;
  if (!has_spanning_tree(topology, topology.has_leader())) {
    out.push_back("communication graph has no directed spanning tree");
  }
  for (auto& w : gains.range_warnings()) out.push_back("gain " + w);
  return out;
}

Step SimTrace::steps() const { return n_agents == 0 ? 0 : static_cast<Step>(records.size() / n_agents); }

const StepRecord& SimTrace::at(Step k, std::size_t agent) const {
  return records.at(static_cast<std::size_t>(k) * n_agents + agent);
}

namespace {

// Receiver side of the whole network: forms xi from received signals, then
// runs every agent's controller on the same snapshot.
class ControlNetwork {
 public:
  explicit ControlNetwork(const Scenario& scn) : scn_(scn) {
    for (std::size_t i = 0; i < scn.topology.n_agents(); ++i) {
      agents_.emplace_back(scn.variant, scn.gains, scn.phi_init);
    }
  }

  struct Tick {
    std::vector<Vec> xi_received;
    std::vector<ChannelBits> available;
    std::vector<ControlOutput> outputs;
  };

  Tick step(Step k, const std::vector<ReceivedSignal>& received, const std::optional<Vec>& leader_rx) {
    const std::size_t n = received.size();
    std::vector<Vec> values;
    std::vector<ChannelBits> delivered;
    values.reserve(n);
    delivered.reserve(n);
    const bool proposed = scn_.variant == ControllerVariant::kProposed;
    for (const auto& r : received) {
      // The conventional receiver has no hold logic and consumes H (y + delta) as delivered.
      values.push_back(proposed ? r.value : r.literal());
      delivered.push_back(proposed ? r.present : ChannelBits::Ones(r.present.size()));
    }
    Tick tick;
    tick.xi_received = neighborhood_error(scn_.topology, values, leader_rx);
    tick.available = error_availability(scn_.topology, delivered);
    tick.outputs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      tick.outputs.push_back(agents_[i].step(tick.xi_received[i], tick.available[i], k, i));
    }
    return tick;
  }

 private:
  const Scenario& scn_;
  std::vector<AgentController> agents_;
};

std::optional<Vec> leader_received(const Scenario& scn, Step k) {
  if (!scn.leader) return std::nullopt;
  Vec y0 = scn.leader->at(k);
  if (scn.leader->attacked && scn.fdi.amplitude != 0.0) y0 += fdi_signal(scn.fdi, k, y0);
  return y0;
}

Vec fdi_for(const Scenario& scn, Step k, const Vec& y) {
  if (scn.fdi.amplitude == 0.0) return Vec::Zero(y.size());
  return fdi_signal(scn.fdi, k, y);
}

}  // namespace

SimTrace run_scenario(const Scenario& scn) {
  scn.validate();
  const std::size_t n = scn.topology.n_agents();
  const auto ny = scn.output_dim();

  SimTrace trace;
  trace.n_agents = n;
  trace.output_dim = ny;
  trace.records.reserve(static_cast<std::size_t>(scn.horizon) * n);
  trace.leader.reserve(static_cast<std::size_t>(scn.horizon));

  ControlNetwork network(scn);
  std::vector<Vec> y = scn.initial_outputs;
  const double period = static_cast<double>(scn.horizon);

  for (Step k = 0; k < scn.horizon; ++k) {
    const std::optional<Vec> y0 = scn.leader ? std::optional<Vec>(scn.leader->at(k)) : std::nullopt;

    std::vector<ReceivedSignal> received;
    std::vector<ChannelBits> h;
    received.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      h.push_back(dos_bits(scn.dos, i, static_cast<std::size_t>(ny), k));
      received.push_back(apply_attack(y[i], fdi_for(scn, k, y[i]), h.back()));
    }
    const auto xi_true = neighborhood_error(scn.topology, y, y0);

    ControlNetwork::Tick tick;
    try {
      tick = network.step(k, received, leader_received(scn, k));
    } catch (const DivergenceFault& fault) {
      trace.fault = FaultRecord{fault.step(), fault.agent(), fault.what()};
      return trace;
    }

    trace.leader.push_back(y0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& out = tick.outputs[i];
      StepRecord rec;
      rec.k = k;
      rec.agent = i;
      rec.y = y[i];
      rec.ya = received[i];
      rec.u = out.u;
      rec.xi = xi_true[i];
      rec.xi_received = tick.xi_received[i];
      rec.xi_available = tick.available[i];
      rec.chi = out.chi;
      rec.chi_hat = out.chi_hat;
      rec.chi_tilde = out.chi_tilde;
      rec.theta_hat = out.theta_hat;
      rec.d_hat = out.d_hat;
      rec.delta_hat = out.delta_hat;
      rec.phi_hat = out.phi_hat;
      rec.phi_norm = out.phi_norm;
      rec.gamma_radius = out.gamma_radius;
      rec.reset = out.reset;
      rec.h = h[i];
      trace.records.push_back(std::move(rec));
    }

    const Vec d = disturbance_at(scn.disturbance, k, period);
    try {
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = scn.plants[i]->step(y[i], tick.outputs[i].u, d, k, i);
        if (y[i].cwiseAbs().maxCoeff() > kDivergenceBound) {
          throw DivergenceFault("output diverged at step " + std::to_string(k) + " on agent " +
                                    std::to_string(i + 1),
                                k, i);
        }
      }
    } catch (const DivergenceFault& fault) {
      trace.fault = FaultRecord{fault.step(), fault.agent(), fault.what()};
      return trace;
    }
  }
  return trace;
}

std::vector<ControlOutput> replay_controllers(const Scenario& scn, const SimTrace& trace) {
  ControlNetwork network(scn);
  std::vector<ControlOutput> out;
  out.reserve(trace.records.size());
  for (Step k = 0; k < trace.steps(); ++k) {
    std::vector<ReceivedSignal> received;
    for (std::size_t i = 0; i < trace.n_agents; ++i) received.push_back(trace.at(k, i).ya);
    auto tick = network.step(k, received, leader_received(scn, k));
    for (auto& o : tick.outputs) out.push_back(std::move(o));
  }
  return out;
}

ConsensusMetrics consensus_metrics(const SimTrace& trace, Step begin, Step end) {
  if (begin < 0 || end <= begin || end > trace.steps()) {
    throw std::invalid_argument("consensus_metrics: window [" + std::to_string(begin) + ", " +
                                std::to_string(end) + ") is empty or outside the trace");
  }
  const std::size_t n = trace.n_agents;
  const auto count = static_cast<double>(end - begin);
  ConsensusMetrics m;
  m.rms_xi.assign(n, 0.0);
  m.sup_xi.assign(n, 0.0);
  m.mean_output.assign(n, Vec::Zero(trace.output_dim));
  const bool tracking = !trace.leader.empty() && trace.leader.front().has_value();
  if (tracking) m.mean_tracking_error.assign(n, 0.0);

  double total_sq = 0.0;
  for (Step k = begin; k < end; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& rec = trace.at(k, i);
      const double e = rec.xi.norm();
      m.rms_xi[i] += e * e;
      total_sq += e * e;
      m.sup_xi[i] = std::max(m.sup_xi[i], e);
      m.mean_output[i] += rec.y;
      if (tracking) m.mean_tracking_error[i] += (rec.y - *trace.leader[static_cast<std::size_t>(k)]).norm();
      for (std::size_t j = i + 1; j < n; ++j) {
        m.max_disagreement = std::max(m.max_disagreement, (rec.y - trace.at(k, j).y).norm());
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    m.rms_xi[i] = std::sqrt(m.rms_xi[i] / count);
    m.mean_output[i] /= count;
    if (tracking) m.mean_tracking_error[i] /= count;
  }
  m.network_rms_xi = std::sqrt(total_sq / (count * static_cast<double>(n)));
  return m;
}

namespace {

// 8-point Gauss-Legendre nodes/weights mapped to [0, 1].
constexpr std::array<double, 8> kGlNodes{0.019855071751231856, 0.10166676129318664, 0.2372337950418355,
                                         0.4082826787521751,   0.5917173212478249,  0.7627662049581645,
                                         0.8983332387068134,   0.9801449282487681};
constexpr std::array<double, 8> kGlWeights{0.05061426814518813, 0.11119051722668724, 0.15685332293894363,
                                           0.18134189168918100, 0.18134189168918100, 0.15685332293894363,
                                           0.11119051722668724, 0.05061426814518813};

Vec checked(const BlockMap& map, const Vec& u, const Vec& z) {
  Vec out = map(u, z);
  if (!out.allFinite()) throw DivergenceFault("dcfdl_probe: map evaluation is not finite", 0, 0);
  return out;
}

// Central-difference Jacobian with respect to one block.
Mat jacobian(const BlockMap& map, const Vec& u, const Vec& z, bool wrt_u, double eps) {
  const Vec& x = wrt_u ? u : z;
  Mat jac;
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    Vec plus = x;
    Vec minus = x;
    plus(c) += eps;
    minus(c) -= eps;
    const Vec fp = wrt_u ? checked(map, plus, z) : checked(map, u, plus);
    const Vec fm = wrt_u ? checked(map, minus, z) : checked(map, u, minus);
    if (c == 0) jac.resize(fp.size(), x.size());
    jac.col(c) = (fp - fm) / (2.0 * eps);
  }
  return jac;
}

// Mean-value matrix: integral over s in [0,1] of J(start + s (end - start)).
Mat mean_value_jacobian(const BlockMap& map, const Vec& u_start, const Vec& u_end, const Vec& z_start,
                        const Vec& z_end, bool wrt_u, double eps) {
  constexpr int kPanels = 4;
  Mat acc;
  for (int p = 0; p < kPanels; ++p) {
    for (std::size_t q = 0; q < kGlNodes.size(); ++q) {
      const double s = (p + kGlNodes[q]) / kPanels;
      const Vec u = u_start + s * (u_end - u_start);
      const Vec z = z_start + s * (z_end - z_start);
      Mat j = jacobian(map, u, z, wrt_u, eps);
      if (acc.size() == 0) acc = Mat::Zero(j.rows(), j.cols());
      acc += (kGlWeights[q] / kPanels) * j;
    }
  }
  return acc;
}

}  // namespace

DcfdlProbe dcfdl_probe(const BlockMap& map, const Vec& u_prev, const Vec& u_now, const Vec& z_prev,
                       const Vec& z_now, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("dcfdl_probe: perturbation size must be positive");
  if (u_prev.size() != u_now.size() || z_prev.size() != z_now.size()) {
    throw std::invalid_argument("dcfdl_probe: operating points differ in dimension");
  }
  DcfdlProbe probe;
  const Vec base = checked(map, u_prev, z_now);
  probe.point_jacobian.resize(base.size(), u_prev.size());
  for (Eigen::Index c = 0; c < u_prev.size(); ++c) {
    Vec shifted = u_prev;
    shifted(c) += eps;
    probe.point_jacobian.col(c) = (checked(map, shifted, z_now) - base) / eps;
  }

  // Split the increment as in the compact-form derivation: first the input
  // moves at the new context z_now, then the context moves at the old input.
  probe.ppjm = mean_value_jacobian(map, u_prev, u_now, z_now, z_now, true, eps);
  if (z_prev.size() > 0) {
    const Mat jz = mean_value_jacobian(map, u_prev, u_prev, z_prev, z_now, false, eps);
    probe.residual = jz * (z_now - z_prev);
  } else {
    probe.residual = Vec::Zero(base.size());
  }
  probe.observed_delta = checked(map, u_now, z_now) - checked(map, u_prev, z_prev);
  probe.reconstruction_error = (probe.observed_delta - probe.ppjm * (u_now - u_prev) - probe.residual).norm();
  const double scale = probe.observed_delta.norm();
  probe.relative_error = scale > 0.0 ? probe.reconstruction_error / scale : probe.reconstruction_error;
  return probe;
}

BlockMap plant_block_map(std::shared_ptr<const PlantModel> plant) {
  return [plant](const Vec& u, const Vec& z) {
    const auto ny = plant->output_dim();
    return plant->step(z.head(ny), u, z.tail(z.size() - ny), 0, 0);
  };
}

BlockMap lifted_error_map(const Topology& topo, std::vector<std::shared_ptr<const PlantModel>> plants,
                          std::size_t agent) {
  if (plants.size() != topo.n_agents() || agent >= topo.n_agents()) {
    throw std::invalid_argument("lifted_error_map: plant count or agent index mismatch");
  }
  return [topo, plants = std::move(plants), agent](const Vec& u_i, const Vec& z) {
    const auto n = static_cast<Eigen::Index>(topo.n_agents());
    const auto ny = plants.front()->output_dim();
    const auto nu = plants.front()->input_dim();
    const Vec d = z.segment(n * ny + n * nu, ny);
    std::vector<Vec> next(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      const Vec y_j = z.segment(j * ny, ny);
      const Vec u_j = static_cast<std::size_t>(j) == agent ? u_i : Vec(z.segment(n * ny + j * nu, nu));
      next[static_cast<std::size_t>(j)] = plants[static_cast<std::size_t>(j)]->step(y_j, u_j, d, 0, 0);
    }
    std::optional<Vec> y0;
    if (topo.has_leader()) y0 = z.tail(ny);
    return neighborhood_error(topo, next, y0)[agent];
  };
}

double decay_harness(double l3, double c, int steps) {
  if (l3 == 1.0) throw std::invalid_argument("decay_harness: l3 = 1 converges in one step; ratio undefined");
  if (steps < 2) throw std::invalid_argument("decay_harness: need at least two steps");

  ControllerGains gains;
  gains.l = {0.0, 0.0, l3, 0.0, 0.0, 0.0, 0.0, 0.0};
  const Vec chi = Vec::Zero(1);
  const Mat phi = Mat::Ones(1, 1);
  const Vec du = Vec::Zero(1);
  ObserverState obs = ObserverState::zero(1);
  obs.chi_hat(0) = -1.0;  // chi_tilde(0) = 1
  obs.theta_hat(0) = c;   // frozen drive: l4 = l5 = l6 = 0

  const double fixed_point = -c / l3;
  const double floor = 1e-6 * std::max(1.0, std::abs(fixed_point));
  double ratio = std::numeric_limits<double>::quiet_NaN();
  double dist = std::abs((chi - obs.chi_hat)(0) - fixed_point);
  for (int k = 0; k < steps; ++k) {
    const Vec chi_tilde = chi - obs.chi_hat;
    obs = observer_step(obs, phi, du, chi_tilde, gains, k, 0);
    const double next = std::abs((chi - obs.chi_hat)(0) - fixed_point);
    if (dist < floor || next < floor) break;
    ratio = next / dist;
    dist = next;
  }
  if (std::isnan(ratio)) throw std::invalid_argument("decay_harness: start already at the fixed point");
  return ratio;
}

}  // namespace rmfac
