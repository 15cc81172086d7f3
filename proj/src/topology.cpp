#include "resilient_mfac/topology.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>

namespace rmfac {

Topology::Topology(Mat adjacency, Vec pinning)
    : adjacency_(std::move(adjacency)), pinning_(std::move(pinning)) {
  const auto n = adjacency_.rows();
  if (n == 0) throw ValidationError("topology: at least one agent is required");
  if (adjacency_.cols() != n) throw ValidationError("topology: adjacency must be square");
  if (pinning_.size() != n) {
    throw ValidationError("topology: pinning has " + std::to_string(pinning_.size()) +
                          " entries, expected " + std::to_string(n));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (adjacency_(i, i) != 0.0) {
      throw ValidationError("topology: self-edge on agent " + std::to_string(i + 1));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = adjacency_(i, j);
      if (!std::isfinite(a) || a < 0.0) {
        throw ValidationError("topology: weight a(" + std::to_string(i + 1) + "," +
                              std::to_string(j + 1) + ") must be finite and non-negative");
      }
    }
    if (pinning_(i) != 0.0 && pinning_(i) != 1.0) {
      throw ValidationError("topology: pinning gain of agent " + std::to_string(i + 1) +
                            " must be 0 or 1");
    }
  }
}

bool Topology::has_leader() const { return (pinning_.array() != 0.0).any(); }

std::vector<std::size_t> Topology::neighbors(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n_agents(); ++j) {
    if (adjacency_(i, j) > 0.0) out.push_back(j);
  }
  return out;
}

LaplacianSet build_laplacian(const Topology& topo) {
  const Mat& a = topo.adjacency();
  LaplacianSet out;
  out.degree = a.rowwise().sum().asDiagonal();
  out.laplacian = out.degree - a;
  out.pinned = out.laplacian;
  out.pinned.diagonal() += topo.pinning();
  return out;
}

namespace {

// Breadth-first reach along edges j -> i starting from the given seeds.
std::vector<bool> reach(const Topology& topo, const std::vector<std::size_t>& seeds) {
  const std::size_t n = topo.n_agents();
  std::vector<bool> seen(n, false);
  std::deque<std::size_t> queue;
  for (auto s : seeds) {
    if (!seen[s]) {
      seen[s] = true;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    const auto j = queue.front();
    queue.pop_front();
    for (std::size_t i = 0; i < n; ++i) {
      if (!seen[i] && topo.weight(i, j) > 0.0) {
        seen[i] = true;
        queue.push_back(i);
      }
    }
  }
  return seen;
}

bool covers_all(const std::vector<bool>& seen) {
  for (bool s : seen) {
    if (!s) return false;
  }
  return true;
}

}  // namespace

bool has_spanning_tree(const Topology& topo, bool include_leader) {
  if (include_leader && topo.has_leader()) {
    std::vector<std::size_t> pinned;
    for (std::size_t i = 0; i < topo.n_agents(); ++i) {
      if (topo.pinning()(static_cast<Eigen::Index>(i)) != 0.0) pinned.push_back(i);
    }
    return covers_all(reach(topo, pinned));
  }
  for (std::size_t root = 0; root < topo.n_agents(); ++root) {
    if (covers_all(reach(topo, {root}))) return true;
  }
  return false;
}

std::vector<Vec> neighborhood_error(const Topology& topo, std::span<const Vec> outputs,
                                    const std::optional<Vec>& leader_output) {
  const std::size_t n = topo.n_agents();
  if (outputs.size() != n) {
    throw std::invalid_argument("neighborhood_error: expected " + std::to_string(n) +
                                " output vectors, got " + std::to_string(outputs.size()));
  }
  const auto dim = outputs.front().size();
  for (const auto& y : outputs) {
    if (y.size() != dim) throw std::invalid_argument("neighborhood_error: output dimension mismatch");
  }
  if (leader_output && leader_output->size() != dim) {
    throw std::invalid_argument("neighborhood_error: leader dimension mismatch");
  }

  std::vector<Vec> xi(n, Vec::Zero(dim));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = topo.weight(i, j);
      if (a > 0.0) xi[i] += a * (outputs[i] - outputs[j]);
    }
    const double g = topo.pinning()(static_cast<Eigen::Index>(i));
    if (g != 0.0) {
      if (!leader_output) {
        throw std::invalid_argument("neighborhood_error: agent " + std::to_string(i + 1) +
                                    " is pinned but no leader output was supplied");
      }
      xi[i] += g * (outputs[i] - *leader_output);
    }
  }
  return xi;
}

std::vector<ChannelBits> error_availability(const Topology& topo,
                                            std::span<const ChannelBits> delivered) {
  const std::size_t n = topo.n_agents();
  if (delivered.size() != n) throw std::invalid_argument("error_availability: agent count mismatch");
  std::vector<ChannelBits> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ChannelBits bits = delivered[i];
    for (auto j : topo.neighbors(i)) bits = bits.min(delivered[j]);
    out.push_back(std::move(bits));
  }
  return out;
}

}  // namespace rmfac
