#pragma once

#include "resilient_mfac/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace rmfac {

/// Directed communication graph among followers plus pinning to the leader.
///
/// adjacency(i, j) = a_ij > 0 means agent i receives agent j's output.
/// pinning(i) = g_i is 1 when agent i receives the leader trajectory.
/// Immutable after construction.
class Topology {
 public:
  /// Throws ValidationError on non-square adjacency, non-zero diagonal,
  /// negative or non-finite weights, or pinning gains outside {0, 1}.
  Topology(Mat adjacency, Vec pinning);

  std::size_t n_agents() const { return static_cast<std::size_t>(adjacency_.rows()); }
  const Mat& adjacency() const { return adjacency_; }
  const Vec& pinning() const { return pinning_; }
  double weight(std::size_t i, std::size_t j) const { return adjacency_(i, j); }
  bool has_leader() const;
  /// In-neighbours of agent i (indices j with a_ij > 0).
  std::vector<std::size_t> neighbors(std::size_t i) const;

 private:
  Mat adjacency_;
  Vec pinning_;
};

struct LaplacianSet {
  Mat degree;
  Mat laplacian;
  Mat pinned;  // laplacian + diag(g)
};

LaplacianSet build_laplacian(const Topology& topo);

/// True iff a root reaches every agent along directed edges j -> i.
/// With include_leader and at least one pinned agent, the root is the leader
/// node; otherwise any agent may serve as root.
bool has_spanning_tree(const Topology& topo, bool include_leader);

/// Neighbourhood consensus error from the supplied (possibly attacked) outputs:
///   xi_i = sum_j a_ij (y_i - y_j) + g_i (y_i - y_0).
/// Both terms share the sign of y_i, so xi = ((L + G) (x) I)(y - 1 (x) y_0).
/// Throws std::invalid_argument on dimension mismatch or when a pinned agent
/// has no leader signal.
std::vector<Vec> neighborhood_error(const Topology& topo, std::span<const Vec> outputs,
                                    const std::optional<Vec>& leader_output);

/// Channel m of xi_i is computable only when agent i's own channel m and every
/// in-neighbour's channel m were delivered.
std::vector<ChannelBits> error_availability(const Topology& topo,
                                            std::span<const ChannelBits> delivered);

}  // namespace rmfac
