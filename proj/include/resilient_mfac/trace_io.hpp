#pragma once

#include "resilient_mfac/engine.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace rmfac {

/// Column names of the trace table, in order, for the given output and input
/// dimensions. For the two-channel benchmark this is the fixed schema
/// k,agent,y_1,y_2,ya_1,ya_2,u_1,u_2,xi_1,xi_2,...,phinorm,gammarad,reset,h_1,h_2.
std::vector<std::string> trace_columns(Eigen::Index output_dim = 2, Eigen::Index input_dim = 2);

/// Shortest text that parses back to exactly the same double.
std::string format_double(double v);

/// Writes one row per (k, agent) with a header. Denied channels of the
/// received output are written as NA. Agents are numbered from 1.
void write_trace(std::ostream& out, const SimTrace& trace);
void write_trace(const std::filesystem::path& path, const SimTrace& trace);

/// k,y0_1,y0_2 per logged step; nothing is written for a leaderless trace.
void write_leader(std::ostream& out, const SimTrace& trace);

/// One parsed trace row; NA fields read back as NaN.
struct TraceRow {
  Step k = 0;
  std::size_t agent = 0;  // 1-based, as written
  Vec y, ya, u, xi, chi, chi_hat, chi_tilde, theta_hat, d_hat, delta_hat;
  double phi_norm = 0.0;
  double gamma_radius = 0.0;
  bool reset = false;
  ChannelBits h;
};

struct TraceTable {
  Eigen::Index output_dim = 2;
  std::size_t n_agents = 0;
  std::vector<TraceRow> rows;
};

/// Throws ParseError (with the 1-based line) on a bad header or row.
TraceTable read_trace(std::istream& in);
TraceTable read_trace(const std::filesystem::path& path);

/// Leader samples written by write_leader; empty when the file is absent.
std::vector<std::pair<Step, Vec>> read_leader(const std::filesystem::path& path);

}  // namespace rmfac
