#include "resilient_mfac/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace rmfac {

namespace {

constexpr const char* kAbsent = "NA";

void append_channels(std::vector<std::string>& cols, const std::string& stem, Eigen::Index dim) {
  for (Eigen::Index m = 1; m <= dim; ++m) cols.push_back(stem + "_" + std::to_string(m));
}

}  // namespace

std::vector<std::string> trace_columns(Eigen::Index ny, Eigen::Index nu) {
  std::vector<std::string> cols{"k", "agent"};
  append_channels(cols, "y", ny);
  append_channels(cols, "ya", ny);
  append_channels(cols, "u", nu);
  for (const char* stem : {"xi", "chi", "chihat", "chitil", "thetahat", "dhat", "deltahat"}) {
    append_channels(cols, stem, ny);
  }
  cols.insert(cols.end(), {"phinorm", "gammarad", "reset"});
  append_channels(cols, "h", ny);
  return cols;
}

std::string format_double(double v) {
  if (std::isnan(v)) return kAbsent;
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

void put(std::string& line, const Vec& v) {
  for (Eigen::Index m = 0; m < v.size(); ++m) {
    line += ',';
    line += format_double(v(m));
  }
}

}  // namespace

void write_trace(std::ostream& out, const SimTrace& trace) {
  const Eigen::Index nu = trace.records.empty() ? 2 : trace.records.front().u.size();
  const auto cols = trace_columns(trace.output_dim == 0 ? 2 : trace.output_dim, nu);
  std::string line;
  for (std::size_t c = 0; c < cols.size(); ++c) line += (c ? "," : "") + cols[c];
  out << line << '\n';
  for (const auto& r : trace.records) {
    line = std::to_string(r.k) + "," + std::to_string(r.agent + 1);
    put(line, r.y);
    put(line, r.ya.value);  // NaN marks an absent channel
    put(line, r.u);
    put(line, r.xi);
    put(line, r.chi);
    put(line, r.chi_hat);
    put(line, r.chi_tilde);
    put(line, r.theta_hat);
    put(line, r.d_hat);
    put(line, r.delta_hat);
    line += "," + format_double(r.phi_norm) + "," + format_double(r.gamma_radius) + (r.reset ? ",1" : ",0");
    for (Eigen::Index m = 0; m < r.h.size(); ++m) line += "," + std::to_string(r.h(m));
    out << line << '\n';
  }
}

void write_trace(const std::filesystem::path& path, const SimTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write trace '" + path.string() + "'");
  write_trace(out, trace);
  if (!out) throw Error("error writing trace '" + path.string() + "'");
}

void write_leader(std::ostream& out, const SimTrace& trace) {
  if (trace.leader.empty() || !trace.leader.front()) return;
  std::string line = "k";
  for (Eigen::Index m = 1; m <= trace.output_dim; ++m) line += ",y0_" + std::to_string(m);
  out << line << '\n';
  for (std::size_t k = 0; k < trace.leader.size(); ++k) {
    line = std::to_string(k);
    put(line, *trace.leader[k]);
    out << line << '\n';
  }
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

class RowParser {
 public:
  RowParser(const std::vector<std::string_view>& fields, int line, const std::vector<std::string>& cols)
      : fields_(fields), line_(line), cols_(cols) {}

  double number() {
    const auto f = next();
    if (f == kAbsent) return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (res.ec != std::errc() || res.ptr != f.data() + f.size()) fail("not a number");
    return v;
  }

  std::int64_t integer() {
    const auto f = next();
    std::int64_t v = 0;
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (res.ec != std::errc() || res.ptr != f.data() + f.size()) fail("not an integer");
    return v;
  }

  Vec vec(Eigen::Index dim) {
    Vec v(dim);
    for (Eigen::Index m = 0; m < dim; ++m) v(m) = number();
    return v;
  }

 private:
  std::string_view next() {
    if (pos_ >= fields_.size()) fail("missing field");
    return fields_[pos_++];
  }

  [[noreturn]] void fail(const std::string& what) const {
    const std::string col = pos_ == 0 ? "" : cols_[pos_ - 1];
    throw ParseError("trace: line " + std::to_string(line_) + ", column '" + col + "': " + what, line_, col);
  }

  const std::vector<std::string_view>& fields_;
  int line_;
  const std::vector<std::string>& cols_;
  std::size_t pos_ = 0;
};

}  // namespace

TraceTable read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("trace: empty file", 1, "");
  const auto header = split(trim_cr(line));
  TraceTable table;
  Eigen::Index ny = 0;
  for (const auto& h : header) {
    if (h.rfind("y_", 0) == 0) ++ny;
  }
  Eigen::Index nu = 0;
  for (const auto& h : header) {
    if (h.rfind("u_", 0) == 0) ++nu;
  }
  const auto cols = trace_columns(ny, nu);
  if (ny == 0 || header.size() != cols.size() || !std::equal(cols.begin(), cols.end(), header.begin())) {
    throw ParseError("trace: unexpected header", 1, "");
  }
  table.output_dim = ny;

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim_cr(line);
    if (body.empty()) continue;
    const auto fields = split(body);
    if (fields.size() != cols.size()) {
      throw ParseError("trace: line " + std::to_string(lineno) + ": expected " + std::to_string(cols.size()) +
                           " fields, found " + std::to_string(fields.size()),
                       lineno, "");
    }
    RowParser p(fields, lineno, cols);
    TraceRow r;
    r.k = p.integer();
    r.agent = static_cast<std::size_t>(p.integer());
    r.y = p.vec(ny);
    r.ya = p.vec(ny);
    r.u = p.vec(nu);
    r.xi = p.vec(ny);
    r.chi = p.vec(ny);
    r.chi_hat = p.vec(ny);
    r.chi_tilde = p.vec(ny);
    r.theta_hat = p.vec(ny);
    r.d_hat = p.vec(ny);
    r.delta_hat = p.vec(ny);
    r.phi_norm = p.number();
    r.gamma_radius = p.number();
    r.reset = p.integer() != 0;
    r.h.resize(ny);
    for (Eigen::Index m = 0; m < ny; ++m) r.h(m) = static_cast<int>(p.integer());
    table.n_agents = std::max(table.n_agents, r.agent);
    table.rows.push_back(std::move(r));
  }
  return table;
}

TraceTable read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open trace '" + path.string() + "'");
  return read_trace(in);
}

std::vector<std::pair<Step, Vec>> read_leader(const std::filesystem::path& path) {
  std::vector<std::pair<Step, Vec>> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string line;
  if (!std::getline(in, line)) return out;
  const auto header = split(trim_cr(line));
  const auto ny = static_cast<Eigen::Index>(header.size()) - 1;
  std::vector<std::string> cols(header.begin(), header.end());
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim_cr(line);
    if (body.empty()) continue;
    const auto fields = split(body);
    if (static_cast<Eigen::Index>(fields.size()) != ny + 1) throw ParseError("leader: bad row", lineno, "");
    RowParser p(fields, lineno, cols);
    const Step k = p.integer();
    out.emplace_back(k, p.vec(ny));
  }
  return out;
}

}  // namespace rmfac
