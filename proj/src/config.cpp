#include "resilient_mfac/config.hpp"

#include "resilient_mfac/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace rmfac {

using nlohmann::json;

namespace {

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& field, const std::string& message) const {
    const int line = line_of(field);
    std::string where = field.empty() ? std::string("document") : "field '" + field + "'";
    if (line > 0) where += " (line " + std::to_string(line) + ")";
    throw ParseError("config: " + where + ": " + message, line, field);
  }

  void check_object(const json& j, const std::string& field, std::initializer_list<const char*> allowed) const {
    if (!j.is_object()) fail(field, "expected an object");
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!keys.count(it.key())) fail(join(field, it.key()), "unknown key");
    }
  }

  double number(const json& j, const std::string& field) const {
    if (!j.is_number()) fail(field, "expected a number");
    return j.get<double>();
  }

  std::int64_t integer(const json& j, const std::string& field) const {
    if (!j.is_number_integer()) fail(field, "expected an integer");
    return j.get<std::int64_t>();
  }

  std::uint64_t unsigned_integer(const json& j, const std::string& field) const {
    if (!j.is_number_unsigned()) fail(field, "expected a non-negative integer");
    return j.get<std::uint64_t>();
  }

  bool boolean(const json& j, const std::string& field) const {
    if (!j.is_boolean()) fail(field, "expected true or false");
    return j.get<bool>();
  }

  std::string string(const json& j, const std::string& field) const {
    if (!j.is_string()) fail(field, "expected a string");
    return j.get<std::string>();
  }

  std::vector<double> numbers(const json& j, const std::string& field) const {
    if (!j.is_array()) fail(field, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::vector<std::vector<double>> rows(const json& j, const std::string& field) const {
    if (!j.is_array()) fail(field, "expected an array of arrays");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(numbers(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }

  template <std::size_t N>
  std::array<double, N> fixed(const json& j, const std::string& field) const {
    const auto v = numbers(j, field);
    if (v.size() != N) fail(field, "expected " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  }

  static std::string join(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
  }

 private:
  // Line of the first occurrence of the field's last key in the source text.
  int line_of(const std::string& field) const {
    if (field.empty()) return 0;
    std::string key = field.substr(field.rfind('.') == std::string::npos ? 0 : field.rfind('.') + 1);
    key = key.substr(0, key.find('['));
    const auto pos = text_.find("\"" + key + "\"");
    if (pos == std::string::npos) return 0;
    return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
  }

  const std::string& text_;
};

TopologyConfig read_topology(const Reader& r, const json& j) {
  r.check_object(j, "topology", {"adjacency", "pinning"});
  TopologyConfig t;
  if (!j.contains("adjacency")) r.fail("topology.adjacency", "required");
  t.adjacency = r.rows(j["adjacency"], "topology.adjacency");
  if (j.contains("pinning")) t.pinning = r.numbers(j["pinning"], "topology.pinning");
  return t;
}

PlantsConfig read_plants(const Reader& r, const json& j) {
  r.check_object(j, "plants", {"w", "per_agent"});
  PlantsConfig p;
  if (j.contains("w")) p.w = r.fixed<5>(j["w"], "plants.w");
  if (j.contains("per_agent")) {
    const auto& arr = j["per_agent"];
    if (!arr.is_array()) r.fail("plants.per_agent", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) p.per_agent.push_back(r.fixed<5>(arr[i], "plants.per_agent[" + std::to_string(i) + "]"));
  }
  return p;
}

InitialConfig read_initial(const Reader& r, const json& j) {
  r.check_object(j, "initial", {"mode", "low", "high", "levels", "values"});
  InitialConfig c;
  if (j.contains("mode")) c.mode = r.string(j["mode"], "initial.mode");
  if (c.mode != "uniform" && c.mode != "explicit") r.fail("initial.mode", "expected \"uniform\" or \"explicit\"");
  if (j.contains("low")) c.low = r.number(j["low"], "initial.low");
  if (j.contains("high")) c.high = r.number(j["high"], "initial.high");
  if (j.contains("levels")) c.levels = r.numbers(j["levels"], "initial.levels");
  if (j.contains("values")) c.values = r.rows(j["values"], "initial.values");
  return c;
}

std::optional<LeaderConfig> read_leader(const Reader& r, const json& j) {
  if (j.is_null()) return std::nullopt;
  r.check_object(j, "leader", {"segments", "attacked"});
  LeaderConfig l;
  if (j.contains("attacked")) l.attacked = r.boolean(j["attacked"], "leader.attacked");
  if (!j.contains("segments") || !j["segments"].is_array()) r.fail("leader.segments", "expected an array of segments");
  const auto& segs = j["segments"];
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const std::string field = "leader.segments[" + std::to_string(s) + "]";
    r.check_object(segs[s], field, {"start", "value"});
    LeaderSegmentConfig seg;
    if (segs[s].contains("start")) seg.start = r.integer(segs[s]["start"], field + ".start");
    if (!segs[s].contains("value")) r.fail(field + ".value", "required");
    seg.value = r.numbers(segs[s]["value"], field + ".value");
    l.segments.push_back(std::move(seg));
  }
  return l;
}

DosConfig read_dos(const Reader& r, const json& j) {
  r.check_object(j, "attacks.dos", {"mode", "budget", "generator", "seed", "intervals"});
  DosConfig d;
  if (j.contains("mode")) d.mode = r.string(j["mode"], "attacks.dos.mode");
  if (d.mode != "none" && d.mode != "generate" && d.mode != "explicit") {
    r.fail("attacks.dos.mode", "expected \"none\", \"generate\" or \"explicit\"");
  }
  if (j.contains("budget")) {
    const auto& b = j["budget"];
    r.check_object(b, "attacks.dos.budget", {"kappa", "rate_count", "xi", "rate_duration"});
    if (b.contains("kappa")) d.budget.kappa_a = r.number(b["kappa"], "attacks.dos.budget.kappa");
    if (b.contains("rate_count")) d.budget.rate_a = r.number(b["rate_count"], "attacks.dos.budget.rate_count");
    if (b.contains("xi")) d.budget.xi_a = r.number(b["xi"], "attacks.dos.budget.xi");
    if (b.contains("rate_duration")) d.budget.rate_xi = r.number(b["rate_duration"], "attacks.dos.budget.rate_duration");
  }
  if (j.contains("generator")) {
    const auto& g = j["generator"];
    const std::string f = "attacks.dos.generator";
    r.check_object(g, f, {"min_length", "max_length", "min_gap", "max_gap"});
    if (g.contains("min_length")) d.generator.min_length = r.integer(g["min_length"], f + ".min_length");
    if (g.contains("max_length")) d.generator.max_length = r.integer(g["max_length"], f + ".max_length");
    if (g.contains("min_gap")) d.generator.min_gap = r.integer(g["min_gap"], f + ".min_gap");
    if (g.contains("max_gap")) d.generator.max_gap = r.integer(g["max_gap"], f + ".max_gap");
  }
  if (j.contains("seed")) d.seed = r.unsigned_integer(j["seed"], "attacks.dos.seed");
  if (j.contains("intervals")) {
    const auto& agents = j["intervals"];
    if (!agents.is_array()) r.fail("attacks.dos.intervals", "expected [agent][channel][[on, off], ...]");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const std::string fa = "attacks.dos.intervals[" + std::to_string(i) + "]";
      if (!agents[i].is_array()) r.fail(fa, "expected one list per channel");
      std::vector<std::vector<DosInterval>> channels;
      for (std::size_t m = 0; m < agents[i].size(); ++m) {
        const std::string fm = fa + "[" + std::to_string(m) + "]";
        if (!agents[i][m].is_array()) r.fail(fm, "expected a list of [on, off] pairs");
        std::vector<DosInterval> list;
        for (std::size_t q = 0; q < agents[i][m].size(); ++q) {
          const auto& pair = agents[i][m][q];
          const std::string fq = fm + "[" + std::to_string(q) + "]";
          if (!pair.is_array() || pair.size() != 2) r.fail(fq, "expected [on, off]");
          list.push_back({r.integer(pair[0], fq), r.integer(pair[1], fq)});
        }
        channels.push_back(std::move(list));
      }
      d.intervals.push_back(std::move(channels));
    }
  }
  return d;
}

AttacksConfig read_attacks(const Reader& r, const json& j) {
  r.check_object(j, "attacks", {"fdi", "dos"});
  AttacksConfig a;
  if (j.contains("fdi")) {
    const auto& f = j["fdi"];
    r.check_object(f, "attacks.fdi", {"enabled", "amplitude", "multipliers", "period"});
    if (f.contains("enabled")) a.fdi_enabled = r.boolean(f["enabled"], "attacks.fdi.enabled");
    if (f.contains("amplitude")) a.fdi_amplitude = r.number(f["amplitude"], "attacks.fdi.amplitude");
    if (f.contains("multipliers")) a.fdi_multipliers = r.fixed<3>(f["multipliers"], "attacks.fdi.multipliers");
    if (f.contains("period")) a.fdi_period = r.number(f["period"], "attacks.fdi.period");
  }
  if (j.contains("dos")) a.dos = read_dos(r, j["dos"]);
  return a;
}

ControllerConfig read_controller(const Reader& r, const json& j) {
  r.check_object(j, "controller",
                 {"variant", "eta", "rho", "lambda", "mu", "eps_norm", "eps_input", "l", "phi_init"});
  ControllerConfig c;
  auto& g = c.gains;
  if (j.contains("variant")) {
    c.variant = r.string(j["variant"], "controller.variant");
    try {
      parse_variant(c.variant);
    } catch (const ValidationError& e) {
      r.fail("controller.variant", e.what());
    }
  }
  if (j.contains("eta")) g.eta = r.number(j["eta"], "controller.eta");
  if (j.contains("rho")) g.rho = r.number(j["rho"], "controller.rho");
  if (j.contains("lambda")) g.lambda = r.number(j["lambda"], "controller.lambda");
  if (j.contains("mu")) g.mu = r.number(j["mu"], "controller.mu");
  if (j.contains("eps_norm")) g.eps_norm = r.number(j["eps_norm"], "controller.eps_norm");
  if (j.contains("eps_input")) g.eps_input = r.number(j["eps_input"], "controller.eps_input");
  if (j.contains("l")) g.l = r.fixed<8>(j["l"], "controller.l");
  if (j.contains("phi_init")) c.phi_init = r.rows(j["phi_init"], "controller.phi_init");
  return c;
}

RunConfig read_run(const Reader& r, const json& j) {
  r.check_object(j, "run", {"horizon", "seed", "output_dir"});
  RunConfig c;
  if (j.contains("horizon")) c.horizon = r.integer(j["horizon"], "run.horizon");
  if (j.contains("seed")) c.seed = r.unsigned_integer(j["seed"], "run.seed");
  if (j.contains("output_dir")) c.output_dir = r.string(j["output_dir"], "run.output_dir");
  return c;
}

int line_at_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    const int line = line_at_offset(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("config: line " + std::to_string(line) + ": malformed JSON: " + e.what(), line, "");
  }
  const Reader r(text);
  r.check_object(doc, "", {"name", "topology", "plants", "initial", "leader", "attacks", "disturbance", "controller", "run"});

  ScenarioConfig c;
  if (doc.contains("name")) c.name = r.string(doc["name"], "name");
  if (!doc.contains("topology")) r.fail("topology", "required");
  c.topology = read_topology(r, doc["topology"]);
  if (doc.contains("plants")) c.plants = read_plants(r, doc["plants"]);
  if (doc.contains("initial")) c.initial = read_initial(r, doc["initial"]);
  if (doc.contains("leader")) c.leader = read_leader(r, doc["leader"]);
  if (doc.contains("attacks")) c.attacks = read_attacks(r, doc["attacks"]);
  if (doc.contains("disturbance")) {
    r.check_object(doc["disturbance"], "disturbance", {"amplitude"});
    if (doc["disturbance"].contains("amplitude")) {
      c.disturbance_amplitude = r.number(doc["disturbance"]["amplitude"], "disturbance.amplitude");
    }
  }
  if (doc.contains("controller")) c.controller = read_controller(r, doc["controller"]);
  if (doc.contains("run")) c.run = read_run(r, doc["run"]);
  return c;
}

std::string serialize_config(const ScenarioConfig& c) {
  json doc = json::object();
  doc["name"] = c.name;
  doc["topology"] = {{"adjacency", c.topology.adjacency}, {"pinning", c.topology.pinning}};
  doc["plants"] = {{"w", c.plants.w}, {"per_agent", c.plants.per_agent}};
  doc["initial"] = {{"mode", c.initial.mode},     {"low", c.initial.low},      {"high", c.initial.high},
                    {"levels", c.initial.levels}, {"values", c.initial.values}};
  if (c.leader) {
    json segs = json::array();
    for (const auto& s : c.leader->segments) segs.push_back({{"start", s.start}, {"value", s.value}});
    doc["leader"] = {{"segments", segs}, {"attacked", c.leader->attacked}};
  } else {
    doc["leader"] = nullptr;
  }

  const auto& a = c.attacks;
  json fdi = {{"enabled", a.fdi_enabled}, {"amplitude", a.fdi_amplitude}, {"multipliers", a.fdi_multipliers}};
  if (a.fdi_period) fdi["period"] = *a.fdi_period;
  json intervals = json::array();
  for (const auto& agent : a.dos.intervals) {
    json channels = json::array();
    for (const auto& list : agent) {
      json pairs = json::array();
      for (const auto& iv : list) pairs.push_back({iv.on, iv.off});
      channels.push_back(pairs);
    }
    intervals.push_back(channels);
  }
  json dos = {{"mode", a.dos.mode},
              {"budget",
               {{"kappa", a.dos.budget.kappa_a},
                {"rate_count", a.dos.budget.rate_a},
                {"xi", a.dos.budget.xi_a},
                {"rate_duration", a.dos.budget.rate_xi}}},
              {"generator",
               {{"min_length", a.dos.generator.min_length},
                {"max_length", a.dos.generator.max_length},
                {"min_gap", a.dos.generator.min_gap},
                {"max_gap", a.dos.generator.max_gap}}},
              {"intervals", intervals}};
  if (a.dos.seed) dos["seed"] = *a.dos.seed;
  doc["attacks"] = {{"fdi", fdi}, {"dos", dos}};
  doc["disturbance"] = {{"amplitude", c.disturbance_amplitude}};

  const auto& g = c.controller.gains;
  doc["controller"] = {{"variant", c.controller.variant},
                       {"eta", g.eta},
                       {"rho", g.rho},
                       {"lambda", g.lambda},
                       {"mu", g.mu},
                       {"eps_norm", g.eps_norm},
                       {"eps_input", g.eps_input},
                       {"l", g.l},
                       {"phi_init", c.controller.phi_init}};
  doc["run"] = {{"horizon", c.run.horizon}, {"seed", c.run.seed}, {"output_dir", c.run.output_dir}};
  return doc.dump(2) + "\n";
}

namespace {

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

Mat to_mat(const std::vector<std::vector<double>>& rows, const char* what) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = n == 0 ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Mat out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != m) {
      throw ValidationError(std::string(what) + ": rows have different lengths");
    }
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return out;
}

}  // namespace

Scenario resolve_scenario(const ScenarioConfig& c) {
  const std::size_t n = c.topology.adjacency.size();
  if (n == 0) throw ValidationError("topology: adjacency must have at least one row");
  Vec pinning = c.topology.pinning.empty() ? Vec::Zero(static_cast<Eigen::Index>(n)) : to_vec(c.topology.pinning);
  if (static_cast<std::size_t>(pinning.size()) != n) throw ValidationError("topology: pinning length must match the agent count");

  Scenario scn{Topology(to_mat(c.topology.adjacency, "topology.adjacency"), pinning)};
  scn.horizon = c.run.horizon;
  scn.seed = c.run.seed;
  scn.variant = parse_variant(c.controller.variant);
  scn.gains = c.controller.gains;
  scn.phi_init = to_mat(c.controller.phi_init, "controller.phi_init");
  const auto ny = static_cast<std::size_t>(scn.phi_init.rows());

  if (!c.plants.per_agent.empty() && c.plants.per_agent.size() != n) {
    throw ValidationError("plants.per_agent: need one entry per agent");
  }
  for (std::size_t i = 0; i < n; ++i) {
    PlantParams p;
    p.w = c.plants.per_agent.empty() ? c.plants.w : c.plants.per_agent[i];
    scn.plants.push_back(std::make_shared<BenchmarkPlant>(p));
  }

  if (c.initial.mode == "explicit") {
    if (c.initial.values.size() != n) throw ValidationError("initial.values: need one output vector per agent");
    for (const auto& v : c.initial.values) scn.initial_outputs.push_back(to_vec(v));
  } else {
    if (!(c.initial.low <= c.initial.high)) throw ValidationError("initial: need low <= high");
    if (!c.initial.levels.empty() && c.initial.levels.size() != n) {
      throw ValidationError("initial.levels: need one level per agent");
    }
    Rng rng(derive_seed(c.run.seed, kInitialStateStream));
    for (std::size_t i = 0; i < n; ++i) {
      const double base = c.initial.levels.empty() ? 0.0 : c.initial.levels[i];
      Vec y(static_cast<Eigen::Index>(ny));
      for (auto& v : y) v = base + rng.uniform(c.initial.low, c.initial.high);
      scn.initial_outputs.push_back(y);
    }
  }

  if (c.leader) {
    LeaderTrajectory lt;
    lt.attacked = c.leader->attacked;
    for (const auto& s : c.leader->segments) lt.segments.push_back({s.start, to_vec(s.value)});
    scn.leader = lt;
  }

  scn.fdi.amplitude = c.attacks.fdi_enabled ? c.attacks.fdi_amplitude : 0.0;
  scn.fdi.multipliers = c.attacks.fdi_multipliers;
  scn.fdi.horizon = c.attacks.fdi_period.value_or(static_cast<double>(c.run.horizon));
  scn.disturbance.amplitude = c.disturbance_amplitude;

  const auto& dos = c.attacks.dos;
  if (dos.mode == "generate") {
    if (c.run.horizon < 1) throw ValidationError("run.horizon must be at least 1");
    scn.dos = generate_dos_schedule(dos.budget, dos.generator, n, ny, c.run.horizon,
                                    dos.seed.value_or(derive_seed(c.run.seed, kDosStream)));
  } else if (dos.mode == "explicit") {
    scn.dos.budget = dos.budget;
    scn.dos.intervals = dos.intervals;
  } else {
    scn.dos = DosSchedule::empty(n, ny, dos.budget);
  }

  scn.validate();
  return scn;
}

std::filesystem::path resolve_config_path(const std::filesystem::path& path) {
  if (std::filesystem::is_regular_file(path)) return path;
  std::filesystem::path with_ext = path;
  with_ext += ".json";
  if (path.extension() != ".json" && std::filesystem::is_regular_file(with_ext)) return with_ext;
  throw Error("config: cannot open '" + path.string() + "'");
}

LoadedConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override,
                         std::optional<ControllerVariant> variant_override) {
  LoadedConfig out{resolve_config_path(path), {}, Scenario{Topology(Mat::Zero(1, 1), Vec::Zero(1))}, {}};
  std::ifstream in(out.path, std::ios::binary);
  if (!in) throw Error("config: cannot open '" + out.path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  out.config = parse_config(buf.str());
  if (seed_override) out.config.run.seed = *seed_override;
  if (variant_override) out.config.controller.variant = to_string(*variant_override);
  out.scenario = resolve_scenario(out.config);
  out.warnings = out.scenario.warnings();
  return out;
}

}  // namespace rmfac
