#include "oracles.hpp"
#include "resilient_mfac/charts.hpp"
#include "resilient_mfac/commands.hpp"
#include "resilient_mfac/config.hpp"
#include "resilient_mfac/trace_io.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <fstream>
#include <sstream>

using namespace rmfac;
namespace fs = std::filesystem;

namespace {

const fs::path kPresets = RMFAC_PRESET_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rmfac_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int cli(std::vector<std::string> args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = run_command(args, out, err);
  if (err_text) *err_text = err.str();
  return rc;
}

const char* kMinimal = R"({
  // two agents, no leader
  "topology": { "adjacency": [[0, 1], [1, 0]] },
  "run": { "horizon": 50 }
})";

ScenarioConfig random_config(oracle::Gen& gen) {
  ScenarioConfig c;
  c.name = "random-" + std::to_string(gen.integer(0, 1000));
  const auto n = static_cast<std::size_t>(gen.integer(1, 5));
  c.topology.adjacency.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && gen.uniform(0, 1) < 0.5) c.topology.adjacency[i][j] = gen.uniform(0.1, 2.0);
  if (gen.uniform(0, 1) < 0.5) {
    c.topology.pinning.assign(n, 0.0);
    c.topology.pinning[0] = 1.0;
    c.leader = LeaderConfig{{{0, {gen.uniform(-5, 5), gen.uniform(-5, 5)}}, {gen.integer(1, 100), {0.1, 1.0 / 3.0}}},
                            gen.uniform(0, 1) < 0.5};
  }
  if (gen.uniform(0, 1) < 0.5) c.plants.per_agent.assign(n, {gen.uniform(1, 3), 1.0, 2.0, 2.0, gen.uniform(0.5, 2)});
  c.initial.low = gen.uniform(-1, 0);
  c.initial.high = gen.uniform(0, 1);
  for (std::size_t i = 0; i < n; ++i) c.initial.levels.push_back(gen.uniform(-3, 3));
  c.attacks.fdi_amplitude = gen.uniform(0, 1);
  c.attacks.fdi_enabled = gen.uniform(0, 1) < 0.7;
  if (gen.uniform(0, 1) < 0.5) c.attacks.fdi_period = gen.uniform(100, 2000);
  c.attacks.dos.mode = gen.uniform(0, 1) < 0.5 ? "generate" : "explicit";
  c.attacks.dos.budget.rate_xi = gen.uniform(0.05, 0.3);
  if (gen.uniform(0, 1) < 0.5) c.attacks.dos.seed = gen.next();
  c.attacks.dos.intervals.assign(n, {{{10, 20}}, {}});
  c.disturbance_amplitude = gen.uniform(0, 0.2);
  c.controller.variant = gen.uniform(0, 1) < 0.5 ? "proposed" : "baseline";
  c.controller.gains.eta = gen.uniform(0.01, 1);
  for (auto& l : c.controller.gains.l) l = gen.uniform(0.01, 2);
  c.controller.phi_init = {{gen.uniform(0.5, 2), 0.1}, {0.1, gen.uniform(0.5, 2)}};
  c.run.horizon = gen.integer(1, 3000);
  c.run.seed = gen.next();
  c.run.output_dir = "out/x" + std::to_string(gen.integer(0, 9));
  return c;
}

}  // namespace

TEST_CASE("presets load with the documented values", "[cli_io]") {
  const auto s2 = load_config(kPresets / "scenario2");
  CHECK(s2.path.extension() == ".json");
  CHECK(s2.scenario.horizon == 1500);
  CHECK(s2.scenario.topology.n_agents() == 6);
  REQUIRE(s2.scenario.leader);
  const auto& segs = s2.scenario.leader->segments;
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].start == 0);
  CHECK(segs[0].value == (Vec(2) << 5, 2).finished());
  CHECK(segs[1].start == 500);
  CHECK(segs[1].value == (Vec(2) << 2, 4).finished());
  CHECK(segs[2].start == 1000);
  CHECK(segs[2].value == (Vec(2) << 4, 3).finished());
  CHECK_FALSE(s2.scenario.leader->attacked);
  CHECK(s2.scenario.gains == ControllerGains{});
  CHECK(s2.warnings.empty());

  const auto s1 = load_config(kPresets / "scenario1.json");
  CHECK(s1.scenario.topology.n_agents() == 3);
  CHECK_FALSE(s1.scenario.leader);
  CHECK(s1.warnings.empty());
  for (const auto& y : s1.scenario.initial_outputs) {
    CHECK(y.minCoeff() >= 0.0);
    CHECK(y.maxCoeff() < 1.0);
  }
}

TEST_CASE("config round trip on presets and random configs", "[cli_io][property]") {
  for (const char* name : {"scenario1.json", "scenario2.json", "reference.json"}) {
    const auto c = parse_config(slurp(kPresets / name));
    CHECK(parse_config(serialize_config(c)) == c);
    CHECK(serialize_config(parse_config(serialize_config(c))) == serialize_config(c));
  }
  oracle::Gen gen(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = random_config(gen);
    const auto again = parse_config(serialize_config(c));
    CHECK(again == c);
  }
}

TEST_CASE("defaults apply to a minimal file", "[cli_io]") {
  const auto c = parse_config(kMinimal);
  CHECK(c.run.horizon == 50);
  CHECK(c.run.seed == 7);
  CHECK(c.controller.gains == ControllerGains{});
  CHECK(c.attacks.dos.mode == "none");
  CHECK_FALSE(c.leader);
  const auto s = resolve_scenario(c);
  CHECK(s.fdi.horizon == 50.0);
  CHECK(s.fdi.amplitude == 0.5);
  CHECK(s.disturbance.amplitude == 0.1);
}

TEST_CASE("parse errors carry line and field", "[cli_io]") {
  CHECK_THROWS_AS(parse_config(""), ParseError);
  try {
    parse_config("{\n  \"topology\": {\n    \"adjacency\": [[0]],\n  }\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() >= 3);
  }
  try {
    parse_config("{\n \"topology\": {\"adjacency\": [[0]]},\n \"run\": {\"horizon\": \"long\"}\n}");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.field() == "run.horizon");
    CHECK(e.line() == 3);
  }
  try {
    parse_config("{\"topology\": {\"adjacency\": [[0]]}, \"controler\": {}}");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.field() == "controler");
  }
  CHECK_THROWS_AS(parse_config("{\"run\": {}}"), ParseError);
  CHECK_THROWS_AS(parse_config("{\"topology\": {\"adjacency\": [[0]]}, \"controller\": {\"l\": [1, 2]}}"), ParseError);
  CHECK_THROWS_AS(parse_config("{\"topology\": {\"adjacency\": [[0]]}, \"controller\": {\"variant\": \"pid\"}}"),
                  ParseError);
}

TEST_CASE("hard validation failures and soft warnings", "[cli_io]") {
  const auto dir = scratch("validation");
  auto c = parse_config(slurp(kPresets / "scenario2.json"));

  auto neg = c;
  neg.topology.adjacency[1][0] = -1.0;
  CHECK_THROWS_AS(resolve_scenario(neg), ValidationError);
  auto zero_h = c;
  zero_h.run.horizon = 0;
  CHECK_THROWS_AS(resolve_scenario(zero_h), ValidationError);
  auto no_leader = c;
  no_leader.leader.reset();
  CHECK_THROWS_AS(resolve_scenario(no_leader), ValidationError);
  auto bad_dos = c;
  bad_dos.attacks.dos.mode = "explicit";
  bad_dos.attacks.dos.intervals.assign(6, {{{0, 1000}}, {}});
  CHECK_THROWS_AS(resolve_scenario(bad_dos), ValidationError);

  auto low_l3 = c;
  low_l3.controller.gains.l[2] = 0.5;
  spit(dir / "low_l3.json", serialize_config(low_l3));
  const auto loaded = load_config(dir / "low_l3.json");
  REQUIRE(loaded.warnings.size() == 1);
  CHECK(loaded.warnings[0].find("l3") != std::string::npos);

  auto cut = c;
  cut.topology.adjacency[3][2] = 0.0;  // agents 4..6 lose their path from the leader
  spit(dir / "cut.json", serialize_config(cut));
  const auto cut_loaded = load_config(dir / "cut.json");
  REQUIRE(cut_loaded.warnings.size() == 1);
  CHECK(cut_loaded.warnings[0].find("spanning tree") != std::string::npos);

  CHECK_THROWS_AS(load_config(dir / "missing"), Error);
}

TEST_CASE("seed drives initial outputs and DoS independently", "[cli_io]") {
  auto c = parse_config(slurp(kPresets / "scenario2.json"));
  const auto a = resolve_scenario(c);
  const auto b = resolve_scenario(c);
  CHECK(a.initial_outputs == b.initial_outputs);
  CHECK(a.dos == b.dos);
  c.run.seed = 8;
  const auto d = resolve_scenario(c);
  CHECK_FALSE(a.initial_outputs == d.initial_outputs);
  CHECK_FALSE(a.dos == d.dos);
  c.attacks.dos.seed = 1234;
  const auto e = resolve_scenario(c);
  c.run.seed = 9;
  CHECK(resolve_scenario(c).dos == e.dos);
}

TEST_CASE("trace header is fixed", "[cli_io]") {
  const std::string golden =
      "k,agent,y_1,y_2,ya_1,ya_2,u_1,u_2,xi_1,xi_2,chi_1,chi_2,chihat_1,chihat_2,chitil_1,chitil_2,"
      "thetahat_1,thetahat_2,dhat_1,dhat_2,deltahat_1,deltahat_2,phinorm,gammarad,reset,h_1,h_2";
  const auto cols = trace_columns();
  std::string joined;
  for (std::size_t c = 0; c < cols.size(); ++c) joined += (c ? "," : "") + cols[c];
  CHECK(joined == golden);

  const auto s = load_config(kPresets / "scenario1").scenario;
  auto short_run = s;
  short_run.horizon = 3;
  std::ostringstream out;
  write_trace(out, run_scenario(short_run));
  CHECK(out.str().substr(0, golden.size() + 1) == golden + "\n");
}

TEST_CASE("numbers round-trip through their text form", "[cli_io][property]") {
  oracle::Gen gen(55);
  for (int trial = 0; trial < 20000; ++trial) {
    std::uint64_t bits = gen.next() << 11 | gen.next() >> 42;
    double v;
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) continue;
    const auto text = format_double(v);
    CHECK(std::strtod(text.c_str(), nullptr) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(NAN) == "NA");
}

TEST_CASE("trace write/read round trip with absent channels", "[cli_io]") {
  auto s = load_config(kPresets / "scenario2").scenario;
  s.horizon = 400;
  const auto trace = run_scenario(s);
  std::ostringstream a, b;
  write_trace(a, trace);
  write_trace(b, run_scenario(s));
  CHECK(a.str() == b.str());
  CHECK(a.str().find(",NA,") != std::string::npos);

  std::istringstream in(a.str());
  const auto table = read_trace(in);
  REQUIRE(table.rows.size() == trace.records.size());
  CHECK(table.n_agents == 6);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = trace.records[i];
    const auto& t = table.rows[i];
    CHECK(t.k == r.k);
    CHECK(t.agent == r.agent + 1);
    CHECK(t.y == r.y);
    CHECK(t.u == r.u);
    CHECK(t.chi_hat == r.chi_hat);
    CHECK(t.phi_norm == r.phi_norm);
    CHECK((t.h == r.h).all());
    for (Eigen::Index m = 0; m < 2; ++m) {
      if (r.h(m) == 0) CHECK(std::isnan(t.ya(m)));
      else CHECK(t.ya(m) == r.ya.value(m));
    }
  }

  std::istringstream bad_header("k,agent,y_1\n");
  CHECK_THROWS_AS(read_trace(bad_header), ParseError);
  std::istringstream bad_row(a.str().substr(0, a.str().find('\n') + 1) + "0,1,zzz\n");
  CHECK_THROWS_AS(read_trace(bad_row), ParseError);
}

TEST_CASE("charts render from traces", "[cli_io]") {
  const auto dir = scratch("charts");
  auto s = load_config(kPresets / "scenario2").scenario;
  s.horizon = 300;
  const auto trace = run_scenario(s);
  std::ostringstream buf, lead;
  write_trace(buf, trace);
  write_leader(lead, trace);
  spit(dir / "leader.csv", lead.str());
  std::istringstream in(buf.str());
  const auto files = render_charts(read_trace(in), read_leader(dir / "leader.csv"), dir / "charts");
  REQUIRE(files.size() == 3);
  for (const auto& f : files) {
    CHECK(fs::exists(f));
    CHECK(fs::file_size(f) > 0);
  }
  const auto timeline = slurp(dir / "charts" / "attack_timeline.svg");
  CHECK(timeline.find("fill=\"#d62728\" fill-opacity") != std::string::npos);
  CHECK(slurp(dir / "charts" / "outputs.svg").find("leader") != std::string::npos);

  auto quiet = s;
  quiet.fdi.amplitude = 0.0;
  quiet.dos = DosSchedule::empty(6, 2);
  std::ostringstream qbuf;
  write_trace(qbuf, run_scenario(quiet));
  std::istringstream qin(qbuf.str());
  render_charts(read_trace(qin), {}, dir / "quiet");
  const auto quiet_timeline = slurp(dir / "quiet" / "attack_timeline.svg");
  CHECK(quiet_timeline.find("fill-opacity") == std::string::npos);
  CHECK(quiet_timeline.find("<path") != std::string::npos);
}

TEST_CASE("command exit codes and outputs", "[cli_io]") {
  const auto dir = scratch("commands");
  const std::string s2 = (kPresets / "scenario2").string();
  CHECK(cli({"validate", "--config", s2}) == kExitOk);
  CHECK(cli({"validate", "--config", (dir / "nope.json").string()}) == kExitInvalid);
  CHECK(cli({"frobnicate"}) == kExitInvalid);
  CHECK(cli({"run"}) == kExitInvalid);

  spit(dir / "broken.json", "{ \"topology\": ");
  std::string err;
  CHECK(cli({"validate", "--config", (dir / "broken.json").string()}, &err) == kExitInvalid);
  CHECK(err.find("line") != std::string::npos);

  auto wild = parse_config(slurp(kPresets / "scenario1.json"));
  wild.controller.gains.eta = 400.0;
  wild.controller.gains.mu = 1e-6;
  wild.run.horizon = 300;
  spit(dir / "wild.json", serialize_config(wild));
  CHECK(cli({"run", "--config", (dir / "wild.json").string(), "--out", (dir / "wild").string()}) == kExitDiverged);
  CHECK(fs::exists(dir / "wild" / "summary.json"));

  auto small = parse_config(slurp(kPresets / "scenario2.json"));
  small.run.horizon = 200;
  spit(dir / "small.json", serialize_config(small));
  const std::string cfg = (dir / "small.json").string();
  REQUIRE(cli({"run", "--config", cfg, "--out", (dir / "a").string()}) == kExitOk);
  REQUIRE(cli({"run", "--config", cfg, "--out", (dir / "b").string()}) == kExitOk);
  CHECK(slurp(dir / "a" / "trace.csv") == slurp(dir / "b" / "trace.csv"));
  CHECK(slurp(dir / "a" / "summary.json") == slurp(dir / "b" / "summary.json"));
  REQUIRE(cli({"run", "--config", cfg, "--seed", "9", "--out", (dir / "c").string()}) == kExitOk);
  CHECK(slurp(dir / "a" / "trace.csv") != slurp(dir / "c" / "trace.csv"));

  REQUIRE(cli({"plot", "--trace", (dir / "a" / "trace.csv").string(), "--out", (dir / "plots").string()}) == kExitOk);
  CHECK(fs::file_size(dir / "plots" / "outputs.svg") > 0);
  CHECK(cli({"plot", "--trace", (dir / "none.csv").string(), "--out", (dir / "p2").string()}) == kExitInvalid);

  REQUIRE(cli({"compare", "--config", cfg, "--out", (dir / "cmp").string()}) == kExitOk);
  CHECK(fs::exists(dir / "cmp" / "proposed" / "trace.csv"));
  CHECK(fs::exists(dir / "cmp" / "baseline" / "trace.csv"));
  CHECK(slurp(dir / "cmp" / "summary.json").find("proposed_better") != std::string::npos);

  REQUIRE(cli({"batch", "--config", cfg, "--seeds", "1..3", "--out", (dir / "batch").string()}) == kExitOk);
  CHECK(fs::exists(dir / "batch" / "seed_2" / "trace.csv"));
  CHECK(slurp(dir / "batch" / "summary.json").find("ensemble_mean_rms_xi") != std::string::npos);
}
