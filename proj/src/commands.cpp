#include "resilient_mfac/commands.hpp"

#include "resilient_mfac/charts.hpp"
#include "resilient_mfac/config.hpp"
#include "resilient_mfac/trace_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

namespace rmfac {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Steady-state and mid windows are the last and middle thirds of the run.
std::pair<Step, Step> third(Step horizon, int index) {
  return {horizon * index / 3, horizon * (index + 1) / 3};
}

json metrics_json(const SimTrace& trace, Step begin, Step end) {
  json j = {{"window", {begin, end}}};
  if (end <= begin || end > trace.steps()) {
    j["available"] = false;
    return j;
  }
  const auto m = consensus_metrics(trace, begin, end);
  j["rms_xi"] = m.rms_xi;
  j["sup_xi"] = m.sup_xi;
  j["network_rms_xi"] = m.network_rms_xi;
  j["max_disagreement"] = m.max_disagreement;
  if (!m.mean_tracking_error.empty()) j["mean_tracking_error"] = m.mean_tracking_error;
  return j;
}

json segment_tracking_json(const Scenario& scn, const SimTrace& trace) {
  json out = json::array();
  if (!scn.leader) return out;
  const auto& segs = scn.leader->segments;
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const Step end = std::min(s + 1 < segs.size() ? segs[s + 1].start : scn.horizon, trace.steps());
    const Step begin = std::max(segs[s].start, end - 100);
    json seg = {{"start", segs[s].start}, {"window", {begin, end}}, {"value", std::vector<double>(segs[s].value.begin(), segs[s].value.end())}};
    if (end > begin) {
      std::vector<double> mean(trace.n_agents, 0.0);
      for (Step k = begin; k < end; ++k) {
        for (std::size_t i = 0; i < trace.n_agents; ++i) mean[i] += (trace.at(k, i).y - segs[s].value).norm();
      }
      for (auto& v : mean) v /= static_cast<double>(end - begin);
      seg["mean_error"] = mean;
      seg["max_mean_error"] = *std::max_element(mean.begin(), mean.end());
    }
    out.push_back(seg);
  }
  return out;
}

json summarize(const Scenario& scn, const std::string& name, const SimTrace& trace,
               const std::vector<std::string>& warnings) {
  json j;
  j["name"] = name;
  j["variant"] = to_string(scn.variant);
  j["seed"] = scn.seed;
  j["horizon"] = scn.horizon;
  j["n_agents"] = trace.n_agents;
  j["steps_completed"] = trace.steps();
  j["fault"] = trace.fault ? json{{"k", trace.fault->k}, {"agent", trace.fault->agent + 1}, {"message", trace.fault->message}}
                           : json(nullptr);
  j["warnings"] = warnings;
  std::size_t resets = 0, denied = 0;
  for (const auto& r : trace.records) {
    resets += r.reset ? 1 : 0;
    denied += static_cast<std::size_t>((r.h == 0).count());
  }
  j["reset_events"] = resets;
  j["denied_channel_steps"] = denied;
  const auto [m0, m1] = third(scn.horizon, 1);
  const auto [s0, s1] = third(scn.horizon, 2);
  j["mid_window"] = metrics_json(trace, m0, m1);
  j["steady_window"] = metrics_json(trace, s0, s1);
  j["segment_tracking"] = segment_tracking_json(scn, trace);
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void write_run(const fs::path& dir, const Scenario& scn, const std::string& name, const SimTrace& trace,
               const std::vector<std::string>& warnings) {
  fs::create_directories(dir);
  write_trace(dir / "trace.csv", trace);
  if (scn.leader) {
    std::ofstream leader(dir / "leader.csv", std::ios::binary);
    write_leader(leader, trace);
  }
  write_json(dir / "summary.json", summarize(scn, name, trace, warnings));
}

void report_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

void report_fault(const SimTrace& trace, const std::string& label, std::ostream& err) {
  if (trace.fault) {
    err << "divergence (" << label << "): " << trace.fault->message << " at step " << trace.fault->k << '\n';
  }
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      seeds.push_back(std::stoull(item));
      continue;
    }
    const auto a = std::stoull(item.substr(0, dots));
    const auto b = std::stoull(item.substr(dots + 2));
    if (b < a || b - a > 100000) throw ValidationError("batch: bad seed range '" + item + "'");
    for (auto s = a; s <= b; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw ValidationError("batch: no seeds given");
  return seeds;
}

std::optional<ControllerVariant> variant_option(const std::string& v) {
  if (v.empty()) return std::nullopt;
  return parse_variant(v);
}

fs::path out_dir_for(const std::string& flag, const LoadedConfig& cfg) {
  return flag.empty() ? fs::path(cfg.config.run.output_dir) : fs::path(flag);
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Resilient MFAC consensus simulator", "mfac-sim"};
  app.require_subcommand(1);

  std::string config_path, variant, out_dir, trace_path, seeds;
  std::optional<std::uint64_t> seed;
  bool charts = false;

  auto* run = app.add_subcommand("run", "Simulate a scenario and write trace.csv and summary.json");
  run->add_option("--config", config_path, "Scenario file")->required();
  run->add_option("--seed", seed, "Override run.seed");
  run->add_option("--variant", variant, "proposed | baseline");
  run->add_option("--out", out_dir, "Output directory (default: run.output_dir)");
  run->add_flag("--charts", charts, "Also render SVG charts");

  auto* validate = app.add_subcommand("validate", "Check a scenario file without running it");
  validate->add_option("--config", config_path, "Scenario file")->required();

  auto* plot = app.add_subcommand("plot", "Render SVG charts from a trace file");
  plot->add_option("--trace", trace_path, "trace.csv")->required();
  plot->add_option("--out", out_dir, "Output directory")->required();

  auto* compare = app.add_subcommand("compare", "Run proposed and baseline controllers on one attack realization");
  compare->add_option("--config", config_path, "Scenario file")->required();
  compare->add_option("--seed", seed, "Override run.seed");
  compare->add_option("--out", out_dir, "Output directory (default: run.output_dir)");

  auto* batch = app.add_subcommand("batch", "Run one scenario over several seeds");
  batch->add_option("--config", config_path, "Scenario file")->required();
  batch->add_option("--seeds", seeds, "Seed list, e.g. 1..20 or 3,5,7")->required();
  batch->add_option("--variant", variant, "proposed | baseline");
  batch->add_option("--out", out_dir, "Output directory (default: run.output_dir)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << "run with --help for usage\n";
    return kExitInvalid;
  }

  try {
    if (*validate) {
      const auto cfg = load_config(config_path);
      report_warnings(cfg.warnings, err);
      out << "valid: " << cfg.path.string() << " (" << cfg.scenario.topology.n_agents() << " agents, T="
          << cfg.scenario.horizon << ", " << cfg.warnings.size() << " warnings)\n";
      return kExitOk;
    }

    if (*plot) {
      const fs::path tp(trace_path);
      const auto table = read_trace(tp);
      const auto leader = read_leader(tp.parent_path() / "leader.csv");
      const auto files = render_charts(table, leader, out_dir);
      for (const auto& f : files) out << f.string() << '\n';
      return kExitOk;
    }

    if (*run) {
      const auto cfg = load_config(config_path, seed, variant_option(variant));
      report_warnings(cfg.warnings, err);
      const auto t0 = std::chrono::steady_clock::now();
      const auto trace = run_scenario(cfg.scenario);
      const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      const fs::path dir = out_dir_for(out_dir, cfg);
      write_run(dir, cfg.scenario, cfg.config.name, trace, cfg.warnings);
      if (charts) {
        std::ostringstream buf;
        write_trace(buf, trace);
        std::istringstream in(buf.str());
        std::vector<std::pair<Step, Vec>> leader;
        for (std::size_t k = 0; k < trace.leader.size(); ++k) {
          if (trace.leader[k]) leader.emplace_back(static_cast<Step>(k), *trace.leader[k]);
        }
        render_charts(read_trace(in), leader, dir);
      }
      err << "simulated " << trace.steps() << " steps in " << ms << " ms\n";
      report_fault(trace, to_string(cfg.scenario.variant), err);
      out << "wrote " << (dir / "trace.csv").string() << '\n';
      return trace.fault ? kExitDiverged : kExitOk;
    }

    if (*compare) {
      const auto proposed_cfg = load_config(config_path, seed, ControllerVariant::kProposed);
      report_warnings(proposed_cfg.warnings, err);
      Scenario baseline = proposed_cfg.scenario;
      baseline.variant = ControllerVariant::kBaseline;
      const auto trace_p = run_scenario(proposed_cfg.scenario);
      const auto trace_b = run_scenario(baseline);
      const fs::path dir = out_dir_for(out_dir, proposed_cfg);
      write_run(dir / "proposed", proposed_cfg.scenario, proposed_cfg.config.name, trace_p, proposed_cfg.warnings);
      write_run(dir / "baseline", baseline, proposed_cfg.config.name, trace_b, proposed_cfg.warnings);

      const auto [s0, s1] = third(proposed_cfg.scenario.horizon, 2);
      json summary = {{"name", proposed_cfg.config.name},
                      {"seed", proposed_cfg.scenario.seed},
                      {"steady_window", {s0, s1}},
                      {"proposed", metrics_json(trace_p, s0, s1)},
                      {"baseline", metrics_json(trace_b, s0, s1)},
                      {"proposed_fault", trace_p.fault ? json(trace_p.fault->message) : json(nullptr)},
                      {"baseline_fault", trace_b.fault ? json(trace_b.fault->message) : json(nullptr)}};
      // A diverged baseline counts as the worse controller.
      if (!trace_p.fault && !trace_b.fault) {
        const double p = summary["proposed"]["network_rms_xi"].get<double>();
        const double b = summary["baseline"]["network_rms_xi"].get<double>();
        summary["rms_ratio"] = b > 0.0 ? p / b : 0.0;
        summary["proposed_better"] = p < b;
      } else {
        summary["proposed_better"] = !trace_p.fault;
      }
      write_json(dir / "summary.json", summary);
      report_fault(trace_p, "proposed", err);
      report_fault(trace_b, "baseline", err);
      out << "wrote " << (dir / "summary.json").string() << '\n';
      return trace_p.fault ? kExitDiverged : kExitOk;
    }

    if (*batch) {
      const auto base = load_config(config_path, std::nullopt, variant_option(variant));
      report_warnings(base.warnings, err);
      const fs::path dir = out_dir_for(out_dir, base);
      fs::create_directories(dir);
      json runs = json::array();
      std::vector<double> steady;
      bool any_fault = false;
      for (const auto s : parse_seeds(seeds)) {
        auto cfg = base.config;
        cfg.run.seed = s;
        const Scenario scn = resolve_scenario(cfg);
        const auto trace = run_scenario(scn);
        write_run(dir / ("seed_" + std::to_string(s)), scn, cfg.name, trace, base.warnings);
        report_fault(trace, "seed " + std::to_string(s), err);
        any_fault = any_fault || trace.fault.has_value();
        const auto [s0, s1] = third(scn.horizon, 2);
        json entry = {{"seed", s}, {"fault", trace.fault.has_value()}};
        if (!trace.fault) {
          const double rms = consensus_metrics(trace, s0, s1).network_rms_xi;
          entry["steady_network_rms_xi"] = rms;
          steady.push_back(rms);
        }
        runs.push_back(entry);
      }
      json summary = {{"name", base.config.name}, {"variant", base.config.controller.variant}, {"runs", runs}};
      if (!steady.empty()) {
        double mean = 0.0;
        for (double v : steady) mean += v;
        mean /= static_cast<double>(steady.size());
        double var = 0.0;
        for (double v : steady) var += (v - mean) * (v - mean);
        summary["ensemble_mean_rms_xi"] = mean;
        summary["ensemble_std_rms_xi"] = steady.size() > 1 ? std::sqrt(var / static_cast<double>(steady.size() - 1)) : 0.0;
      }
      write_json(dir / "summary.json", summary);
      out << "wrote " << (dir / "summary.json").string() << '\n';
      return any_fault ? kExitDiverged : kExitOk;
    }
  } catch (const DivergenceFault& e) {
    err << "divergence: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace rmfac
