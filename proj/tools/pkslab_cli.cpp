// pkslab command line: profiles, spectra, single runs, experiments, sweeps.
// Config files are JSON; PKSLAB_* variables and then --set key=value
// override them, in that order.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pkslab/evolve.hpp"
#include "pkslab/harness.hpp"
#include "pkslab/linops.hpp"

extern char** environ;

using namespace pkslab;
using json = nlohmann::json;

namespace {

json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

json load_config(const std::string& path, const std::vector<std::string>& sets) {
  json j = path.empty() ? json::object() : read_json(path);
  apply_env_overrides(j, environ);
  for (const auto& s : sets) apply_override(j, s);
  return j;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p);
  if (!os) throw IoError("cannot write " + p.string());
  os << text;
}

// "0..4" or "0,2,3"
std::vector<int> parse_modes(const std::string& s) {
  std::vector<int> out;
  const auto dots = s.find("..");
  try {
    if (dots != std::string::npos) {
      const int lo = std::stoi(s.substr(0, dots)), hi = std::stoi(s.substr(dots + 2));
      if (lo < 0 || hi < lo) throw InvalidArgument("bad mode range " + s);
      for (int n = lo; n <= hi; ++n) out.push_back(n);
    } else {
      std::stringstream ss(s);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    }
  } catch (const std::logic_error&) {
    throw InvalidArgument("cannot read modes '" + s + "'");
  }
  if (out.empty()) throw InvalidArgument("no modes given");
  return out;
}

void print_report(const RunReport& r) {
  std::printf("%s %s (%.1f s)\n", to_string(r.config.experiment).c_str(), r.config_hash.c_str(), r.wall_seconds);
  for (const auto& c : r.checks) {
    std::printf("  [%s] %-36s measured=%.6g expected=%.6g tol=%.3g %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                c.measured, c.expected, c.tolerance, to_string(c.comparison).c_str());
    if (!c.error.empty()) std::printf("         %s\n", c.error.c_str());
  }
}

int cmd_profile(const std::string& cfg_path, const std::vector<std::string>& sets, const json& flags) {
  json j = load_config(cfg_path, sets);
  j.merge_patch(flags);
  if (!j.contains("alpha")) throw InvalidArgument("profile needs --alpha");
  ProfileOptions o;
  o.r_max = j.value("rmax", o.r_max);
  o.points = j.value("points", o.points);
  o.tol = j.value("tol", o.tol);
  const SelfSimilarProfile p = solve_profile(parse_mass(j.at("alpha")), o);
  const std::string out = j.value("out", "");
  if (!out.empty()) save_profile(p, out);
  json h = profile_header(p);
  h["virial_error"] = p.virial_error();
  h["mass"] = radial_mass(p.G_field());
  std::cout << h.dump(2) << '\n';
  return 0;
}

int cmd_spectrum(const std::string& cfg_path, const std::vector<std::string>& sets, const json& flags) {
  json j = load_config(cfg_path, sets);
  j.merge_patch(flags);
  if (!j.contains("alpha")) throw InvalidArgument("spectrum needs --alpha");
  const double alpha = parse_mass(j.at("alpha"));
  const auto modes = j.contains("modes") && j.at("modes").is_array() ? j.at("modes").get<std::vector<int>>()
                                                                    : parse_modes(j.value("modes", "0..4"));
  const OperatorKind kind = operator_kind_from_string(j.value("kind", "linearized"));
  const auto nodes = default_mode_nodes(j.value("points", 769), j.value("rmax", 10.0));
  const int count = j.value("count", 8);
  const auto p = ProfileCache::global().get(alpha);
  json out;
  if (kind == OperatorKind::linearized) {
    out = linearized_gap(*p, modes, nodes).to_json();
  } else {
    out = json::array();
    for (int n : modes) out.push_back(spectrum(assemble(kind, n, p.get(), nodes), count).to_json());
  }
  const std::string path = j.value("out", "");
  if (!path.empty()) write_text(path, out.dump(2) + "\n");
  std::cout << out.dump(2) << '\n';
  return 0;
}

// {"grid": {n, half_width, center}, "data": measure, "epsilon", "t0",
//  "frame": "physical" | "similarity", "tau_span", "reference_alpha",
//  "solver": SolverConfig, "output_dir"}
int cmd_evolve(const std::string& cfg_path, const std::vector<std::string>& sets) {
  if (cfg_path.empty()) throw InvalidArgument("evolve needs --config");
  const json j = load_config(cfg_path, sets);
  const json& gj = j.at("grid");
  Grid2D g{gj.value("n", 256), gj.value("half_width", 16.0), {}};
  if (gj.contains("center")) g.center = {gj.at("center").at(0).get<double>(), gj.at("center").at(1).get<double>()};
  g.validate();
  const std::string base = std::filesystem::path(cfg_path).parent_path().string();
  const MeasureData mu = measure_from_json(j.at("data"), base.empty() ? "." : base);
  SolverConfig cfg = SolverConfig::from_json(j.value("solver", json::object()));
  const std::string frame = j.value("frame", "physical");
  const DecompositionResult d = decompose(mu, j.value("epsilon", 0.5));

  Trajectory tr;
  std::shared_ptr<const SelfSimilarProfile> ref;
  if (frame == "physical") {
    if (j.contains("t0")) cfg.t_start = j.at("t0").get<double>();
    else if (!j.value("solver", json::object()).contains("t_start")) cfg.t_start = default_start_time(d);
    const Field2D u0 = regularize(d, cfg.t_start, g, cfg.model);
    try {
      tr = evolve_physical(u0, cfg);
    } catch (const CFLCollapse& e) {
      std::fprintf(stderr, "%s\n", e.what());
      tr = e.partial();
    }
  } else if (frame == "similarity") {
    // w at tau = 0 is u at t = 1
    const Field2D w0 = regularize(d, 1.0, g, cfg.model);
    if (j.contains("reference_alpha")) ref = ProfileCache::global().get(parse_mass(j.at("reference_alpha")));
    tr = evolve_similarity(w0, 0.0, j.value("tau_span", 1.0), cfg, ref.get());
  } else {
    throw InvalidArgument("frame must be physical or similarity");
  }

  json manifest = tr.manifest(cfg);
  manifest["input"] = j;
  const std::string hash = cfg.hash();
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  const auto dir = std::filesystem::path(j.value("output_dir", "runs")) / (std::string(stamp) + "-" + hash);
  std::filesystem::create_directories(dir / "fields");
  if (frame == "physical") manifest["blowup"] = detect_blowup(tr).to_json();
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  {
    std::ofstream os(dir / "diagnostics.csv");
    if (!os) throw IoError("cannot write " + (dir / "diagnostics.csv").string());
    tr.diagnostics.write_csv(os);
  }
  save_field(tr.final_state, (dir / "fields" / "final.bin").string());
  for (std::size_t i = 0; i < tr.fields.size(); ++i)
    save_field(tr.fields[i], (dir / "fields" / ("snapshot_" + std::to_string(i) + ".bin")).string());
  std::printf("%s: %ld steps, %ld rejected%s -> %s\n", frame.c_str(), tr.steps, tr.rejected,
              tr.stopped_early ? (" (stopped: " + tr.stop_reason + ")").c_str() : "", dir.string().c_str());
  return 0;
}

int cmd_experiment(const std::string& cfg_path, const std::vector<std::string>& sets, const std::string& out) {
  if (cfg_path.empty()) throw InvalidArgument("experiment needs --config");
  const ExperimentConfig cfg = ExperimentConfig::from_json(load_config(cfg_path, sets));
  cfg.validate();
  const RunReport r = run_experiment(cfg);
  const auto dir = out.empty() ? emit_report(r) : (emit_report(r, out), std::filesystem::path(out));
  print_report(r);
  std::printf("report: %s\n", (dir / "report.json").string().c_str());
  return exit_status(r);
}

int cmd_sweep(const std::string& cfg_path, const std::vector<std::string>& sets, int jobs) {
  if (cfg_path.empty()) throw InvalidArgument("sweep needs --config");
  json j = read_json(cfg_path);
  // overrides target the base config of a grid sweep
  json& target = j.is_object() && j.contains("base") ? j["base"] : j;
  if (!target.is_array()) {
    apply_env_overrides(target, environ);
    for (const auto& s : sets) apply_override(target, s);
  }
  const auto configs = expand_sweep(j);
  for (const auto& c : configs) c.validate();
  const auto reports = run_sweep(configs, jobs);
  for (const auto& r : reports) {
    const auto dir = emit_report(r);
    print_report(r);
    std::printf("report: %s\n", (dir / "report.json").string().c_str());
  }
  return exit_status(reports);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pkslab: self-similar profiles, spectra and flows for 2D PKS and vorticity NSE"};
  app.require_subcommand(1);
  std::string config;
  std::vector<std::string> sets;

  auto* prof = app.add_subcommand("profile", "solve G_alpha and write its table");
  std::string alpha, out, modes = "0..4", kind = "linearized";
  double rmax = 20.0, tol = 1e-12;
  int points = 4096;
  prof->add_option("--alpha", alpha, "mass, e.g. 4pi or 12.5");
  prof->add_option("--rmax", rmax, "radial cutoff");
  prof->add_option("--points", points, "radial nodes");
  prof->add_option("--tol", tol, "fixed point tolerance");
  prof->add_option("--out", out, "CSV output path");
  prof->add_option("--config", config, "JSON with the same keys");
  prof->add_option("--set", sets, "key=value override");

  auto* spec = app.add_subcommand("spectrum", "mode spectra of the linearization");
  spec->add_option("--alpha", alpha, "mass");
  spec->add_option("--modes", modes, "0..4 or 0,1,2");
  spec->add_option("--kind", kind, "linearized, confined_fp or fokker_planck");
  spec->add_option("--out", out, "JSON output path");
  spec->add_option("--config", config, "JSON with the same keys");
  spec->add_option("--set", sets, "key=value override");

  auto* evo = app.add_subcommand("evolve", "one run from measure data");
  evo->add_option("--config", config, "run config JSON")->required();
  evo->add_option("--set", sets, "key=value override");

  auto* exp = app.add_subcommand("experiment", "run one experiment and emit its report");
  exp->add_option("--config", config, "experiment config JSON")->required();
  exp->add_option("--set", sets, "key=value override");
  exp->add_option("--out", out, "report directory (default runs/<timestamp>-<hash>)");

  auto* swp = app.add_subcommand("sweep", "run a set of experiments on a worker pool");
  int jobs = 1;
  swp->add_option("--config", config, "sweep JSON")->required();
  swp->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
  swp->add_option("--set", sets, "key=value override applied to the base config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (prof->parsed()) {
      json flags = json::object();
      if (!alpha.empty()) flags["alpha"] = alpha;
      if (prof->count("--rmax")) flags["rmax"] = rmax;
      if (prof->count("--points")) flags["points"] = points;
      if (prof->count("--tol")) flags["tol"] = tol;
      if (!out.empty()) flags["out"] = out;
      return cmd_profile(config, sets, flags);
    }
    if (spec->parsed()) {
      json flags = json::object();
      if (!alpha.empty()) flags["alpha"] = alpha;
      if (spec->count("--modes")) flags["modes"] = modes;
      if (spec->count("--kind")) flags["kind"] = kind;
      if (!out.empty()) flags["out"] = out;
      return cmd_spectrum(config, sets, flags);
    }
    if (evo->parsed()) return cmd_evolve(config, sets);
    if (exp->parsed()) return cmd_experiment(config, sets, out);
    if (swp->parsed()) return cmd_sweep(config, sets, jobs);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
