// Acceptance run: every experiment with its default parameters, one line
// per criterion, then a second pass to confirm reruns are identical.
// Reports land in ./acceptance_runs (or argv[1]).

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "pkslab/harness.hpp"

using namespace pkslab;

namespace {

struct Criterion {
  int id;
  const char* title;
  Experiment experiment;
  std::vector<std::string> checks;  ///< exact names; "x.*" matches x.<anything>
};

const std::vector<Criterion>& criteria() {
  using E = Experiment;
  static const std::vector<Criterion> all{
      {1, "profile mass |2pi int G r dr - alpha| / alpha <= 1e-8", E::profile_suite, {"profile.mass.*"}},
      {2, "virial identity within 1e-5, 8pi at alpha = 4pi", E::profile_suite, {"profile.virial.*", "profile.virial_value"}},
      {3, "tail slope -alpha/2pi within 0.05 on [8, 12]", E::profile_suite, {"profile.tail_slope"}},
      {4, "small-mass closeness |G_a - aG|_1 / a^2 varies < 25%", E::profile_suite, {"profile.small_mass"}},
      {5, "profile Lipschitz quotient stable within 1.5x", E::profile_suite, {"profile.lipschitz"}},
      {6, "zero mode: unit mass 1e-4, residual <= 1e-3", E::profile_suite,
       {"profile.zero_mode", "profile.zero_mode_mass", "profile.zero_mode_residual"}},
      {7, "translation eigenvalue -1/2 within 1e-3", E::spectrum_suite, {"spectrum.translation.*"}},
      {8, "mean-zero Re lambda <= -0.01, small-mass gap 1/2 +- 10%", E::spectrum_suite,
       {"spectrum.gap.*", "spectrum.small_mass_gap"}},
      {9, "C_alpha in (0, 1) and coercivity inequality on the basis", E::energy_suite,
       {"energy.coercivity.*", "energy.inequality.*"}},
      {10, "elliptic mode shooting: log / negative linear / unbounded", E::spectrum_suite,
       {"shoot", "shoot.n0_logarithmic", "shoot.n1_negative_linear", "shoot.n2_unbounded"}},
      {11, "Fokker-Planck kernel oracle 1e-4, semigroup to round-off", E::spectrum_suite,
       {"kernel", "kernel.oracle", "kernel.semigroup"}},
      {12, "self-similar PKS and Oseen runs within 2% sup norm", E::self_similarity, {"selfsim.pks", "selfsim.nse"}},
      {13, "attractor: L1 < 10%, rate within 2x of gap, energy monotone", E::attractor,
       {"attractor", "attractor.l1_ratio", "attractor.rate_vs_gap", "attractor.energy_monotone"}},
      {14, "Lipschitz dependence: Delta/delta within 2x, Delta(0) = 0", E::lipschitz,
       {"lipschitz", "lipschitz.ratio_spread", "lipschitz.zero_control"}},
      {15, "critical mass: 7pi bounded within 3x, 10pi blows up", E::critical_mass,
       {"critical.bounded", "critical.bounded_ratio", "critical.bounded_floor", "critical.collapse", "critical.collapse_verdict"}},
      {16, "S_N hypercontractivity within 2x, no atoms = heat flow", E::sn_suite,
       {"sn.hypercontractivity", "sn.heat"}},
  };
  return all;
}

bool matches(const std::string& pattern, const std::string& name) {
  if (pattern.size() > 2 && pattern.compare(pattern.size() - 2, 2, ".*") == 0)
    return name.rfind(pattern.substr(0, pattern.size() - 1), 0) == 0;
  return pattern == name;
}

std::string describe(const CheckRecord& c) {
  char buf[160];
  if (!c.error.empty()) {
    std::snprintf(buf, sizeof buf, "%s: %s", c.name.c_str(), c.error.c_str());
  } else {
    const char* op = c.comparison == Comparison::at_most ? "<=" : c.comparison == Comparison::at_least ? ">=" : "~";
    std::snprintf(buf, sizeof buf, "%s=%.4g %s %.4g", c.name.c_str(), c.measured, op,
                  c.comparison == Comparison::at_most ? c.expected + c.tolerance
                  : c.comparison == Comparison::at_least ? c.expected - c.tolerance
                                                         : c.expected);
  }
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string out = argc > 1 ? argv[1] : "acceptance_runs";
  std::map<Experiment, RunReport> first;
  for (Experiment e : all_experiments()) {
    ExperimentConfig cfg;
    cfg.experiment = e;
    cfg.seed = 2026;
    cfg.output_dir = out;
    first[e] = run_experiment(cfg);
    const auto dir = emit_report(first[e]);
    std::printf("# %-16s %6.1f s  %s  %s\n", to_string(e).c_str(), first[e].wall_seconds,
                first[e].pass() ? "pass" : "FAIL", dir.string().c_str());
    std::fflush(stdout);
  }

  int failed = 0;
  for (const Criterion& c : criteria()) {
    const RunReport& r = first.at(c.experiment);
    bool ok = true;
    int seen = 0;
    std::string detail;
    for (const CheckRecord& k : r.checks) {
      bool hit = k.name == "config";
      for (const auto& p : c.checks) hit = hit || matches(p, k.name);
      if (!hit) continue;
      ++seen;
      if (!k.pass) {
        ok = false;
        detail += (detail.empty() ? "" : "; ") + describe(k);
      }
    }
    if (seen == 0) {
      ok = false;
      detail = "no checks recorded";
    }
    if (ok) {
      // show the first listed check as a sample
      for (const CheckRecord& k : r.checks)
        if (matches(c.checks.front(), k.name) || matches(c.checks.back(), k.name)) {
          detail = describe(k);
          break;
        }
    }
    failed += ok ? 0 : 1;
    std::printf("[%s] C%02d %s | %s\n", ok ? "PASS" : "FAIL", c.id, c.title, detail.c_str());
    std::fflush(stdout);
  }

  // 17: identical reruns
  std::string diff;
  for (Experiment e : all_experiments()) {
    ExperimentConfig cfg = first.at(e).config;
    const RunReport again = run_experiment(cfg);
    if (again.body().dump() != first.at(e).body().dump()) diff += (diff.empty() ? "" : ", ") + to_string(e);
  }
  const bool det = diff.empty();
  failed += det ? 0 : 1;
  std::printf("[%s] C17 determinism: identical config and seed reproduce every report body | %s\n",
              det ? "PASS" : "FAIL", det ? "8 experiments rerun, bodies byte-identical" : ("differs: " + diff).c_str());
  std::printf("%d of 17 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
