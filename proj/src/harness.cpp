#include "pkslab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <thread>

#include <fftw3.h>
#include <gsl/gsl_version.h>
#include <unistd.h>
#include <Eigen/Core>
#include <boost/version.hpp>

namespace pkslab {

namespace {

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string utc_now(const char* fmt) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, fmt, &tm);
  return buf;
}

// JSON has no NaN or infinity; they travel as strings.
nlohmann::json num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double from_num(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw InvalidArgument("not a number: " + s);
  }
  return j.get<double>();
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw IoError("cannot write " + p.string());
  os << std::setprecision(17);
  return os;
}

void set_path(nlohmann::json& j, const std::string& dotted, nlohmann::json value) {
  if (dotted.empty()) throw InvalidArgument("empty override key");
  nlohmann::json* cur = &j;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw InvalidArgument("bad override key '" + dotted + "'");
    if (!cur->is_object()) *cur = nlohmann::json::object();
    if (dot == std::string::npos) {
      (*cur)[key] = std::move(value);
      return;
    }
    cur = &(*cur)[key];
    start = dot + 1;
  }
}

nlohmann::json parse_value(const std::string& v) {
  try {
    return nlohmann::json::parse(v);
  } catch (const nlohmann::json::exception&) {
    return v;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::profile_suite: return "profile_suite";
    case Experiment::spectrum_suite: return "spectrum_suite";
    case Experiment::self_similarity: return "self_similarity";
    case Experiment::attractor: return "attractor";
    case Experiment::lipschitz: return "lipschitz";
    case Experiment::critical_mass: return "critical_mass";
    case Experiment::sn_suite: return "sn_suite";
    case Experiment::energy_suite: return "energy_suite";
  }
  return "?";
}

const std::vector<Experiment>& all_experiments() {
  static const std::vector<Experiment> all{
      Experiment::profile_suite, Experiment::spectrum_suite, Experiment::energy_suite,
      Experiment::self_similarity, Experiment::attractor, Experiment::lipschitz,
      Experiment::critical_mass, Experiment::sn_suite};
  return all;
}

Experiment experiment_from_string(const std::string& s) {
  for (Experiment e : all_experiments())
    if (to_string(e) == s) return e;
  throw InvalidArgument("unknown experiment '" + s + "'");
}

double parse_mass(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_string()) throw InvalidArgument("mass must be a number or a multiple of pi");
  std::string s = j.get<std::string>();
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
  const std::size_t at = s.find("pi");
  if (at == std::string::npos || at + 2 != s.size()) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw InvalidArgument("cannot read mass '" + s + "'");
    return v;
  }
  std::string coef = s.substr(0, at);
  if (!coef.empty() && coef.back() == '*') coef.pop_back();
  if (coef.empty() || coef == "+") return kPi;
  if (coef == "-") return -kPi;
  std::size_t used = 0;
  double c = 0.0;
  try {
    c = std::stod(coef, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != coef.size()) throw InvalidArgument("cannot read mass '" + s + "'");
  return c * kPi;
}

nlohmann::json ExperimentConfig::resolved_params() const {
  nlohmann::json r = defaults(experiment);
  r.merge_patch(params);
  return r;
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"experiment", to_string(experiment)},
          {"params", resolved_params()},
          {"seed", seed},
          {"output_dir", output_dir}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("experiment config must be an object");
  for (const auto& [k, v] : j.items())
    if (k != "experiment" && k != "params" && k != "seed" && k != "output_dir")
      throw InvalidArgument("unknown config key '" + k + "'");
  if (!j.contains("experiment")) throw InvalidArgument("config needs \"experiment\"");
  if (!j.contains("seed")) throw InvalidArgument("config needs an explicit \"seed\"");
  ExperimentConfig c;
  try {
    c.experiment = experiment_from_string(j.at("experiment").get<std::string>());
    const auto& seed = j.at("seed");
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<long long>() < 0))
      throw InvalidArgument("seed must be a non-negative integer");
    c.seed = seed.get<std::uint64_t>();
    if (j.contains("params")) {
      if (!j.at("params").is_object()) throw InvalidArgument("params must be an object");
      c.params = j.at("params");
    }
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad experiment config: ") + e.what());
  }
  return c;
}

std::string ExperimentConfig::hash() const {
  nlohmann::json j = to_json();
  j.erase("output_dir");
  return fnv1a(j.dump());
}

// ---------------------------------------------------------------------------

std::string to_string(Comparison c) {
  switch (c) {
    case Comparison::abs: return "abs";
    case Comparison::rel: return "rel";
    case Comparison::at_most: return "at_most";
    case Comparison::at_least: return "at_least";
  }
  return "?";
}

Comparison comparison_from_string(const std::string& s) {
  for (Comparison c : {Comparison::abs, Comparison::rel, Comparison::at_most, Comparison::at_least})
    if (to_string(c) == s) return c;
  throw InvalidArgument("unknown comparison '" + s + "'");
}

CheckRecord CheckRecord::make(std::string name, std::string statement, double measured, double expected,
                              double tolerance, Comparison c) {
  CheckRecord r;
  r.name = std::move(name);
  r.statement = std::move(statement);
  r.measured = measured;
  r.expected = expected;
  r.tolerance = tolerance;
  r.comparison = c;
  switch (c) {
    case Comparison::abs: r.pass = std::abs(measured - expected) <= tolerance; break;
    case Comparison::rel: r.pass = std::abs(measured - expected) <= tolerance * std::abs(expected); break;
    case Comparison::at_most: r.pass = measured <= expected + tolerance; break;
    case Comparison::at_least: r.pass = measured >= expected - tolerance; break;
  }
  // NaN compares false everywhere above
  return r;
}

CheckRecord CheckRecord::failure(std::string name, std::string statement, const std::string& error) {
  CheckRecord r;
  r.name = std::move(name);
  r.statement = std::move(statement);
  r.measured = std::numeric_limits<double>::quiet_NaN();
  r.expected = std::numeric_limits<double>::quiet_NaN();
  r.error = error;
  r.pass = false;
  return r;
}

nlohmann::json CheckRecord::to_json() const {
  nlohmann::json j{{"name", name},
                   {"statement", statement},
                   {"measured", num(measured)},
                   {"expected", num(expected)},
                   {"tolerance", num(tolerance)},
                   {"comparison", to_string(comparison)},
                   {"pass", pass}};
  if (!error.empty()) j["error"] = error;
  return j;
}

CheckRecord CheckRecord::from_json(const nlohmann::json& j) {
  CheckRecord r;
  r.name = j.at("name").get<std::string>();
  r.statement = j.at("statement").get<std::string>();
  r.measured = from_num(j.at("measured"));
  r.expected = from_num(j.at("expected"));
  r.tolerance = from_num(j.at("tolerance"));
  r.comparison = comparison_from_string(j.at("comparison").get<std::string>());
  r.pass = j.at("pass").get<bool>();
  r.error = j.value("error", "");
  return r;
}

nlohmann::json Series::to_json() const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json jr = nlohmann::json::array();
    for (double v : row) jr.push_back(num(v));
    rs.push_back(std::move(jr));
  }
  return {{"name", name}, {"columns", columns}, {"rows", std::move(rs)}};
}

Series Series::from_json(const nlohmann::json& j) {
  Series s;
  s.name = j.at("name").get<std::string>();
  s.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& jr : j.at("rows")) {
    std::vector<double> row;
    for (const auto& v : jr) row.push_back(from_num(v));
    s.rows.push_back(std::move(row));
  }
  return s;
}

bool RunReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; });
}

const CheckRecord* RunReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

nlohmann::json RunReport::body() const {
  nlohmann::json cs = nlohmann::json::array(), ss = nlohmann::json::array(), fs = nlohmann::json::array();
  for (const auto& c : checks) cs.push_back(c.to_json());
  for (const auto& s : series) ss.push_back(s.to_json());
  for (const auto& f : fields) fs.push_back(f.first);
  nlohmann::json cfg = config.to_json();
  cfg.erase("output_dir");
  return {{"config", std::move(cfg)}, {"config_hash", config_hash}, {"pass", pass()},
          {"checks", std::move(cs)},  {"series", std::move(ss)},     {"fields", std::move(fs)}};
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json j = body();
  j["config"] = config.to_json();
  j["environment"] = environment;
  j["started"] = started;
  j["wall_seconds"] = wall_seconds;
  return j;
}

RunReport RunReport::from_json(const nlohmann::json& j) {
  RunReport r;
  try {
    r.config = ExperimentConfig::from_json(j.at("config"));
    r.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& c : j.at("checks")) r.checks.push_back(CheckRecord::from_json(c));
    for (const auto& s : j.at("series")) r.series.push_back(Series::from_json(s));
    // field payloads live next to the report; keep the names
    for (const auto& f : j.value("fields", nlohmann::json::array())) r.fields.emplace_back(f.get<std::string>(), Field2D{});
    r.environment = j.value("environment", nlohmann::json::object());
    r.started = j.value("started", "");
    r.wall_seconds = j.value("wall_seconds", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad report: ") + e.what());
  }
  return r;
}

nlohmann::json environment_stamp() {
  char host[256] = {};
  if (gethostname(host, sizeof host - 1) != 0) std::strcpy(host, "unknown");
  return {{"compiler", std::string("gcc ") + __VERSION__},
          {"cxx_standard", static_cast<long>(__cplusplus)},
          {"fftw", std::string(fftw_version)},
          {"gsl", GSL_VERSION},
          {"boost", BOOST_LIB_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"host", std::string(host)},
          {"hardware_threads", std::thread::hardware_concurrency()}};
}

// ---------------------------------------------------------------------------

std::filesystem::path run_directory(const RunReport& r) {
  std::string stamp = r.started;
  stamp.erase(std::remove_if(stamp.begin(), stamp.end(), [](char c) { return c == '-' || c == ':'; }), stamp.end());
  if (stamp.empty()) stamp = utc_now("%Y%m%dT%H%M%SZ");
  return std::filesystem::path(r.config.output_dir) / (stamp + "-" + r.config_hash);
}

void emit_report(const RunReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    auto os = open_out(dir / "report.json");
    os << r.to_json().dump(2) << '\n';
  }
  {
    auto os = open_out(dir / "checks.csv");
    os << "name,measured,expected,tolerance,comparison,pass\n";
    for (const auto& c : r.checks)
      os << c.name << ',' << c.measured << ',' << c.expected << ',' << c.tolerance << ','
         << to_string(c.comparison) << ',' << (c.pass ? 1 : 0) << '\n';
  }
  for (const auto& s : r.series) {
    auto csv = open_out(dir / (s.name + ".csv"));
    auto dat = open_out(dir / (s.name + ".dat"));
    dat << '#';
    for (std::size_t k = 0; k < s.columns.size(); ++k) {
      csv << (k ? "," : "") << s.columns[k];
      dat << ' ' << s.columns[k];
    }
    csv << '\n';
    dat << '\n';
    for (const auto& row : s.rows) {
      for (std::size_t k = 0; k < row.size(); ++k) {
        csv << (k ? "," : "") << row[k];
        dat << (k ? " " : "") << row[k];
      }
      csv << '\n';
      dat << '\n';
    }
    if (!csv || !dat) throw IoError("write failed for series " + s.name + " in " + dir.string());
  }
  bool any = false;
  for (const auto& [name, f] : r.fields) {
    if (f.empty()) continue;
    if (!any) {
      std::filesystem::create_directories(dir / "fields", ec);
      if (ec) throw IoError("cannot create " + (dir / "fields").string() + ": " + ec.message());
      any = true;
    }
    std::ofstream os(dir / "fields" / (name + ".bin"), std::ios::binary);
    if (!os) throw IoError("cannot write " + (dir / "fields" / (name + ".bin")).string());
    write_field_binary(f, os);
  }
}

std::filesystem::path emit_report(const RunReport& r) {
  const auto dir = run_directory(r);
  emit_report(r, dir);
  return dir;
}

int exit_status(const RunReport& r) { return r.pass() ? 0 : 1; }

int exit_status(const std::vector<RunReport>& reports) {
  return std::all_of(reports.begin(), reports.end(), [](const RunReport& r) { return r.pass(); }) ? 0 : 1;
}

// ---------------------------------------------------------------------------

std::vector<ExperimentConfig> expand_sweep(const nlohmann::json& j) {
  std::vector<ExperimentConfig> out;
  if (j.is_array()) {
    for (const auto& c : j) out.push_back(ExperimentConfig::from_json(c));
    return out;
  }
  if (!j.is_object() || !j.contains("base")) {
    out.push_back(ExperimentConfig::from_json(j));
    return out;
  }
  std::vector<nlohmann::json> configs{j.at("base")};
  if (j.contains("grid")) {
    // std::map order of nlohmann::json keeps the expansion reproducible
    for (const auto& [key, values] : j.at("grid").items()) {
      if (!values.is_array() || values.empty()) throw InvalidArgument("sweep axis '" + key + "' needs a non-empty array");
      std::vector<nlohmann::json> next;
      for (const auto& c : configs)
        for (const auto& v : values) {
          nlohmann::json cc = c;
          set_path(cc, key, v);
          next.push_back(std::move(cc));
        }
      configs = std::move(next);
    }
  }
  for (const auto& c : configs) out.push_back(ExperimentConfig::from_json(c));
  return out;
}

std::vector<RunReport> run_sweep(const std::vector<ExperimentConfig>& configs, int jobs) {
  if (jobs < 1) throw InvalidArgument("jobs must be >= 1");
  std::vector<RunReport> reports(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) reports[i] = run_experiment(configs[i]);
  };
  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(jobs), configs.size());
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::vector<std::size_t> order(reports.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return reports[a].config_hash < reports[b].config_hash; });
  std::vector<RunReport> sorted;
  sorted.reserve(reports.size());
  for (std::size_t i : order) sorted.push_back(std::move(reports[i]));
  return sorted;
}

void apply_override(nlohmann::json& j, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) throw InvalidArgument("override '" + assignment + "' is not key=value");
  set_path(j, assignment.substr(0, eq), parse_value(assignment.substr(eq + 1)));
}

void apply_env_overrides(nlohmann::json& j, char** envp) {
  if (!envp) return;
  static const std::string prefix = "PKSLAB_";
  std::vector<std::string> vars;
  for (char** e = envp; *e; ++e)
    if (std::strncmp(*e, prefix.c_str(), prefix.size()) == 0) vars.emplace_back(*e + prefix.size());
  std::sort(vars.begin(), vars.end());
  for (const std::string& v : vars) {
    const std::size_t eq = v.find('=');
    if (eq == std::string::npos || eq == 0) continue;
    std::string key;
    for (std::size_t i = 0; i < eq; ++i) {
      if (v.compare(i, 2, "__") == 0 && i + 1 < eq) {
        key += '.';
        ++i;
      } else {
        key += static_cast<char>(std::tolower(static_cast<unsigned char>(v[i])));
      }
    }
    set_path(j, key, parse_value(v.substr(eq + 1)));
  }
}

}  // namespace pkslab
