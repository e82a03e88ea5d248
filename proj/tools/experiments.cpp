#include "rwlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

#include "rwlab/boundary.hpp"
#include "rwlab/discrete_measure.hpp"
#include "rwlab/dynamics.hpp"
#include "rwlab/grid_density.hpp"
#include "rwlab/harnack.hpp"

namespace rwlab::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ------------------------------------------------------------------ tables

const std::vector<ExperimentInfo>& list_experiments() {
  static const std::vector<ExperimentInfo> rows = {
      {"counterexample", "Theorem thm:cntexm", "stationary density, blow-up at 0, unbounded RN kernel"},
      {"harnack", "Theorem mthm:Harnack", "suitability certificates, oracles, Gaussian alpha"},
      {"exponent", "Prop prop:compgen", "Harnack exponent Theta(r)/r over word balls"},
      {"deltak", "Lemma lem:deltaK", "delta(K) decay of weighted shift distances"},
      {"martingale", "Theorem mthm:conservative", "martingale z_n mu(A) drift tests"},
      {"escape", "Lemma lem:escape", "escape of the walk from compact sets"},
      {"recurrence", "Theorem mthm:conservative", "recurrence witnesses g with mu(gA cap A) > 0"},
      {"maharam", "Prop prop:alltype", "Maharam extension cocycle and invariance"},
      {"skew", "Prop prop:alltype", "skew product over R / (-log lambda) Z"},
      {"stationary-density", "Lemma lem:Rinfstat", "fixed point of the scale-mixture convolution"},
      {"certify", "Lemma lem:suitableHarnack", "certificate for m_theta(g) on a discrete group"},
  };
  return rows;
}

std::string format_experiment_table() {
  std::ostringstream os;
  for (const auto& e : list_experiments()) {
    os << std::left << std::setw(20) << e.name << " → " << std::setw(28) << e.reference << e.summary << "\n";
  }
  return os.str();
}

bool is_experiment(const std::string& name) {
  const auto& rows = list_experiments();
  return std::any_of(rows.begin(), rows.end(), [&](const ExperimentInfo& e) { return e.name == name; });
}

namespace {

std::string default_grid_nodes() { return std::to_string(GridSpec{}.uniform_intervals); }

std::vector<ParamDef> grid_params() {
  return {
      {"grid.nodes", default_grid_nodes(), "uniform intervals on [-8, 8]"},
      {"grid.panel_min", "1e-6", "innermost refinement radius"},
      {"grid.panel_nodes", std::to_string(GridSpec{}.panel_nodes), "refinement nodes per side"},
      {"alpha", "0.5", "exponent of |b| in f_B"},
      {"beta", "0.25", "exponent of the power part of f_A"},
      {"delta", "0.2", "half-width of the uniform part of f_A"},
      {"M", "1", "weight of the power part of f_A"},
      {"tol", "1e-6", "fixed-point L1 tolerance"},
      {"max_iter", "200", "fixed-point iteration cap"},
  };
}

std::vector<ParamDef> specific_params(const std::string& name) {
  auto with_grid = [](std::vector<ParamDef> extra) {
    auto g = grid_params();
    g.insert(g.end(), extra.begin(), extra.end());
    return g;
  };
  if (name == "counterexample") {
    return with_grid({{"t", "1", "translation of the SAT* witness"},
                      {"deep_factor", "1e6", "panel deepening factor for the divergence check"},
                      {"mc.samples", "100000", "Monte Carlo samples"},
                      {"mc.steps", "200", "truncation N of R_N"}});
  }
  if (name == "stationary-density") {
    return with_grid({{"mc.samples", "100000", "Monte Carlo samples of R_N"},
                      {"mc.steps", "200", "truncation N of R_N"},
                      {"forward_steps", "1,5,25", "forward-map steps for the invariance probe"}});
  }
  if (name == "harnack") {
    return {{"measure", "drift-z", "named measure, inline JSON, or @file.json"},
            {"elements", "z:-2,z:-1,z:0,z:1,z:2", "elements to certify"},
            {"max_n", "4", "largest convolution power"},
            {"gaussian_draws", "20", "random (g, s, t, b) draws for the alpha check"},
            {"covering_intervals", "200", "grid intervals per unit length for covering certificates"}};
  }
  if (name == "exponent") {
    return {{"measure", "drift-z", "named measure, inline JSON, or @file.json"},
            {"radii", "1,2,3,4,5", "ball radii"},
            {"max_n", "6", "largest convolution power for certificates"},
            {"expected_gamma", "", "optional reference value for gamma_hat"}};
  }
  if (name == "deltak") {
    return {{"radii", "0,0.01,0.1,0.5,1,1.5,2", "radii for the uniform[-1,1] check"},
            {"drift_radii", "0,0.01,0.1,1", "radii for the drifted check"},
            {"grid.nodes", "1600", "intervals on [-4, 4]"}};
  }
  if (name == "martingale") {
    return with_grid({{"A", "0,1", "interval A"},
                      {"horizon", "50", "largest n"},
                      {"checkpoints", "1,10,50", "n with the bucketed conditional test"},
                      {"mc.samples", "10000", "trials"}});
  }
  if (name == "escape") {
    return {{"walks", "counterexample,drift-z", "walk laws (counterexample or a named measure)"},
            {"set", "", "override set: box:lo,hi | aff:a_lo,a_hi,b_max | ball:r"},
            {"horizons", "50,100,250,500", "horizons n (window [n/2, n])"},
            {"mc.samples", "10000", "trials per walk"}};
  }
  if (name == "recurrence") {
    return with_grid({{"A", "0,1", "interval A"},
                      {"K_radius", "5", "excluded word-length radius"},
                      {"paths", "20", "simulated paths"},
                      {"path_length", "1000", "steps per path (capped at 10000)"},
                      {"max_pairs", "1000", "pairs examined"}});
  }
  if (name == "maharam") {
    return with_grid({{"checks", "1000", "random cocycle and commutation checks"},
                      {"window", "20", "fiber truncation [-window, window]"},
                      {"mc.samples", "20000", "draws for the alpha histogram"}});
  }
  if (name == "skew") {
    return with_grid({{"lambda", "0.36787944117144233", "lambda in (0, 1]"},
                      {"checks", "1000", "random action-law checks"},
                      {"mc.samples", "20000", "draws for the alpha histogram"}});
  }
  if (name == "certify") {
    return {{"measure", "lazy-z", "named measure, inline JSON, or @file.json"},
            {"element", "z:1", "element g"},
            {"max_n", "1", "largest convolution power"},
            {"certificate", "", "optional certificate JSON file to verify instead"}};
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

}  // namespace

std::vector<ParamDef> experiment_params(const std::string& name) {
  if (!is_experiment(name)) throw ConfigError("unknown experiment '" + name + "'");
  // certify draws no random numbers, so its seed is only echoed.
  const std::string seed_default = name == "certify" ? "0" : "";
  std::vector<ParamDef> out = {{"seed", seed_default, "master seed"},
                               {"out", "rwlab-out/" + name, "output directory"},
                               {"workers", "1", "worker threads"}};
  auto extra = specific_params(name);
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

// ------------------------------------------------------------------ config

KeyValues parse_config_text(const std::string& text) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    // Strip comments outside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!section.empty()) key = section + "." + key;
    if (!kv.emplace(key, value).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return kv;
}

KeyValues load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

Config::Config(std::string experiment, KeyValues values)
    : experiment_(std::move(experiment)), values_(std::move(values)) {}

std::string Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing text");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
}

long long Config::get_int(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing text");
    return d;
  } catch (const std::exception&) {
    // Accept integral floating forms such as 1e5.
    const double d = get_double(key);
    if (d != std::floor(d) || std::abs(d) > 9e15) throw ConfigError("key '" + key + "': expected an integer");
    return static_cast<long long>(d);
  }
}

std::uint64_t Config::get_seed() const {
  const long long s = get_int("seed");
  if (s < 0) throw ConfigError("seed must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

std::vector<std::string> Config::get_strings(const std::string& key) const { return split(get(key), ','); }

std::vector<double> Config::get_doubles(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : get_strings(key)) {
    try {
      out.push_back(std::stod(s));
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': bad number '" + s + "'");
    }
  }
  return out;
}

std::vector<int> Config::get_ints(const std::string& key) const {
  std::vector<int> out;
  for (const auto& s : get_strings(key)) {
    try {
      out.push_back(std::stoi(s));
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "': bad integer '" + s + "'");
    }
  }
  return out;
}

Config resolve_config(const std::string& experiment, const KeyValues& file, const KeyValues& overrides) {
  const auto defs = experiment_params(experiment);
  KeyValues v;
  for (const auto& d : defs) {
    if (!d.default_value.empty() || d.key != "seed") v[d.key] = d.default_value;
  }
  auto apply = [&](const KeyValues& src, const char* origin) {
    for (const auto& [k, val] : src) {
      const bool known = std::any_of(defs.begin(), defs.end(), [&](const ParamDef& d) { return d.key == k; });
      if (!known) throw ConfigError(std::string("unknown key '") + k + "' in " + origin + " for '" + experiment + "'");
      v[k] = val;
    }
  };
  apply(file, "config file");
  apply(overrides, "command line");
  if (v.find("seed") == v.end() || v["seed"].empty()) throw ConfigError("a seed is required (--seed or seed = ...)");
  Config cfg(experiment, v);
  cfg.get_seed();
  if (cfg.get_int("workers") < 1) throw ConfigError("workers must be >= 1");
  return cfg;
}

// ------------------------------------------------------------------ reports

bool RunReport::all_pass() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

json RunReport::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["params"] = json::object();
  for (const auto& [k, v] : params) j["params"][k] = v;
  j["assertions"] = json::array();
  for (const auto& a : assertions) {
    j["assertions"].push_back({{"name", a.name},
                               {"value", std::isfinite(a.value) ? json(a.value) : json(nullptr)},
                               {"threshold", std::isfinite(a.threshold) ? json(a.threshold) : json(nullptr)},
                               {"comparison", a.comparison},
                               {"pass", a.pass}});
  }
  j["artifacts"] = artifacts;
  j["values"] = values;
  j["wall_time"] = wall_time;
  j["pass"] = all_pass();
  return j;
}

int exit_code_for(const RunReport& report) { return report.all_pass() ? 0 : 1; }

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_summary(const RunReport& r) {
  std::ostringstream os;
  os << r.experiment << "\n";
  for (const auto& a : r.assertions) {
    os << "  [" << (a.pass ? "PASS" : "FAIL") << "] " << std::left << std::setw(44) << a.name << " "
       << format_number(a.value) << " " << a.comparison << " " << format_number(a.threshold) << "\n";
  }
  os << "  artifacts: " << r.artifacts.size() << ", wall time " << std::fixed << std::setprecision(2) << r.wall_time
     << " s, " << (r.all_pass() ? "all assertions pass" : "assertion failure") << "\n";
  return os.str();
}

// ------------------------------------------------------------------ helpers

namespace {

class Run {
 public:
  Run(const Config& cfg) : cfg_(cfg), dir_(cfg.get("out")) {
    fs::create_directories(dir_);
    report_.experiment = cfg.experiment();
    report_.params = cfg.values();
  }

  const Config& cfg() const { return cfg_; }
  RunReport& report() { return report_; }
  int workers() const { return static_cast<int>(cfg_.get_int("workers")); }
  std::uint64_t seed(std::uint64_t stream) const { return derive_seed(cfg_.get_seed(), stream); }

  void check(const std::string& name, double value, const std::string& cmp, double threshold) {
    bool pass = false;
    if (cmp == "<") pass = value < threshold;
    else if (cmp == "<=") pass = value <= threshold;
    else if (cmp == ">") pass = value > threshold;
    else if (cmp == ">=") pass = value >= threshold;
    else if (cmp == "==") pass = value == threshold;
    else throw std::logic_error("bad comparison " + cmp);
    report_.assertions.push_back({name, value, threshold, cmp, pass});
  }
  void check_true(const std::string& name, bool ok) { check(name, ok ? 1.0 : 0.0, "==", 1.0); }

  void csv(const std::string& file, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& rows) {
    std::ofstream out(dir_ / file);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << format_number(r[i]);
      out << "\n";
    }
    report_.artifacts.push_back(file);
  }

  void text(const std::string& file, const std::string& body) {
    std::ofstream out(dir_ / file);
    out << body;
    report_.artifacts.push_back(file);
  }

  void finish(double seconds) {
    report_.wall_time = seconds;
    report_.artifacts.push_back("manifest.toml");
    report_.artifacts.push_back("report.json");
    write_manifest();
    std::ofstream out(dir_ / "report.json");
    out << report_.to_json().dump(2) << "\n";
  }

 private:
  void write_manifest() {
    std::ofstream out(dir_ / "manifest.toml");
    out << "experiment = \"" << report_.experiment << "\"\n";
    out << "version = \"0.1.0\"\n\n[params]\n";
    for (const auto& [k, v] : cfg_.values()) out << "\"" << k << "\" = \"" << v << "\"\n";
    out << "\n[artifacts]\nfiles = [";
    for (std::size_t i = 0; i < report_.artifacts.size(); ++i) {
      out << (i ? ", " : "") << "\"" << report_.artifacts[i] << "\"";
    }
    out << "]\n";
  }

  const Config& cfg_;
  fs::path dir_;
  RunReport report_;
};

CounterexampleParams params_of(const Config& c) {
  try {
    return make_params(c.get_double("alpha"), c.get_double("beta"), c.get_double("delta"), c.get_double("M"));
  } catch (const ParamError& e) {
    throw ConfigError(e.what());
  }
}

GridSpec grid_of(const Config& c) {
  GridSpec g;
  g.uniform_intervals = static_cast<int>(c.get_int("grid.nodes"));
  g.panel_min = c.get_double("grid.panel_min");
  g.panel_nodes = static_cast<int>(c.get_int("grid.panel_nodes"));
  try {
    (void)g.nodes();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  return g;
}

StationaryDensity solve(const Config& c, const CounterexampleParams& p, const GridSpec& g) {
  return fixed_point_solve(p, g, c.get_double("tol"), static_cast<int>(c.get_int("max_iter")));
}

DiscreteMeasure measure_of(const Config& c) {
  const std::string m = c.get("measure");
  try {
    if (!m.empty() && m.front() == '{') return measure_from_json(m);
    if (!m.empty() && m.front() == '@') {
      std::ifstream in(m.substr(1));
      if (!in) throw ConfigError("cannot read measure file '" + m.substr(1) + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      return measure_from_json(ss.str());
    }
    return named_measure(m);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("measure: " + std::string(e.what()));
  }
}

GroupElement element_of(const std::string& text) {
  try {
    return parse_element(text);
  } catch (const std::exception& e) {
    throw ConfigError("element '" + text + "': " + e.what());
  }
}

std::pair<double, double> interval_of(const Config& c, const std::string& key) {
  const auto v = c.get_doubles(key);
  if (v.size() != 2 || !(v[0] < v[1])) throw ConfigError("key '" + key + "' needs lo,hi with lo < hi");
  return {v[0], v[1]};
}

GridDensity box_density(double lo, double hi, double grid_lo, double grid_hi, int intervals) {
  const GridSpec spec = GridSpec::uniform(grid_lo, grid_hi, intervals);
  const double h = spec.spacing();
  return GridDensity::sample(spec, [&](double x) {
    return (x >= lo - 1e-9 * h && x <= hi + 1e-9 * h) ? 1.0 / (hi - lo) : 0.0;
  });
}

std::string rational_string(const mpq_class& q) { return format_rational(q); }

// ------------------------------------------------------------------ experiments

void run_stationary(Run& run) {
  const Config& c = run.cfg();
  const auto p = params_of(c);
  const auto t0 = std::chrono::steady_clock::now();
  const auto sd = solve(c, p, grid_of(c));
  const double solve_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto& rho = sd.rho;
  run.check("solver_converged", sd.converged ? 1 : 0, "==", 1);
  run.check("fixed_point_residual_l1", sd.residual, "<", 1e-6);
  run.check("mass_deviation", std::abs(rho.mass() - 1.0), "<=", 1e-6);
  double min_interior = INFINITY;
  for (std::size_t i = 1; i + 1 < rho.size(); ++i) min_interior = std::min(min_interior, rho.values()[i]);
  run.check("min_interior_density", min_interior, ">", 0.0);

  const auto R = simulate_R_infty(p, static_cast<int>(c.get_int("mc.steps")),
                                  static_cast<std::size_t>(c.get_int("mc.samples")), run.seed(1), run.workers());
  const double ks = ks_one_sample(R.values, [&](double y) { return rho.cdf(y); });
  run.check("ks_grid_vs_monte_carlo", ks, "<", 0.01);
  run.check("max_Q_N", R.max_abs_Q, "<", 1e-8);

  const auto inv = forward_invariance_probe(p, rho, c.get_ints("forward_steps"),
                                            static_cast<std::size_t>(c.get_int("mc.samples")), run.seed(2), {},
                                            run.workers());
  for (const auto& r : inv.rows) run.check("forward_invariance_ks_k" + std::to_string(r.k), r.ks, "<", 0.02);
  run.check("solve_seconds", solve_s, "<", 60.0);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rho.size(); ++i) rows.push_back({rho.nodes()[i], rho.values()[i]});
  run.csv("rho_infinity.csv", {"x", "value"}, rows);
  std::vector<std::vector<double>> hist;
  for (std::size_t i = 0; i < sd.history.size(); ++i) hist.push_back({double(i + 1), sd.history[i]});
  run.csv("residual_history.csv", {"iteration", "residual"}, hist);
  run.report().values = {{"iterations", sd.iterations}, {"residual", sd.residual},      {"nodes", rho.size()},
                         {"c_A", p.c_A},                {"c_B", p.c_B},                 {"E_log_A", p.E_log_A},
                         {"ks", ks},                    {"max_Q_N", R.max_abs_Q},       {"two_sample_floor", inv.two_sample_floor}};
}

void run_counterexample(Run& run) {
  const Config& c = run.cfg();
  const auto p = params_of(c);
  const GridSpec spec = grid_of(c);
  const double t = c.get_double("t");
  if (t == 0.0) throw ConfigError("t must be nonzero");
  const auto sd = solve(c, p, spec);
  const auto& rho = sd.rho;
  run.check("fixed_point_residual_l1", sd.residual, "<", c.get_double("tol"));

  const auto bl = blowup_report(rho, p);
  run.check("lower_bound_violations", double(bl.violations), "==", 0);
  run.check("rho_ratio_1e-4_over_1e-2", bl.ratio_1e4_1e2, ">=", bl.ratio_threshold);

  const auto refined = fixed_point_solve(p, spec.doubled(), c.get_double("tol"), static_cast<int>(c.get_int("max_iter")));
  const auto away_pos = away_from_zero_report(rho, std::abs(t), &refined.rho);
  const auto away_neg = away_from_zero_report(rho, -std::abs(t), &refined.rho);
  run.check("C_t_refinement_ratio_pos", *away_pos.refinement_ratio, "<", 2.0);
  run.check("C_t_refinement_ratio_neg", *away_neg.refinement_ratio, "<", 2.0);

  const auto deep = fixed_point_solve(p, spec.deepened(c.get_double("deep_factor")), c.get_double("tol"),
                                      static_cast<int>(c.get_int("max_iter")));
  const auto sat = sat_star_failure(rho, t, &deep.rho);
  run.check("rn_sup_growth_under_deepening", *sat.growth, ">=", 2.0);
  run.check("rn_sup_along_panels", std::max(sat.sup, *sat.sup_deep), ">", 1e3);

  const auto ks = stationarity_ks(p, rho, static_cast<std::size_t>(c.get_int("mc.samples")), run.seed(1), run.workers());
  run.check("stationarity_ks", ks.ks_pushforward, "<", 0.02);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rho.size(); ++i) rows.push_back({rho.nodes()[i], rho.values()[i]});
  run.csv("rho_infinity.csv", {"x", "value"}, rows);
  std::vector<std::vector<double>> prof;
  for (double x : rho.nodes()) {
    if (x > 0.0 && x < std::abs(t) / 8.0) prof.push_back({x, rn_derivative(AffMap::translation(t), t + x, rho).value});
  }
  run.csv("rn_profile.csv", {"x", "rn"}, prof);
  run.report().values = {{"c_A", p.c_A},
                         {"c_B", p.c_B},
                         {"E_log_A", p.E_log_A},
                         {"c0", bl.c0},
                         {"C", bl.C},
                         {"fitted_slope", bl.fitted_slope},
                         {"C_t", away_pos.C_t},
                         {"C_minus_t", away_neg.C_t},
                         {"rn_sup", sat.sup},
                         {"rn_sup_argmax", sat.argmax},
                         {"rn_sup_deep", *sat.sup_deep},
                         {"deep_panel_min", spec.deepened(c.get_double("deep_factor")).panel_min},
                         {"iterations", sd.iterations}};
}

void run_harnack(Run& run) {
  const Config& c = run.cfg();
  const auto theta = measure_of(c);
  const int max_n = static_cast<int>(c.get_int("max_n"));
  std::optional<OracleResult> oracle;
  if (theta.family_tag() == "z1") oracle = exp_oracle(theta);
  std::vector<MajorantEstimate> est;
  std::vector<std::vector<double>> rows;
  json certs = json::array();
  for (const auto& s : c.get_strings("elements")) {
    const GroupElement g = element_of(s);
    MajorantEstimate e{g, INFINITY, std::nullopt, std::nullopt, "certificate"};
    try {
      const auto cert = discrete_certificate(theta, g, max_n);
      const auto v = verify_certificate(theta, cert);
      run.check("certificate_verifies[" + s + "]", v.ok ? 1 : 0, "==", 1);
      e.upper = cert.bound_double();
      certs.push_back(json::parse(certificate_to_json(cert)));
    } catch (const CertificateError& err) {
      run.check("certificate_found[" + s + "]", 0, "==", 1);
    }
    if (oracle) {
      const auto& z = std::get<LatticePoint>(g);
      e.oracle = oracle->value(double(z[0]));
      e.oracle_exact = oracle->exact_value(z[0]);
      if (std::isfinite(e.upper)) {
        run.check("bound_dominates_oracle[" + s + "]", e.upper, ">=", *e.oracle * (1 - 1e-12));
      }
    }
    rows.push_back({double(est.size()), e.upper, e.oracle.value_or(NAN)});
    est.push_back(e);
  }
  if (oracle) {
    // Close the oracle set under products of the listed elements.
    std::vector<MajorantEstimate> closed = est;
    for (const auto& a : est) {
      for (const auto& b : est) {
        const GroupElement gh = compose(a.element, b.element);
        const auto k = std::get<LatticePoint>(gh)[0];
        closed.push_back({gh, INFINITY, oracle->value(double(k)), oracle->exact_value(k), "oracle"});
      }
    }
    const auto props = majorant_properties_check(closed);
    run.check("oracle_submultiplicative_and_at_least_one", props.ok ? 1 : 0, "==", 1);
  }
  run.csv("majorant_bounds.csv", {"index", "certificate_bound", "oracle"}, rows);

  // Gaussian semigroup: the grid sup of the density ratio attains alpha.
  Rng rng(run.seed(1));
  double worst_low = INFINITY, worst_high = 0.0;
  std::vector<std::vector<double>> grows;
  const int draws = static_cast<int>(c.get_int("gaussian_draws"));
  for (int i = 0; i < draws; ++i) {
    const int d = 1 + i % 3;
    std::vector<double> g(d), b(d);
    for (auto& v : g) v = rng.uniform(-2.0, 2.0);
    for (auto& v : b) v = rng.uniform(-1.0, 1.0);
    const double s = rng.uniform(0.5, 2.0);
    const double tt = s + rng.uniform(0.5, 3.0);
    const double a = gaussian_alpha(g, s, tt, b);
    const double sup = gaussian_ratio_grid_sup(g, s, tt, b);
    worst_low = std::min(worst_low, sup / a);
    worst_high = std::max(worst_high, sup / a);
    grows.push_back({double(d), s, tt, a, sup});
  }
  run.check("gaussian_sup_over_alpha_min", worst_low, ">=", 0.99);
  run.check("gaussian_sup_over_alpha_max", worst_high, "<=", 1.0 + 1e-12);
  run.csv("gaussian_alpha.csv", {"d", "s", "t", "alpha", "grid_sup"}, grows);

  // Covering certificates on the line.
  const int per_unit = static_cast<int>(c.get_int("covering_intervals"));
  GridPowers sym(box_density(-1, 1, -1, 1, 2 * per_unit));
  const auto cov1 = covering_certificate(sym, 0.5, 2);
  run.check("covering_uniform_g0.5_verifies", cov1.verdict.ok ? 1 : 0, "==", 1);
  run.check("covering_uniform_g0.5_bound", cov1.certificate.bound_double(), ">=", 1.0);
  const auto drift_phi = box_density(-1, 2, -1, 2, 3 * per_unit);
  GridPowers drift(drift_phi);
  const auto cov2 = covering_certificate(drift, -1.0, 2);
  const double oracle2 = exp_oracle(drift_phi).value(-1.0);
  run.check("covering_drift_g-1_verifies", cov2.verdict.ok ? 1 : 0, "==", 1);
  run.check("covering_drift_g-1_bound_over_oracle", cov2.certificate.bound_double(), ">=", oracle2);
  run.text("certificates.json", certs.dump(2) + "\n");
  run.report().values = {{"covering_uniform_bound", cov1.certificate.bound_double()},
                         {"covering_drift_bound", cov2.certificate.bound_double()},
                         {"drift_oracle_at_-1", oracle2}};
}

void run_exponent(Run& run) {
  const Config& c = run.cfg();
  const auto theta = measure_of(c);
  const auto rep = harnack_exponent(theta, c.get_ints("radii"), static_cast<int>(c.get_int("max_n")));
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rep.radii.size(); ++i) {
    rows.push_back({double(rep.radii[i]), rep.theta_of_r[i], rep.slope[i]});
  }
  run.csv("exponent.csv", {"r", "theta_r", "theta_r_over_r"}, rows);
  run.check("theta_subadditive", rep.subadditive ? 1 : 0, "==", 1);
  run.check("gamma_hat_le_theta_over_r_first", rep.gamma_hat, "<=", rep.slope.front() + 1e-12);
  const std::string expected = c.get("expected_gamma");
  if (!expected.empty()) run.check("gamma_hat_error", std::abs(rep.gamma_hat - c.get_double("expected_gamma")), "<", 1e-6);
  run.report().values = {{"gamma_hat", rep.gamma_hat}, {"upper_estimate", rep.upper_estimate}, {"warnings", rep.warnings}};
}

void run_deltak(Run& run) {
  const Config& c = run.cfg();
  const int n = static_cast<int>(c.get_int("grid.nodes"));
  const auto phi = box_density(-1, 1, -4, 4, n);
  const auto radii = c.get_doubles("radii");
  const auto d1 = delta_K(phi, [](double) { return 1.0; }, radii);
  double worst = 0.0;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] <= 2.0) worst = std::max(worst, std::abs(d1[i] - radii[i]));
    rows.push_back({0, radii[i], d1[i]});
  }
  run.check("uniform_delta_minus_radius", worst, "<", 1e-4);

  const auto drift_phi = box_density(-1, 2, -4, 5, n * 9 / 8);
  const auto oracle = exp_oracle(drift_phi);
  auto dr = c.get_doubles("drift_radii");
  std::sort(dr.begin(), dr.end());
  const auto d2 = delta_K(drift_phi, [&](double x) { return oracle.value(x); }, dr);
  bool monotone = true;
  for (std::size_t i = 1; i < d2.size(); ++i) monotone = monotone && d2[i] >= d2[i - 1];
  for (std::size_t i = 0; i < dr.size(); ++i) rows.push_back({1, dr[i], d2[i]});
  run.check("drift_delta_monotone", monotone ? 1 : 0, "==", 1);
  auto at = [&](double r) {
    for (std::size_t i = 0; i < dr.size(); ++i) {
      if (std::abs(dr[i] - r) < 1e-12) return d2[i];
    }
    throw ConfigError("drift_radii must contain " + format_number(r));
  };
  run.check("drift_delta_ratio_0.01_over_1", at(0.01) / at(1.0), "<", 0.05);
  if (std::find(dr.begin(), dr.end(), 0.0) != dr.end()) run.check("drift_delta_at_0", at(0.0), "==", 0.0);
  run.csv("deltak.csv", {"case", "radius", "delta"}, rows);
  run.report().values = {{"drift_root", oracle.roots}};
}

void run_martingale(Run& run) {
  const Config& c = run.cfg();
  const auto p = params_of(c);
  const auto sd = solve(c, p, grid_of(c));
  const auto [lo, hi] = interval_of(c, "A");
  const auto rep = martingale_experiment(p, sd.rho, lo, hi, static_cast<int>(c.get_int("horizon")),
                                         static_cast<std::size_t>(c.get_int("mc.samples")), run.seed(1),
                                         c.get_ints("checkpoints"), run.workers());
  run.check("first_moment_error", std::abs(rep.rows.size() > 1 ? rep.rows[1].M.mean - rep.mu_A : 0.0), "<=",
            3.0 * (rep.rows.size() > 1 ? rep.rows[1].M.se : 0.0));
  for (int n : rep.checkpoints) {
    const auto& r = rep.rows[static_cast<std::size_t>(n)];
    run.check("drift_abs_mean_n" + std::to_string(n), std::abs(r.increment.mean), "<=", 3.0 * r.increment.se);
  }
  run.check("drift_all_n_within_3se", rep.unconditional_ok ? 1 : 0, "==", 1);
  run.check("conditional_drift_deciles", rep.conditional_ok ? 1 : 0, "==", 1);
  std::vector<std::vector<double>> rows, buckets;
  for (const auto& r : rep.rows) {
    rows.push_back({double(r.n), r.M.mean, r.M.se});
    for (std::size_t q = 0; q < r.buckets.size(); ++q) {
      const auto& b = r.buckets[q];
      buckets.push_back({double(r.n), double(q), b.m_lo, b.m_hi, b.increment.mean, b.increment.se, b.sum, b.bound});
    }
  }
  run.csv("martingale.csv", {"n", "M_n_mean", "M_n_se"}, rows);
  run.csv("martingale_buckets.csv", {"n", "decile", "M_lo", "M_hi", "increment_mean", "increment_se", "increment_sum", "bernstein_bound"}, buckets);
  run.report().values = {{"mu_A", rep.mu_A}, {"failures", rep.failures}};
}

CompactSet parse_set(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw ConfigError("set '" + s + "' needs kind:args");
  const std::string kind = s.substr(0, colon);
  std::vector<double> a;
  for (const auto& t : split(s.substr(colon + 1), ',')) a.push_back(std::stod(t));
  if (kind == "box" && a.size() == 2) return CompactSet::lattice_box(std::llround(a[0]), std::llround(a[1]));
  if (kind == "aff" && a.size() == 3) return CompactSet::affine_box(a[0], a[1], a[2]);
  if (kind == "ball" && a.size() == 1) return CompactSet::word_ball(a[0]);
  throw ConfigError("bad set descriptor '" + s + "'");
}

void run_escape(Run& run) {
  const Config& c = run.cfg();
  const auto horizons = c.get_ints("horizons");
  const std::string override_set = c.get("set");
  std::vector<std::vector<double>> rows;
  json sets = json::object();
  int index = 0;
  for (const auto& w : c.get_strings("walks")) {
    StepLaw law = w == "counterexample" ? StepLaw::counterexample(make_params()) : [&] {
      try {
        return StepLaw::discrete(named_measure(w));
      } catch (const std::exception& e) {
        throw ConfigError("walk '" + w + "': " + e.what());
      }
    }();
    const CompactSet C = !override_set.empty() ? parse_set(override_set)
                         : w == "counterexample" ? CompactSet::affine_box(0.5, 2.0, 2.0)
                                                 : CompactSet::lattice_box(-10, 10);
    const auto rep = escape_experiment(law, C, horizons, static_cast<std::size_t>(c.get_int("mc.samples")),
                                       run.seed(static_cast<std::uint64_t>(index)), run.workers());
    for (const auto& r : rep.rows) rows.push_back({double(index), double(r.horizon), r.frequency, r.se});
    run.check("stay_frequency_final[" + w + "]", rep.rows.back().frequency, "<", 0.05);
    run.check("stay_frequency_decreasing[" + w + "]", rep.decreasing ? 1 : 0, "==", 1);
    sets[w] = rep.set;
    ++index;
  }
  run.csv("escape.csv", {"walk_index", "horizon", "frequency", "se"}, rows);
  run.report().values = {{"sets", sets}, {"walks", c.get_strings("walks")}};
}

void run_recurrence(Run& run) {
  const Config& c = run.cfg();
  const auto p = params_of(c);
  const auto sd = solve(c, p, grid_of(c));
  const auto [lo, hi] = interval_of(c, "A");
  const auto rep = recurrence_witnesses(p, sd.rho, lo, hi, static_cast<std::size_t>(c.get_int("paths")),
                                        c.get_double("K_radius"), run.seed(1), static_cast<int>(c.get_int("path_length")),
                                        static_cast<std::size_t>(c.get_int("max_pairs")));
  run.check("witnesses_found", double(rep.witnesses.size()), ">=", 1);
  double worst = 0.0;
  std::vector<std::vector<double>> rows;
  for (const auto& w : rep.witnesses) {
    worst = std::max(worst, std::abs(w.overlap - w.overlap_quadrature));
    rows.push_back({double(w.m), double(w.l), w.g.log_a(), w.g.b(), w.word_length, w.overlap, w.overlap_quadrature});
  }
  if (!rep.witnesses.empty()) run.check("overlap_quadrature_agreement", worst, "<", 1e-6);
  run.csv("recurrence_witnesses.csv", {"m", "l", "log_a", "b", "word_length", "overlap", "overlap_quadrature"}, rows);
  run.report().values = {{"mu_A", rep.mu_A},
                         {"good_times", rep.good_times},
                         {"pairs_examined", rep.pairs_examined},
                         {"diagnostic", rep.diagnostic}};
}

void run_maharam(Run& run) {
  const Config& c = run.cfg();
  const auto p = params_of(c);
  const auto sd = solve(c, p, grid_of(c));
  const auto& rho = sd.rho;
  const auto n = static_cast<std::size_t>(c.get_int("checks"));
  const auto coc = maharam_cocycle_check(rho, n, run.seed(1));
  run.check("additive_cocycle_worst", coc.worst_fiber, "<=", 1e-9);

  Rng rng(run.seed(2));
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const AffMap g = random_affine(rng);
    const MaharamPoint pt{rng.uniform(-2, 2), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const double s = rng.uniform(-5, 5);
    const auto a = maharam_step(g, fiber_translate(s, pt), rho);
    const auto b = fiber_translate(s, maharam_step(g, pt, rho));
    if (a.x != b.x || a.shift != b.shift || a.cocycle != b.cocycle) ++mismatches;
  }
  run.check("fiber_translation_commutation_mismatches", double(mismatches), "==", 0);
  const MaharamPoint e0{0.7, 1.0, 0.0};
  const auto e1 = maharam_step(AffMap(), e0, rho);
  run.check("identity_fixes_points", (e1.x == e0.x && e1.t() == e0.t()) ? 1 : 0, "==", 1);

  const double window = c.get_double("window");
  const std::vector<std::pair<AffMap, std::array<double, 4>>> cases = {
      {AffMap(1.5, -0.3), {-1.0, 0.5, -2.0, 3.0}},
      {AffMap(0.5, 0.2), {0.2, 1.5, 0.0, 1.0}},
      {AffMap(2.0, 1.0), {-3.0, -0.1, -5.0, 5.0}},
      {AffMap::translation(1.0), {0.5, 2.0, -1.0, 2.0}},
  };
  std::vector<std::vector<double>> rows;
  double worst = 0.0;
  for (const auto& [g, r] : cases) {
    const auto pr = maharam_rectangle_probe(g, r[0], r[1], r[2], r[3], rho, window);
    worst = std::max(worst, pr.error);
    rows.push_back({g.a(), g.b(), r[0], r[1], r[2], r[3], pr.measure, pr.measure_preimage, pr.error});
  }
  run.check("rectangle_preservation_worst", worst, "<=", 1e-4);
  run.csv("maharam_rectangles.csv", {"a", "b", "x1", "x2", "t1", "t2", "measure", "measure_preimage", "error"}, rows);
  const auto h = alpha_histogram(AffMap(1.5, -0.3), rho, static_cast<std::size_t>(c.get_int("mc.samples")), run.seed(3));
  std::vector<std::vector<double>> hr;
  for (std::size_t k = 0; k < h.counts.size(); ++k) hr.push_back({h.edges[k], h.edges[k + 1], double(h.counts[k])});
  run.csv("alpha_histogram.csv", {"lo", "hi", "count"}, hr);
  run.report().values = {{"cocycle_worst", coc.worst_fiber}, {"histogram_dropped", h.dropped}};
}

void run_skew(Run& run) {
  const Config& c = run.cfg();
  const auto p = params_of(c);
  const auto sd = solve(c, p, grid_of(c));
  const double lambda = c.get_double("lambda");
  double period;
  try {
    period = skew_period(lambda);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  const auto n = static_cast<std::size_t>(c.get_int("checks"));
  const auto chk = skew_action_check(lambda, sd.rho, n, run.seed(1));
  run.check("action_law_worst_x", chk.worst_x, "<=", 1e-9);
  run.check("action_law_worst_fiber", chk.worst_fiber, "<=", 1e-9);
  const auto triv = skew_action_check(1.0, sd.rho, n, run.seed(2));
  run.check("trivial_fiber_action_law", triv.ok ? 1 : 0, "==", 1);
  const auto h = alpha_histogram(AffMap(1.5, -0.3), sd.rho, static_cast<std::size_t>(c.get_int("mc.samples")), run.seed(3));
  std::vector<std::vector<double>> hr;
  for (std::size_t k = 0; k < h.counts.size(); ++k) hr.push_back({h.edges[k], h.edges[k + 1], double(h.counts[k])});
  run.csv("alpha_histogram.csv", {"lo", "hi", "count"}, hr);
  run.report().values = {{"period", period}};
}

void run_certify(Run& run) {
  const Config& c = run.cfg();
  const auto theta = measure_of(c);
  SuitabilityCertificate cert;
  const std::string file = c.get("certificate");
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read certificate '" + file + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      cert = certificate_from_json(ss.str());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("certificate: ") + e.what());
    }
  } else {
    try {
      cert = discrete_certificate(theta, element_of(c.get("element")), static_cast<int>(c.get_int("max_n")));
    } catch (const CertificateError& e) {
      run.check("certificate_found", 0, "==", 1);
      run.report().values = {{"diagnostic", e.what()}};
      return;
    }
  }
  const auto v = verify_certificate(theta, cert);
  run.check("certificate_verifies", v.ok ? 1 : 0, "==", 1);
  json vals = {{"bound", rational_string(cert.bound())}, {"bound_value", cert.bound_double()},
               {"margin", v.margin}, {"points_checked", v.points_checked}};
  if (theta.family_tag() == "z1") {
    const auto o = exp_oracle(theta);
    const double ov = o.value(double(std::get<LatticePoint>(cert.element)[0]));
    vals["oracle"] = ov;
    run.check("bound_dominates_oracle", cert.bound_double(), ">=", ov * (1 - 1e-12));
  }
  if (!v.diagnostic.empty()) vals["diagnostic"] = v.diagnostic;
  run.text("certificate.json", certificate_to_json(cert) + "\n");
  run.report().values = vals;
}

}  // namespace

RunReport run_experiment(const Config& cfg) {
  static const std::map<std::string, std::function<void(Run&)>> table = {
      {"counterexample", run_counterexample}, {"harnack", run_harnack},       {"exponent", run_exponent},
      {"deltak", run_deltak},                 {"martingale", run_martingale}, {"escape", run_escape},
      {"recurrence", run_recurrence},         {"maharam", run_maharam},       {"skew", run_skew},
      {"stationary-density", run_stationary}, {"certify", run_certify},
  };
  const auto it = table.find(cfg.experiment());
  if (it == table.end()) throw ConfigError("unknown experiment '" + cfg.experiment() + "'");
  const auto t0 = std::chrono::steady_clock::now();
  Run run(cfg);
  it->second(run);
  run.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return run.report();
}

}  // namespace rwlab::cli
