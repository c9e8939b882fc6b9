#pragma once

// Run configuration: a single key = value text file ('#' comments), or the
// "config" object of an emitted run.json. A run re-executed from its own
// run.json reproduces all outputs byte-identically.
//
// Times accept three forms, comma-separated:
//   rational <p>/<q>    exact fraction of the period T
//   irrational sqrt2    T / sqrt(2)
//   <float>             absolute time
// All physical numbers default to the L = m = hbar = 1 unit system.

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qfbox/dynamics.hpp"
#include "qfbox/io.hpp"

namespace qfbox {

struct TimeSpec {
  enum class Kind { absolute, rational, sqrt2 } kind = Kind::absolute;
  double value = 0.0;  // absolute time
  std::int64_t p = 0, q = 1;

  TimePoint resolve(const BoxDomain& d) const {
    switch (kind) {
      case Kind::rational: return TimePoint::rational_of_period(p, q, d);
      case Kind::sqrt2: return TimePoint::irrational_sqrt2(d);
      default: return TimePoint::absolute(value);
    }
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::rational: return "rational " + std::to_string(p) + "/" + std::to_string(q);
      case Kind::sqrt2: return "irrational sqrt2";
      default: return fmt17(value);
    }
  }
};

struct RunConfig {
  BoxDomain domain;

  std::string state_kind = "uniform";  // uniform|weierstrass|triangle|parabola|custom
  double x1 = 0.0;
  double x2 = -1.0;  // < 0: full box
  int n_max = 1023;
  bool normalize = false;
  double weier_s = 1.0;
  int weier_base = 2;
  int weier_R = 10;
  std::string state_file;

  std::vector<std::size_t> ladder;  // term counts; empty = single-truncation runs
  std::size_t truncation = 0;       // 0 = all stored terms
  std::vector<TimeSpec> times;
  std::vector<double> x0_list;
  double t_a = 0.0;
  double t_b = -1.0;  // < 0: one period

  IntegratorOptions integ;
  int grid_per_halfwave = 8;
  std::size_t grid_min = 1001;
  int traj_oversample = 4;
  double saturation_slope = 0.05;
  std::optional<FitWindow> fit_window;

  std::size_t carpet_time_rows = 257;
  std::size_t carpet_x_cols = 1025;
  bool carpet_binary = false;

  std::string out_dir = "out";
  int threads = 0;

  SpectralState build_state() const {
    if (state_kind == "uniform") {
      const double hi = x2 < 0.0 ? domain.L : x2;
      return build_uniform(domain, x1, hi, n_max, normalize);
    }
    if (state_kind == "weierstrass")
      return build_weierstrass(domain, weier_s, weier_base, weier_R, normalize);
    if (state_kind == "triangle") return build_triangle(domain, n_max);
    if (state_kind == "parabola") return build_parabola(domain, n_max);
    if (state_kind == "custom") {
      if (state_file.empty()) throw std::domain_error("config: custom state needs state.file");
      return load_coefficients(state_file, domain, normalize);
    }
    throw std::domain_error("config: unknown state.kind '" + state_kind + "'");
  }

  std::size_t resolve_truncation(const SpectralState& st) const {
    if (truncation == 0) return st.size();
    if (truncation > st.size())
      throw std::domain_error("config: truncation exceeds stored terms");
    return truncation;
  }

  double resolve_t_b() const { return t_b < 0.0 ? t_a + period(domain) : t_b; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw std::domain_error("config: bad number for " + key + ": '" + v + "'");
  }
}

inline long long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw std::domain_error("config: bad integer for " + key + ": '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::domain_error("config: bad boolean for " + key + ": '" + v + "'");
}

inline TimeSpec parse_time_token(const std::string& tok) {
  TimeSpec ts;
  if (tok.rfind("rational", 0) == 0) {
    const std::string frac = trim(tok.substr(8));
    const auto slash = frac.find('/');
    if (slash == std::string::npos)
      throw std::domain_error("config: rational time needs p/q: '" + tok + "'");
    ts.kind = TimeSpec::Kind::rational;
    ts.p = parse_int("times", trim(frac.substr(0, slash)));
    ts.q = parse_int("times", trim(frac.substr(slash + 1)));
    return ts;
  }
  if (tok == "irrational sqrt2" || tok == "sqrt2") {
    ts.kind = TimeSpec::Kind::sqrt2;
    return ts;
  }
  ts.kind = TimeSpec::Kind::absolute;
  ts.value = parse_double("times", tok);
  return ts;
}

}  // namespace detail

inline RunConfig config_from_map(const std::map<std::string, std::string>& kv) {
  RunConfig c;
  double L = 1.0, m = 1.0, hbar = 1.0;
  for (const auto& [key, value] : kv) {
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_int;
    if (key == "domain.L") L = parse_double(key, value);
    else if (key == "domain.m") m = parse_double(key, value);
    else if (key == "domain.hbar") hbar = parse_double(key, value);
    else if (key == "state.kind") c.state_kind = value;
    else if (key == "state.x1") c.x1 = parse_double(key, value);
    else if (key == "state.x2") c.x2 = parse_double(key, value);
    else if (key == "state.n_max") c.n_max = static_cast<int>(parse_int(key, value));
    else if (key == "state.normalize") c.normalize = parse_bool(key, value);
    else if (key == "state.s") c.weier_s = parse_double(key, value);
    else if (key == "state.base") c.weier_base = static_cast<int>(parse_int(key, value));
    else if (key == "state.R") c.weier_R = static_cast<int>(parse_int(key, value));
    else if (key == "state.file") c.state_file = value;
    else if (key == "ladder") {
      for (const auto& tok : detail::split(value, ','))
        c.ladder.push_back(static_cast<std::size_t>(parse_int(key, tok)));
    } else if (key == "truncation") c.truncation = static_cast<std::size_t>(parse_int(key, value));
    else if (key == "times") {
      for (const auto& tok : detail::split(value, ','))
        c.times.push_back(detail::parse_time_token(tok));
    } else if (key == "trajectory.x0") {
      for (const auto& tok : detail::split(value, ','))
        c.x0_list.push_back(parse_double(key, tok));
    } else if (key == "trajectory.t_a") c.t_a = parse_double(key, value);
    else if (key == "trajectory.t_b") c.t_b = parse_double(key, value);
    else if (key == "integrator.dt_init_frac") c.integ.dt_init_frac = parse_double(key, value);
    else if (key == "integrator.tol_step") c.integ.tol_step = parse_double(key, value);
    else if (key == "integrator.dt_min_frac") c.integ.dt_min_frac = parse_double(key, value);
    else if (key == "integrator.samples_per_period")
      c.integ.samples_per_period = static_cast<int>(parse_int(key, value));
    else if (key == "integrator.limit_tol_frac") c.integ.limit_tol_frac = parse_double(key, value);
    else if (key == "grid.per_halfwave") c.grid_per_halfwave = static_cast<int>(parse_int(key, value));
    else if (key == "grid.min_points") c.grid_min = static_cast<std::size_t>(parse_int(key, value));
    else if (key == "fractal.oversample") c.traj_oversample = static_cast<int>(parse_int(key, value));
    else if (key == "fractal.saturation_slope") c.saturation_slope = parse_double(key, value);
    else if (key == "fractal.window") {
      const auto parts = detail::split(value, ',');
      if (parts.size() != 2) throw std::domain_error("config: fractal.window needs 'lo,hi'");
      c.fit_window = FitWindow{static_cast<std::size_t>(parse_int(key, parts[0])),
                               static_cast<std::size_t>(parse_int(key, parts[1]))};
    } else if (key == "carpet.time_rows") c.carpet_time_rows = static_cast<std::size_t>(parse_int(key, value));
    else if (key == "carpet.x_cols") c.carpet_x_cols = static_cast<std::size_t>(parse_int(key, value));
    else if (key == "carpet.binary") c.carpet_binary = parse_bool(key, value);
    else if (key == "output.dir") c.out_dir = value;
    else if (key == "threads") c.threads = static_cast<int>(parse_int(key, value));
    else throw std::domain_error("config: unknown key '" + key + "'");
  }
  c.domain = BoxDomain(L, m, hbar);
  return c;
}

inline std::map<std::string, std::string> config_to_map(const RunConfig& c) {
  std::map<std::string, std::string> kv;
  kv["domain.L"] = fmt17(c.domain.L);
  kv["domain.m"] = fmt17(c.domain.m);
  kv["domain.hbar"] = fmt17(c.domain.hbar);
  kv["state.kind"] = c.state_kind;
  kv["state.x1"] = fmt17(c.x1);
  kv["state.x2"] = fmt17(c.x2);
  kv["state.n_max"] = std::to_string(c.n_max);
  kv["state.normalize"] = c.normalize ? "true" : "false";
  kv["state.s"] = fmt17(c.weier_s);
  kv["state.base"] = std::to_string(c.weier_base);
  kv["state.R"] = std::to_string(c.weier_R);
  if (!c.state_file.empty()) kv["state.file"] = c.state_file;
  if (!c.ladder.empty()) {
    std::string s;
    for (std::size_t i = 0; i < c.ladder.size(); ++i)
      s += (i ? "," : "") + std::to_string(c.ladder[i]);
    kv["ladder"] = s;
  }
  if (c.truncation) kv["truncation"] = std::to_string(c.truncation);
  if (!c.times.empty()) {
    std::string s;
    for (std::size_t i = 0; i < c.times.size(); ++i) s += (i ? ", " : "") + c.times[i].to_string();
    kv["times"] = s;
  }
  if (!c.x0_list.empty()) {
    std::string s;
    for (std::size_t i = 0; i < c.x0_list.size(); ++i) s += (i ? ", " : "") + fmt17(c.x0_list[i]);
    kv["trajectory.x0"] = s;
  }
  kv["trajectory.t_a"] = fmt17(c.t_a);
  kv["trajectory.t_b"] = fmt17(c.t_b);
  kv["integrator.dt_init_frac"] = fmt17(c.integ.dt_init_frac);
  kv["integrator.tol_step"] = fmt17(c.integ.tol_step);
  kv["integrator.dt_min_frac"] = fmt17(c.integ.dt_min_frac);
  kv["integrator.samples_per_period"] = std::to_string(c.integ.samples_per_period);
  kv["integrator.limit_tol_frac"] = fmt17(c.integ.limit_tol_frac);
  kv["grid.per_halfwave"] = std::to_string(c.grid_per_halfwave);
  kv["grid.min_points"] = std::to_string(c.grid_min);
  kv["fractal.oversample"] = std::to_string(c.traj_oversample);
  kv["fractal.saturation_slope"] = fmt17(c.saturation_slope);
  if (c.fit_window)
    kv["fractal.window"] = std::to_string(c.fit_window->lo) + "," + std::to_string(c.fit_window->hi);
  kv["carpet.time_rows"] = std::to_string(c.carpet_time_rows);
  kv["carpet.x_cols"] = std::to_string(c.carpet_x_cols);
  kv["carpet.binary"] = c.carpet_binary ? "true" : "false";
  kv["output.dir"] = c.out_dir;
  kv["threads"] = std::to_string(c.threads);
  return kv;
}

// Accepts a key = value text file or an emitted run.json (first non-space
// character '{').
inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::domain_error("cannot open config: " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const nlohmann::json j = nlohmann::json::parse(text);
    const nlohmann::json& cfg = j.contains("config") ? j.at("config") : j;
    std::map<std::string, std::string> kv;
    for (const auto& [k, v] : cfg.items()) kv[k] = v.get<std::string>();
    return config_from_map(kv);
  }
  std::map<std::string, std::string> kv;
  std::istringstream ls(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ls, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::domain_error(path.string() + ":" + std::to_string(lineno) +
                              ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw std::domain_error(path.string() + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return config_from_map(kv);
}

// Every command emits run.json with the resolved config and library version.
inline void write_run_json(const std::filesystem::path& out_dir, const std::string& command,
                           const RunConfig& cfg, const char* version) {
  nlohmann::json j;
  j["tool"] = "qfbox";
  j["version"] = version;
  j["command"] = command;
  j["config"] = config_to_map(cfg);
  auto os = detail::open_out(out_dir / "run.json");
  os << j.dump(2) << "\n";
}

}  // namespace qfbox
