#pragma once

// File formats. All floating-point output uses 17 significant digits so
// byte-level diffs are stable across runs of the same build; masked values
// (NaN) become empty CSV fields, singular values stay as signed "inf".

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qfbox/fractal.hpp"

namespace qfbox {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Empty field for NaN (masked); "inf"/"-inf" pass through as formatted.
inline std::string fmt_masked(double v) { return std::isnan(v) ? std::string{} : fmt17(v); }

namespace detail {
inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);  // binary: no platform newline surprises
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  return os;
}
}  // namespace detail

// Coefficient files: lines "n re(c_n) im(c_n)", '#' comments, strictly
// increasing n. The custom-state ingestion format.
inline void save_coefficients(const std::filesystem::path& path, const SpectralState& st) {
  auto os = detail::open_out(path);
  os << "# spectral state: " << to_string(st.label()) << "\n";
  os << "# columns: n re(c_n) im(c_n)\n";
  for (const Term& t : st.terms())
    os << t.n << ' ' << fmt17(t.c.real()) << ' ' << fmt17(t.c.imag()) << "\n";
}

inline SpectralState load_coefficients(const std::filesystem::path& path, const BoxDomain& d,
                                       bool normalize = false) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open state file: " + path.string());
  std::vector<Term> terms;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long n;
    double re, im;
    if (!(ls >> n)) continue;  // blank / comment-only line
    if (!(ls >> re >> im))
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected 'n re im'");
    if (n < 1 || n > 0x7fffffff)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": mode index out of range");
    terms.push_back(Term{static_cast<int>(n), {re, im}});
  }
  if (terms.empty()) throw std::runtime_error(path.string() + ": no coefficients");
  for (std::size_t i = 1; i < terms.size(); ++i)
    if (terms[i].n <= terms[i - 1].n)
      throw std::runtime_error(path.string() + ": mode indices must be strictly increasing");
  return make_custom_state(d, std::move(terms), normalize);
}

// Trajectory CSV: one file per ensemble, columns t,x,v,N,x0.
inline void write_trajectories_csv(const std::filesystem::path& path,
                                   std::span<const Trajectory> trajs,
                                   const std::string& state_label) {
  auto os = detail::open_out(path);
  os << "# trajectories for state: " << state_label << "\n";
  os << "# " << trajs.size() << " trajectories\n";
  os << "t,x,v,N,x0\n";
  for (const Trajectory& tr : trajs) {
    for (const TrajectorySample& s : tr.samples)
      os << fmt17(s.t) << ',' << fmt17(s.x) << ',' << fmt_masked(s.v) << ',' << tr.truncation
         << ',' << fmt17(tr.x0) << "\n";
  }
}

// FieldProfile CSV: x,rho,S,Q with masked entries as empty fields.
inline void write_profile_csv(const std::filesystem::path& path, const FieldProfile& fp,
                              const std::string& state_label) {
  auto os = detail::open_out(path);
  os << "# field profile for state: " << state_label << "\n";
  os << "# t = " << fmt17(fp.t) << ", N = " << fp.truncation << ", sum|c|^2 = " << fmt17(fp.norm2)
     << "\n";
  os << "x,rho,S,Q\n";
  for (std::size_t i = 0; i < fp.x.size(); ++i)
    os << fmt17(fp.x[i]) << ',' << fmt17(fp.rho[i]) << ',' << fmt_masked(fp.S[i]) << ','
       << fmt17(fp.Q[i]) << "\n";
}

// EnergyTrace CSV: t,x,K,Q,E.
inline void write_energy_csv(const std::filesystem::path& path, const EnergyTrace& tr,
                             const std::string& state_label) {
  auto os = detail::open_out(path);
  os << "# particle energy along trajectory, state: " << state_label << "\n";
  os << "# x0 = " << fmt17(tr.x0) << ", N = " << tr.truncation << "\n";
  os << "t,x,K,Q,E\n";
  for (const EnergySample& s : tr.samples)
    os << fmt17(s.t) << ',' << fmt17(s.x) << ',' << fmt17(s.K) << ',' << fmt17(s.Q) << ','
       << fmt17(s.E) << "\n";
}

struct CarpetGrid {
  std::vector<double> x;
  std::vector<double> t;
  std::vector<std::vector<double>> rho;  // row per time
};

inline void write_carpet_csv(const std::filesystem::path& path, const CarpetGrid& g,
                             const std::string& state_label, std::size_t truncation) {
  auto os = detail::open_out(path);
  os << "# quantum carpet rho(t, x), state: " << state_label << ", N = " << truncation << "\n";
  os << "# columns: t then rho at each grid x\n";
  os << "# x:";
  for (double x : g.x) os << ' ' << fmt17(x);
  os << "\n";
  for (std::size_t r = 0; r < g.t.size(); ++r) {
    os << fmt17(g.t[r]);
    for (double v : g.rho[r]) os << ',' << fmt17(v);
    os << "\n";
  }
}

// Row-major float64 dump plus a JSON sidecar describing shape and grids.
inline void write_carpet_binary(const std::filesystem::path& path, const CarpetGrid& g) {
  auto os = detail::open_out(path);
  for (const auto& row : g.rho)
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(double)));
  nlohmann::json side;
  side["dtype"] = "float64";
  side["order"] = "row-major";
  side["rows"] = g.t.size();
  side["cols"] = g.x.size();
  side["t_grid"] = g.t;
  side["x_grid"] = g.x;
  auto js = detail::open_out(path.string() + ".json");
  js << side.dump(2) << "\n";
}

inline nlohmann::json fractal_fit_json(const FractalFit& fit) {
  nlohmann::json j;
  j["method"] = fit.method;
  j["N_values"] = fit.N_values;
  j["lengths"] = fit.lengths;
  j["fit_window"] = {fit.fit_window.lo, fit.fit_window.hi};
  j["slope"] = fit.slope;
  j["stderr"] = fit.stderr_slope;
  j["D_f"] = fit.D_f;
  j["flags"] = fit.flags;
  if (!std::isnan(fit.beta)) j["beta"] = fit.beta;
  return j;
}

inline void write_fractal_json(const std::filesystem::path& path, const FractalFit& fit) {
  auto os = detail::open_out(path);
  os << fractal_fit_json(fit).dump(2) << "\n";
}

}  // namespace qfbox
