// qfbox command-line front end.
//
// Subcommands: build-state, carpet, trajectories, profile, energy, fractal.
// Every command reads one config file, writes its outputs under --out, and
// emits run.json with the resolved configuration. Exit codes: 0 success,
// 2 usage/config error, 3 numerical failure (partial outputs retained).

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "qfbox/qfbox.hpp"

namespace fs = std::filesystem;
using namespace qfbox;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;  // overrides config when set
  int threads = 0;
};

RunConfig load_and_resolve(const CommonArgs& args) {
  RunConfig cfg = load_config(args.config_path);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.threads > 0) cfg.threads = args.threads;
  if (cfg.threads > 0) set_max_threads(cfg.threads);
  fs::create_directories(cfg.out_dir);
  return cfg;
}

std::string x0_tag(double x0) {
  std::string s = fmt17(x0);
  for (char& ch : s)
    if (ch == '.' || ch == '-' || ch == '+') ch = '_';
  return s;
}

int cmd_build_state(const CommonArgs& args) {
  RunConfig cfg = load_and_resolve(args);
  const SpectralState st = cfg.build_state();
  const fs::path out(cfg.out_dir);
  save_coefficients(out / "state_coefficients.txt", st);
  nlohmann::json j;
  j["kind"] = to_string(st.label());
  j["terms"] = st.size();
  j["n_max"] = st.terms().back().n;
  j["norm2"] = st.norm2();
  j["ensemble_energy"] = ensemble_energy(st, st.size());
  {
    auto os = detail::open_out(out / "state_summary.json");
    os << j.dump(2) << "\n";
  }
  write_run_json(out, "build-state", cfg, kVersion);
  std::cout << "state: " << to_string(st.label()) << ", " << st.size()
            << " terms, n_max = " << st.terms().back().n << ", sum|c|^2 = " << fmt17(st.norm2())
            << ", <H> = " << fmt17(ensemble_energy(st, st.size())) << "\n";
  return 0;
}

int cmd_carpet(const CommonArgs& args) {
  RunConfig cfg = load_and_resolve(args);
  const SpectralState st = cfg.build_state();
  const std::size_t N = cfg.resolve_truncation(st);
  const fs::path out(cfg.out_dir);

  CarpetGrid g;
  const std::size_t cols = std::max<std::size_t>(2, cfg.carpet_x_cols);
  const std::size_t rows = std::max<std::size_t>(2, cfg.carpet_time_rows);
  g.x.resize(cols);
  for (std::size_t i = 0; i < cols; ++i)
    g.x[i] = st.domain().L * (static_cast<double>(i) / static_cast<double>(cols - 1));
  const double T = period(st.domain());
  const double t_a = cfg.t_a;
  const double t_b = cfg.resolve_t_b();
  g.t.resize(rows);
  g.rho.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    // exact rationals of T where the span is [0, T]: keeps the first/last
    // rows bit-comparable for the periodicity check
    TimePoint tp;
    if (t_a == 0.0 && t_b == T)
      tp = TimePoint::rational_of_period(static_cast<std::int64_t>(r),
                                         static_cast<std::int64_t>(rows - 1), st.domain());
    else
      tp = TimePoint::absolute(t_a + (t_b - t_a) * (static_cast<double>(r) /
                                                    static_cast<double>(rows - 1)));
    g.t[r] = tp.t;
    const auto w = evaluate_grid(st, tp, g.x, N, EvalParts::psi_only);
    g.rho[r].resize(cols);
    for (std::size_t i = 0; i < cols; ++i) g.rho[r][i] = std::norm(w[i].psi);
  }
  write_carpet_csv(out / "carpet.csv", g, to_string(st.label()), N);
  if (cfg.carpet_binary) write_carpet_binary(out / "carpet.f64", g);
  write_run_json(out, "carpet", cfg, kVersion);
  std::cout << "carpet: " << rows << " x " << cols << " rows(t) x cols(x), N = " << N << "\n";
  return 0;
}

int cmd_trajectories(const CommonArgs& args) {
  RunConfig cfg = load_and_resolve(args);
  const SpectralState st = cfg.build_state();
  const fs::path out(cfg.out_dir);
  if (cfg.x0_list.empty()) throw std::domain_error("trajectories: trajectory.x0 list is empty");
  const double t_a = cfg.t_a;
  const double t_b = cfg.resolve_t_b();

  if (cfg.ladder.size() >= 3) {
    // truncation-ladder limit runs, one per initial position
    const TruncationLadder ladder(cfg.ladder);
    nlohmann::json report = nlohmann::json::array();
    std::vector<Trajectory> all;
    for (double x0 : cfg.x0_list) {
      const LimitTrajectory lim = integrate_limit(st, x0, t_a, t_b, ladder, cfg.integ);
      for (const auto& tr : lim.per_level) all.push_back(tr);
      nlohmann::json e;
      e["x0"] = x0;
      e["levels"] = lim.levels;
      e["deltas"] = lim.deltas;
      e["converged"] = lim.converged;
      report.push_back(e);
    }
    write_trajectories_csv(out / "trajectories.csv", all, to_string(st.label()));
    auto os = detail::open_out(out / "trajectories_limit.json");
    os << report.dump(2) << "\n";
    write_run_json(out, "trajectories", cfg, kVersion);
    std::cout << "trajectories: " << cfg.x0_list.size() << " starts x " << ladder.levels.size()
              << " ladder levels\n";
    return 0;
  }

  const std::size_t N = cfg.resolve_truncation(st);
  const EnsembleRun run = ensemble(st, cfg.x0_list, t_a, t_b, N, cfg.integ);
  write_trajectories_csv(out / "trajectories.csv", run.trajectories, to_string(st.label()));
  write_run_json(out, "trajectories", cfg, kVersion);
  int failures = 0;
  for (std::size_t i = 0; i < run.failures.size(); ++i) {
    if (run.failures[i]) {
      ++failures;
      std::cerr << "trajectory x0 = " << cfg.x0_list[i] << " failed: " << *run.failures[i] << "\n";
    }
  }
  std::cout << "trajectories: " << run.trajectories.size() << " integrated at N = " << N << ", "
            << failures << " failures\n";
  return failures == 0 ? 0 : kExitNumerical;
}

int cmd_profile(const CommonArgs& args) {
  RunConfig cfg = load_and_resolve(args);
  const SpectralState st = cfg.build_state();
  const std::size_t N = cfg.resolve_truncation(st);
  const fs::path out(cfg.out_dir);
  if (cfg.times.empty()) throw std::domain_error("profile: times list is empty");

  const int n_max = st.terms()[N - 1].n;
  std::size_t M = std::max(cfg.grid_min, static_cast<std::size_t>(cfg.grid_per_halfwave) *
                                                 static_cast<std::size_t>(n_max) +
                                             1);
  M |= 1;
  std::vector<double> xs(M);
  for (std::size_t i = 0; i < M; ++i)
    xs[i] = st.domain().L * (static_cast<double>(i) / static_cast<double>(M - 1));

  for (std::size_t k = 0; k < cfg.times.size(); ++k) {
    const TimePoint tp = cfg.times[k].resolve(st.domain());
    const FieldProfile fp = density_phase(st, tp, xs, N);
    write_profile_csv(out / ("profile_" + std::to_string(k) + ".csv"), fp, to_string(st.label()));
  }
  write_run_json(out, "profile", cfg, kVersion);
  std::cout << "profile: " << cfg.times.size() << " times on " << M << " points, N = " << N << "\n";
  return 0;
}

int cmd_energy(const CommonArgs& args) {
  RunConfig cfg = load_and_resolve(args);
  const SpectralState st = cfg.build_state();
  const std::size_t N = cfg.resolve_truncation(st);
  const fs::path out(cfg.out_dir);
  const double t_a = cfg.t_a;
  const double t_b = cfg.resolve_t_b();

  // ensemble-energy table vs truncation: spectral form and quadrature check
  {
    auto os = detail::open_out(out / "ensemble_energy.csv");
    os << "# <H> vs truncation, state: " << to_string(st.label()) << "\n";
    os << "N,E_spectral,E_quadrature\n";
    std::vector<std::size_t> Ns = cfg.ladder;
    if (Ns.empty())
      for (std::size_t k = 1; k <= N; k *= 2) Ns.push_back(k);
    for (std::size_t k : Ns) {
      if (k > st.size()) break;
      os << k << ',' << fmt17(ensemble_energy(st, k)) << ','
         << fmt17(ensemble_energy_quadrature(st, TimePoint::rational_of_period(0, 1, st.domain()),
                                             k))
         << "\n";
    }
  }

  int stalls = 0;
  for (double x0 : cfg.x0_list) {
    Trajectory tr;
    bool partial = false;
    try {
      tr = integrate(st, x0, t_a, t_b, N, cfg.integ);
    } catch (IntegrationStalledError& e) {
      tr = std::move(e.partial);
      partial = true;
      ++stalls;
      std::cerr << "energy: " << e.what() << " (partial trace kept)\n";
    }
    const EnergyTrace et = energy_along(tr, st);
    write_energy_csv(out / ("energy_x0_" + x0_tag(x0) + (partial ? "_partial" : "") + ".csv"), et,
                     to_string(st.label()));
  }
  write_run_json(out, "energy", cfg, kVersion);
  std::cout << "energy: table plus " << cfg.x0_list.size() << " traces, N = " << N << "\n";
  return stalls == 0 ? 0 : kExitNumerical;
}

int cmd_fractal(const CommonArgs& args) {
  RunConfig cfg = load_and_resolve(args);
  const SpectralState st = cfg.build_state();
  const fs::path out(cfg.out_dir);

  LengthFitOptions opts;
  opts.window = cfg.fit_window;
  opts.saturation_slope = cfg.saturation_slope;
  opts.grid_per_halfwave = cfg.grid_per_halfwave;
  opts.grid_min = cfg.grid_min;
  opts.traj_oversample = cfg.traj_oversample;
  opts.integ = cfg.integ;

  if (!cfg.ladder.empty()) {
    const TruncationLadder ladder(cfg.ladder);
    for (std::size_t k = 0; k < cfg.times.size(); ++k) {
      const FractalFit fit = length_scaling_fit(
          st, ladder, DensityTarget{cfg.times[k].resolve(st.domain())}, opts);
      write_fractal_json(out / ("fractal_density_" + std::to_string(k) + ".json"), fit);
      std::cout << "density t#" << k << ": D_f = " << fit.D_f
                << (fit.has_flag("saturated") ? " [saturated]" : "") << "\n";
    }
    for (double x0 : cfg.x0_list) {
      const FractalFit fit = length_scaling_fit(
          st, ladder, TrajectoryTarget{x0, cfg.t_a, cfg.resolve_t_b()}, opts);
      write_fractal_json(out / ("fractal_trajectory_x0_" + x0_tag(x0) + ".json"), fit);
      std::cout << "trajectory x0=" << x0 << ": D_f = " << fit.D_f
                << (fit.has_flag("saturated") ? " [saturated]" : "") << "\n";
    }
  }
  {
    const FractalFit fit = spectrum_dimension(st);
    write_fractal_json(out / "fractal_spectrum.json", fit);
    std::cout << "spectrum: beta = " << fit.beta << ", D_f = " << fit.D_f
              << (fit.has_flag("out-of-regime") ? " [out-of-regime]" : "") << "\n";
  }
  write_run_json(out, "fractal", cfg, kVersion);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral box states, guidance trajectories, fractal dimensions"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "run configuration file")->required();
    sub->add_option("--out", args.out_dir, "output directory (overrides config)");
    sub->add_option("--threads", args.threads, "worker thread count");
  };

  struct SubCmd {
    const char* name;
    const char* help;
    int (*fn)(const CommonArgs&);
  };
  const SubCmd cmds[] = {
      {"build-state", "build a state, write coefficients and a summary", cmd_build_state},
      {"carpet", "density over a (x, t) grid", cmd_carpet},
      {"trajectories", "integrate trajectories (ladder or single truncation)", cmd_trajectories},
      {"profile", "rho, S and Q profiles at listed times", cmd_profile},
      {"energy", "energy traces along trajectories and <H> table", cmd_energy},
      {"fractal", "length-scaling and spectrum dimension fits", cmd_fractal},
  };
  for (const SubCmd& c : cmds) add_common(app.add_subcommand(c.name, c.help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    for (const SubCmd& c : cmds)
      if (app.got_subcommand(c.name)) return c.fn(args);
    std::cerr << "no subcommand\n";
    return kExitUsage;
  } catch (const IntegrationStalledError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NodeSingularityError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}
