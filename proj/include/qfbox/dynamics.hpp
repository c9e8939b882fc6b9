#pragma once

// Bohmian dynamics at fixed truncation N and the truncation-ladder limit.
//
// The velocity field is the guidance law
//   v(t, x) = (hbar/m) Im[ dpsi/dx / psi ]   (evaluated on the first N terms)
// and trajectories x_N(t) are integrated with classic RK4 plus step-doubling
// error control. Limit trajectories run the same initial condition up a
// strictly increasing ladder of truncations on a shared output time grid and
// report the sup-norm differences between consecutive levels; convergence is
// declared against a tolerance, never extrapolated.
//
// Hot path: velocity evaluations dominate every budget, so the field kernel
// advances sin(n pi x/L) and exp(-i E_n t/hbar) by complex rotations across
// the (arithmetic) mode progression, restarting from direct trig every
// kBlock terms to pin the recurrence drift at ~kBlock^2 * eps radians.
// States with non-arithmetic mode progressions (lacunary spectra) fall back
// to direct trig per term. Global gauge metadata is skipped by construction:
// space-independent phases cancel in dpsi/psi, so gauged states produce
// bit-identical trajectories.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qfbox/evaluate.hpp"

namespace qfbox {

struct IntegratorOptions {
  double dt_init_frac = 1.0 / 2000.0;  // initial step, fraction of T
  double tol_step = 1e-8;              // per-step position error bound
  double dt_min_frac = 1e-9;           // stall floor, fraction of T
  double dt_max = 0.0;                 // absolute cap; 0 = uncapped
  int samples_per_period = 2048;       // shared output grid density
  bool record_dense = false;           // keep every accepted step
  double eps_wall_frac = 1e-9;         // wall band, fraction of L
  double node_eps_factor = 1e-12;      // scales the node threshold
  double limit_tol_frac = 1e-3;        // ladder convergence, fraction of L
};

struct TrajectorySample {
  double t;
  double x;
  double v;
};

struct DenseSample {
  double t;
  double x;
};

struct Trajectory {
  double x0 = 0.0;
  std::size_t truncation = 0;
  std::vector<TrajectorySample> samples;  // shared uniform output grid
  std::vector<DenseSample> dense;         // accepted steps (record_dense)
  int node_events = 0;
  int wall_events = 0;
};

struct TruncationLadder {
  std::vector<std::size_t> levels;

  explicit TruncationLadder(std::vector<std::size_t> lv) : levels(std::move(lv)) {
    if (levels.size() < 3) throw std::domain_error("TruncationLadder: need at least 3 levels");
    for (std::size_t i = 1; i < levels.size(); ++i)
      if (levels[i] <= levels[i - 1])
        throw std::domain_error("TruncationLadder: levels must be strictly increasing");
  }
};

inline TruncationLadder make_geometric_ladder(std::size_t first, std::size_t factor,
                                              std::size_t count) {
  std::vector<std::size_t> lv;
  std::size_t v = first;
  for (std::size_t i = 0; i < count; ++i, v *= factor) lv.push_back(v);
  return TruncationLadder(std::move(lv));
}

// Default ladder of odd-mode counts for desk-scale limit studies: 2^4..2^13.
inline TruncationLadder default_truncation_ladder() { return make_geometric_ladder(16, 2, 10); }

struct LimitTrajectory {
  std::vector<std::size_t> levels;
  std::vector<Trajectory> per_level;
  std::vector<double> deltas;  // sup_t |x_{N_{k+1}}(t) - x_{N_k}(t)|
  bool converged = false;
  std::vector<TrajectorySample> limit_estimate;  // top-level samples
};

struct NodeSingularityError : std::runtime_error {
  NodeSingularityError(double t_, double x_, double rho_)
      : std::runtime_error("velocity: |psi|^2 = " + std::to_string(rho_) +
                           " at or below the node threshold (t=" + std::to_string(t_) +
                           ", x=" + std::to_string(x_) + ")"),
        t(t_), x(x_), rho(rho_) {}
  double t, x, rho;
};

struct IntegrationStalledError : std::runtime_error {
  IntegrationStalledError(Trajectory partial_, double t_, double x_)
      : std::runtime_error("integration stalled below dt_min at t=" + std::to_string(t_) +
                           ", x=" + std::to_string(x_)),
        partial(std::move(partial_)), t(t_), x(x_) {}
  Trajectory partial;
  double t, x;
};

// Guidance-velocity kernel for a fixed (state, N).
class VelocityField {
 public:
  VelocityField(const SpectralState& st, std::size_t N, double node_eps_factor = 1e-12)
      : L_(st.domain().L), hbar_over_m_(st.domain().hbar / st.domain().m) {
    if (N < 1 || N > st.size())
      throw std::out_of_range("VelocityField: N must be in [1, stored terms]");
    const BoxDomain& d = st.domain();
    const double amp = std::sqrt(2.0 / d.L);
    e1_ = phase_rate_unit(d);
    n_.reserve(N);
    n2_.reserve(N);
    kx_.reserve(N);
    cr_.reserve(N);
    ci_.reserve(N);
    for (std::size_t k = 0; k < N; ++k) {
      const Term& t = st.terms()[k];
      const Mode m = make_mode(d, t.n);
      n_.push_back(t.n);
      n2_.push_back(static_cast<double>(static_cast<std::int64_t>(t.n) * t.n));
      kx_.push_back(m.p / d.hbar);
      cr_.push_back(amp * t.c.real());
      ci_.push_back(amp * t.c.imag());
    }
    arithmetic_ = true;
    if (N >= 2) {
      dn_ = n_[1] - n_[0];
      for (std::size_t k = 2; k < N; ++k)
        if (n_[k] - n_[k - 1] != dn_) {
          arithmetic_ = false;
          break;
        }
    }
    eps_node_ = st.node_threshold(N, node_eps_factor);
    E_max_ = mode_energy(d, st.terms()[N - 1].n);
  }

  std::size_t truncation() const { return n_.size(); }
  double eps_node() const { return eps_node_; }
  double max_energy() const { return E_max_; }

  // rho = |psi|^2 and j = Im(conj(psi) dpsi) at (t, x).
  void eval(double t, double x, double* rho, double* j) const {
    double pr = 0, pi = 0, dr = 0, di = 0;
    if (arithmetic_)
      sums_arithmetic(t, x, pr, pi, dr, di);
    else
      sums_direct(t, x, pr, pi, dr, di);
    *rho = pr * pr + pi * pi;
    *j = di * pr - dr * pi;
  }

  // false when |psi|^2 is at or below the node threshold.
  bool try_velocity(double t, double x, double* v) const {
    double rho, j;
    eval(t, x, &rho, &j);
    if (!(rho > eps_node_)) return false;
    *v = hbar_over_m_ * j / rho;
    return true;
  }

  double velocity_or_throw(double t, double x) const {
    double rho, j;
    eval(t, x, &rho, &j);
    if (!(rho > eps_node_)) throw NodeSingularityError(t, x, rho);
    return hbar_over_m_ * j / rho;
  }

 private:
  static constexpr std::size_t kBlock = 64;

  void sums_direct(double t, double x, double& pr, double& pi, double& dr, double& di) const {
    const double u = x / L_;
    for (std::size_t k = 0; k < n_.size(); ++k) {
      const SinCos sc = sincospi_scaled(n_[k], u);
      const double th = (e1_ * n2_[k]) * t;
      const double fr = std::cos(th), fi = -std::sin(th);
      const double cer = cr_[k] * fr - ci_[k] * fi;
      const double cei = cr_[k] * fi + ci_[k] * fr;
      pr += cer * sc.s;
      pi += cei * sc.s;
      const double dc = kx_[k] * sc.c;
      dr += cer * dc;
      di += cei * dc;
    }
  }

  void sums_arithmetic(double t, double x, double& pr, double& pi, double& dr, double& di) const {
    const double u = x / L_;
    const std::size_t N = n_.size();
    // Spatial rotation exp(i pi dn u) and quadratic-phase second difference
    // exp(-i e1 (2 dn^2) t); both constant across terms. All phase arguments
    // are built as e1 * (exact integer) * t so the only rounding is the final
    // product, never a cancellation of large energies.
    const SinCos w = sincospi_scaled(dn_, u);
    double hr = 1.0, hi = 0.0;
    if (N >= 3) {
      const double a = (e1_ * static_cast<double>(2 * dn_ * dn_)) * t;
      hr = std::cos(a);
      hi = -std::sin(a);
    }
    std::size_t k = 0;
    while (k < N) {
      const std::size_t hi_k = std::min(N, k + kBlock);
      // restart from direct trig
      SinCos sc = sincospi_scaled(n_[k], u);
      const double th = (e1_ * n2_[k]) * t;
      double fr = std::cos(th), fi = -std::sin(th);
      double gr = 1.0, gi = 0.0;
      if (k + 1 < N) {
        const double dth = (e1_ * static_cast<double>(dn_ * (2 * n_[k] + dn_))) * t;
        gr = std::cos(dth);
        gi = -std::sin(dth);
      }
      for (; k < hi_k; ++k) {
        const double cer = cr_[k] * fr - ci_[k] * fi;
        const double cei = cr_[k] * fi + ci_[k] * fr;
        pr += cer * sc.s;
        pi += cei * sc.s;
        const double dc = kx_[k] * sc.c;
        dr += cer * dc;
        di += cei * dc;
        // advance spatial and time phases
        const double ns = sc.s * w.c + sc.c * w.s;
        const double nc = sc.c * w.c - sc.s * w.s;
        sc.s = ns;
        sc.c = nc;
        const double nfr = fr * gr - fi * gi;
        const double nfi = fr * gi + fi * gr;
        fr = nfr;
        fi = nfi;
        const double ngr = gr * hr - gi * hi;
        const double ngi = gr * hi + gi * hr;
        gr = ngr;
        gi = ngi;
      }
    }
  }

  double L_;
  double hbar_over_m_;
  double e1_ = 0.0;
  std::vector<std::int64_t> n_;
  std::vector<double> n2_, kx_, cr_, ci_;
  bool arithmetic_ = true;
  std::int64_t dn_ = 0;
  double eps_node_ = 0.0;
  double E_max_ = 0.0;
};

// Guidance velocity (hbar/m) Im[psi^{-1} dpsi/dx] on the first N terms.
// Throws NodeSingularityError when |psi|^2 is at or below the node threshold.
inline double velocity(const SpectralState& st, double t, double x, std::size_t N,
                       double node_eps_factor = 1e-12) {
  const BoxDomain& d = st.domain();
  if (!(x > 0.0 && x < d.L)) throw std::domain_error("velocity: x must be interior");
  return VelocityField(st, N, node_eps_factor).velocity_or_throw(t, x);
}

namespace detail {

enum class StageStatus { ok, node, wall };

struct StepContext {
  const VelocityField* field;
  double wall_lo, wall_hi;
};

inline StageStatus stage_velocity(const StepContext& c, double t, double x, double* v) {
  if (!(x > c.wall_lo && x < c.wall_hi)) return StageStatus::wall;
  return c.field->try_velocity(t, x, v) ? StageStatus::ok : StageStatus::node;
}

// One classic RK4 step from (t, x) with precomputed k1.
inline StageStatus rk4_step(const StepContext& c, double t, double x, double h, double k1,
                            double* out) {
  double k2, k3, k4;
  StageStatus st = stage_velocity(c, t + 0.5 * h, x + 0.5 * h * k1, &k2);
  if (st != StageStatus::ok) return st;
  st = stage_velocity(c, t + 0.5 * h, x + 0.5 * h * k2, &k3);
  if (st != StageStatus::ok) return st;
  st = stage_velocity(c, t + h, x + h * k3, &k4);
  if (st != StageStatus::ok) return st;
  *out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return StageStatus::ok;
}

}  // namespace detail

// Integrates the guidance equation from x0 over t_span = [t_a, t_b] at fixed
// truncation N. Steps are halved whenever a stage lands at or below the node
// threshold, inside the wall band, or the step-doubling error estimate
// exceeds tol_step; underflow below dt_min raises IntegrationStalledError
// carrying the partial trajectory.
inline Trajectory integrate(const SpectralState& st, double x0, double t_a, double t_b,
                            std::size_t N, const IntegratorOptions& opts = {}) {
  const BoxDomain& d = st.domain();
  if (!(t_a < t_b)) throw std::domain_error("integrate: need t_a < t_b");
  if (!(x0 > 0.0 && x0 < d.L)) throw std::domain_error("integrate: x0 must be interior");

  const double T = period(d);
  const VelocityField field(st, N, opts.node_eps_factor);
  {
    double rho, j;
    field.eval(t_a, x0, &rho, &j);
    if (!(rho > field.eps_node()))
      throw std::domain_error("integrate: x0 sits on a node of the initial density");
  }

  const double eps_wall = opts.eps_wall_frac * d.L;
  const detail::StepContext ctx{&field, eps_wall, d.L - eps_wall};
  const double dt_min = opts.dt_min_frac * T;
  const double dt_max = opts.dt_max > 0.0 ? opts.dt_max : std::numeric_limits<double>::infinity();

  // Shared uniform output grid: spacing <= T / samples_per_period, exact
  // landing on t_b. Identical spans give identical grids at every ladder
  // level, which is what makes sup-norm deltas meaningful.
  const double span = t_b - t_a;
  const std::size_t M = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(span / (T / opts.samples_per_period) - 1e-9)));

  Trajectory traj;
  traj.x0 = x0;
  traj.truncation = N;
  traj.samples.reserve(M + 1);
  auto sample_at = [&](double t, double x) {
    double v = std::numeric_limits<double>::quiet_NaN();
    if (!field.try_velocity(t, x, &v)) ++traj.node_events;
    traj.samples.push_back(TrajectorySample{t, x, v});
  };
  sample_at(t_a, x0);
  if (opts.record_dense) traj.dense.push_back(DenseSample{t_a, x0});

  double x = x0;
  double t = t_a;
  double h = std::min(opts.dt_init_frac * T, dt_max);

  for (std::size_t j = 1; j <= M; ++j) {
    const double t_goal = t_a + span * (static_cast<double>(j) / static_cast<double>(M));
    while (t < t_goal) {
      const double h_land = t_goal - t;
      const double h_try = std::min(h, h_land);
      double k1;
      detail::StageStatus s0 = detail::stage_velocity(ctx, t, x, &k1);
      if (s0 != detail::StageStatus::ok) {
        // the current point itself is inside a guard band; shrink and retry
        // from the last accepted state by taking a reduced step
        (s0 == detail::StageStatus::node) ? ++traj.node_events : ++traj.wall_events;
        throw IntegrationStalledError(std::move(traj), t, x);
      }
      double x_full, x_h1, x_h2;
      detail::StageStatus s = detail::rk4_step(ctx, t, x, h_try, k1, &x_full);
      if (s == detail::StageStatus::ok) s = detail::rk4_step(ctx, t, x, 0.5 * h_try, k1, &x_h1);
      if (s == detail::StageStatus::ok) {
        double k1h;
        s = detail::stage_velocity(ctx, t + 0.5 * h_try, x_h1, &k1h);
        if (s == detail::StageStatus::ok)
          s = detail::rk4_step(ctx, t + 0.5 * h_try, x_h1, 0.5 * h_try, k1h, &x_h2);
      }
      bool accept = false;
      double err = 0.0;
      if (s == detail::StageStatus::ok) {
        if (!(x_h2 > ctx.wall_lo && x_h2 < ctx.wall_hi)) {
          s = detail::StageStatus::wall;
        } else {
          err = std::abs(x_full - x_h2) / 15.0;
          accept = err <= opts.tol_step;
        }
      }
      if (accept) {
        x = x_h2;
        t = (h_try == h_land) ? t_goal : t + h_try;
        if (opts.record_dense) traj.dense.push_back(DenseSample{t, x});
        const double grow =
            err > 0.0 ? std::min(2.0, 0.9 * std::pow(opts.tol_step / err, 0.2)) : 2.0;
        h = std::min(std::max(h_try * grow, dt_min), dt_max);
      } else {
        if (s == detail::StageStatus::node) ++traj.node_events;
        if (s == detail::StageStatus::wall) ++traj.wall_events;
        h = 0.5 * h_try;
        if (h < dt_min) throw IntegrationStalledError(std::move(traj), t, x);
      }
    }
    sample_at(t_goal, x);
  }
  return traj;
}

// Runs integrate() at every ladder level on the shared output grid and
// reports sup-norm differences between consecutive levels. converged is true
// iff the final delta is at or below limit_tol = limit_tol_frac * L; for
// fractal guidance the deltas plateau instead, and the top level stands as
// the working representative of the limit.
inline LimitTrajectory integrate_limit(const SpectralState& st, double x0, double t_a, double t_b,
                                       const TruncationLadder& ladder,
                                       const IntegratorOptions& opts = {}) {
  LimitTrajectory lim;
  lim.levels = ladder.levels;
  lim.per_level.resize(ladder.levels.size());
  std::vector<std::optional<std::string>> errors(ladder.levels.size());
  parallel_for(ladder.levels.size(), 1, [&](std::size_t i) {
    try {
      lim.per_level[i] = integrate(st, x0, t_a, t_b, ladder.levels[i], opts);
    } catch (const std::exception& e) {
      errors[i] = std::string(e.what());
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (errors[i])
      throw std::runtime_error("integrate_limit: level N=" + std::to_string(ladder.levels[i]) +
                               " failed: " + *errors[i]);
  for (std::size_t i = 0; i + 1 < lim.per_level.size(); ++i) {
    const auto& a = lim.per_level[i].samples;
    const auto& b = lim.per_level[i + 1].samples;
    double sup = 0.0;
    for (std::size_t j = 0; j < std::min(a.size(), b.size()); ++j)
      sup = std::max(sup, std::abs(a[j].x - b[j].x));
    lim.deltas.push_back(sup);
  }
  lim.converged = !lim.deltas.empty() &&
                  lim.deltas.back() <= opts.limit_tol_frac * st.domain().L;
  lim.limit_estimate = lim.per_level.back().samples;
  return lim;
}

struct EnsembleRun {
  std::vector<Trajectory> trajectories;               // partial on failure
  std::vector<std::optional<std::string>> failures;   // per-trajectory
};

// Independent integrations from strictly increasing interior starts on a
// shared time grid. Per-trajectory failures are recorded, not fatal.
inline EnsembleRun ensemble(const SpectralState& st, std::span<const double> x0s, double t_a,
                            double t_b, std::size_t N, const IntegratorOptions& opts = {}) {
  for (std::size_t i = 0; i < x0s.size(); ++i) {
    if (!(x0s[i] > 0.0 && x0s[i] < st.domain().L))
      throw std::domain_error("ensemble: initial positions must be interior");
    if (i > 0 && !(x0s[i] > x0s[i - 1]))
      throw std::domain_error("ensemble: initial positions must be strictly increasing");
  }
  EnsembleRun run;
  run.trajectories.resize(x0s.size());
  run.failures.resize(x0s.size());
  parallel_for(x0s.size(), 1, [&](std::size_t i) {
    try {
      run.trajectories[i] = integrate(st, x0s[i], t_a, t_b, N, opts);
    } catch (IntegrationStalledError& e) {
      run.trajectories[i] = std::move(e.partial);
      run.failures[i] = std::string(e.what());
    } catch (const std::exception& e) {
      run.failures[i] = std::string(e.what());
    }
  });
  return run;
}

}  // namespace qfbox
