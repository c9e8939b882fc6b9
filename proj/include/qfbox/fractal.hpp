#pragma once

// Fractal-dimension estimation.
//
// Length method: the polyline length L(N) of a target curve (a density
// profile at fixed time, or a trajectory x(t)) is measured at every level of
// a truncation ladder on a grid resolving that level, and the log-log slope
// over the fit window gives D_f = 1 + slope — a straight line there is the
// signature L(N) ~ N^{D_f - 1} of a fractal limit, while regular targets
// flatten out (saturate).
//
// Spectrum method: a state whose power spectrum decays as |c_n|^2 ~ n^{-beta}
// with 1 < beta <= 3 has fractal profiles of dimension D_f = (5 - beta)/2;
// beta is fitted from log |c_n|^2 against log n over the nonzero modes.

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "qfbox/observables.hpp"

namespace qfbox {

// Polyline length sum sqrt(dx^2 + dy^2); x and y are treated as raw
// coordinates (mixed units are the caller's choice of plane).
inline double curve_length(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("curve_length: need >= 2 matched points");
  PairwiseSum<double> acc;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i]) || !std::isfinite(x[i - 1]) ||
        !std::isfinite(y[i - 1]))
      throw std::invalid_argument("curve_length: non-finite input");
    acc.add(std::hypot(x[i] - x[i - 1], y[i] - y[i - 1]));
  }
  return acc.total();
}

struct FitWindow {
  std::size_t lo = 0;  // inclusive index into the ladder
  std::size_t hi = 0;  // exclusive
};

struct FractalFit {
  std::string method;                 // "length" | "spectrum"
  std::vector<std::size_t> N_values;  // ladder levels (length) or mode indices (spectrum)
  std::vector<double> lengths;        // L(N) (length) or |c_n|^2 (spectrum)
  FitWindow fit_window;
  double slope = 0.0;
  double stderr_slope = 0.0;
  double D_f = 0.0;
  double beta = std::numeric_limits<double>::quiet_NaN();  // spectrum only
  std::vector<std::string> flags;

  bool has_flag(const std::string& f) const {
    for (const auto& g : flags)
      if (g == f) return true;
    return false;
  }
};

struct DensityTarget {
  TimePoint t;
};

struct TrajectoryTarget {
  double x0 = 0.25;
  double t_a = 0.0;
  double t_b = -1.0;  // < 0: one period
};

using LengthTarget = std::variant<DensityTarget, TrajectoryTarget>;

struct LengthFitOptions {
  std::optional<FitWindow> window;      // default: upper half of the ladder
  double saturation_slope = 0.05;       // flag threshold on the fitted slope
  int grid_per_halfwave = 8;            // density x-grid rule factor
  std::size_t grid_min = 1001;
  int traj_oversample = 4;              // trajectory samples per fastest period
  bool grid_sufficiency_check = true;   // double the top-level grid, compare
  IntegratorOptions integ;              // for trajectory targets
};

struct SpectrumFitOptions {
  std::size_t min_modes = 16;
};

namespace detail {

inline FitWindow default_window(std::size_t levels, const std::optional<FitWindow>& user) {
  if (user) {
    if (user->lo >= user->hi || user->hi > levels)
      throw std::invalid_argument("fit window out of range");
    return *user;
  }
  return FitWindow{levels / 2, levels};
}

inline std::vector<double> uniform_grid(double L, std::size_t M) {
  std::vector<double> xs(M);
  for (std::size_t i = 0; i < M; ++i)
    xs[i] = L * (static_cast<double>(i) / static_cast<double>(M - 1));
  return xs;
}

inline double density_length(const SpectralState& st, const TimePoint& tp, std::size_t N,
                             const LengthFitOptions& opts, std::size_t grid_scale) {
  const int n_max = st.terms()[N - 1].n;
  std::size_t M = std::max<std::size_t>(
      opts.grid_min, grid_scale * static_cast<std::size_t>(opts.grid_per_halfwave) *
                             static_cast<std::size_t>(n_max) +
                         1);
  M |= 1;
  const auto xs = uniform_grid(st.domain().L, M);
  const auto w = evaluate_grid(st, tp, xs, N, EvalParts::psi_only);
  std::vector<double> rho(M);
  for (std::size_t i = 0; i < M; ++i) rho[i] = std::norm(w[i].psi);
  return curve_length(xs, rho);
}

// Trajectory curve length on the (t/T, x/L) plane, measured on the dense
// accepted-step record. The step cap (2 pi / E_max) / oversample guarantees
// the level's fastest interference oscillation is resolved; error control
// still shrinks steps further near nodes.
inline double trajectory_length(const SpectralState& st, const TrajectoryTarget& tgt,
                                std::size_t N, const LengthFitOptions& opts) {
  const double T = period(st.domain());
  const double t_b = tgt.t_b < 0.0 ? tgt.t_a + T : tgt.t_b;
  IntegratorOptions io = opts.integ;
  io.record_dense = true;
  const double E_top = mode_energy(st.domain(), st.terms()[N - 1].n);
  io.dt_max = (2.0 * kPi / E_top) / static_cast<double>(opts.traj_oversample);
  const Trajectory tr = integrate(st, tgt.x0, tgt.t_a, t_b, N, io);
  std::vector<double> ts(tr.dense.size()), xs(tr.dense.size());
  for (std::size_t i = 0; i < tr.dense.size(); ++i) {
    ts[i] = tr.dense[i].t / T;
    xs[i] = tr.dense[i].x / st.domain().L;
  }
  return curve_length(ts, xs);
}

}  // namespace detail

// L(N) across the ladder for the given target, log10-log10 OLS over the fit
// window, D_f = 1 + slope. Saturated targets (slope below the threshold) are
// flagged, not errors. The grid-sufficiency check doubles the top level's
// grid and flags "under-resolved" when the length moves by more than 1%.
inline FractalFit length_scaling_fit(const SpectralState& st, const TruncationLadder& ladder,
                                     const LengthTarget& target,
                                     const LengthFitOptions& opts = {}) {
  const std::size_t levels = ladder.levels.size();
  if (levels < 4) throw std::invalid_argument("length_scaling_fit: need >= 4 ladder levels");
  for (std::size_t N : ladder.levels)
    if (N > st.size())
      throw std::out_of_range("length_scaling_fit: ladder exceeds stored terms");

  FractalFit fit;
  fit.method = "length";
  fit.N_values = ladder.levels;
  fit.lengths.resize(levels);

  const bool is_density = std::holds_alternative<DensityTarget>(target);
  parallel_for(levels, 1, [&](std::size_t i) {
    const std::size_t N = ladder.levels[i];
    fit.lengths[i] = is_density
                         ? detail::density_length(st, std::get<DensityTarget>(target).t, N, opts, 1)
                         : detail::trajectory_length(st, std::get<TrajectoryTarget>(target), N, opts);
  });

  fit.fit_window = detail::default_window(levels, opts.window);
  std::vector<double> lx, ly;
  for (std::size_t i = fit.fit_window.lo; i < fit.fit_window.hi; ++i) {
    lx.push_back(std::log10(static_cast<double>(ladder.levels[i])));
    ly.push_back(std::log10(fit.lengths[i]));
  }
  const LinearFit lf = ols_fit(lx, ly);
  fit.slope = lf.slope;
  fit.stderr_slope = lf.stderr_slope;
  fit.D_f = 1.0 + lf.slope;
  if (lf.slope < opts.saturation_slope) fit.flags.push_back("saturated");

  for (std::size_t i = 1; i < levels; ++i)
    if (fit.lengths[i] < 0.99 * fit.lengths[i - 1]) {
      fit.flags.push_back("non-monotone");
      break;
    }
  if (is_density && opts.grid_sufficiency_check) {
    const double l2 = detail::density_length(st, std::get<DensityTarget>(target).t,
                                             ladder.levels.back(), opts, 2);
    if (std::abs(l2 - fit.lengths.back()) > 0.01 * fit.lengths.back())
      fit.flags.push_back("under-resolved");
  }
  return fit;
}

// beta from log |c_n|^2 vs log n over the nonzero modes; D_f = (5 - beta)/2,
// valid for 1 < beta <= 3 and flagged "out-of-regime" otherwise.
inline FractalFit spectrum_dimension(const SpectralState& st, const SpectrumFitOptions& opts = {}) {
  FractalFit fit;
  fit.method = "spectrum";
  std::vector<double> lx, ly;
  for (const Term& t : st.terms()) {
    const double a2 = std::norm(t.c);
    if (a2 <= 0.0) continue;
    fit.N_values.push_back(static_cast<std::size_t>(t.n));
    fit.lengths.push_back(a2);
    lx.push_back(std::log10(static_cast<double>(t.n)));
    ly.push_back(std::log10(a2));
  }
  if (fit.N_values.size() < opts.min_modes)
    throw std::invalid_argument("spectrum_dimension: fewer nonzero modes than the fit minimum");
  fit.fit_window = FitWindow{0, fit.N_values.size()};
  const LinearFit lf = ols_fit(lx, ly);
  fit.slope = lf.slope;
  fit.stderr_slope = lf.stderr_slope;
  fit.beta = -lf.slope;
  fit.D_f = (5.0 - fit.beta) / 2.0;
  if (!(fit.beta > 1.0 && fit.beta <= 3.0)) fit.flags.push_back("out-of-regime");
  return fit;
}

}  // namespace qfbox
