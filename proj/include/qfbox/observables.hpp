#pragma once

// Densities, phases, the quantum potential, particle energies along
// trajectories, ensemble energy, and recurrence diagnostics.
//
// Writing psi = sqrt(rho) exp(i S / hbar), the quantum potential
//   Q = -(hbar^2 / 2m) (sqrt(rho))'' / sqrt(rho)
// is computed from analytic derivatives through the identity
//   Q = -(hbar^2 / 2m) [ Re(psi''/psi) + (Im(psi'/psi))^2 ],
// exact wherever rho > 0. Nodes are reported as signed infinities, never
// clipped: the sign carries which way the well opens.

#include <cmath>
#include <limits>
#include <vector>

#include "qfbox/dynamics.hpp"

namespace qfbox {

struct FieldProfile {
  double t = 0.0;
  std::size_t truncation = 0;
  double norm2 = 0.0;            // sum_{k<N} |c_k|^2 of the truncation
  std::vector<double> x;
  std::vector<double> rho;
  std::vector<double> S;         // unwrapped phase; NaN where masked
  std::vector<double> Q;         // +-inf at node-singular points
};

namespace detail {

inline double q_from_sample(const BoxDomain& d, const WavefieldSample& w, double eps_node) {
  const double rho = std::norm(w.psi);
  const double coef = d.hbar * d.hbar / (2.0 * d.m);
  if (rho > eps_node) {
    const std::complex<double> r1 = w.dpsi / w.psi;
    const std::complex<double> r2 = w.d2psi / w.psi;
    return -coef * (r2.real() + r1.imag() * r1.imag());
  }
  // Node: report a signed sentinel, sign taken from the diverging expression
  // evaluated in cleared form (generic nodes open downward).
  const double num = (w.d2psi * std::conj(w.psi)).real() * rho +
                     std::pow((w.dpsi * std::conj(w.psi)).imag(), 2);
  const double sign = (num > 0.0) ? -1.0 : 1.0;
  return sign * std::numeric_limits<double>::infinity();
}

}  // namespace detail

// rho, unwrapped S and Q on a grid. S is hbar * arg(psi) unwrapped left to
// right (jumps folded into (-pi, pi]); points with rho below the node
// threshold are masked with NaN and unwrapping restarts after each gap.
inline FieldProfile density_phase(const SpectralState& st, const TimePoint& tp,
                                  std::span<const double> xs, std::size_t N) {
  const BoxDomain& d = st.domain();
  const auto w = evaluate_grid(st, tp, xs, N, EvalParts::full);
  const double eps_node = st.node_threshold(N);
  FieldProfile fp;
  fp.t = tp.t;
  fp.truncation = N;
  fp.norm2 = st.norm2(N);
  fp.x.assign(xs.begin(), xs.end());
  fp.rho.resize(xs.size());
  fp.S.resize(xs.size());
  fp.Q.resize(xs.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  bool have_prev = false;
  double theta_prev = 0.0;   // principal value at previous unmasked point
  double unwrapped_prev = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double rho = std::norm(w[i].psi);
    fp.rho[i] = rho;
    fp.Q[i] = detail::q_from_sample(d, w[i], eps_node);
    if (!(rho >= eps_node)) {
      fp.S[i] = nan;
      have_prev = false;  // gap: restart unwrapping on the next segment
      continue;
    }
    const double theta = std::atan2(w[i].psi.imag(), w[i].psi.real());
    if (!have_prev) {
      unwrapped_prev = theta;
      have_prev = true;
    } else {
      double delta = theta - theta_prev;
      delta -= 2.0 * kPi * std::floor((delta + kPi) / (2.0 * kPi));
      unwrapped_prev += delta;
    }
    theta_prev = theta;
    fp.S[i] = d.hbar * unwrapped_prev;
  }
  return fp;
}

inline double quantum_potential(const SpectralState& st, const TimePoint& tp, double x,
                                std::size_t N) {
  return detail::q_from_sample(st.domain(), evaluate(st, tp, x, N), st.node_threshold(N));
}

inline double quantum_potential(const SpectralState& st, double t, double x, std::size_t N) {
  return quantum_potential(st, TimePoint::absolute(t), x, N);
}

struct EnergySample {
  double t;
  double x;
  double K;  // (1/2) m v^2
  double Q;  // quantum potential at (t, x)
  double V;  // external potential, identically 0 inside the box
  double E;  // K + V + Q
};

struct EnergyTrace {
  double x0 = 0.0;
  std::size_t truncation = 0;
  std::vector<EnergySample> samples;
};

// Particle energy along a trajectory: E = K + V + Q with V = 0. Node-adjacent
// samples carry the singular Q (and hence E) markers, not numbers.
inline EnergyTrace energy_along(const Trajectory& traj, const SpectralState& st) {
  const BoxDomain& d = st.domain();
  EnergyTrace tr;
  tr.x0 = traj.x0;
  tr.truncation = traj.truncation;
  tr.samples.resize(traj.samples.size());
  parallel_for(traj.samples.size(), 64, [&](std::size_t i) {
    const TrajectorySample& s = traj.samples[i];
    const double K = 0.5 * d.m * s.v * s.v;
    const double Q = quantum_potential(st, TimePoint::absolute(s.t), s.x, traj.truncation);
    tr.samples[i] = EnergySample{s.t, s.x, K, Q, 0.0, K + Q};
  });
  return tr;
}

// <H> in spectral form: sum_{k<N} |c_k|^2 E_{n_k}. Time-independent.
inline double ensemble_energy(const SpectralState& st, std::size_t N) {
  if (N < 1 || N > st.size()) throw std::out_of_range("ensemble_energy: N out of range");
  PairwiseSum<double> acc;
  for (std::size_t k = 0; k < N; ++k)
    acc.add(std::norm(st.terms()[k].c) * mode_energy(st.domain(), st.terms()[k].n));
  return acc.total();
}

// Quadrature cross-check of <H> at time t: integral of
// (hbar^2 / 2m) |dpsi/dx|^2 over the box (equal to the spectral form by
// integration by parts with Dirichlet walls). Composite Simpson on a uniform
// grid with >= pts_per_halfwave points per half-wavelength of the top mode.
inline double ensemble_energy_quadrature(const SpectralState& st, const TimePoint& tp,
                                         std::size_t N, int pts_per_halfwave = 8) {
  if (N < 1 || N > st.size())
    throw std::out_of_range("ensemble_energy_quadrature: N out of range");
  const BoxDomain& d = st.domain();
  const int n_max = st.terms()[N - 1].n;
  std::size_t M = std::max<std::size_t>(1001, static_cast<std::size_t>(pts_per_halfwave) *
                                                  static_cast<std::size_t>(n_max) + 1);
  M |= 1;  // Simpson needs an odd point count
  std::vector<double> xs(M);
  for (std::size_t i = 0; i < M; ++i)
    xs[i] = d.L * (static_cast<double>(i) / static_cast<double>(M - 1));
  const auto w = evaluate_grid(st, tp, xs, N, EvalParts::full);
  std::vector<double> integrand(M);
  const double coef = d.hbar * d.hbar / (2.0 * d.m);
  for (std::size_t i = 0; i < M; ++i) integrand[i] = coef * std::norm(w[i].dpsi);
  return simpson_uniform(integrand, d.L / static_cast<double>(M - 1));
}

struct RecurrenceEntry {
  TimePoint time;
  double sup_diff = 0.0;   // sup_x |rho_t - rho_0| on the reference grid
  bool recurrent = false;  // sup_diff <= recur_tol
};

struct RecurrenceReport {
  std::vector<RecurrenceEntry> entries;
  double period_sup_diff = 0.0;  // at t = T exactly
  bool exact_at_T = false;
  double scan_min_sup_diff = 0.0;  // min over t = j T / scan_divisions, j = 1..div-1
  int scan_argmin_j = 0;
  bool no_early_recurrence = false;
};

// Compares rho_t against rho_0 on a reference grid for the given times, for
// t = T itself, and on a scan of t = j T / scan_divisions looking for any
// earlier recurrence.
inline RecurrenceReport recurrence_check(const SpectralState& st, std::size_t N,
                                         std::span<const TimePoint> times,
                                         int scan_divisions = 64, double recur_tol = 1e-10,
                                         double scan_tol = 1e-3) {
  const BoxDomain& d = st.domain();
  const int n_max = st.terms()[N - 1].n;
  const std::size_t M =
      (std::max<std::size_t>(1001, 8 * static_cast<std::size_t>(n_max) + 1)) | 1;
  std::vector<double> xs(M);
  for (std::size_t i = 0; i < M; ++i)
    xs[i] = d.L * (static_cast<double>(i) / static_cast<double>(M - 1));

  auto rho_at = [&](const TimePoint& tp) {
    const auto w = evaluate_grid(st, tp, xs, N, EvalParts::psi_only);
    std::vector<double> rho(M);
    for (std::size_t i = 0; i < M; ++i) rho[i] = std::norm(w[i].psi);
    return rho;
  };
  const std::vector<double> rho0 = rho_at(TimePoint::rational_of_period(0, 1, d));
  auto sup_against_rho0 = [&](const TimePoint& tp) {
    const std::vector<double> rho = rho_at(tp);
    double sup = 0.0;
    for (std::size_t i = 0; i < M; ++i) sup = std::max(sup, std::abs(rho[i] - rho0[i]));
    return sup;
  };

  RecurrenceReport rep;
  for (const TimePoint& tp : times) {
    const double sup = sup_against_rho0(tp);
    rep.entries.push_back(RecurrenceEntry{tp, sup, sup <= recur_tol});
  }
  rep.period_sup_diff = sup_against_rho0(TimePoint::rational_of_period(1, 1, d));
  rep.exact_at_T = rep.period_sup_diff <= recur_tol;
  rep.scan_min_sup_diff = std::numeric_limits<double>::infinity();
  for (int j = 1; j < scan_divisions; ++j) {
    const double sup = sup_against_rho0(TimePoint::rational_of_period(j, scan_divisions, d));
    if (sup < rep.scan_min_sup_diff) {
      rep.scan_min_sup_diff = sup;
      rep.scan_argmin_j = j;
    }
  }
  rep.no_early_recurrence = rep.scan_min_sup_diff > scan_tol;
  return rep;
}

}  // namespace qfbox
