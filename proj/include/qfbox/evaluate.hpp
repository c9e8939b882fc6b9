#pragma once

// Reference evaluation of spectral states:
//   psi(t, x; N)    = sum_{k<N} c_k phi_{n_k}(x) exp(-i E_{n_k} t / hbar)
// together with the exact termwise spatial derivatives (no finite
// differencing anywhere):
//   d/dx   phi_n = sqrt(2/L) (n pi / L) cos(n pi x / L)
//   d2/dx2 phi_n = -(n pi / L)^2 phi_n.
//
// Summation runs over stored terms in ascending mode order through a fixed
// pairwise tree, so a grid evaluation and a single-point evaluation of the
// same point produce identical bits.
//
// For time points carrying a rational fraction p/q of the period T, the
// phase E_n t / hbar = n^2 pi p / (4 q) is reduced mod 2*pi exactly in
// integer arithmetic before any trig call; revivals then hold to rounding
// at every truncation.

#include <complex>
#include <span>
#include <vector>

#include "qfbox/state.hpp"

namespace qfbox {

struct WavefieldSample {
  std::complex<double> psi;
  std::complex<double> dpsi;
  std::complex<double> d2psi;
};

enum class EvalParts { psi_only, full };

namespace detail {

// exp(-i E_n t / hbar) for one mode.
inline std::complex<double> evolution_phase(const BoxDomain& d, const TimePoint& tp,
                                            std::int64_t n) {
  if (tp.fraction_of_T) {
    const std::int64_t p = tp.fraction_of_T->p;
    const std::int64_t q = tp.fraction_of_T->q;
    const std::int64_t m8q = 8 * q;
    std::int64_t pr = p % m8q;
    if (pr < 0) pr += m8q;
    const std::int64_t n2r = (n * n) % m8q;
    const auto prod = static_cast<unsigned __int128>(n2r) * static_cast<unsigned __int128>(pr);
    const auto r = static_cast<std::int64_t>(prod % static_cast<unsigned __int128>(m8q));
    const double theta = (kPi / (4.0 * static_cast<double>(q))) * static_cast<double>(r);
    return {std::cos(theta), -std::sin(theta)};
  }
  const double theta = evolution_theta(d, n, tp.t);
  return {std::cos(theta), -std::sin(theta)};
}

struct PreparedTerm {
  std::int64_t n;
  double kx;                    // n pi / L
  std::complex<double> ce;      // c_n * evolution phase, amplitude folded in
};

inline std::vector<PreparedTerm> prepare_terms(const SpectralState& st, const TimePoint& tp,
                                               std::size_t N) {
  if (N < 1 || N > st.size())
    throw std::out_of_range("evaluate: N must be in [1, stored terms]");
  const BoxDomain& d = st.domain();
  const double amp = std::sqrt(2.0 / d.L);
  std::vector<PreparedTerm> out;
  out.reserve(N);
  for (std::size_t k = 0; k < N; ++k) {
    const Term& t = st.terms()[k];
    const Mode m = make_mode(d, t.n);
    const std::complex<double> ph = evolution_phase(d, tp, t.n);
    out.push_back(PreparedTerm{t.n, m.p / d.hbar, amp * t.c * ph});
  }
  return out;
}

inline WavefieldSample accumulate_point(std::span<const PreparedTerm> terms, double u,
                                        EvalParts parts) {
  PairwiseSum<std::complex<double>> ps, dps, d2ps;
  for (const PreparedTerm& t : terms) {
    const SinCos sc = sincospi_scaled(t.n, u);
    ps.add(t.ce * sc.s);
    if (parts == EvalParts::full) {
      dps.add(t.ce * (t.kx * sc.c));
      d2ps.add(t.ce * (-t.kx * t.kx * sc.s));
    }
  }
  return WavefieldSample{ps.total(), dps.total(), d2ps.total()};
}

inline std::complex<double> gauge_factor(const SpectralState& st, const TimePoint& tp) {
  const double theta = st.global_phase() - st.energy_offset() * tp.t / st.domain().hbar;
  return {std::cos(theta), std::sin(theta)};
}

inline void apply_gauge(const SpectralState& st, const TimePoint& tp, WavefieldSample& s) {
  if (st.global_phase() == 0.0 && st.energy_offset() == 0.0) return;
  const std::complex<double> g = gauge_factor(st, tp);
  s.psi *= g;
  s.dpsi *= g;
  s.d2psi *= g;
}

}  // namespace detail

inline WavefieldSample evaluate(const SpectralState& st, const TimePoint& tp, double x,
                                std::size_t N, EvalParts parts = EvalParts::full) {
  const BoxDomain& d = st.domain();
  if (!(x >= 0.0 && x <= d.L)) throw std::domain_error("evaluate: x outside [0, L]");
  const auto terms = detail::prepare_terms(st, tp, N);
  WavefieldSample s = detail::accumulate_point(terms, x / d.L, parts);
  detail::apply_gauge(st, tp, s);
  return s;
}

inline WavefieldSample evaluate(const SpectralState& st, double t, double x, std::size_t N,
                                EvalParts parts = EvalParts::full) {
  return evaluate(st, TimePoint::absolute(t), x, N, parts);
}

// Batched evaluation over an ascending grid; embarrassingly parallel over
// points, per-point summation order identical to evaluate().
inline std::vector<WavefieldSample> evaluate_grid(const SpectralState& st, const TimePoint& tp,
                                                  std::span<const double> xs, std::size_t N,
                                                  EvalParts parts = EvalParts::full) {
  const BoxDomain& d = st.domain();
  for (double x : xs)
    if (!(x >= 0.0 && x <= d.L)) throw std::domain_error("evaluate_grid: grid outside [0, L]");
  const auto terms = detail::prepare_terms(st, tp, N);
  std::vector<WavefieldSample> out(xs.size());
  const bool gauged = st.global_phase() != 0.0 || st.energy_offset() != 0.0;
  const std::complex<double> g = gauged ? detail::gauge_factor(st, tp) : std::complex<double>{1.0, 0.0};
  parallel_for(xs.size(), 64, [&](std::size_t i) {
    WavefieldSample s = detail::accumulate_point(terms, xs[i] / d.L, parts);
    if (gauged) {
      s.psi *= g;
      s.dpsi *= g;
      s.d2psi *= g;
    }
    out[i] = s;
  });
  return out;
}

// |H psi - i hbar dpsi/dt| evaluated termwise: both sides reduce to
// sum_n E_n c_n phi_n exp(-i E_n t / hbar), computed through their own
// floating-point routes (the kinetic side via the second-derivative factor),
// so the residual measures the termwise identity at rounding level.
inline double schrodinger_residual(const SpectralState& st, const TimePoint& tp, double x,
                                   std::size_t N) {
  const BoxDomain& d = st.domain();
  if (!(x >= 0.0 && x <= d.L)) throw std::domain_error("schrodinger_residual: x outside [0, L]");
  const auto terms = detail::prepare_terms(st, tp, N);
  const double u = x / d.L;
  const double half_h2_over_m = d.hbar * d.hbar / (2.0 * d.m);
  PairwiseSum<std::complex<double>> hside, tside;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const detail::PreparedTerm& t = terms[k];
    const double s = sincospi_scaled(t.n, u).s;
    hside.add(t.ce * (half_h2_over_m * t.kx * t.kx * s));
    tside.add(t.ce * (mode_energy(d, st.terms()[k].n) * s));
  }
  return std::abs(hside.total() - tside.total());
}

inline double schrodinger_residual(const SpectralState& st, double t, double x, std::size_t N) {
  return schrodinger_residual(st, TimePoint::absolute(t), x, N);
}

}  // namespace qfbox
