#pragma once

// Spectral states: a finite list of (mode index, complex coefficient) pairs
// over the box eigenbasis. This is the single representation of every
// wavefunction in the library; truncation means "use the first N stored
// terms", never renormalizing, so a truncation ladder shares one fixed
// coefficient sequence.

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qfbox/domain.hpp"

namespace qfbox {

enum class StateLabel { uniform, weierstrass, triangle, parabola, custom };

inline const char* to_string(StateLabel l) {
  switch (l) {
    case StateLabel::uniform: return "uniform";
    case StateLabel::weierstrass: return "weierstrass";
    case StateLabel::triangle: return "triangle";
    case StateLabel::parabola: return "parabola";
    default: return "custom";
  }
}

struct Term {
  int n;
  std::complex<double> c;
};

class SpectralState {
 public:
  SpectralState(BoxDomain d, std::vector<Term> terms, StateLabel label)
      : domain_(d), terms_(std::move(terms)), label_(label) {
    validate();
    prefix_norm2_.reserve(terms_.size() + 1);
    prefix_norm2_.push_back(0.0);
    for (const Term& t : terms_) prefix_norm2_.push_back(prefix_norm2_.back() + std::norm(t.c));
  }

  const BoxDomain& domain() const { return domain_; }
  const std::vector<Term>& terms() const { return terms_; }
  StateLabel label() const { return label_; }
  std::size_t size() const { return terms_.size(); }

  // sum_{k<N} |c_k|^2 over the first N stored terms.
  double norm2(std::size_t N) const {
    if (N > terms_.size()) throw std::out_of_range("SpectralState::norm2: N out of range");
    return prefix_norm2_[N];
  }
  double norm2() const { return prefix_norm2_.back(); }

  // Coefficient of mode n (0 when the mode is absent).
  std::complex<double> coefficient(int n) const {
    for (const Term& t : terms_)
      if (t.n == n) return t.c;
    return {0.0, 0.0};
  }

  // Density threshold below which a point counts as a node, relative to the
  // mean density of the truncated state.
  double node_threshold(std::size_t N, double factor = 1e-12) const {
    return factor * norm2(N) * (2.0 / domain_.L);
  }

  // Gauge metadata: psi is multiplied by exp(i(theta - dE t / hbar)) at
  // evaluation time. Space-independent, so the velocity field provably does
  // not see it; the trajectory path skips it altogether.
  double global_phase() const { return global_phase_; }
  double energy_offset() const { return energy_offset_; }

  SpectralState with_global_phase(double theta) const {
    SpectralState s = *this;
    s.global_phase_ = theta;
    return s;
  }
  SpectralState with_energy_offset(double dE) const {
    SpectralState s = *this;
    s.energy_offset_ = dE;
    return s;
  }

 private:
  void validate() const {
    if (terms_.empty()) throw std::domain_error("SpectralState: no terms");
    int prev = 0;
    for (const Term& t : terms_) {
      if (t.n < 1) throw std::domain_error("SpectralState: mode index must be >= 1");
      if (t.n <= prev) throw std::domain_error("SpectralState: mode indices must be strictly increasing");
      if (!std::isfinite(t.c.real()) || !std::isfinite(t.c.imag()))
        throw std::domain_error("SpectralState: non-finite coefficient");
      prev = t.n;
    }
  }

  BoxDomain domain_;
  std::vector<Term> terms_;
  StateLabel label_;
  std::vector<double> prefix_norm2_;
  double global_phase_ = 0.0;
  double energy_offset_ = 0.0;
};

namespace detail {
inline void normalize_terms(std::vector<Term>& terms) {
  double n2 = 0.0;
  for (const Term& t : terms) n2 += std::norm(t.c);
  if (n2 <= 0.0) throw std::domain_error("normalize: state has zero norm");
  const double inv = 1.0 / std::sqrt(n2);
  for (Term& t : terms) t.c *= inv;
}
}  // namespace detail

inline SpectralState make_custom_state(const BoxDomain& d, std::vector<Term> terms,
                                       bool normalize = false,
                                       StateLabel label = StateLabel::custom) {
  if (normalize) detail::normalize_terms(terms);
  return SpectralState(d, std::move(terms), label);
}

// State that is uniform (1/sqrt(l)) on (x1, x2) and zero elsewhere, expanded
// over modes n <= n_max. In the orthonormal convention
//   c_n = sqrt(2 L) / (n pi sqrt(l)) * [cos(n pi x1 / L) - cos(n pi x2 / L)].
// Without normalization the coefficients are those of the unit-norm profile,
// so sum |c_n|^2 = 1 only in the n_max -> infinity limit; for the full box
// c_n = 2 sqrt(2) / (pi n) on odd n and |c_n|^2 E_n = 4 hbar^2/(m L^2) per term.
// Structurally zero coefficients (even modes for the full box) are dropped.
inline SpectralState build_uniform(const BoxDomain& d, double x1, double x2, int n_max,
                                   bool normalize = false) {
  if (!(x1 >= 0.0 && x1 < x2 && x2 <= d.L))
    throw std::domain_error("build_uniform: need 0 <= x1 < x2 <= L");
  if (n_max < 1) throw std::domain_error("build_uniform: n_max must be >= 1");
  const double ell = x2 - x1;
  const double u1 = x1 / d.L;
  const double u2 = x2 / d.L;
  const double pref = std::sqrt(2.0 * d.L / ell) / kPi;
  std::vector<Term> terms;
  terms.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    const double delta = sincospi_scaled(n, u1).c - sincospi_scaled(n, u2).c;
    if (delta == 0.0) continue;
    terms.push_back(Term{n, {pref * delta / static_cast<double>(n), 0.0}});
  }
  if (normalize) detail::normalize_terms(terms);
  return SpectralState(d, std::move(terms), StateLabel::uniform);
}

// Weierstrass-type lacunary state: modes n^r for r = 0..R with weights
// n^{r(s-2)}, 0 < s < 2, n >= 2. All weights tend to 1 as s -> 2.
inline SpectralState build_weierstrass(const BoxDomain& d, double s, int n, int R,
                                       bool normalize = true) {
  if (!(s > 0.0 && s < 2.0)) throw std::domain_error("build_weierstrass: need 0 < s < 2");
  if (n < 2) throw std::domain_error("build_weierstrass: need n >= 2");
  if (R < 0) throw std::domain_error("build_weierstrass: need R >= 0");
  constexpr std::int64_t kMaxMode = 0x7fffffff;
  std::vector<Term> terms;
  terms.reserve(static_cast<std::size_t>(R) + 1);
  std::int64_t mode = 1;
  for (int r = 0; r <= R; ++r) {
    if (r > 0) {
      if (mode > kMaxMode / n) {
        const int max_R = static_cast<int>(std::log(static_cast<double>(kMaxMode)) /
                                           std::log(static_cast<double>(n)));
        throw std::range_error("build_weierstrass: n^R overflows mode range; maximum R for n=" +
                               std::to_string(n) + " is " + std::to_string(max_R));
      }
      mode *= n;
    }
    const double w = std::pow(static_cast<double>(n), static_cast<double>(r) * (s - 2.0));
    terms.push_back(Term{static_cast<int>(mode), {w, 0.0}});
  }
  if (normalize) detail::normalize_terms(terms);
  return SpectralState(d, std::move(terms), StateLabel::weierstrass);
}

// Unit-norm triangle profile peaked at L/2, zero at the walls:
//   c_n = 4 sqrt(6) / (pi^2 n^2) * (-1)^{(n-1)/2}, n odd.
// The coefficients are L-independent; sum over all odd n of |c_n|^2 = 1.
inline SpectralState build_triangle(const BoxDomain& d, int n_max) {
  if (n_max < 1) throw std::domain_error("build_triangle: n_max must be >= 1");
  const double pref = 4.0 * std::sqrt(6.0) / (kPi * kPi);
  std::vector<Term> terms;
  for (int n = 1; n <= n_max; n += 2) {
    const double sign = (((n - 1) / 2) % 2 == 0) ? 1.0 : -1.0;
    terms.push_back(Term{n, {sign * pref / (static_cast<double>(n) * n), 0.0}});
  }
  return SpectralState(d, std::move(terms), StateLabel::triangle);
}

// Unit-norm parabola profile proportional to x (L - x):
//   c_n = 8 sqrt(15) / (pi^3 n^3), n odd.
inline SpectralState build_parabola(const BoxDomain& d, int n_max) {
  if (n_max < 1) throw std::domain_error("build_parabola: n_max must be >= 1");
  const double pref = 8.0 * std::sqrt(15.0) / (kPi * kPi * kPi);
  std::vector<Term> terms;
  for (int n = 1; n <= n_max; n += 2) {
    const double nd = static_cast<double>(n);
    terms.push_back(Term{n, {pref / (nd * nd * nd), 0.0}});
  }
  return SpectralState(d, std::move(terms), StateLabel::parabola);
}

}  // namespace qfbox
