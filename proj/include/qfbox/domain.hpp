#pragma once

// Physical parameters of the 1-D infinite box and its eigenbasis.
//
// Eigenfunctions use the orthonormal convention phi_n(x) = sqrt(2/L) sin(n pi x / L),
// so norms and energy expectations read directly off expansion coefficients:
//   p_n = n pi hbar / L,   E_n = p_n^2 / (2 m) = n^2 pi^2 hbar^2 / (2 m L^2).
// The density-recurrence period of box superpositions is T = m L^2 / (2 pi hbar),
// and E_n T / hbar = n^2 pi / 4 independently of (L, m, hbar) — the identity the
// exact rational-time phase reduction in evaluate.hpp relies on.

#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "qfbox/mathutil.hpp"

namespace qfbox {

struct BoxDomain {
  double L = 1.0;
  double m = 1.0;
  double hbar = 1.0;

  BoxDomain() = default;
  BoxDomain(double L_, double m_, double hbar_) : L(L_), m(m_), hbar(hbar_) {
    if (!(L > 0.0) || !(m > 0.0) || !(hbar > 0.0))
      throw std::domain_error("BoxDomain: L, m and hbar must all be positive");
  }
};

struct Mode {
  int n;      // quantum number, n >= 1
  double p;   // n pi hbar / L
  double E;   // p^2 / (2 m)
};

inline Mode make_mode(const BoxDomain& d, int n) {
  if (n < 1) throw std::domain_error("make_mode: quantum number must be >= 1");
  const double p = static_cast<double>(n) * kPi * d.hbar / d.L;
  return Mode{n, p, p * p / (2.0 * d.m)};
}

inline double mode_energy(const BoxDomain& d, int n) { return make_mode(d, n).E; }

// E_n / hbar = e1 * n^2 with e1 = pi^2 hbar / (2 m L^2). Evolution phases are
// always formed as (e1 * n^2) * t with n^2 exact in double, so the reference
// and recurrence kernels agree bit-for-bit at recurrence restart points.
inline double phase_rate_unit(const BoxDomain& d) {
  return kPi * kPi * d.hbar / (2.0 * d.m * d.L * d.L);
}

inline double evolution_theta(const BoxDomain& d, std::int64_t n, double t) {
  return phase_rate_unit(d) * static_cast<double>(n * n) * t;
}

inline double period(const BoxDomain& d) { return d.m * d.L * d.L / (2.0 * kPi * d.hbar); }

// phi_n(x) = sqrt(2/L) sin(n pi x / L); exactly zero at both walls.
inline double eigenfunction(const BoxDomain& d, int n, double x) {
  if (n < 1) throw std::domain_error("eigenfunction: quantum number must be >= 1");
  if (!(x >= 0.0 && x <= d.L)) throw std::domain_error("eigenfunction: x outside [0, L]");
  return std::sqrt(2.0 / d.L) * sincospi_scaled(n, x / d.L).s;
}

struct Rational {
  std::int64_t p = 0;
  std::int64_t q = 1;
};

// A point in time, optionally carrying an exact rational fraction of the
// period T. When the fraction is present, evolution phases are reduced mod
// 2*pi in integer arithmetic, which keeps revivals exact at any truncation.
struct TimePoint {
  double t = 0.0;
  std::optional<Rational> fraction_of_T;

  static TimePoint absolute(double t) { return TimePoint{t, std::nullopt}; }

  static TimePoint rational_of_period(std::int64_t p, std::int64_t q, const BoxDomain& d) {
    if (q == 0) throw std::domain_error("TimePoint: zero denominator");
    if (q < 0) {
      p = -p;
      q = -q;
    }
    const std::int64_t g = std::gcd(p < 0 ? -p : p, q);
    if (g > 1) {
      p /= g;
      q /= g;
    }
    if (q > (std::int64_t{1} << 40))
      throw std::domain_error("TimePoint: denominator too large for exact reduction");
    TimePoint tp;
    tp.t = (static_cast<double>(p) / static_cast<double>(q)) * period(d);
    tp.fraction_of_T = Rational{p, q};
    return tp;
  }

  // T / sqrt(2): the irrational fraction used for fractal-profile runs.
  static TimePoint irrational_sqrt2(const BoxDomain& d) {
    return TimePoint{period(d) / std::sqrt(2.0), std::nullopt};
  }
};

}  // namespace qfbox
