#include <catch2/catch_amalgamated.hpp>

#include "qfbox/evaluate.hpp"
#include "qfbox/state.hpp"

using namespace qfbox;
using Catch::Approx;

namespace {

// Quadrature oracle: expansion coefficient of a profile over phi_n.
template <class F>
double coeff_by_quadrature(const BoxDomain& d, int n, F&& profile, std::size_t M = 200001) {
  std::vector<double> integrand(M);
  const double h = d.L / static_cast<double>(M - 1);
  for (std::size_t i = 0; i < M; ++i) {
    const double x = d.L * (static_cast<double>(i) / (M - 1));
    integrand[i] = eigenfunction(d, n, x) * profile(x);
  }
  return simpson_uniform(integrand, h);
}

}  // namespace

TEST_CASE("uniform full-box state keeps only odd modes", "[state]") {
  BoxDomain d;
  auto st = build_uniform(d, 0.0, 1.0, 6);
  REQUIRE(st.size() == 3);
  CHECK(st.terms()[0].n == 1);
  CHECK(st.terms()[1].n == 3);
  CHECK(st.terms()[2].n == 5);
  CHECK(st.coefficient(2) == std::complex<double>{0.0, 0.0});
  // |c_n|^2 = 8 / (pi^2 n^2) for the unit-norm profile
  CHECK(std::norm(st.terms()[0].c) == Approx(8.0 / (kPi * kPi)).epsilon(1e-14));
  CHECK(std::norm(st.terms()[1].c) == Approx(8.0 / (9.0 * kPi * kPi)).epsilon(1e-14));
}

TEST_CASE("uniform coefficients against the quadrature oracle", "[state]") {
  BoxDomain d;
  const double x1 = 0.2, x2 = 0.9;
  auto st = build_uniform(d, x1, x2, 12);
  const double ell = x2 - x1;
  for (int n : {1, 2, 3, 7, 12}) {
    const double oracle = coeff_by_quadrature(
        d, n, [&](double x) { return (x > x1 && x < x2) ? 1.0 / std::sqrt(ell) : 0.0; });
    CHECK(st.coefficient(n).real() == Approx(oracle).margin(2e-5));
  }
}

TEST_CASE("uniform norm conventions", "[state]") {
  BoxDomain d;
  // sum over all odd n of 8/(pi^2 n^2) = 1: the unnormalized full-box state
  // approaches unit norm from below as n_max grows
  auto st = build_uniform(d, 0.0, 1.0, 4095);
  CHECK(st.norm2() < 1.0);
  CHECK(st.norm2() == Approx(1.0).margin(1e-3));
  auto stn = build_uniform(d, 0.0, 1.0, 101, true);
  CHECK(stn.norm2() == Approx(1.0).epsilon(1e-12));
  // |c_1|^2 ~ 0.81057 for the infinite-series normalization
  auto big = build_uniform(d, 0.0, 1.0, 99999);
  CHECK(std::norm(big.terms()[0].c) == Approx(0.81057).margin(1e-5));
}

TEST_CASE("uniform sub-interval symmetry zero", "[state]") {
  BoxDomain d;
  auto st = build_uniform(d, 0.25, 0.75, 4);
  CHECK(st.coefficient(2) == std::complex<double>{0.0, 0.0});  // cos terms cancel exactly
  CHECK(st.coefficient(4) == std::complex<double>{0.0, 0.0});
  CHECK(std::abs(st.coefficient(1)) > 0.0);
  CHECK(std::abs(st.coefficient(3)) > 0.0);
}

TEST_CASE("uniform builder rejects bad arguments", "[state]") {
  BoxDomain d;
  CHECK_THROWS_AS(build_uniform(d, 0.5, 0.5, 8), std::domain_error);
  CHECK_THROWS_AS(build_uniform(d, 0.7, 0.2, 8), std::domain_error);
  CHECK_THROWS_AS(build_uniform(d, 0.0, 1.0, 0), std::domain_error);
  CHECK_THROWS_AS(build_uniform(d, -0.1, 0.5, 8), std::domain_error);
}

TEST_CASE("weierstrass state modes and weights", "[state]") {
  BoxDomain d;
  auto st = build_weierstrass(d, 1.0, 2, 2, false);
  REQUIRE(st.size() == 3);
  CHECK(st.terms()[0].n == 1);
  CHECK(st.terms()[1].n == 2);
  CHECK(st.terms()[2].n == 4);
  CHECK(st.terms()[0].c.real() == Approx(1.0));
  CHECK(st.terms()[1].c.real() == Approx(0.5));    // n^{r(s-2)} = 2^{-r} at s = 1
  CHECK(st.terms()[2].c.real() == Approx(0.25));

  // s -> 2: flat spectrum
  auto flat = build_weierstrass(d, 1.999999, 3, 5, false);
  for (const Term& t : flat.terms()) CHECK(t.c.real() == Approx(1.0).margin(1e-4));

  auto norm = build_weierstrass(d, 0.5, 3, 3, true);
  CHECK(norm.norm2() == Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(build_weierstrass(d, 2.0, 2, 3), std::domain_error);
  CHECK_THROWS_AS(build_weierstrass(d, 0.5, 1, 3), std::domain_error);
  CHECK_THROWS_AS(build_weierstrass(d, 1.0, 2, -1), std::domain_error);
  CHECK_THROWS_WITH(build_weierstrass(d, 1.0, 2, 64), Catch::Matchers::ContainsSubstring("maximum R"));
}

TEST_CASE("triangle and parabola expansions", "[state]") {
  BoxDomain d;
  auto tri = build_triangle(d, 63);
  auto par = build_parabola(d, 63);
  for (const auto& st : {tri, par})
    for (const Term& t : st.terms()) CHECK(t.n % 2 == 1);  // reflection symmetry: odd only

  // closed forms against the quadrature oracle
  for (int n : {1, 3, 7, 15}) {
    const double t_oracle = coeff_by_quadrature(d, n, [&](double x) {
      return std::sqrt(12.0) * std::min(x, 1.0 - x);
    });
    const double p_oracle = coeff_by_quadrature(d, n, [&](double x) {
      return std::sqrt(30.0) * x * (1.0 - x);
    });
    CHECK(tri.coefficient(n).real() == Approx(t_oracle).margin(1e-8));
    CHECK(par.coefficient(n).real() == Approx(p_oracle).margin(1e-8));
  }

  // |c_n|^2 n^4 (triangle) and |c_n|^2 n^6 (parabola) approach constants
  auto tail_ratio = [](const SpectralState& st, int pow) {
    const Term& a = st.terms()[st.size() - 2];
    const Term& b = st.terms()[st.size() - 1];
    return (std::norm(b.c) * std::pow(b.n, pow)) / (std::norm(a.c) * std::pow(a.n, pow));
  };
  CHECK(tail_ratio(tri, 4) == Approx(1.0).epsilon(1e-10));
  CHECK(tail_ratio(par, 6) == Approx(1.0).epsilon(1e-10));

  // both profiles are unit-norm in the full series
  auto tri_big = build_triangle(d, 4095);
  auto par_big = build_parabola(d, 4095);
  CHECK(tri_big.norm2() == Approx(1.0).margin(1e-9));
  CHECK(par_big.norm2() == Approx(1.0).margin(1e-12));
}

TEST_CASE("custom states validate term order", "[state]") {
  BoxDomain d;
  CHECK_THROWS_AS(make_custom_state(d, {{3, {1, 0}}, {2, {1, 0}}}), std::domain_error);
  CHECK_THROWS_AS(make_custom_state(d, {{0, {1, 0}}}), std::domain_error);
  CHECK_THROWS_AS(make_custom_state(d, {}), std::domain_error);
  auto st = make_custom_state(d, {{1, {0.6, 0}}, {4, {0.0, 0.8}}}, true);
  CHECK(st.norm2() == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("prefix norms and node threshold", "[state]") {
  BoxDomain d;
  auto st = build_uniform(d, 0.0, 1.0, 31);  // 16 odd modes
  REQUIRE(st.size() == 16);
  double acc = 0.0;
  for (std::size_t k = 1; k <= st.size(); ++k) {
    acc += std::norm(st.terms()[k - 1].c);
    CHECK(st.norm2(k) == Approx(acc).epsilon(1e-15));
  }
  CHECK(st.node_threshold(16) == Approx(1e-12 * st.norm2(16) * 2.0).epsilon(1e-12));
}
