#include <catch2/catch_amalgamated.hpp>

#include "qfbox/observables.hpp"

using namespace qfbox;
using Catch::Approx;

namespace {

std::vector<double> uniform_grid(double L, std::size_t M) {
  std::vector<double> xs(M);
  for (std::size_t i = 0; i < M; ++i) xs[i] = L * (static_cast<double>(i) / (M - 1));
  return xs;
}

}  // namespace

TEST_CASE("initial uniform profile: flat density, zero phase", "[observables]") {
  BoxDomain d;
  auto st = build_uniform(d, 0.0, 1.0, 1023);  // 512 odd modes
  const auto xs = uniform_grid(1.0, 2049);
  const auto fp = density_phase(st, TimePoint::rational_of_period(0, 1, d), xs, st.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < 0.2 || xs[i] > 0.8) continue;  // Gibbs wiggles live near the walls
    CHECK(std::abs(fp.rho[i] - 1.0) < 0.02);
    REQUIRE_FALSE(std::isnan(fp.S[i]));
    CHECK(fp.S[i] == 0.0);  // real positive psi: the phase is exactly zero
  }
}

TEST_CASE("half-period revival occupies the middle half of the box", "[observables]") {
  BoxDomain d;
  auto st = build_uniform(d, 0.0, 1.0, 2047);  // 1024 odd modes
  const std::size_t N = st.size();
  const std::size_t M = (8 * 2047 + 1) | 1;
  const auto xs = uniform_grid(1.0, M);
  const auto w = evaluate_grid(st, TimePoint::rational_of_period(1, 2, d), xs, N,
                               EvalParts::psi_only);
  std::vector<double> rho_out(M, 0.0), rho_all(M);
  for (std::size_t i = 0; i < M; ++i) {
    rho_all[i] = std::norm(w[i].psi);
    if (!(xs[i] > 0.25 && xs[i] < 0.75)) rho_out[i] = rho_all[i];
  }
  const double h = 1.0 / static_cast<double>(M - 1);
  const double total = simpson_uniform(rho_all, h);
  const double outside = simpson_uniform(rho_out, h);
  CHECK(outside / total < 0.05);  // mass-fraction criterion on (L/4, 3L/4)
  // interior plateau value is 2/L
  for (std::size_t i = 0; i < M; ++i)
    if (xs[i] > 0.35 && xs[i] < 0.65) CHECK(rho_all[i] == Approx(2.0).margin(0.1));
}

TEST_CASE("stationary mode density", "[observables]") {
  BoxDomain d;
  auto st = make_custom_state(d, {{1, {1.0, 0.0}}});
  const auto xs = uniform_grid(1.0, 257);
  const auto fp = density_phase(st, TimePoint::absolute(0.4), xs, 1);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double s = std::sin(kPi * xs[i]);
    CHECK(fp.rho[i] == Approx(2.0 * s * s).margin(1e-12));
  }
}

TEST_CASE("quantum potential of eigenstates is the eigenvalue", "[observables]") {
  BoxDomain d;
  for (int n : {1, 3}) {
    auto st = make_custom_state(d, {{n, {1.0, 0.0}}});
    const double En = mode_energy(d, n);
    for (double x = 0.05; x < 1.0; x += 0.04) {
      const double s = std::abs(std::sin(n * kPi * x));
      if (s < 0.15) continue;  // keep clear of the eigenstate's own nodes
      const double Q = quantum_potential(st, 0.123, x, 1);
      REQUIRE(Q == Approx(En).epsilon(1e-8));
    }
  }
}

TEST_CASE("quantum potential identity against direct Eq-form differencing", "[observables]") {
  BoxDomain d;
  // smooth two-mode state: Q from analytic derivatives must match
  // -(hbar^2/2m) (sqrt(rho))'' / sqrt(rho) evaluated by finite differences
  auto st = make_custom_state(d, {{1, {0.8, 0.0}}, {3, {0.0, 0.6}}});
  const TimePoint tp = TimePoint::absolute(0.02);
  auto sqrt_rho = [&](double x) {
    return std::sqrt(std::norm(evaluate(st, tp, x, 2, EvalParts::psi_only).psi));
  };
  const double h = 1e-4;
  for (double x : {0.2, 0.37, 0.55, 0.81}) {
    const double r0 = sqrt_rho(x);
    const double lap = (sqrt_rho(x + h) - 2.0 * r0 + sqrt_rho(x - h)) / (h * h);
    const double q_fd = -0.5 * lap / r0;
    const double q_id = quantum_potential(st, tp, x, 2);
    CHECK(q_id == Approx(q_fd).epsilon(1e-5));
  }
}

TEST_CASE("interior energy content stays bounded while <H> diverges", "[observables]") {
  BoxDomain d;
  auto st = build_uniform(d, 0.0, 1.0, 2047);
  const TimePoint t0 = TimePoint::rational_of_period(0, 1, d);
  for (std::size_t K : {std::size_t{64}, std::size_t{256}, std::size_t{1024}}) {
    const int n_top = st.terms()[K - 1].n;
    const std::size_t M = (8 * static_cast<std::size_t>(n_top) + 1) | 1;
    std::vector<double> xs(M), integrand(M);
    for (std::size_t i = 0; i < M; ++i) xs[i] = 0.25 + 0.5 * (static_cast<double>(i) / (M - 1));
    const auto w = evaluate_grid(st, t0, xs, K, EvalParts::full);
    for (std::size_t i = 0; i < M; ++i)
      integrand[i] = -0.5 * (std::conj(w[i].psi) * w[i].d2psi).real();  // rho*Q at t=0 (v=0)
    const double interior = simpson_uniform(integrand, 0.5 / (M - 1));
    CHECK(std::abs(interior) < 2.0);              // bounded, ~2/pi in the limit
    CHECK(ensemble_energy(st, K) == Approx(4.0 * static_cast<double>(K)).margin(1e-9));
  }
}

TEST_CASE("near-wall quantum potential grows without bound in N", "[observables]") {
  BoxDomain d;
  auto st = build_uniform(d, 0.0, 1.0, 8191);
  const TimePoint t0 = TimePoint::rational_of_period(0, 1, d);
  const auto xs = uniform_grid(1.0, 4001);
  double prev = 0.0;
  for (std::size_t K : {std::size_t{256}, std::size_t{1024}, std::size_t{4096}}) {
    double peak = 0.0;
    for (double x = 0.005; x <= 0.03; x += 0.0005) {
      const double q = quantum_potential(st, t0, x, K);
      if (std::isfinite(q)) peak = std::max(peak, std::abs(q));
    }
    CHECK(peak > 2.0 * prev);
    prev = peak;
  }
  (void)xs;
}

TEST_CASE("energy along trajectories", "[observables]") {
  BoxDomain d;
  const double T = period(d);
  IntegratorOptions opts;
  opts.samples_per_period = 256;

  // pinned centre trajectory of the uniform state: K identically zero
  auto st = build_uniform(d, 0.0, 1.0, 127);
  const auto trc = energy_along(integrate(st, 0.5, 0.0, T, st.size(), opts), st);
  for (const auto& s : trc.samples) CHECK(s.K == 0.0);

  // single-mode state: E = Q = E_n, K = 0 along the (constant) path
  auto single = make_custom_state(d, {{1, {1.0, 0.0}}});
  const auto tr1 = energy_along(integrate(single, 0.3, 0.0, T, 1, opts), single);
  for (const auto& s : tr1.samples) {
    CHECK(s.K == 0.0);
    CHECK(s.Q == Approx(mode_energy(d, 1)).epsilon(1e-8));
    CHECK(s.E == s.K + s.V + s.Q);  // identity by construction
  }

  // three lowest odd modes, x0 = 0.3: total energy changes sign along time
  auto st3 = build_uniform(d, 0.0, 1.0, 5);
  REQUIRE(st3.size() == 3);
  const auto tr3 = energy_along(integrate(st3, 0.3, 0.0, T, 3, opts), st3);
  double emin = 1e300, emax = -1e300;
  for (const auto& s : tr3.samples)
    if (std::isfinite(s.E)) {
      emin = std::min(emin, s.E);
      emax = std::max(emax, s.E);
    }
  CHECK(emin < 0.0);
  CHECK(emax > 0.0);
}

TEST_CASE("ensemble energy: spectral form and quadrature cross-check", "[observables]") {
  BoxDomain d;
  auto st = build_uniform(d, 0.0, 1.0, 2047);
  // |c_n|^2 E_n = 4 per odd term in L = m = hbar = 1 units
  for (std::size_t K : {std::size_t{1}, std::size_t{37}, std::size_t{512}})
    CHECK(ensemble_energy(st, K) == Approx(4.0 * static_cast<double>(K)).margin(1e-9));
  auto single = make_custom_state(d, {{1, {1.0, 0.0}}});
  CHECK(ensemble_energy(single, 1) == Approx(kPi * kPi / 2.0).epsilon(1e-14));

  for (std::size_t K : {std::size_t{64}, std::size_t{512}, std::size_t{1024}}) {
    const double spec = ensemble_energy(st, K);
    const double quad =
        ensemble_energy_quadrature(st, TimePoint::rational_of_period(0, 1, d), K);
    CHECK(std::abs(quad - spec) / spec < 0.005);
  }
}

TEST_CASE("recurrence diagnostics", "[observables]") {
  BoxDomain d;
  auto st = build_uniform(d, 0.0, 1.0, 255);  // 128 odd modes
  const std::size_t N = st.size();
  std::vector<TimePoint> times{TimePoint::rational_of_period(1, 2, d),
                               TimePoint::rational_of_period(2, 1, d)};
  const auto rep = recurrence_check(st, N, times, 16);
  CHECK(rep.exact_at_T);
  CHECK(rep.period_sup_diff <= 1e-10);
  CHECK_FALSE(rep.entries[0].recurrent);     // T/2 is a rearranged profile
  CHECK(rep.entries[0].sup_diff > 0.5);
  CHECK(rep.entries[1].recurrent);           // 2T recurs exactly
  CHECK(rep.no_early_recurrence);
  CHECK(rep.scan_min_sup_diff > 1e-3);
}

TEST_CASE("continuity equation holds at second order on a node-free patch", "[observables]") {
  BoxDomain d;
  auto st = build_uniform(d, 0.0, 1.0, 5);  // three odd modes
  const std::size_t N = 3;
  const double T = period(d);
  auto rho_j = [&](double t, double x, double* rho, double* j) {
    const auto w = evaluate(st, TimePoint::absolute(t), x, N);
    *rho = std::norm(w.psi);
    *j = (d.hbar / d.m) * (std::conj(w.psi) * w.dpsi).imag();
  };
  auto residual = [&](double dt, double dx) {
    double worst = 0.0;
    for (double t = 0.1 * T; t <= 0.2 * T; t += 0.02 * T) {
      for (double x = 0.3; x <= 0.45; x += 0.03) {
        double rp, rm, jp, jm, dummy;
        rho_j(t + dt, x, &rp, &dummy);
        rho_j(t - dt, x, &rm, &dummy);
        rho_j(t, x + dx, &dummy, &jp);
        rho_j(t, x - dx, &dummy, &jm);
        worst = std::max(worst, std::abs((rp - rm) / (2 * dt) + (jp - jm) / (2 * dx)));
      }
    }
    return worst;
  };
  const double r0 = residual(0.01 * T, 0.01);
  const double r1 = residual(0.005 * T, 0.005);
  const double r2 = residual(0.0025 * T, 0.0025);
  CHECK(r0 / r1 >= 3.5);
  CHECK(r1 / r2 >= 3.5);
}
