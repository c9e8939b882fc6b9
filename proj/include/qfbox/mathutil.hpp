#pragma once

// Small numerical utilities shared across the library: trig on the
// half-period lattice, deterministic pairwise summation, composite Simpson
// quadrature, ordinary least squares on log-log data, and a block-chunked
// parallel_for.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

namespace qfbox {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

struct SinCos {
  double s;
  double c;
};

// sin(pi*n*u) and cos(pi*n*u) with exact integer reduction of n*u.
// Zeros at integer and half-integer lattice points are exact, which keeps
// psi(0) = psi(L) = 0 and dpsi(L/2) = 0 (odd modes) exact downstream.
inline SinCos sincospi_scaled(std::int64_t n, double u) {
  const double nd = static_cast<double>(n);
  const double prod = nd * u;
  const double tail = std::fma(nd, u, -prod);  // exact product correction
  double k = std::nearbyint(prod);
  double f = (prod - k) + tail;
  if (f > 0.5) {
    f -= 1.0;
    k += 1.0;
  } else if (f < -0.5) {
    f += 1.0;
    k -= 1.0;
  }
  double s, c;
  if (f == 0.0) {
    s = 0.0;
    c = 1.0;
  } else if (f == 0.5) {
    s = 1.0;
    c = 0.0;
  } else if (f == -0.5) {
    s = -1.0;
    c = 0.0;
  } else {
    s = std::sin(kPi * f);
    c = std::cos(kPi * f);
  }
  return (std::fmod(k, 2.0) != 0.0) ? SinCos{-s, -c} : SinCos{s, c};
}

inline SinCos sincospi(double u) { return sincospi_scaled(1, u); }
inline double sinpi(double u) { return sincospi(u).s; }
inline double cospi(double u) { return sincospi(u).c; }

// Deterministic pairwise (binary-counter) summation. Given a fixed insertion
// order the reduction tree, and therefore the rounded result, is fixed.
template <class T>
class PairwiseSum {
 public:
  void add(T v) {
    std::uint32_t c = count_;
    int lvl = 0;
    while (c & 1u) {
      v = levels_[static_cast<std::size_t>(lvl)] + v;
      c >>= 1;
      ++lvl;
    }
    levels_[static_cast<std::size_t>(lvl)] = v;
    ++count_;
  }

  T total() const {
    T acc{};
    std::uint32_t c = count_;
    for (int lvl = 0; c != 0; ++lvl, c >>= 1) {
      if (c & 1u) acc += levels_[static_cast<std::size_t>(lvl)];
    }
    return acc;
  }

  std::uint32_t count() const { return count_; }

 private:
  std::array<T, 32> levels_{};
  std::uint32_t count_ = 0;
};

// Composite Simpson rule on a uniform grid; requires an odd point count.
inline double simpson_uniform(std::span<const double> y, double h) {
  const std::size_t m = y.size();
  if (m < 3 || (m % 2) == 0)
    throw std::invalid_argument("simpson_uniform: need an odd point count >= 3");
  PairwiseSum<double> odd, even;
  for (std::size_t i = 1; i + 1 < m; i += 2) odd.add(y[i]);
  for (std::size_t i = 2; i + 1 < m; i += 2) even.add(y[i]);
  return (h / 3.0) * (y[0] + y[m - 1] + 4.0 * odd.total() + 2.0 * even.total());
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
};

inline LinearFit ols_fit(std::span<const double> x, std::span<const double> y) {
  const std::size_t m = x.size();
  if (m != y.size() || m < 2) throw std::invalid_argument("ols_fit: need >= 2 matched points");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / static_cast<double>(m);
  const double my = sy / static_cast<double>(m);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("ols_fit: degenerate abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (m > 2) {
    double ss = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = y[i] - (f.intercept + f.slope * x[i]);
      ss += r * r;
    }
    f.stderr_slope = std::sqrt(ss / (static_cast<double>(m - 2) * sxx));
  }
  return f;
}

namespace detail {
inline std::atomic<int>& max_threads_slot() {
  static std::atomic<int> v{0};  // 0 = hardware concurrency
  return v;
}
}  // namespace detail

inline void set_max_threads(int n) { detail::max_threads_slot().store(n); }

inline int max_threads() {
  int n = detail::max_threads_slot().load();
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, n);
}

// Runs fn(i) for i in [0, n). Work is handed out in contiguous chunks; each
// index is processed exactly once and writes only its own outputs, so results
// do not depend on the schedule.
template <class F>
void parallel_for(std::size_t n, std::size_t chunk, F&& fn, int threads = 0) {
  if (n == 0) return;
  int nt = threads > 0 ? threads : max_threads();
  nt = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(nt), (n + chunk - 1) / chunk));
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t lo = next.fetch_add(chunk);
      if (lo >= n || failed.load(std::memory_order_relaxed)) return;
      const std::size_t hi = std::min(n, lo + chunk);
      for (std::size_t i = lo; i < hi; ++i) {
        try {
          fn(i);
        } catch (...) {
          bool expected = false;
          if (failed.compare_exchange_strong(expected, true)) first_error = std::current_exception();
          return;
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(nt - 1));
  for (int k = 1; k < nt; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failed.load() && first_error) std::rethrow_exception(first_error);
}

}  // namespace qfbox
