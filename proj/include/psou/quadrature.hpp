#pragma once

// Globally adaptive 15-point Gauss-Kronrod quadrature (QUADPACK QAG style)
// for real- or complex-valued integrands on a finite interval. The local rule
// comes from Boost.Math; its own recursive driver is not used because in the
// Boost releases we target it compares an unscaled error against a scaled
// tolerance and over-refines at tight tolerances.

#include <algorithm>
#include <cmath>
#include <queue>
#include <type_traits>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace psou {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-12;
  int max_intervals = 2000;
};

template <typename T>
struct QuadratureResult {
  T value{};
  double error = 0.0;
  int intervals = 0;
  bool converged = false;
};

namespace detail {

template <typename T, typename F>
void gk15(F& f, double a, double b, T& value, double& error) {
  using Q = boost::math::quadrature::gauss_kronrod<double, 15>;
  double err = 0.0;
  value = Q::integrate(f, a, b, 0, 0.0, &err);
  error = err * 0.5 * (b - a);
}

}  // namespace detail

template <typename F>
auto integrate_adaptive(F&& f, double a, double b, const QuadratureOptions& opts = {})
    -> QuadratureResult<std::decay_t<decltype(f(a))>> {
  using T = std::decay_t<decltype(f(a))>;
  struct Piece {
    double a, b;
    T value;
    double error;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  QuadratureResult<T> out;
  std::priority_queue<Piece> heap;
  Piece first{a, b, T{}, 0.0};
  detail::gk15(f, a, b, first.value, first.error);
  T total = first.value;
  double total_error = first.error;
  heap.push(first);
  int intervals = 1;
  while (true) {
    const double target = std::max(opts.abs_tol, opts.rel_tol * std::abs(total));
    if (total_error <= target) {
      out.converged = true;
      break;
    }
    if (intervals >= opts.max_intervals) break;
    Piece worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(worst);
      break;
    }
    Piece left{worst.a, mid, T{}, 0.0};
    Piece right{mid, worst.b, T{}, 0.0};
    detail::gk15(f, left.a, left.b, left.value, left.error);
    detail::gk15(f, right.a, right.b, right.value, right.error);
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++intervals;
  }
  // Re-sum to shed accumulated cancellation in the running totals.
  T sum{};
  double err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sum;
  out.error = err;
  out.intervals = intervals;
  if (!out.converged) out.converged = err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(sum));
  return out;
}

}  // namespace psou
