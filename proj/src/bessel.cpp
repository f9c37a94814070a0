#include "psou/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "psou/error.hpp"
#include "psou/quadrature.hpp"

namespace psou {

namespace {

double log_cosh(double x) {
  const double ax = std::fabs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - std::numbers::ln2;
}

// log of the integrand of e^z K_nu(z) = int_0^inf cosh(nu u) e^{-z (cosh u - 1)} du,
// i.e. the integral over y = e^u written in u.
double log_integrand(double nu, double z, double u) {
  // cosh(u) - 1 = 2 sinh^2(u/2) avoids cancellation near 0.
  const double s = std::sinh(0.5 * u);
  return log_cosh(nu * u) - 2.0 * z * s * s;
}

double peak_location(double nu, double z) {
  const double anu = std::fabs(nu);
  if (anu * anu <= z) return 0.0;
  // g'(u) = nu tanh(nu u) - z sinh(u) is positive near 0 and negative for large u.
  auto slope = [&](double u) { return anu * std::tanh(anu * u) - z * std::sinh(u); };
  double lo = 0.0;
  double hi = std::asinh(anu / z) + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (slope(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double log_bessel_k(double nu, double z) {
  if (!(z > 0.0) || !std::isfinite(z) || !std::isfinite(nu)) {
    throw Error(ErrorCode::kInvalidArgument, "bessel_k: requires finite nu and z > 0");
  }
  const double peak = peak_location(nu, z);
  const double gmax = log_integrand(nu, z, peak);
  constexpr double kDrop = 46.0;  // e^-46 ~ 1e-20 relative to the peak
  double upper = peak + 1.0;
  while (log_integrand(nu, z, upper) > gmax - kDrop) upper = peak + 2.0 * (upper - peak);

  auto f = [&](double u) { return std::exp(log_integrand(nu, z, u) - gmax); };
  QuadratureOptions opts;
  opts.abs_tol = 1e-300;
  opts.rel_tol = 1e-14;
  opts.max_intervals = 4000;
  double total = 0.0;
  bool ok = true;
  if (peak > 0.0) {
    const auto left = integrate_adaptive(f, 0.0, peak, opts);
    total += left.value;
    ok = ok && left.converged;
  }
  const auto right = integrate_adaptive(f, peak, upper, opts);
  total += right.value;
  ok = ok && right.converged;
  if (!ok || !(total > 0.0)) {
    throw Error(ErrorCode::kQuadrature, "bessel_k: quadrature did not converge for nu=" +
                                            std::to_string(nu) + ", z=" + std::to_string(z));
  }
  return gmax + std::log(total) - z;
}

double bessel_k_scaled(double nu, double z) { return std::exp(log_bessel_k(nu, z) + z); }

double bessel_k(double nu, double z) { return std::exp(log_bessel_k(nu, z)); }

MixingMoments make_mixing_moments(double mean, double var) {
  if (!std::isfinite(mean) || !std::isfinite(var) || mean < 0.0 || var < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "mixing moments: need finite mean >= 0 and variance >= 0");
  }
  return MixingMoments{mean, var, var + mean * mean};
}

MixingMoments gig_mixing_moments(double nu, double delta, double alpha) {
  if (!(delta > 0.0) || !(alpha > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gig_mixing_moments: delta and alpha must be > 0");
  }
  if (nu == -0.5) {
    return make_mixing_moments(delta / alpha, delta / (alpha * alpha * alpha));
  }
  const double z = delta * alpha;
  const double lk0 = log_bessel_k(nu, z);
  const double r1 = std::exp(log_bessel_k(nu + 1.0, z) - lk0);
  const double r2 = std::exp(log_bessel_k(nu + 2.0, z) - lk0);
  const double scale = delta / alpha;
  const double mean = scale * r1;
  const double var = scale * scale * (r2 - r1 * r1);
  if (!std::isfinite(mean) || !std::isfinite(var)) {
    throw Error(ErrorCode::kNonFinite, "gig_mixing_moments: Bessel ratio overflow");
  }
  // r2 - r1^2 can round below zero when the law is nearly degenerate.
  return make_mixing_moments(mean, std::max(var, 0.0));
}

double gig_log_density(double nu, double delta, double alpha, double x) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return nu * std::log(alpha / delta) - std::numbers::ln2 - log_bessel_k(nu, delta * alpha) +
         (nu - 1.0) * std::log(x) - 0.5 * (delta * delta / x + alpha * alpha * x);
}

}  // namespace psou
