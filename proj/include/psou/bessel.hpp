#pragma once

// Modified Bessel function of the third kind K_nu(z) evaluated from its
// integral representation, and the GIG(nu, delta, alpha) mixing moments built
// on it.

namespace psou {

/// K_nu(z) for z > 0. Returns 0 when the value underflows (see log_bessel_k).
double bessel_k(double nu, double z);
/// log K_nu(z); finite wherever K_nu(z) is positive, including where
/// bessel_k under- or overflows.
double log_bessel_k(double nu, double z);
/// e^z K_nu(z)
double bessel_k_scaled(double nu, double z);

struct MixingMoments {
  double mean_eps = 0.0;
  double var_eps = 0.0;
  double second_moment_eps = 0.0;  // var_eps + mean_eps^2
};

MixingMoments make_mixing_moments(double mean, double var);

/// Mean and variance of GIG(nu, delta, alpha) with density proportional to
/// x^{nu-1} exp(-(delta^2/x + alpha^2 x)/2). nu = -1/2 (inverse Gaussian)
/// uses the closed forms delta/alpha and delta/alpha^3.
MixingMoments gig_mixing_moments(double nu, double delta, double alpha);

/// log of the GIG(nu, delta, alpha) density at x > 0.
double gig_log_density(double nu, double delta, double alpha, double x);

}  // namespace psou
