#pragma once

namespace smfj {

// Closed-form references used as limit oracles and as the Monte-Carlo control
// variate mean.  All rates are continuously compounded; no dividends.

double bs_call(double spot, double strike, double maturity, double sigma, double rate);
double bs_put(double spot, double strike, double maturity, double sigma, double rate);

double bs_delta_call(double spot, double strike, double maturity, double sigma, double rate);
double bs_gamma(double spot, double strike, double maturity, double sigma, double rate);
double bs_vega(double spot, double strike, double maturity, double sigma, double rate);
// d(delta)/d(sigma) = -phi(d1) * d2 / sigma
double bs_vanna(double spot, double strike, double maturity, double sigma, double rate);

// Jump-diffusion European call: Poisson mixture over jump counts with
// lognormal N(mu_y, sigma_y^2) jump sizes, intensity lambda, compensated drift.
double merton_call(double spot, double strike, double maturity, double sigma, double rate,
                   double lambda, double mu_y, double sigma_y);

// Down-and-out call under geometric Brownian motion, continuous monitoring,
// barrier <= min(spot, strike):  C_do(S) = C(S) - (B/S)^(2r/sigma^2 - 1) C(B^2/S).
double bs_barrier_down_out_call(double spot, double strike, double barrier, double maturity,
                                double sigma, double rate);

}  // namespace smfj
