#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace smfj {

// ---------------------------------------------------------------------------
// Gamma function
// ---------------------------------------------------------------------------

double gamma_real(double x);      // wraps std::tgamma
double log_gamma_real(double x);  // wraps std::lgamma (x > 0)

// 1/Gamma(x), returning exactly 0 at the poles x = 0, -1, -2, ...
double rgamma_real(double x);

// Lanczos approximation (g = 7, 9 terms) with reflection for Re z < 0.5.
// Relative error <= 1e-12 on |Re z| <= 10 away from the poles.
std::complex<double> gamma_complex(std::complex<double> z);

// ---------------------------------------------------------------------------
// Gruenwald-Letnikov weights and Riemann-Liouville derivative
// ---------------------------------------------------------------------------

// omega_0 = 1, omega_k = omega_{k-1} * (1 - (order+1)/k): binomial weights of
// the GL expansion of a derivative of fractional order `order` in (0, 1].
std::vector<double> gl_weights(double order, std::size_t count);

// Weight tables for the two memory operators of the pricing equation; both are
// anchored forms of order 1-beta (time) and H (mixed term).
struct FracWeightTable {
    double order_time  = 0.0;  // 1 - beta
    double order_cross = 0.0;  // H
    std::vector<double> time;
    std::vector<double> cross;
    std::vector<double> time_partial;   // W_m = sum_{k<=m} omega_k^{(time)}
    std::vector<double> cross_partial;  // same for the cross table

    static FracWeightTable make(double beta, double hurst, std::size_t count);
};

// Riemann-Liouville derivative of order `order` in (0,1) of samples f at
// spacing dt, evaluated on the same grid: g[n] = dt^-order * sum omega_k f[n-k].
std::vector<double> rl_derivative_gl(const std::vector<double>& f, double dt, double order);

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature (physicists' weight e^{-x^2})
// ---------------------------------------------------------------------------

// integral f(x) e^{-x^2} dx ~= sum_i weights[i] * f(nodes[i]); exact for
// polynomials of degree <= 2n-1.  Nodes ascending, weights sum to sqrt(pi).
// For Y ~ N(mu, sigma^2): E[g(Y)] ~= (1/sqrt(pi)) sum w_i g(mu + sqrt(2) sigma x_i).
struct GaussHermite {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussHermite gauss_hermite(int n);

// ---------------------------------------------------------------------------
// Mittag-Leffler function E_{alpha,beta}(z)
// ---------------------------------------------------------------------------

// alpha in (0, 2], beta > 0.  Strategy: truncated power series in long double
// with a cancellation guard; outside the series' reliable region, fixed-Talbot
// inversion of L{t^{beta-1} E_{alpha,beta}(z t^alpha)}(s) = s^{alpha-beta}/(s^alpha - z)
// at t = 1, with principal-sheet poles of the transform removed analytically
// and added back as residues.  Absolute accuracy ~1e-9 or better on the
// domain exercised by the tests.
std::complex<double> mittag_leffler(double alpha, double beta, std::complex<double> z);
double mittag_leffler(double alpha, double beta, double z);

}  // namespace smfj
