#include "smfj/black_scholes.hpp"

#include <cmath>
#include <stdexcept>

#include "smfj/rng.hpp"  // normal_cdf / normal_pdf

namespace smfj {

namespace {
struct D1D2 {
    double d1, d2;
};
D1D2 d12(double s, double k, double t, double sigma, double r) {
    const double sq = sigma * std::sqrt(t);
    const double d1 = (std::log(s / k) + (r + 0.5 * sigma * sigma) * t) / sq;
    return {d1, d1 - sq};
}
}  // namespace

double bs_call(double s, double k, double t, double sigma, double r) {
    if (t <= 0.0) return s > k ? s - k : 0.0;
    if (sigma <= 0.0) {
        const double fwd = s - k * std::exp(-r * t);
        return fwd > 0.0 ? fwd : 0.0;
    }
    const auto [d1, d2] = d12(s, k, t, sigma, r);
    return s * normal_cdf(d1) - k * std::exp(-r * t) * normal_cdf(d2);
}

double bs_put(double s, double k, double t, double sigma, double r) {
    return bs_call(s, k, t, sigma, r) - s + k * std::exp(-r * t);
}

double bs_delta_call(double s, double k, double t, double sigma, double r) {
    return normal_cdf(d12(s, k, t, sigma, r).d1);
}

double bs_gamma(double s, double k, double t, double sigma, double r) {
    return normal_pdf(d12(s, k, t, sigma, r).d1) / (s * sigma * std::sqrt(t));
}

double bs_vega(double s, double k, double t, double sigma, double r) {
    return s * normal_pdf(d12(s, k, t, sigma, r).d1) * std::sqrt(t);
}

double bs_vanna(double s, double k, double t, double sigma, double r) {
    const auto [d1, d2] = d12(s, k, t, sigma, r);
    return -normal_pdf(d1) * d2 / sigma;
}

double merton_call(double s, double k, double t, double sigma, double r, double lambda,
                   double mu_y, double sigma_y) {
    if (lambda <= 0.0) return bs_call(s, k, t, sigma, r);
    const double kappa = std::exp(mu_y + 0.5 * sigma_y * sigma_y) - 1.0;
    const double lam_p = lambda * (1.0 + kappa);  // intensity under the size-biased mixture
    const double m = lam_p * t;
    double price = 0.0;
    double weight = std::exp(-m);  // Poisson(m) pmf at n = 0
    for (int n = 0; n < 200; ++n) {
        if (n > 0) weight *= m / n;
        if (n > 10 * (1.0 + m) && weight < 1e-18) break;
        const double sig_n = std::sqrt(sigma * sigma + n * sigma_y * sigma_y / t);
        const double r_n = r - lambda * kappa + n * std::log1p(kappa) / t;
        price += weight * bs_call(s, k, t, sig_n, r_n);
    }
    return price;
}

double bs_barrier_down_out_call(double s, double k, double barrier, double t, double sigma,
                                double r) {
    if (s <= barrier) return 0.0;
    if (barrier <= 0.0) return bs_call(s, k, t, sigma, r);
    if (barrier > k)
        throw std::invalid_argument("bs_barrier_down_out_call: requires barrier <= strike");
    const double power = 2.0 * r / (sigma * sigma) - 1.0;
    return bs_call(s, k, t, sigma, r) -
           std::pow(barrier / s, power) * bs_call(barrier * barrier / s, k, t, sigma, r);
}

}  // namespace smfj
