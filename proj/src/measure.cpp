#include "smfj/measure.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace smfj {

double jump_kappa(double mu_y, double sigma_y) {
    return std::expm1(mu_y + 0.5 * sigma_y * sigma_y);
}

double esscher_eta(double mu_y, double sigma_y) {
    if (sigma_y <= 0.0) {
        if (mu_y == 0.0) return 0.0;  // jumps already mean-one; any tilt works
        throw std::domain_error("esscher_eta: no root when sigmaY = 0 and muY != 0");
    }
    return -mu_y / (sigma_y * sigma_y) - 0.5;
}

TiltedJumps esscher_tilt(const ModelParams& p) {
    TiltedJumps t;
    t.eta = esscher_eta(p.mu_y, p.sigma_y);
    t.sigma_y = p.sigma_y;
    t.mu_y = p.mu_y + t.eta * p.sigma_y * p.sigma_y;
    // E[e^{eta Y}] = exp(eta mu_y + eta^2 sigma_y^2 / 2)
    t.lambda = p.lambda * std::exp(t.eta * p.mu_y + 0.5 * t.eta * t.eta * p.sigma_y * p.sigma_y);
    return t;
}

namespace {
// 8-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 8> kGlX = {-0.9602898564975363, -0.7966664774136267,
                                        -0.5255324099163290, -0.1834346424956498,
                                        0.1834346424956498,  0.5255324099163290,
                                        0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGlW = {0.1012285362903763, 0.2223810344533745,
                                        0.3137066458778873, 0.3626837833783620,
                                        0.3626837833783620, 0.3137066458778873,
                                        0.2223810344533745, 0.1012285362903763};

template <class F>
double gauss8(F&& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < 8; ++i) acc += kGlW[i] * f(c + h * kGlX[i]);
    return acc * h;
}

// Integrate f over [0, T] with panels graded geometrically toward both
// endpoints, so integrable power singularities there converge cleanly.
template <class F>
double integrate_graded(F&& f, double maturity) {
    const int kLevels = 48;
    double acc = 0.0;
    double lo = 0.0, hi = 0.5 * maturity;
    for (int k = 0; k < kLevels; ++k) {
        const double mid = (k + 1 == kLevels) ? 0.0 : hi * 0.5;
        acc += gauss8(f, mid, hi);
        hi = mid;
        if (hi <= lo) break;
    }
    lo = 0.5 * maturity, hi = maturity;
    for (int k = 0; k < kLevels; ++k) {
        const double mid = (k + 1 == kLevels) ? maturity : lo + 0.5 * (hi - lo);
        acc += gauss8(f, lo, mid);
        lo = mid;
        if (lo >= hi) break;
    }
    return acc;
}
}  // namespace

double emm_kernel_integral(double theta_h, double maturity, double hurst) {
    if (theta_h == 0.0) return 0.0;
    const double e = hurst - 0.5;
    auto f = [&](double s) {
        return theta_h * (std::pow(maturity - s, e) - std::pow(s, e));
    };
    return integrate_graded(f, maturity);
}

double emm_drift(const ModelParams& p, double theta0, double theta_h, double maturity) {
    return p.rate + p.lambda * jump_kappa(p.mu_y, p.sigma_y) - p.sigma0 * theta0 -
           p.sigma_h * emm_kernel_integral(theta_h, maturity, p.hurst);
}

}  // namespace smfj
