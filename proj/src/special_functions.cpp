#include "smfj/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "smfj/laplace_inversion.hpp"

namespace smfj {

double gamma_real(double x) { return std::tgamma(x); }
double log_gamma_real(double x) { return std::lgamma(x); }

double rgamma_real(double x) {
    if (x <= 0.0 && x == std::floor(x)) return 0.0;  // poles of Gamma
    if (x > 171.0) return 0.0;                       // Gamma overflows double
    return 1.0 / std::tgamma(x);
}

// ---------------------------------------------------------------------------
// Complex gamma: Lanczos, g = 7, 9 coefficients, reflection for Re z < 0.5.
// ---------------------------------------------------------------------------
std::complex<double> gamma_complex(std::complex<double> z) {
    static const double kCoef[9] = {
        0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
        771.32342877765313,      -176.61502916214059,   12.507343278686905,
        -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
    if (z.real() < 0.5) {
        // Gamma(z) Gamma(1-z) = pi / sin(pi z)
        const std::complex<double> s = std::sin(M_PI * z);
        return M_PI / (s * gamma_complex(1.0 - z));
    }
    const std::complex<double> zm1 = z - 1.0;
    std::complex<double> x(kCoef[0], 0.0);
    for (int i = 1; i < 9; ++i) x += kCoef[i] / (zm1 + static_cast<double>(i));
    const std::complex<double> t = zm1 + 7.5;
    return 2.5066282746310005 * std::pow(t, zm1 + 0.5) * std::exp(-t) * x;
}

// ---------------------------------------------------------------------------
// Gruenwald-Letnikov machinery
// ---------------------------------------------------------------------------
std::vector<double> gl_weights(double order, std::size_t count) {
    std::vector<double> w(count);
    if (count == 0) return w;
    w[0] = 1.0;
    for (std::size_t k = 1; k < count; ++k)
        w[k] = w[k - 1] * (1.0 - (order + 1.0) / static_cast<double>(k));
    return w;
}

FracWeightTable FracWeightTable::make(double beta, double hurst, std::size_t count) {
    FracWeightTable t;
    t.order_time = 1.0 - beta;
    t.order_cross = hurst;
    t.time = gl_weights(t.order_time, count);
    t.cross = gl_weights(t.order_cross, count);
    auto partials = [](const std::vector<double>& w) {
        std::vector<double> p(w.size());
        double acc = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) {
            acc += w[k];
            p[k] = acc;
        }
        return p;
    };
    t.time_partial = partials(t.time);
    t.cross_partial = partials(t.cross);
    return t;
}

std::vector<double> rl_derivative_gl(const std::vector<double>& f, double dt, double order) {
    const std::size_t n = f.size();
    const std::vector<double> w = gl_weights(order, n);
    const double scale = std::pow(dt, -order);
    std::vector<double> g(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        long double acc = 0.0L;
        for (std::size_t k = 0; k <= i; ++k) acc += static_cast<long double>(w[k]) * f[i - k];
        g[i] = scale * static_cast<double>(acc);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Mittag-Leffler
// ---------------------------------------------------------------------------
namespace {

// Power series sum_k z^k / Gamma(alpha k + beta) in long double with a
// cancellation guard; returns false when round-off would exceed ~0.3*tol.
bool ml_series(double alpha, double beta, std::complex<double> z, double tol,
               std::complex<double>& out) {
    const long double az = std::abs(std::complex<long double>(z));
    if (az == 0.0L) {
        out = std::complex<double>(rgamma_real(beta), 0.0);
        return true;
    }
    const long double lz = std::log(az);
    const long double ph = std::arg(std::complex<long double>(z));
    long double acc_re = 0.0L, acc_im = 0.0L;
    long double max_term = 0.0L, max_acc = 0.0L;
    long double prev_mag = 0.0L;
    constexpr int kMaxTerms = 2000;
    for (int k = 0; k < kMaxTerms; ++k) {
        const long double g = static_cast<long double>(alpha) * k + beta;
        const long double lmag = k * lz - std::lgamma(static_cast<double>(g));
        if (lmag > 11000.0L) return false;  // would overflow long double
        const long double mag = std::exp(lmag);
        const long double ang = k * ph;
        acc_re += mag * std::cos(ang);
        acc_im += mag * std::sin(ang);
        max_term = std::max(max_term, mag);
        max_acc = std::max(max_acc, std::hypot(acc_re, acc_im));
        const bool descending = k > 0 && mag < prev_mag;
        prev_mag = mag;
        if (descending && mag < 0.05L * tol) {
            const long double round_off =
                1.1e-19L * (k + 1.0L) * std::max(max_term, max_acc);
            if (round_off > 0.3L * tol) return false;
            out = {static_cast<double>(acc_re), static_cast<double>(acc_im)};
            return true;
        }
    }
    return false;
}

// Laplace route: L{ t^{beta-1} E_{alpha,beta}(z t^alpha) }(s) = s^{alpha-beta} / (s^alpha - z),
// inverted at t = 1 on a fixed Talbot contour.  Principal-sheet poles
// s_p = |z|^{1/alpha} exp(i (Arg z + 2 pi k)/alpha), |arg s_p| < pi, are removed
// from the transform and restored as residues (1/alpha) s_p^{1-beta} exp(s_p).
std::complex<double> ml_talbot(double alpha, double beta, std::complex<double> z) {
    const double az = std::abs(z);
    const double ph = std::arg(z);
    std::vector<std::complex<double>> poles;
    std::vector<std::complex<double>> residues;
    std::complex<double> pole_part(0.0, 0.0);
    for (int k = -1; k <= 1; ++k) {
        const double phi = (ph + 2.0 * M_PI * k) / alpha;
        if (std::abs(phi) < M_PI - 1e-10) {
            const std::complex<double> sp = std::polar(std::pow(az, 1.0 / alpha), phi);
            if (sp.real() > 700.0)
                throw std::overflow_error("mittag_leffler: exponential part overflows");
            const std::complex<double> rho = std::pow(sp, 1.0 - beta) / alpha;
            poles.push_back(sp);
            residues.push_back(rho);
            pole_part += rho * std::exp(sp);
        }
    }
    auto fhat = [&](std::complex<double> s) {
        std::complex<double> v = std::pow(s, alpha - beta) / (std::pow(s, alpha) - z);
        for (std::size_t i = 0; i < poles.size(); ++i) v -= residues[i] / (s - poles[i]);
        return v;
    };
    return talbot_inverse(fhat, 1.0, 48) + pole_part;
}

}  // namespace

std::complex<double> mittag_leffler(double alpha, double beta, std::complex<double> z) {
    if (!(alpha > 0.0) || alpha > 2.0) throw std::invalid_argument("mittag_leffler: alpha must lie in (0, 2]");
    if (!(beta > 0.0)) throw std::invalid_argument("mittag_leffler: beta must be positive");
    if (alpha == 1.0 && beta == 1.0) return std::exp(z);
    std::complex<double> out;
    if (ml_series(alpha, beta, z, 1e-10, out)) return out;
    return ml_talbot(alpha, beta, z);
}

double mittag_leffler(double alpha, double beta, double z) {
    return mittag_leffler(alpha, beta, std::complex<double>(z, 0.0)).real();
}


GaussHermite gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
    GaussHermite q;
    q.nodes.assign(static_cast<std::size_t>(n), 0.0);
    q.weights.assign(static_cast<std::size_t>(n), 0.0);
    // Newton iteration on the orthonormal Hermite recurrence; roots found for
    // the upper half and mirrored (the rule is symmetric about 0).
    const int half = (n + 1) / 2;
    const double quarter_pi = std::pow(M_PI, -0.25);
    double z = 0.0;
    for (int i = 0; i < half; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * q.nodes[static_cast<std::size_t>(n - 1)];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * q.nodes[static_cast<std::size_t>(n - 2)];
        } else {
            z = 2.0 * z - q.nodes[static_cast<std::size_t>(n - i + 1)];
        }
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = quarter_pi;
            double p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::fabs(dz) <= 1e-15 * std::max(1.0, std::fabs(z))) break;
        }
        // store descending positive roots at the top end; mirror to the bottom
        q.nodes[static_cast<std::size_t>(n - 1 - i)] = z;
        q.nodes[static_cast<std::size_t>(i)] = -z;
        q.weights[static_cast<std::size_t>(n - 1 - i)] = 2.0 / (pp * pp);
        q.weights[static_cast<std::size_t>(i)] = 2.0 / (pp * pp);
    }
    if (n % 2 == 1) q.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return q;
}

}  // namespace smfj
