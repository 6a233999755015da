#pragma once

#include <cmath>
#include <complex>
#include <vector>

namespace smfj {

// Fixed-Talbot contour for numerical Laplace inversion:
//   s(theta) = r * theta * (cot(theta) + i),   r = 2*n/(5*t),   theta in (-pi, pi).
// Trapezoid discretisation theta_k = k*pi/n gives
//   f(t) ~= sum_k w_k * exp(s_k * t) * fhat(s_k),   w_k = (r/(2n)) * (1 + i*sigma_k),
// with sigma(theta) = theta + (theta*cot(theta) - 1)*cot(theta); equivalently
// sigma = theta*csc^2(theta) - cot(theta) enters via s'(theta) = i*r*(1 + i*sigma).
// The full node set (k = -(n-1) .. n-1) supports transforms without conjugate
// symmetry; for real-valued f, fhat(conj s) = conj(fhat(s)) and the half set
// with doubled weights (and a plain half-weight real node at k = 0) suffices.
struct TalbotNode {
    std::complex<double> s;  // contour point
    std::complex<double> w;  // quadrature weight (excludes exp(s*t))
};

// Half contour: k = 0 .. n-1.  Node 0 is the real point s = r with weight r/(2n);
// nodes k >= 1 carry weight (r/n)*(1 + i*sigma_k) so that
//   f(t) ~= Re( sum_k w_k * exp(s_k*t) * fhat(s_k) )
// is exact trapezoid symmetrisation for real f.
inline std::vector<TalbotNode> talbot_half_nodes(int n, double t) {
    const double r = 0.4 * n / t;
    std::vector<TalbotNode> nodes;
    nodes.reserve(static_cast<std::size_t>(n));
    nodes.push_back({{r, 0.0}, {r / (2.0 * n), 0.0}});
    for (int k = 1; k < n; ++k) {
        const double th = k * M_PI / n;
        const double ct = std::cos(th) / std::sin(th);
        const std::complex<double> s(r * th * ct, r * th);
        const double sigma = th + (th * ct - 1.0) * ct;
        nodes.push_back({s, std::complex<double>(r / n, 0.0) * std::complex<double>(1.0, sigma)});
    }
    return nodes;
}

// Full contour: k = -(n-1) .. n-1, all weights r/(2n)*(1 + i*sigma_k).
inline std::vector<TalbotNode> talbot_full_nodes(int n, double t) {
    const double r = 0.4 * n / t;
    std::vector<TalbotNode> nodes;
    nodes.reserve(static_cast<std::size_t>(2 * n - 1));
    for (int k = -(n - 1); k < n; ++k) {
        if (k == 0) {
            nodes.push_back({{r, 0.0}, {r / (2.0 * n), 0.0}});
            continue;
        }
        const double th = k * M_PI / n;
        const double ct = std::cos(th) / std::sin(th);
        const std::complex<double> s(r * th * ct, r * th);
        const double sigma = th + (th * ct - 1.0) * ct;
        nodes.push_back(
            {s, std::complex<double>(r / (2.0 * n), 0.0) * std::complex<double>(1.0, sigma)});
    }
    return nodes;
}

// Invert fhat at time t > 0.  Works for complex-valued time functions (no
// conjugate symmetry assumed); callers with real f take the real part.
template <class F>
std::complex<double> talbot_inverse(F&& fhat, double t, int n) {
    std::complex<double> acc(0.0, 0.0);
    for (const auto& node : talbot_full_nodes(n, t))
        acc += node.w * std::exp(node.s * t) * fhat(node.s);
    return acc;
}

}  // namespace smfj
