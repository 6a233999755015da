#include "smfj/pide_solver.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace smfj {

namespace detail {

void fft_radix2(std::vector<std::complex<double>>& a, int sign) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft_radix2: length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// GridSpec
// ---------------------------------------------------------------------------

std::vector<double> GridSpec::nodes() const {
    const std::size_t I = static_cast<std::size_t>(n_space);
    std::vector<double> xs(I + 1);
    const double span = x_max - x_min;
    if (clustering_q >= 1.0 - 1e-12) {
        for (std::size_t i = 0; i <= I; ++i)
            xs[i] = x_min + span * static_cast<double>(i) / static_cast<double>(I);
        xs[I] = x_max;
        return xs;
    }
    // Geometric refinement toward x_min: interval i (counted from the bottom)
    // has width min(d0 / q^i, dcap).  d0 is fixed by bisection so the widths
    // fill the span; the cap keeps the far field from starving of nodes.
    const double rho = 1.0 / clustering_q;
    const double dcap = kClusterCap * span / static_cast<double>(I);
    auto total = [&](double d0) {
        double sum = 0.0, d = d0;
        for (std::size_t i = 0; i < I; ++i) {
            sum += std::min(d, dcap);
            d *= rho;
        }
        return sum;
    };
    double lo = span * 1e-12, hi = dcap;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (total(mid) < span ? lo : hi) = mid;
    }
    const double d0 = 0.5 * (lo + hi);
    std::vector<double> widths(I);
    double d = d0, sum = 0.0;
    for (std::size_t i = 0; i < I; ++i) {
        widths[i] = std::min(d, dcap);
        sum += widths[i];
        d *= rho;
    }
    const double rescale = span / sum;  // absorb the bisection residual
    xs[0] = x_min;
    for (std::size_t i = 0; i < I; ++i) xs[i + 1] = xs[i] + widths[i] * rescale;
    xs[I] = x_max;
    return xs;
}

void GridSpec::validate(const OptionContract& contract) const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("grid: " + what); };
    if (n_space < 4) fail("n_space must be at least 4");
    if (n_time < 1) fail("n_time must be at least 1");
    if (!(x_min < x_max)) fail("x_min must lie below x_max");
    if (!(dt > 0.0)) fail("dt must be positive");
    if (std::fabs(dt * n_time - contract.maturity) > 1e-9 * std::max(1.0, contract.maturity))
        fail("dt * n_time must equal the contract maturity");
    if (!(clustering_q > 0.0) || clustering_q > 1.0) fail("clustering_q must lie in (0, 1]");
    const double x0 = std::log(contract.spot);
    if (contract.kind == OptionKind::down_and_out_call) {
        if (std::fabs(x_min - std::log(contract.barrier)) > 1e-9)
            fail("x_min must equal log(barrier) for down-and-out contracts");
        if (s_max > 0.0 && !(contract.strike < s_max))
            fail("strike must lie below the price truncation s_max");
        if (!(x0 < x_max)) fail("spot must lie below the truncation boundary");
    } else {
        if (!(x0 > x_min) || !(x0 < x_max)) fail("spot must lie inside the grid");
        const double xk = std::log(contract.strike);
        if (!(xk > x_min) || !(xk < x_max)) fail("strike must lie inside the grid");
    }
}

GridSpec GridSpec::for_european(const OptionContract& c, const ModelParams& p, int n_space,
                                int n_time) {
    const double T = c.maturity;
    const double ch = 2.0 - std::pow(2.0, 2.0 * p.hurst - 1.0);
    const double var = p.sigma0 * p.sigma0 * T +
                       p.sigma_h * p.sigma_h * ch * std::pow(T, 2.0 * p.hurst) +
                       p.lambda * T * (p.mu_y * p.mu_y + p.sigma_y * p.sigma_y);
    const double w = std::max(10.0 * std::sqrt(std::max(var, 0.0)), 1.0);
    GridSpec g;
    g.x_min = std::min(std::log(c.spot), std::log(c.strike)) - w;
    g.x_max = std::max(std::log(c.spot), std::log(c.strike)) + w;
    g.n_space = n_space;
    g.n_time = n_time;
    g.dt = T / n_time;
    g.clustering_q = 1.0;
    g.s_max = std::exp(g.x_max);
    return g;
}

GridSpec GridSpec::for_barrier(const OptionContract& c, const ModelParams& p, int n_space,
                               int n_time, double s_max_trunc, double q) {
    (void)p;
    if (c.kind != OptionKind::down_and_out_call)
        throw std::invalid_argument("grid: barrier grid requires a down-and-out contract");
    if (!(s_max_trunc > c.strike) || !(s_max_trunc > c.spot))
        throw std::invalid_argument("grid: s_max must exceed both strike and spot");
    GridSpec g;
    g.x_min = std::log(c.barrier);
    g.x_max = std::log(s_max_trunc);
    g.n_space = n_space;
    g.n_time = n_time;
    g.dt = c.maturity / n_time;
    g.clustering_q = q;
    g.s_max = s_max_trunc;
    return g;
}

// ---------------------------------------------------------------------------
// Local cubic interpolation
// ---------------------------------------------------------------------------

namespace {

std::size_t cubic_window(const std::vector<double>& xs, double x) {
    const std::size_t n = xs.size();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::ptrdiff_t j = (it - xs.begin()) - 1;
    j = std::max<std::ptrdiff_t>(j, 0);
    std::ptrdiff_t lo = j - 1;
    lo = std::max<std::ptrdiff_t>(lo, 0);
    lo = std::min<std::ptrdiff_t>(lo, static_cast<std::ptrdiff_t>(n) - 4);
    return static_cast<std::size_t>(lo);
}

}  // namespace

double cubic_interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    double v = 0.0, d1 = 0.0, d2 = 0.0;
    cubic_interpolate_derivs(xs, ys, x, &v, &d1, &d2);
    return v;
}

void cubic_interpolate_derivs(const std::vector<double>& xs, const std::vector<double>& ys,
                              double x, double* value, double* d1, double* d2) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("cubic_interpolate: need matching arrays of size >= 2");
    if (xs.size() < 4) {  // linear fallback for tiny grids
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        std::size_t hi = std::min<std::size_t>(
            std::max<std::ptrdiff_t>(it - xs.begin(), 1), xs.size() - 1);
        const double t = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
        if (value) *value = ys[hi - 1] * (1.0 - t) + ys[hi] * t;
        if (d1) *d1 = (ys[hi] - ys[hi - 1]) / (xs[hi] - xs[hi - 1]);
        if (d2) *d2 = 0.0;
        return;
    }
    const std::size_t lo = cubic_window(xs, x);
    const double* xw = xs.data() + lo;
    const double* yw = ys.data() + lo;
    // Newton divided differences on the 4-point window
    double f01 = (yw[1] - yw[0]) / (xw[1] - xw[0]);
    double f12 = (yw[2] - yw[1]) / (xw[2] - xw[1]);
    double f23 = (yw[3] - yw[2]) / (xw[3] - xw[2]);
    double f012 = (f12 - f01) / (xw[2] - xw[0]);
    double f123 = (f23 - f12) / (xw[3] - xw[1]);
    double f0123 = (f123 - f012) / (xw[3] - xw[0]);
    const double a0 = x - xw[0], a1 = x - xw[1], a2 = x - xw[2];
    if (value) *value = yw[0] + f01 * a0 + f012 * a0 * a1 + f0123 * a0 * a1 * a2;
    if (d1) *d1 = f01 + f012 * (a0 + a1) + f0123 * (a1 * a2 + a0 * a2 + a0 * a1);
    if (d2) *d2 = 2.0 * f012 + 2.0 * f0123 * (a0 + a1 + a2);
}

// ---------------------------------------------------------------------------
// Jump quadrature (standalone form)
// ---------------------------------------------------------------------------

std::vector<double> jump_quadrature(const std::vector<double>& values, const ModelParams& params,
                                    const GridSpec& grid, const OptionContract& contract,
                                    double tau, int gh_nodes) {
    params.validate();
    contract.validate();
    grid.validate(contract);
    const std::vector<double> xs = grid.nodes();
    if (values.size() != xs.size())
        throw std::invalid_argument("jump_quadrature: layer size does not match the grid");
    std::vector<double> out(values.size(), 0.0);
    if (params.lambda <= 0.0) return out;
    GaussHermite gh = gauss_hermite(gh_nodes);
    std::vector<double> shifts(gh.nodes.size());
    for (std::size_t j = 0; j < gh.nodes.size(); ++j)
        shifts[j] = params.mu_y + std::sqrt(2.0) * params.sigma_y * gh.nodes[j];
    detail::JumpStencil stencil(xs, contract.kind, contract.strike, shifts, gh.weights);
    stencil.expectation_minus_value(values, params.rate, tau, out);
    for (double& v : out) v *= params.lambda;
    return out;
}

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

PricingResult solve_pide(const OptionContract& contract, const ModelParams& params,
                         const GridSpec& grid, const PideConfig& cfg) {
    return solve_pide_t<double>(contract, to_scalar<double>(params), grid, cfg).meta;
}

ConvergenceStudy convergence_study(const OptionContract& contract, const ModelParams& params,
                                   const std::vector<std::pair<double, double>>& levels,
                                   double reference_price, const PideConfig& cfg) {
    if (levels.empty()) throw std::invalid_argument("convergence_study: no refinement levels");
    // shared domain across levels so truncation error cancels out of the slopes
    const GridSpec proto = (contract.kind == OptionKind::down_and_out_call)
                               ? GridSpec::for_barrier(contract, params, 8, 1,
                                                       std::max(2.0 * contract.strike,
                                                                2.0 * contract.spot))
                               : GridSpec::for_european(contract, params, 8, 1);
    auto level_grid = [&](double dt, double dx) {
        GridSpec g = proto;
        g.n_time = std::max(1, static_cast<int>(std::lround(contract.maturity / dt)));
        g.dt = contract.maturity / g.n_time;
        g.n_space = std::max(4, static_cast<int>(std::lround((g.x_max - g.x_min) / dx)));
        return g;
    };

    ConvergenceStudy study;
    for (const auto& [dt, dx] : levels) {
        const GridSpec g = level_grid(dt, dx);
        study.dts.push_back(g.dt);
        study.dxs.push_back((g.x_max - g.x_min) / g.n_space);
        study.prices.push_back(solve_pide(contract, params, g, cfg).price);
    }
    if (std::isnan(reference_price)) {
        double dt_min = levels[0].first, dx_min = levels[0].second;
        for (const auto& [dt, dx] : levels) {
            dt_min = std::min(dt_min, dt);
            dx_min = std::min(dx_min, dx);
        }
        const GridSpec g = level_grid(dt_min / 4.0, dx_min / 2.0);
        reference_price = solve_pide(contract, params, g, cfg).price;
    }
    study.reference = reference_price;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (std::size_t l = 0; l < study.prices.size(); ++l) {
        const double err = std::fabs(study.prices[l] - reference_price);
        study.errors.push_back(err);
        if (err < 1e-13) continue;  // below resolvable difference; skip in the fit
        const double lx = std::log(study.dts[l]);
        const double ly = std::log(err);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n >= 2) {
        const double denom = n * sxx - sx * sx;
        study.slope = (denom != 0.0) ? (n * sxy - sx * sy) / denom : 0.0;
    }
    return study;
}

}  // namespace smfj
