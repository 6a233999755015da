#pragma once

// Implicit finite-difference solver for the pricing equation with two
// fractional-memory operators (a time derivative of order 1-beta and a mixed
// advection-of-memory term of order H), a Gaussian jump integral, and
// down-and-out barrier support.
//
// Scheme, marching in remaining time tau on log-price nodes x_i:
//
//   dt^-(1-beta) * sum_{k=0}^m w_k^{(1-beta)} (u^{m-k} - u^0)
//     = 1/2 s0^2 dxx u^m
//     + s0 sH dx [ dt^-H * sum_{k=0}^m w_k^{(H)} (u^{m-k} - u^0) ]
//     + (r - lambda kappa - 1/2 s0^2) dx u^m  -  r u^m
//     + lambda Jq[u^{m-1}]
//
// Both memory sums are anchored at the payoff layer u^0 (the transform route's
// initial-value rule corresponds to the anchored derivative, and the raw form
// would differentiate the payoff's constant part into a spurious tau^-gamma
// decay).  The current layer's k=0 couplings stay in the matrix; history and
// the lagged jump quadrature form the right-hand side.  At beta = 1 the time
// order degenerates, and the solver switches to a classical backward-Euler
// branch (weights of order 1 reproduce it exactly within the same machinery).
//
// The scalar type is a template parameter so that forward-mode dual numbers
// can propagate coefficient sensitivities (sigma0, sigma_h, rate) through the
// solve.  The grid, the fractional weight tables, and the jump interpolation
// tables are built from value parts only and held fixed, so dual components of
// mu_y / sigma_y do not reach the quadrature geometry (jump-size Greeks are
// out of scope for the dual path; use bumping for those).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <sstream>
#include <type_traits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "smfj/dual.hpp"
#include "smfj/model.hpp"
#include "smfj/special_functions.hpp"

namespace smfj {

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

struct GridSpec {
    double x_min = 0.0;
    double x_max = 0.0;
    int n_space = 0;  // I: nodes x_0..x_I, I intervals
    int n_time = 0;   // N: layers u^0..u^N
    double dt = 0.0;  // = maturity / n_time
    // Spacing ratio toward x_min: in the refined zone the interval below is q
    // times the interval above, so spacing is finest at the barrier.  q = 1
    // gives a uniform grid.  Growth away from x_min is capped at
    // kClusterCap * (span / n_space) so the far field keeps resolution.
    double clustering_q = 1.0;
    double s_max = 0.0;  // price truncation e^{x_max}

    static constexpr double kClusterCap = 1.5;

    std::vector<double> nodes() const;
    void validate(const OptionContract& contract) const;

    // Uniform grid for European contracts; the x-range depends on parameters
    // only (not on the node counts), so refinement studies share the domain.
    static GridSpec for_european(const OptionContract& c, const ModelParams& p,
                                 int n_space, int n_time);
    // Barrier grid: x_min = log(barrier) exactly, clustered toward it.
    static GridSpec for_barrier(const OptionContract& c, const ModelParams& p,
                                int n_space, int n_time, double s_max_trunc,
                                double q = 0.97);
};

// ---------------------------------------------------------------------------
// Configuration and diagnostics
// ---------------------------------------------------------------------------

struct SolveDiagnostics {
    std::vector<int> iterations;         // Krylov iterations per time layer
    std::vector<double> residuals;       // final relative residual per layer
    std::vector<double> weighted_norms;  // ||u^m||_h for m = 0..N
};

struct PideConfig {
    int gauss_hermite_nodes = 16;
    double krylov_tol = 1e-10;   // relative to ||b||
    int krylov_max_iter = 1200;  // per attempt; one restart on stall
    bool fft_history = false;    // block-FFT evaluation of the memory sums
    int fft_block = 64;
    // Discretize the mixed memory term with the second-order spatial stencil
    // (the transform route's symbol) instead of the first-order one.
    bool cross_second_order = false;
    SolveDiagnostics* diagnostics = nullptr;
};

// ---------------------------------------------------------------------------
// Standalone pieces (shared with tests and the Greeks module)
// ---------------------------------------------------------------------------

// 4-point Lagrange interpolation on ascending nodes (linear fallback at the
// edges of very small grids).
double cubic_interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x);
// Value plus first and second derivative of the same local cubic.
void cubic_interpolate_derivs(const std::vector<double>& xs, const std::vector<double>& ys,
                              double x, double* value, double* d1, double* d2);

// lambda * (E_Y[V(x + Y)] - V(x)) on the grid by Gauss-Hermite quadrature,
// linear interpolation between nodes, and boundary asymptotes outside them
// (barrier / low side of a call: 0; high side of a call: e^x - K e^{-r tau};
// puts mirrored).  tau is the remaining time of the supplied layer.
std::vector<double> jump_quadrature(const std::vector<double>& values, const ModelParams& params,
                                    const GridSpec& grid, const OptionContract& contract,
                                    double tau, int gh_nodes = 16);

PricingResult solve_pide(const OptionContract& contract, const ModelParams& params,
                         const GridSpec& grid, const PideConfig& cfg = {});

struct ConvergenceStudy {
    std::vector<double> dts;
    std::vector<double> dxs;
    std::vector<double> prices;
    std::vector<double> errors;
    double reference = 0.0;
    double slope = 0.0;  // log-log regression of error against dt
};

// Runs the solver over (dt, dx) refinement levels on a shared domain.  If
// reference_price is NaN, one extra level (dt/4, dx/2 of the finest) serves as
// the self-reference.
ConvergenceStudy convergence_study(const OptionContract& contract, const ModelParams& params,
                                   const std::vector<std::pair<double, double>>& levels,
                                   double reference_price = std::numeric_limits<double>::quiet_NaN(),
                                   const PideConfig& cfg = {});

// ---------------------------------------------------------------------------
// Templated solution entry (dual-capable)
// ---------------------------------------------------------------------------

template <class T>
struct PideSolution {
    T price{};
    std::vector<double> xs;
    std::vector<T> final_layer;  // u^N, the value surface at remaining time T
    PricingResult meta;          // value-part metadata (price, norms, ...)
};

namespace detail {

// --- small dense helpers ---------------------------------------------------

inline int fft_pow2_at_least(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Iterative radix-2 complex FFT (in place).  sign = -1 forward, +1 inverse
// (inverse leaves the 1/n scaling to the caller).
void fft_radix2(std::vector<std::complex<double>>& a, int sign);

// --- jump quadrature with precomputed geometry ------------------------------

class JumpStencil {
public:
    JumpStencil() = default;

    // xs ascending; shifts are the quadrature offsets mu_y + sqrt(2) sigma_y t_j.
    JumpStencil(const std::vector<double>& xs, OptionKind kind, double strike,
                const std::vector<double>& shifts, const std::vector<double>& weights)
        : kind_(kind), strike_(strike), weights_(weights) {
        const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
        for (double& w : weights_) w *= inv_sqrt_pi;
        const std::size_t n = xs.size();
        const std::size_t m = shifts.size();
        idx_.assign(n * m, 0);
        frac_.assign(n * m, 0.0);
        target_.assign(n * m, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                const double t = xs[i] + shifts[j];
                const std::size_t k = i * m + j;
                target_[k] = t;
                if (t <= xs.front()) {
                    idx_[k] = kBelow;
                } else if (t >= xs.back()) {
                    idx_[k] = kAbove;
                } else {
                    auto it = std::upper_bound(xs.begin(), xs.end(), t);
                    const int hi = static_cast<int>(it - xs.begin());
                    idx_[k] = hi - 1;
                    frac_[k] = (t - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
                }
            }
        }
    }

    // E_Y[V(x_i + Y)] - V(x_i) for every node, with the layer's remaining time
    // tau fixing the boundary asymptotes.  rate enters the discounted strike.
    template <class T>
    void expectation_minus_value(const std::vector<T>& v, const T& rate, double tau,
                                 std::vector<T>& out) const {
        using std::exp;
        const std::size_t m = weights_.size();
        const std::size_t n = v.size();
        out.assign(n, T(0.0));
        const T disc_k = T(strike_) * exp(rate * T(-tau));
        const bool is_put = (kind_ == OptionKind::european_put);
        for (std::size_t i = 0; i < n; ++i) {
            T acc(0.0);
            for (std::size_t j = 0; j < m; ++j) {
                const std::size_t k = i * m + j;
                T value(0.0);
                if (idx_[k] == kBelow) {
                    if (is_put) value = disc_k - T(std::exp(target_[k]));
                } else if (idx_[k] == kAbove) {
                    if (!is_put) value = T(std::exp(target_[k])) - disc_k;
                } else {
                    const std::size_t lo = static_cast<std::size_t>(idx_[k]);
                    value = v[lo] * T(1.0 - frac_[k]) + v[lo + 1] * T(frac_[k]);
                }
                acc = acc + value * T(weights_[j]);
            }
            out[i] = acc - v[i];
        }
    }

private:
    static constexpr int kBelow = -1;
    static constexpr int kAbove = -2;
    OptionKind kind_ = OptionKind::european_call;
    double strike_ = 0.0;
    std::vector<double> weights_;
    std::vector<int> idx_;
    std::vector<double> frac_;
    std::vector<double> target_;
};

// --- the solver core ---------------------------------------------------------

template <class T>
class PideCore {
public:
    PideCore(const OptionContract& contract, const ModelParamsT<T>& mp, const GridSpec& grid,
             const PideConfig& cfg)
        : c_(contract), mp_(mp), grid_(grid), cfg_(cfg) {
        // validate on value parts
        ModelParams pv{value_of(mp.sigma0), value_of(mp.sigma_h), mp.hurst,
                       value_of(mp.lambda), value_of(mp.mu_y),    value_of(mp.sigma_y),
                       value_of(mp.rate),   value_of(mp.rate)};
        pv.validate();
        c_.validate();
        grid_.validate(contract);
        classical_ = pv.classical();
        if (classical_ && value_of(mp.sigma_h) > 0.0)
            throw std::invalid_argument(
                "pide: sigma_h > 0 requires a positive memory order (hurst > 0)");

        xs_ = grid_.nodes();
        I_ = grid_.n_space;
        N_ = grid_.n_time;
        dt_ = grid_.dt;
        gamma_t_ = classical_ ? 1.0 : 1.0 - (1.0 - mp.hurst);  // = hurst in the memory branch
        gamma_c_ = mp.hurst;
        weights_ = FracWeightTable::make(classical_ ? 0.0 : 1.0 - mp.hurst, mp.hurst,
                                         static_cast<std::size_t>(N_) + 1);
        trim_weight_tails();

        using std::exp;
        kappa_ = exp(mp_.mu_y + T(0.5) * mp_.sigma_y * mp_.sigma_y) - T(1.0);
        half_sig2_ = T(0.5) * mp_.sigma0 * mp_.sigma0;
        advect_ = mp_.rate - mp_.lambda * kappa_ - half_sig2_;
        scale_t_ = T(std::pow(dt_, -gamma_t_));
        cross_coef_ = classical_ ? T(0.0)
                                 : mp_.sigma0 * mp_.sigma_h * T(std::pow(dt_, -gamma_c_));

        build_stencils();
        build_payoff_and_weights();
        if (value_of(mp_.lambda) > 0.0) {
            GaussHermite gh = gauss_hermite(cfg_.gauss_hermite_nodes);
            std::vector<double> shifts(gh.nodes.size());
            const double mu = value_of(mp_.mu_y);
            const double sd = value_of(mp_.sigma_y);
            for (std::size_t j = 0; j < gh.nodes.size(); ++j)
                shifts[j] = mu + std::sqrt(2.0) * sd * gh.nodes[j];
            jumps_ = JumpStencil(xs_, c_.kind, c_.strike, shifts, gh.weights);
        }
    }

    PideSolution<T> solve() {
        PideSolution<T> sol;
        sol.xs = xs_;
        march();
        sol.final_layer = layers_.back();
        sol.price = price_at_spot(layers_.back());
        fill_meta(sol);
        return sol;
    }

    // Matrix action of the implicit operator on a full node vector (identity
    // rows at the two boundaries).  Exposed for the stencil-oracle test.
    void apply_operator(const std::vector<T>& in, std::vector<T>& out) const {
        const std::size_t I = static_cast<std::size_t>(I_);
        out.assign(I + 1, T(0.0));
        out[0] = in[0];
        out[I] = in[I];
        const T diag_time = scale_t_ + mp_.rate;
        for (std::size_t i = 1; i < I; ++i) {
            const T d1 = dx_l_[i] * in[i - 1] + dx_c_[i] * in[i] + dx_u_[i] * in[i + 1];
            const T d2 = dxx_l_[i] * in[i - 1] + dxx_c_[i] * in[i] + dxx_u_[i] * in[i + 1];
            T v = diag_time * in[i] - half_sig2_ * d2 - advect_ * d1;
            if (!classical_) v = v - cross_coef_ * (cfg_.cross_second_order ? d2 : d1);
            out[i] = v;
        }
    }

    const std::vector<double>& nodes() const { return xs_; }
    const std::vector<std::vector<T>>& layers() const { return layers_; }

private:
    // ----- setup -----
    void trim_weight_tails() {
        // classical weights are exactly zero beyond k = 1; skip dead history
        auto last_nonzero = [](const std::vector<double>& w) {
            std::size_t k = w.size();
            while (k > 1 && w[k - 1] == 0.0) --k;
            return k;  // weights [0, k) are live
        };
        live_t_ = last_nonzero(weights_.time);
        live_c_ = last_nonzero(weights_.cross);
    }

    void build_stencils() {
        const std::size_t I = static_cast<std::size_t>(I_);
        dx_l_.assign(I + 1, 0.0);
        dx_c_.assign(I + 1, 0.0);
        dx_u_.assign(I + 1, 0.0);
        dxx_l_.assign(I + 1, 0.0);
        dxx_c_.assign(I + 1, 0.0);
        dxx_u_.assign(I + 1, 0.0);
        norm_w_.assign(I + 1, 0.0);
        for (std::size_t i = 1; i < I; ++i) {
            const double hm = xs_[i] - xs_[i - 1];
            const double hp = xs_[i + 1] - xs_[i];
            dx_l_[i] = -hp / (hm * (hm + hp));
            dx_c_[i] = (hp - hm) / (hm * hp);
            dx_u_[i] = hm / (hp * (hm + hp));
            dxx_l_[i] = 2.0 / (hm * (hm + hp));
            dxx_c_[i] = -2.0 / (hm * hp);
            dxx_u_[i] = 2.0 / (hp * (hm + hp));
            // weighted-norm cell: w_i = 1/(1+e^{2x_i}), local width (trapezoid)
            norm_w_[i] = 0.5 * (hm + hp) / (1.0 + std::exp(2.0 * xs_[i]));
        }
        // Jacobi diagonal of the implicit operator
        diag_.assign(I + 1, T(1.0));
        const T diag_time = scale_t_ + mp_.rate;
        for (std::size_t i = 1; i < I; ++i) {
            T d = diag_time - half_sig2_ * T(dxx_c_[i]) - advect_ * T(dx_c_[i]);
            if (!classical_)
                d = d - cross_coef_ * T(cfg_.cross_second_order ? dxx_c_[i] : dx_c_[i]);
            diag_[i] = d;
        }
    }

    double payoff_at(double x) const {
        const double s = std::exp(x);
        switch (c_.kind) {
            case OptionKind::european_put:
                return std::max(c_.strike - s, 0.0);
            case OptionKind::european_call:
            case OptionKind::down_and_out_call:
            default:
                return std::max(s - c_.strike, 0.0);
        }
    }

    void build_payoff_and_weights() {
        const std::size_t I = static_cast<std::size_t>(I_);
        layers_.clear();
        layers_.reserve(static_cast<std::size_t>(N_) + 1);
        std::vector<T> u0(I + 1);
        for (std::size_t i = 0; i <= I; ++i) u0[i] = T(payoff_at(xs_[i]));
        layers_.push_back(std::move(u0));
    }

    T bc_low(double tau) const {
        using std::exp;
        if (c_.kind == OptionKind::european_put)
            return T(c_.strike) * exp(mp_.rate * T(-tau)) - T(std::exp(grid_.x_min));
        return T(0.0);  // calls and knocked-out region
    }
    T bc_high(double tau) const {
        using std::exp;
        if (c_.kind == OptionKind::european_put) return T(0.0);
        return T(std::exp(grid_.x_max)) - T(c_.strike) * exp(mp_.rate * T(-tau));
    }

    // ----- history -----
    // H[i] = sum_{k=1}^{m} w_k u^{m-k}_i  -  W_m u^0_i   for one weight table.
    void history_direct(const std::vector<double>& w, const std::vector<double>& wpart,
                        std::size_t live, std::size_t m, std::vector<T>& out) const {
        const std::size_t I = static_cast<std::size_t>(I_);
        out.assign(I + 1, T(0.0));
        const std::size_t kmax = std::min(m, live - 1);
        for (std::size_t k = 1; k <= kmax; ++k) {
            const double wk = w[k];
            if (wk == 0.0) continue;
            const std::vector<T>& layer = layers_[m - k];
            for (std::size_t i = 0; i <= I; ++i) out[i] = out[i] + T(wk) * layer[i];
        }
        const double anchor = wpart[m];
        if (anchor != 0.0) {
            const std::vector<T>& u0 = layers_[0];
            for (std::size_t i = 0; i <= I; ++i) out[i] = out[i] - T(anchor) * u0[i];
        }
    }

    // FFT block mode: contributions of completed blocks of layers are pushed
    // into per-step accumulators by a block convolution; only the most recent
    // (incomplete) block is summed directly.  Identical to history_direct to
    // rounding.  Double-scalar only (the dual path always uses the direct sum).
    void push_block_fft(std::size_t b0, std::size_t b1) {
        const std::size_t I = static_cast<std::size_t>(I_);
        const std::size_t blk = b1 - b0;
        const std::size_t n_w = static_cast<std::size_t>(N_) - b0 + 1;  // lags 0..N-b0
        // linear convolution of a block (length blk, oldest layer first) with
        // the weight table: C[q] = sum_p w[q-p] a[p]; contribution to step
        // m' = b0 + q for q in [blk, N-b0].
        const int L = fft_pow2_at_least(static_cast<int>(blk + n_w - 1));
        std::vector<std::complex<double>> wt(L), wc(L), a(L), fa(L), prod(L);
        const bool do_cross = !classical_ && live_c_ > 1;
        for (std::size_t l = 0; l < n_w; ++l) {
            wt[l] = (l < live_t_) ? weights_.time[l] : 0.0;
            if (do_cross) wc[l] = (l < live_c_) ? weights_.cross[l] : 0.0;
        }
        fft_radix2(wt, -1);
        if (do_cross) fft_radix2(wc, -1);
        for (std::size_t i = 0; i <= I; ++i) {
            std::fill(a.begin(), a.end(), std::complex<double>(0.0));
            for (std::size_t p = 0; p < blk; ++p) a[p] = value_of(layers_[b0 + p][i]);
            fa = a;
            fft_radix2(fa, -1);
            for (int l = 0; l < L; ++l) prod[l] = fa[l] * wt[l];
            fft_radix2(prod, +1);
            for (std::size_t m = b1; m <= static_cast<std::size_t>(N_); ++m)
                acc_t_[m * (I + 1) + i] += prod[m - b0].real() / L;
            if (do_cross) {
                for (int l = 0; l < L; ++l) prod[l] = fa[l] * wc[l];
                fft_radix2(prod, +1);
                for (std::size_t m = b1; m <= static_cast<std::size_t>(N_); ++m)
                    acc_c_[m * (I + 1) + i] += prod[m - b0].real() / L;
            }
        }
    }

    void history_fft(bool cross, std::size_t m, std::vector<T>& out) const {
        const std::size_t I = static_cast<std::size_t>(I_);
        const std::vector<double>& w = cross ? weights_.cross : weights_.time;
        const std::vector<double>& wpart = cross ? weights_.cross_partial : weights_.time_partial;
        const std::vector<double>& acc = cross ? acc_c_ : acc_t_;
        out.assign(I + 1, T(0.0));
        const std::size_t blk_lo = (m / static_cast<std::size_t>(cfg_.fft_block)) *
                                   static_cast<std::size_t>(cfg_.fft_block);
        for (std::size_t j = blk_lo; j < m; ++j) {  // recent, not yet pushed
            const std::size_t lag = m - j;
            const double wk = (lag < w.size()) ? w[lag] : 0.0;
            if (wk == 0.0) continue;
            const std::vector<T>& layer = layers_[j];
            for (std::size_t i = 0; i <= I; ++i) out[i] = out[i] + T(wk) * layer[i];
        }
        for (std::size_t i = 0; i <= I; ++i) out[i] = out[i] + T(acc[m * (I + 1) + i]);
        const double anchor = wpart[m];
        if (anchor != 0.0) {
            const std::vector<T>& u0 = layers_[0];
            for (std::size_t i = 0; i <= I; ++i) out[i] = out[i] - T(anchor) * u0[i];
        }
    }

    // ----- linear algebra -----
    static double dot_value(const std::vector<T>& a, const std::vector<T>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += value_of(a[i]) * value_of(b[i]);
        return s;
    }
    static T dot(const std::vector<T>& a, const std::vector<T>& b) {
        T s(0.0);
        for (std::size_t i = 0; i < a.size(); ++i) s = s + a[i] * b[i];
        return s;
    }

    // Preconditioned BiCGSTAB (Jacobi).  Returns true on convergence; fills
    // iterations and the final relative residual.
    bool bicgstab(const std::vector<T>& b, std::vector<T>& x, int max_iter, int* iters,
                  double* rel_res) const {
        const std::size_t n = b.size();
        const double bnorm = std::sqrt(std::max(dot_value(b, b), 1e-300));
        std::vector<T> r(n), rhat(n), p(n, T(0.0)), v(n, T(0.0)), s(n), t(n), phat(n), shat(n),
            ax(n);
        apply_operator(x, ax);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ax[i];
        rhat = r;
        T rho(1.0), alpha(1.0), omega(1.0);
        double res = std::sqrt(dot_value(r, r)) / bnorm;
        *rel_res = res;
        *iters = 0;
        if (res <= cfg_.krylov_tol) return true;
        for (int it = 1; it <= max_iter; ++it) {
            const T rho1 = dot(rhat, r);
            if (std::fabs(value_of(rho1)) < 1e-290) return false;  // breakdown -> stall
            if (it == 1) {
                p = r;
            } else {
                const T beta = (rho1 / rho) * (alpha / omega);
                for (std::size_t i = 0; i < n; ++i)
                    p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            rho = rho1;
            for (std::size_t i = 0; i < n; ++i) phat[i] = p[i] / diag_[i];
            apply_operator(phat, v);
            const T denom = dot(rhat, v);
            if (std::fabs(value_of(denom)) < 1e-290) return false;
            alpha = rho1 / denom;
            for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
            double snorm = std::sqrt(dot_value(s, s)) / bnorm;
            if (snorm <= cfg_.krylov_tol) {
                for (std::size_t i = 0; i < n; ++i) x[i] = x[i] + alpha * phat[i];
                *iters = it;
                *rel_res = snorm;
                return true;
            }
            for (std::size_t i = 0; i < n; ++i) shat[i] = s[i] / diag_[i];
            apply_operator(shat, t);
            const T tt = dot(t, t);
            if (std::fabs(value_of(tt)) < 1e-290) return false;
            omega = dot(t, s) / tt;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = x[i] + alpha * phat[i] + omega * shat[i];
                r[i] = s[i] - omega * t[i];
            }
            res = std::sqrt(dot_value(r, r)) / bnorm;
            *iters = it;
            *rel_res = res;
            if (res <= cfg_.krylov_tol) return true;
            if (std::fabs(value_of(omega)) < 1e-290) return false;
        }
        return false;
    }

    // ----- march -----
    void march() {
        const std::size_t I = static_cast<std::size_t>(I_);
        const bool fft_mode = cfg_.fft_history && std::is_same_v<T, double> && N_ > cfg_.fft_block;
        if (fft_mode) {
            acc_t_.assign((static_cast<std::size_t>(N_) + 1) * (I + 1), 0.0);
            acc_c_.assign((static_cast<std::size_t>(N_) + 1) * (I + 1), 0.0);
        }
        if (cfg_.diagnostics) {
            cfg_.diagnostics->iterations.clear();
            cfg_.diagnostics->residuals.clear();
            cfg_.diagnostics->weighted_norms.clear();
            cfg_.diagnostics->weighted_norms.push_back(weighted_norm(layers_[0]));
        }
        norm0_ = weighted_norm(layers_[0]);
        max_norm_ = norm0_;
        total_iters_ = 0;
        max_residual_ = 0.0;

        std::vector<T> b(I + 1), ht, hc, jq;
        for (int m = 1; m <= N_; ++m) {
            const std::size_t mu = static_cast<std::size_t>(m);
            if (fft_mode && mu % static_cast<std::size_t>(cfg_.fft_block) == 0) {
                const std::size_t b1 = mu;
                const std::size_t b0 = b1 - static_cast<std::size_t>(cfg_.fft_block);
                push_block_fft(b0, b1);
            }
            const double tau = dt_ * m;

            // time-memory history
            if (fft_mode)
                history_fft(false, mu, ht);
            else
                history_direct(weights_.time, weights_.time_partial, live_t_, mu, ht);
            // cross-memory history
            const bool cross_active = !classical_ && value_of(cross_coef_) != 0.0;
            if (cross_active) {
                if (fft_mode)
                    history_fft(true, mu, hc);
                else
                    history_direct(weights_.cross, weights_.cross_partial, live_c_, mu, hc);
            }
            // lagged jump quadrature at tau_{m-1}
            const bool jump_active = value_of(mp_.lambda) > 0.0;
            if (jump_active)
                jumps_.expectation_minus_value(layers_[mu - 1], mp_.rate, dt_ * (m - 1), jq);

            b[0] = bc_low(tau);
            b[I] = bc_high(tau);
            for (std::size_t i = 1; i < I; ++i) {
                T rhs = T(0.0) - scale_t_ * ht[i];
                if (cross_active) {
                    const T dh = cfg_.cross_second_order
                                     ? dxx_l_[i] * hc[i - 1] + dxx_c_[i] * hc[i] + dxx_u_[i] * hc[i + 1]
                                     : dx_l_[i] * hc[i - 1] + dx_c_[i] * hc[i] + dx_u_[i] * hc[i + 1];
                    rhs = rhs + cross_coef_ * dh;
                }
                if (jump_active) rhs = rhs + mp_.lambda * jq[i];
                b[i] = rhs;
            }

            std::vector<T> x = layers_[mu - 1];  // warm start from the previous layer
            x[0] = b[0];
            x[I] = b[I];
            int iters = 0;
            double rel_res = 0.0;
            bool ok = bicgstab(b, x, cfg_.krylov_max_iter, &iters, &rel_res);
            int iters2 = 0;
            if (!ok) {  // one restart: fresh Krylov space from the current iterate
                ok = bicgstab(b, x, cfg_.krylov_max_iter, &iters2, &rel_res);
                iters += iters2;
            }
            if (!ok) {
                std::ostringstream os;
                os << "pide: linear solver failed to reach tol " << cfg_.krylov_tol << " at layer "
                   << m << " (relative residual " << rel_res << " after restart)";
                throw std::runtime_error(os.str());
            }
            total_iters_ += iters;
            max_residual_ = std::max(max_residual_, rel_res);
            // Dirichlet rows solved exactly by the identity action; re-pin for hygiene
            x[0] = b[0];
            x[I] = b[I];
            const double nm = weighted_norm(x);
            max_norm_ = std::max(max_norm_, nm);
            if (cfg_.diagnostics) {
                cfg_.diagnostics->iterations.push_back(iters);
                cfg_.diagnostics->residuals.push_back(rel_res);
                cfg_.diagnostics->weighted_norms.push_back(nm);
            }
            layers_.push_back(std::move(x));
        }
    }

    double weighted_norm(const std::vector<T>& u) const {
        double s = 0.0;
        for (std::size_t i = 1; i < static_cast<std::size_t>(I_); ++i) {
            const double v = value_of(u[i]);
            s += norm_w_[i] * v * v;
        }
        return std::sqrt(s);
    }

    T price_at_spot(const std::vector<T>& layer) const {
        const double x0 = std::log(c_.spot);
        // 4-point Lagrange on the templated layer
        const std::size_t I = static_cast<std::size_t>(I_);
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x0);
        std::size_t j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - xs_.begin() - 1, 0));
        std::size_t lo = (j == 0) ? 0 : j - 1;
        if (lo + 3 > I) lo = I - 3;
        T acc(0.0);
        for (std::size_t a = 0; a < 4; ++a) {
            double w = 1.0;
            for (std::size_t bq = 0; bq < 4; ++bq) {
                if (a == bq) continue;
                w *= (x0 - xs_[lo + bq]) / (xs_[lo + a] - xs_[lo + bq]);
            }
            acc = acc + layer[lo + a] * T(w);
        }
        return acc;
    }

    void fill_meta(PideSolution<T>& sol) const {
        PricingResult r;
        r.price = value_of(sol.price);
        r.std_err = 0.0;
        r.method = "pide";
        r.iterations = total_iters_;
        r.residual = max_residual_;
        r.norm_ratio = (norm0_ > 0.0) ? max_norm_ / norm0_ : 1.0;
        double dx_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < xs_.size(); ++i) dx_min = std::min(dx_min, xs_[i] - xs_[i - 1]);
        const double sig0 = value_of(mp_.sigma0);
        const double c0 = (sig0 > 0.0) ? 1.0 / (2.0 * sig0 * sig0)
                                       : std::numeric_limits<double>::infinity();
        r.stability_hypothesis = dt_ <= c0 * dx_min * dx_min;
        std::ostringstream os;
        os << "I=" << I_ << " N=" << N_ << " x=[" << xs_.front() << "," << xs_.back() << "]"
           << " q=" << grid_.clustering_q << " gh=" << cfg_.gauss_hermite_nodes
           << " branch=" << (classical_ ? "classical" : "memory")
           << " history=" << (cfg_.fft_history ? "fft" : "direct")
           << (cfg_.cross_second_order ? " cross=dxx" : "");
        if (!r.stability_hypothesis)
            os << " stability-hypothesis=violated(implicit-scheme-continuing)";
        r.grid = os.str();
        sol.meta = r;
    }

    // ----- members -----
    OptionContract c_;
    ModelParamsT<T> mp_;
    GridSpec grid_;
    PideConfig cfg_;
    bool classical_ = false;
    std::vector<double> xs_;
    int I_ = 0, N_ = 0;
    double dt_ = 0.0;
    double gamma_t_ = 0.0, gamma_c_ = 0.0;
    FracWeightTable weights_;
    std::size_t live_t_ = 0, live_c_ = 0;
    T kappa_{}, half_sig2_{}, advect_{}, scale_t_{}, cross_coef_{};
    std::vector<double> dx_l_, dx_c_, dx_u_, dxx_l_, dxx_c_, dxx_u_, norm_w_;
    std::vector<T> diag_;
    std::vector<std::vector<T>> layers_;
    JumpStencil jumps_;
    std::vector<double> acc_t_, acc_c_;
    double norm0_ = 0.0, max_norm_ = 0.0, max_residual_ = 0.0;
    long total_iters_ = 0;
};

}  // namespace detail

// Dual-capable solve: T = double reproduces solve_pide; T = Dual2 propagates
// coefficient sensitivities through the march.
template <class T>
PideSolution<T> solve_pide_t(const OptionContract& contract, const ModelParamsT<T>& params,
                             const GridSpec& grid, const PideConfig& cfg = {}) {
    if (contract.kind == OptionKind::down_and_out_call && contract.spot <= contract.barrier) {
        PideSolution<T> sol;  // knocked out at start
        sol.price = T(0.0);
        sol.xs = grid.nodes();
        sol.final_layer.assign(sol.xs.size(), T(0.0));
        sol.meta.price = 0.0;
        sol.meta.method = "pide";
        sol.meta.grid = "knocked-out-at-start";
        sol.meta.norm_ratio = 1.0;
        return sol;
    }
    detail::PideCore<T> core(contract, params, grid, cfg);
    return core.solve();
}

}  // namespace smfj
