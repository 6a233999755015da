#include "smfj/process.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "smfj/measure.hpp"
#include "smfj/rng.hpp"

namespace smfj {

double sfbm_covariance(double t, double s, double hurst) {
    const double h2 = 2.0 * hurst;
    return std::pow(t, h2) + std::pow(s, h2) -
           0.5 * (std::pow(t + s, h2) + std::pow(std::fabs(t - s), h2));
}

PathEngine::PathEngine(const ModelParams& params, PathGrid grid, MeasureMode mode,
                       std::uint64_t seed, bool antithetic)
    : params_(params), grid_(grid), mode_(mode), seed_(seed), antithetic_(antithetic) {
    params_.validate();
    if (grid_.steps < 1) throw std::invalid_argument("path grid needs at least one step");
    if (params_.hurst <= 1e-9 && params_.sigma_h > 0.0)
        throw std::invalid_argument("sigmaH > 0 requires hurst > 0");

    const int m = grid_.steps;
    const double kappa = jump_kappa(params_.mu_y, params_.sigma_y);

    // Jump law per measure.
    if (mode_ == MeasureMode::esscher_tilted) {
        const TiltedJumps t = esscher_tilt(params_);
        jump_mu_ = t.mu_y;
        jump_sigma_ = t.sigma_y;
        jump_rate_ = t.lambda;
    } else {
        jump_mu_ = params_.mu_y;
        jump_sigma_ = params_.sigma_y;
        jump_rate_ = params_.lambda;
    }

    // Cumulative log drift: the Gaussian convexity corrections make the
    // exponential a (local) martingale, and the jump compensation then sets
    // the mean growth rate exactly.
    const double ch = sfbm_variance_coeff(params_.hurst);
    drift_.resize(m + 1);
    drift_gbm_.resize(m + 1);
    for (int j = 0; j <= m; ++j) {
        const double t = grid_.time(j);
        const double gauss_corr = 0.5 * params_.sigma0 * params_.sigma0 * t +
                                  0.5 * params_.sigma_h * params_.sigma_h * ch *
                                      std::pow(t, 2.0 * params_.hurst);
        double growth;
        switch (mode_) {
            case MeasureMode::risk_neutral:
                growth = (params_.rate - params_.lambda * kappa) * t;
                break;
            case MeasureMode::physical:
                growth = (params_.mu - params_.lambda * kappa) * t;
                break;
            case MeasureMode::esscher_tilted:
                growth = params_.rate * t;  // tilted jumps have kappa* = 0
                break;
            default:
                growth = 0.0;
        }
        drift_[j] = growth - gauss_corr;
        drift_gbm_[j] = (params_.rate - 0.5 * params_.sigma0 * params_.sigma0) * t;
    }

    // Exact covariance of the scaled factor increments
    //   F_j = sigmaH (S_{t_{j+1}} - S_{t_j}),
    // the second difference of R; the independent Brownian part sigma0 dW is
    // sampled analytically (it is also the control-variate companion's driver).
    cov_.resize(m, m);
    const double shsq = params_.sigma_h * params_.sigma_h;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j <= i; ++j) {
            double c = 0.0;
            if (shsq > 0.0) {
                const double ti = grid_.time(i), ti1 = grid_.time(i + 1);
                const double tj = grid_.time(j), tj1 = grid_.time(j + 1);
                c = shsq * (sfbm_covariance(ti1, tj1, params_.hurst) -
                            sfbm_covariance(ti1, tj, params_.hurst) -
                            sfbm_covariance(ti, tj1, params_.hurst) +
                            sfbm_covariance(ti, tj, params_.hurst));
            }
            cov_(i, j) = c;
            cov_(j, i) = c;
        }
    }

    if (shsq == 0.0) {
        chol_ = Eigen::MatrixXd::Zero(m, m);
        return;
    }
    double scale = 0.0;
    for (int i = 0; i < m; ++i) scale = std::max(scale, cov_(i, i));
    for (double jitter : {0.0, 1e-14, 1e-12, 1e-10}) {
        Eigen::MatrixXd c = cov_;
        if (jitter > 0.0) c.diagonal().array() += jitter * scale;
        Eigen::LLT<Eigen::MatrixXd> llt(c);
        if (llt.info() == Eigen::Success) {
            chol_ = llt.matrixL();
            return;
        }
    }
    throw std::runtime_error("factor increment covariance is not positive definite");
}

void PathEngine::generate(std::int64_t first, int count, PathBatch& out, unsigned what) const {
    const int m = grid_.steps;
    const double dt = grid_.dt();
    const double sqdt = std::sqrt(dt);
    const double horizon = grid_.maturity;

    out.log_s.resize(m + 1, count);
    if (what & kGbmCompanion) out.log_s_gbm.resize(m + 1, count);
    if (what & kJumpCounts) out.jump_count.resize(m + 1, count);

    // Gaussian draws, batched: columns are paths.
    Eigen::MatrixXd zw(m, count), zf(m, count);
    for (int p = 0; p < count; ++p) {
        const std::int64_t path = first + p;
        const std::int64_t pair = antithetic_ ? path / 2 : path;
        const bool flip = antithetic_ && (path % 2 == 1);
        CounterRng rng(seed_, static_cast<std::uint64_t>(pair) * stream_slot::kPerPair +
                                  stream_slot::gauss);
        const double sgn = flip ? -1.0 : 1.0;
        for (int j = 0; j < m; ++j) zw(j, p) = sgn * rng.next_normal();
        for (int j = 0; j < m; ++j) zf(j, p) = sgn * rng.next_normal();
    }

    // Combined Gaussian increments via the exact Cholesky factor (BLAS-3), and
    // the sigma0-only Brownian increments for the companion.
    Eigen::MatrixXd gx = chol_.triangularView<Eigen::Lower>() * zf;

    std::vector<double> jump_cum(m + 1);
    std::vector<double> jt, jy;
    for (int p = 0; p < count; ++p) {
        const std::int64_t path = first + p;
        const std::int64_t pair = antithetic_ ? path / 2 : path;
        CounterRng jrng(seed_, static_cast<std::uint64_t>(pair) * stream_slot::kPerPair +
                                   stream_slot::jumps);
        const int n = jrng.next_poisson(jump_rate_ * horizon);
        jt.resize(n);
        jy.resize(n);
        for (int i = 0; i < n; ++i) jt[i] = jrng.next_uniform() * horizon;
        for (int i = 0; i < n; ++i) jy[i] = jump_mu_ + jump_sigma_ * jrng.next_normal();
        std::fill(jump_cum.begin(), jump_cum.end(), 0.0);
        std::vector<int> cnt(m + 1, 0);
        for (int i = 0; i < n; ++i) {
            // jump lands in (t_j, t_{j+1}]: affects grid points >= j+1
            int j = static_cast<int>(jt[i] / dt);
            j = std::min(j, m - 1);
            jump_cum[j + 1] += jy[i];
            cnt[j + 1] += 1;
        }
        for (int j = 1; j <= m; ++j) {
            jump_cum[j] += jump_cum[j - 1];
            cnt[j] += cnt[j - 1];
        }

        double gacc = 0.0, wacc = 0.0;
        out.log_s(0, p) = 0.0;
        if (what & kGbmCompanion) out.log_s_gbm(0, p) = 0.0;
        if (what & kJumpCounts) out.jump_count(0, p) = 0;
        for (int j = 1; j <= m; ++j) {
            wacc += zw(j - 1, p);
            gacc += gx(j - 1, p);
            const double gauss_part = params_.sigma0 * sqdt * wacc + gacc;
            out.log_s(j, p) = drift_[j] + gauss_part + jump_cum[j];
            if (what & kGbmCompanion)
                out.log_s_gbm(j, p) = drift_gbm_[j] + params_.sigma0 * sqdt * wacc;
            if (what & kJumpCounts) out.jump_count(j, p) = cnt[j];
        }
    }
}

}  // namespace smfj
