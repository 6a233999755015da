#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "smfj/process.hpp"
#include "smfj/rng.hpp"

using namespace smfj;

TEST_CASE("sub-fractional covariance: variance coefficient and h = 1/2 limit") {
    // R(t,t) = (2 - 2^{2H-1}) t^{2H}
    for (double h : {0.2, 0.35, 0.5, 0.75, 0.9}) {
        const double ch = 2.0 - std::pow(2.0, 2.0 * h - 1.0);
        for (double t : {0.3, 1.0, 2.5}) {
            CHECK(sfbm_covariance(t, t, h) ==
                  doctest::Approx(ch * std::pow(t, 2.0 * h)).epsilon(1e-13));
        }
    }
    // H = 1/2 collapses to Brownian min(t,s).
    CHECK(sfbm_covariance(0.7, 1.9, 0.5) == doctest::Approx(0.7).epsilon(1e-13));
    CHECK(sfbm_covariance(2.0, 1.1, 0.5) == doctest::Approx(1.1).epsilon(1e-13));
    // Symmetry and positive semidefiniteness of a small Gram matrix.
    const double h = 0.35;
    std::vector<double> ts = {0.1, 0.25, 0.5, 0.75, 1.0, 1.5};
    Eigen::MatrixXd g(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) g(i, j) = sfbm_covariance(ts[i], ts[j], h);
    CHECK((g - g.transpose()).norm() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
}

namespace {
ModelParams fractional_params() {
    ModelParams p;
    p.sigma0 = 0.15;
    p.sigma_h = 0.12;
    p.hurst = 0.35;
    p.lambda = 0.6;
    p.mu_y = -0.05;
    p.sigma_y = 0.2;
    p.rate = 0.03;
    p.mu = 0.07;
    return p;
}
}  // namespace

TEST_CASE("cholesky factor reproduces the factor covariance") {
    PathEngine eng(fractional_params(), {1.0, 24}, MeasureMode::risk_neutral, 7, true);
    const Eigen::MatrixXd& c = eng.factor_covariance();
    const Eigen::MatrixXd l = eng.factor_cholesky();
    CHECK((l * l.transpose() - c).norm() <= 1e-10 * c.norm());
}

TEST_CASE("batch-split invariance and seed reproducibility") {
    PathEngine eng(fractional_params(), {0.5, 12}, MeasureMode::risk_neutral, 42, true);
    PathBatch whole, left, right;
    eng.generate(0, 8, whole, kLogS | kJumpCounts);
    eng.generate(0, 3, left, kLogS | kJumpCounts);
    eng.generate(3, 5, right, kLogS | kJumpCounts);
    for (int p = 0; p < 8; ++p) {
        const auto& part = (p < 3) ? left : right;
        const int col = (p < 3) ? p : p - 3;
        CHECK((whole.log_s.col(p) - part.log_s.col(col)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((whole.jump_count.col(p) - part.jump_count.col(col)).cwiseAbs().maxCoeff() == 0);
    }
    PathEngine same(fractional_params(), {0.5, 12}, MeasureMode::risk_neutral, 42, true);
    PathBatch again;
    same.generate(0, 8, again);
    CHECK((whole.log_s - again.log_s).cwiseAbs().maxCoeff() == 0.0);
    PathEngine other(fractional_params(), {0.5, 12}, MeasureMode::risk_neutral, 43, true);
    PathBatch diff;
    other.generate(0, 8, diff);
    CHECK((whole.log_s - diff.log_s).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("antithetic partner mirrors the gaussian part exactly") {
    ModelParams p = fractional_params();
    p.lambda = 0.0;  // isolate the gaussian component
    PathEngine eng(p, {1.0, 16}, MeasureMode::risk_neutral, 11, true);
    PathBatch b;
    eng.generate(0, 6, b);
    for (int pair = 0; pair < 3; ++pair) {
        for (int j = 0; j <= 16; ++j) {
            const double sum = b.log_s(j, 2 * pair) + b.log_s(j, 2 * pair + 1);
            CHECK(sum == doctest::Approx(2.0 * eng.spot_drift(j)).epsilon(1e-12));
        }
    }
    // Antithetic partners share the jump stream: with jumps on, the difference
    // of a pair is purely gaussian (continuous across jump times).
    ModelParams pj = fractional_params();
    PathEngine engj(pj, {1.0, 16}, MeasureMode::risk_neutral, 11, true);
    PathBatch bj;
    engj.generate(0, 2, bj, kLogS | kJumpCounts);
    for (int j = 0; j <= 16; ++j) CHECK(bj.jump_count(j, 0) == bj.jump_count(j, 1));
}

TEST_CASE("terminal distribution: mean growth under each measure") {
    const ModelParams p = fractional_params();
    const double horizon = 1.0;
    const int n = 100000;

    auto mean_terminal = [&](MeasureMode mode) {
        PathEngine eng(p, {horizon, 8}, mode, 2024, true);
        PathBatch b;
        double s = 0.0, s2 = 0.0;
        for (std::int64_t first = 0; first < n; first += 5000) {
            eng.generate(first, 5000, b);
            for (int c = 0; c < 5000; ++c) {
                const double v = std::exp(b.log_s(8, c));
                s += v;
                s2 += v * v;
            }
        }
        const double m = s / n;
        const double se = std::sqrt((s2 / n - m * m) / n);
        return std::pair{m, se};
    };

    // Risk-neutral: E[e^{-rT} S_T] = S_0, i.e. E[S_T/S_0] = e^{rT}.
    auto [mq, seq] = mean_terminal(MeasureMode::risk_neutral);
    CHECK(std::fabs(mq - std::exp(p.rate * horizon)) <= 3.5 * seq);
    // Physical: E[S_T] = S_0 e^{mu T}.
    auto [mp, sep] = mean_terminal(MeasureMode::physical);
    CHECK(std::fabs(mp - std::exp(p.mu * horizon)) <= 3.5 * sep);
    // Esscher-tilted jumps keep the risk-neutral mean.
    auto [mt, set] = mean_terminal(MeasureMode::esscher_tilted);
    CHECK(std::fabs(mt - std::exp(p.rate * horizon)) <= 3.5 * set);
}

TEST_CASE("terminal variance of the gaussian part matches sigma0^2 T + sigmaH^2 c_H T^{2H}") {
    ModelParams p = fractional_params();
    p.lambda = 0.0;
    const double horizon = 0.8;
    PathEngine eng(p, {horizon, 16}, MeasureMode::risk_neutral, 5, false);
    const int n = 200000;
    PathBatch b;
    double s = 0.0, s2 = 0.0;
    for (std::int64_t first = 0; first < n; first += 4000) {
        eng.generate(first, 4000, b);
        for (int c = 0; c < 4000; ++c) {
            const double x = b.log_s(16, c) - eng.spot_drift(16);
            s += x;
            s2 += x * x;
        }
    }
    const double var = s2 / n - (s / n) * (s / n);
    const double want = p.sigma0 * p.sigma0 * horizon +
                        p.sigma_h * p.sigma_h * sfbm_variance_coeff(p.hurst) *
                            std::pow(horizon, 2.0 * p.hurst);
    CHECK(var == doctest::Approx(want).epsilon(0.02));
}

TEST_CASE("kolmogorov-smirnov: sub-fractional marginal at the horizon") {
    // Pure factor: sigma0 = 0, sigmaH = 1, no jumps, zero drift. The terminal
    // marginal must be N(0, c_H T^{2H}).
    for (double h : {0.3, 0.7}) {
        ModelParams p;
        p.sigma0 = 0.0;
        p.sigma_h = 1.0;
        p.hurst = h;
        p.lambda = 0.0;
        p.mu = 0.0;
        p.rate = 0.0;
        const double horizon = 1.0;
        const int n = 4000, steps = 32;
        PathEngine eng(p, {horizon, steps}, MeasureMode::physical, 11, false);
        PathBatch b;
        eng.generate(0, n, b);
        std::vector<double> x(n);
        for (int c = 0; c < n; ++c) x[c] = b.log_s(steps, c) - eng.spot_drift(steps);
        std::sort(x.begin(), x.end());
        const double sd = std::sqrt(sfbm_variance_coeff(h)) * std::pow(horizon, h);
        double dist = 0.0;
        for (int i = 0; i < n; ++i) {
            const double f = normal_cdf(x[i] / sd);
            dist = std::max(dist, std::fabs(f - (i + 1.0) / n));
            dist = std::max(dist, std::fabs(f - static_cast<double>(i) / n));
        }
        CHECK(dist <= 0.015);
    }
}

TEST_CASE("jump counts are poisson with the configured intensity") {
    ModelParams p = fractional_params();
    p.lambda = 1.3;
    const double horizon = 2.0;
    PathEngine eng(p, {horizon, 10}, MeasureMode::risk_neutral, 77, false);
    const int n = 50000;
    PathBatch b;
    double s = 0.0, s2 = 0.0;
    for (std::int64_t first = 0; first < n; first += 5000) {
        eng.generate(first, 5000, b, kLogS | kJumpCounts);
        for (int c = 0; c < 5000; ++c) {
            for (int j = 1; j <= 10; ++j) CHECK(b.jump_count(j, c) >= b.jump_count(j - 1, c));
            const double k = b.jump_count(10, c);
            s += k;
            s2 += k * k;
        }
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    const double lt = p.lambda * horizon;
    CHECK(std::fabs(mean - lt) <= 3.0 * std::sqrt(lt / n));
    CHECK(var == doctest::Approx(lt).epsilon(0.05));
}

TEST_CASE("gbm companion shares the brownian increments") {
    ModelParams p = fractional_params();
    PathEngine eng(p, {1.0, 12}, MeasureMode::risk_neutral, 3, true);
    PathBatch b;
    eng.generate(0, 4, b, kLogS | kGbmCompanion);
    // Companion is a sigma0-GBM: antithetic partners flip its Brownian
    // increments, so pair sums collapse to twice the drift increment.
    for (int j = 1; j <= 12; ++j) {
        const double inc0 = b.log_s_gbm(j, 0) - b.log_s_gbm(j - 1, 0);
        const double inc1 = b.log_s_gbm(j, 1) - b.log_s_gbm(j - 1, 1);
        const double drift_inc = 2.0 * (p.rate - 0.5 * p.sigma0 * p.sigma0) * (1.0 / 12.0);
        CHECK(inc0 + inc1 == doctest::Approx(drift_inc).epsilon(1e-10));
    }
    // Rejects sigmaH > 0 with hurst = 0 (memory order would be ill-defined).
    ModelParams bad = fractional_params();
    bad.hurst = 0.0;
    CHECK_THROWS(PathEngine(bad, {1.0, 4}, MeasureMode::risk_neutral, 1, true));
}
