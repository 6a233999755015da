#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace smfj {

// Market model: log-price driven by sigma0*W + sigmaH*S^H (S^H a sub-fractional
// Brownian motion with Hurst index `hurst`) plus a compensated compound Poisson
// part with N(mu_y, sigma_y^2) jump sizes arriving at rate `lambda`.
struct ModelParams {
    double sigma0  = 0.2;  // Brownian volatility
    double sigma_h = 0.0;  // sub-fractional volatility
    double hurst   = 0.5;  // Hurst index; hurst = 0 selects the classical beta = 1 branch
    double lambda  = 0.0;  // jump intensity per year
    double mu_y    = 0.0;  // mean log jump size
    double sigma_y = 0.0;  // std dev of log jump size
    double rate    = 0.0;  // risk-free rate
    double mu      = 0.0;  // physical drift (pricing routines ignore it)

    [[nodiscard]] double beta() const { return 1.0 - hurst; }
    // beta within 1e-9 of 1 degenerates the order-(1-beta) memory operator;
    // solvers switch to their classical branch there.
    [[nodiscard]] bool classical() const { return beta() >= 1.0 - 1e-9; }

    void validate() const;
};

enum class OptionKind { european_call, european_put, down_and_out_call };

struct OptionContract {
    OptionKind kind = OptionKind::european_call;
    double spot     = 100.0;
    double strike   = 100.0;
    double maturity = 1.0;  // years
    double barrier  = 0.0;  // down-and-out level; ignored for Europeans

    [[nodiscard]] bool has_barrier() const { return kind == OptionKind::down_and_out_call; }
    [[nodiscard]] bool is_call() const { return kind != OptionKind::european_put; }
    void validate() const;
};

// Model parameters over a generic scalar (double for plain pricing, a dual
// number for forward-mode sensitivities).  The Hurst index stays a plain
// double: no greek is taken with respect to it and it steers branch choices.
template <class T>
struct ModelParamsT {
    T sigma0{}, sigma_h{}, lambda{}, mu_y{}, sigma_y{}, rate{};
    double hurst = 0.5;
};

template <class T>
ModelParamsT<T> to_scalar(const ModelParams& p) {
    ModelParamsT<T> t;
    t.sigma0 = p.sigma0;
    t.sigma_h = p.sigma_h;
    t.lambda = p.lambda;
    t.mu_y = p.mu_y;
    t.sigma_y = p.sigma_y;
    t.rate = p.rate;
    t.hurst = p.hurst;
    return t;
}

struct PricingResult {
    double price   = 0.0;
    double std_err = 0.0;      // Monte-Carlo only; 0 for deterministic methods
    std::string method;        // "transform" | "pide" | "mc"
    // diagnostics
    long iterations  = 0;      // Krylov iterations (pide) / integrand evaluations (transform)
    double residual  = 0.0;    // worst linear-solve relative residual (pide)
    std::string grid;          // short note on the grid / node counts used
    double norm_ratio = 0.0;   // max_n ||V^n||_h / ||V^0||_h (pide stability monitor)
    bool stability_hypothesis = true;  // dt <= c0*dx_min^2 with c0 < 1/(2 sigma0^2)
};

inline void ModelParams::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("model: " + what); };
    if (!(sigma0 >= 0.0) || !(sigma_h >= 0.0)) fail("sigma0 and sigmaH must be nonnegative");
    if (sigma0 <= 0.0 && sigma_h <= 0.0) fail("at least one of sigma0, sigmaH must be positive");
    if (!(hurst >= 0.0) || hurst >= 1.0) fail("hurst must lie in [0, 1)");
    if (!(lambda >= 0.0)) fail("lambda must be nonnegative");
    if (!(sigma_y >= 0.0)) fail("sigmaY must be nonnegative");
    if (lambda > 0.0 && sigma_y == 0.0 && mu_y == 0.0) return;  // degenerate but harmless (zero jumps)
}

inline void OptionContract::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("contract: " + what); };
    if (!(spot > 0.0)) fail("spot must be positive");
    if (!(strike > 0.0)) fail("strike must be positive");
    if (!(maturity > 0.0)) fail("maturity must be positive");
    if (kind == OptionKind::down_and_out_call) {
        if (!(barrier > 0.0)) fail("barrier must be positive for down-and-out contracts");
        if (!(barrier < strike)) fail("barrier must lie below the strike");
    }
}

}  // namespace smfj
