#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "smfj/model.hpp"
#include "smfj/transform_pricer.hpp"

namespace smfj {

struct Quote {
    double strike = 0.0;
    double maturity = 0.0;
    double price = 0.0;
    double spot = 0.0;
    double rate = 0.0;
};

// European call quotes plus the standard liquidity filter.
struct QuoteSet {
    std::vector<Quote> quotes;

    // CSV with header `strike,maturity,price,spot,rate`; '#' lines ignored.
    static QuoteSet from_csv(const std::string& path);
    static QuoteSet from_csv_stream(std::istream& in);

    // Keeps quotes with 0.8 < spot/strike < 1.2 and maturity < 1.
    [[nodiscard]] QuoteSet filtered() const;
};

enum class CalibPricer { transform, pide };

// Transform settings used for every calibration-loop price: coarser contour
// and trapezoid than the pricing defaults (~40x faster, ~5e-5 relative bias
// that is common to all candidates and cancels in the fit).  Exposed so quote
// generators and tools can price with the identical configuration.
TransformConfig calibration_pricing_config();

// Box bounds over (sigma0, sigma_h, hurst, lambda, mu_y, sigma_y).
struct ParamBounds {
    double lo[6] = {0.01, 0.0, 0.05, 0.0, -0.5, 0.01};
    double hi[6] = {1.0, 1.0, 0.95, 5.0, 0.5, 1.0};
};

struct DeConfig {
    int population = 90;  // 15 x dimension
    int max_generations = 200;
    double f = 0.7;
    double cr = 0.9;
    std::uint64_t seed = 1;
    int threads = 1;
    int stagnation = 30;  // stop after this many generations without improvement
    bool vega_weighted = false;
    CalibPricer pricer = CalibPricer::transform;
};

struct CalibResult {
    ModelParams theta_hat;  // rate copied from the first quote for convenience
    double rmse_pct = 0.0;  // root-mean-square percentage error over the quotes
    double objective = 0.0;
    std::vector<double> history;  // best objective after init and each generation
    long evaluations = 0;
};

// Sum of squared price differences over the quote set; +infinity when any
// quote fails to price (non-finite or pricer error).  The vega-weighted mode
// divides each residual by the Black-Scholes vega at the model's total
// diffusion level, converting price error into an implied-vol-scale error.
double objective(const ModelParams& theta, const QuoteSet& quotes,
                 CalibPricer pricer = CalibPricer::transform, bool vega_weighted = false);

// Root-mean-square percentage error (in percent) of theta against the quotes.
double rmse_percent(const ModelParams& theta, const QuoteSet& quotes,
                    CalibPricer pricer = CalibPricer::transform);

// Differential evolution (rand/1/bin) over the six model parameters.
CalibResult calibrate_de(const QuoteSet& quotes, const ParamBounds& bounds, const DeConfig& cfg);

struct SurfacePoint {
    double hurst = 0.0;
    double lambda = 0.0;
    double rmse_pct = 0.0;
};

// RMSE landscape over a (hurst, lambda) grid with the remaining parameters
// fixed; rows ordered hurst-major.
std::vector<SurfacePoint> rmse_surface(const QuoteSet& quotes, const std::vector<double>& h_grid,
                                       const std::vector<double>& lambda_grid,
                                       const ModelParams& fixed,
                                       CalibPricer pricer = CalibPricer::transform);

// `H,lambda,rmse_pct` rows.
void write_surface_csv(std::ostream& out, const std::vector<SurfacePoint>& points);

}  // namespace smfj
