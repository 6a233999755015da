#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "smfj/model.hpp"
#include "smfj/pide_solver.hpp"
#include "smfj/transform_pricer.hpp"

namespace smfj {

// ---------------------------------------------------------------------------
// Price sensitivities (greeks) for the mixed fractional jump model.
//
// Two computation methods are available behind one interface:
//
//   * dual  — forward-mode differentiation with second-order dual numbers.
//             Exact derivatives of the discretised pricer (no step-size
//             error, no subtractive cancellation).  Through the transform
//             pricer the spot and the volatilities are seeded directly;
//             through the finite-difference solver the parameter
//             sensitivities propagate through every time layer while the
//             spot sensitivities are read off the terminal spatial profile.
//   * bump  — central finite differences on the scalar pricer with a
//             step-halving (Richardson) refinement.  Serves as an
//             independent cross-check of the dual path.
//
// Every greek carries its own success flag: if a pricer evaluation fails at
// some bump point the remaining greeks are still reported (partial report)
// and the failed entry is flagged instead of poisoning the whole call.
// ---------------------------------------------------------------------------

enum class GreekPricer { transform, pide };
enum class GreekMethod { dual, bump };

struct GreekReport {
    double price = 0.0;
    double delta = 0.0;   // dV/dS
    double gamma = 0.0;   // d2V/dS2
    double vega0 = 0.0;   // dV/d(sigma0)   — diffusive volatility
    double vegah = 0.0;   // dV/d(sigmaH)   — memory volatility
    double vanna = 0.0;   // d2V/dS d(sigma0)

    bool price_ok = false;
    bool delta_ok = false;
    bool gamma_ok = false;
    bool vega0_ok = false;
    bool vegah_ok = false;
    bool vanna_ok = false;

    std::string method;   // "dual" or "bump"
    std::string pricer;   // "transform" or "pide"

    // Step sizes actually used by the bump method (zero for duals).
    double bump_spot = 0.0;
    double bump_sigma0 = 0.0;
    double bump_sigmah = 0.0;

    bool complete() const {
        return price_ok && delta_ok && gamma_ok && vega0_ok && vegah_ok && vanna_ok;
    }
};

struct GreeksConfig {
    GreekPricer pricer = GreekPricer::transform;
    GreekMethod method = GreekMethod::dual;

    // Relative bump size for the bump method (absolute fallback when the
    // bumped quantity is zero, e.g. sigmaH in a memoryless configuration).
    double bump_rel = 1e-4;

    // Spatial/temporal resolution for the finite-difference route.
    int n_space = 400;
    int n_time = 200;
    // Price-truncation boundary for barrier grids; 0 picks an automatic
    // width from the total model variance (same rule as vanilla grids).
    double s_max_trunc = 0.0;

    TransformConfig transform{};
    PideConfig pide{};
};

// Full report for one contract.  The transform route handles European
// contracts only; barrier contracts require the finite-difference route.
GreekReport greeks(const OptionContract& contract, const ModelParams& params,
                   const GreeksConfig& cfg = {});

// Convenience overload selecting just the route and the method.
GreekReport greeks(const OptionContract& contract, const ModelParams& params,
                   GreekPricer pricer, GreekMethod method);

// ---------------------------------------------------------------------------
// Vanna across moneyness: the cross-sensitivity d2V/dS d(sigma0) evaluated on
// a grid of spot/strike ratios, once with jumps switched off (memory-only)
// and once with the full parameter set.  Quantifies how much of the skew
// sensitivity in the wings is contributed by the jump component.
// ---------------------------------------------------------------------------

struct VannaSmileRow {
    double moneyness = 0.0;          // spot / strike
    double vanna_memory_only = 0.0;  // lambda forced to zero
    double vanna_full = 0.0;         // params as given
};

// `base` supplies strike and maturity; the spot is swept as
// moneyness * strike.  Throws std::invalid_argument on an empty grid or a
// barrier contract.
std::vector<VannaSmileRow> vanna_smile(const OptionContract& base,
                                       const ModelParams& params,
                                       const std::vector<double>& moneyness,
                                       const GreeksConfig& cfg = {});

// Evenly spaced moneyness grid [lo, hi] with n points (n >= 2).
std::vector<double> moneyness_grid(double lo, double hi, int n);

// CSV with header "moneyness,vanna_memory_only,vanna_full".
void write_vanna_smile_csv(std::ostream& os, const std::vector<VannaSmileRow>& rows);

// Plain-text key=value block, one greek per line.
void write_greek_report(std::ostream& os, const GreekReport& report);

}  // namespace smfj
