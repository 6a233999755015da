#include "smfj/greeks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "smfj/dual.hpp"

namespace smfj {

namespace {

bool finite(double x) { return std::isfinite(x); }

// Truncation boundary for barrier grids when the caller does not supply one:
// ten total standard deviations above the upper of spot and strike, floored
// at one log unit — the same width rule the vanilla grid builder applies.
double auto_s_max(const OptionContract& c, const ModelParams& p) {
    const double t = c.maturity;
    const double ch = 2.0 - std::pow(2.0, 2.0 * p.hurst - 1.0);
    const double var = p.sigma0 * p.sigma0 * t +
                       p.sigma_h * p.sigma_h * ch * std::pow(t, 2.0 * p.hurst) +
                       p.lambda * t * (p.mu_y * p.mu_y + p.sigma_y * p.sigma_y);
    const double w = std::max(10.0 * std::sqrt(std::max(var, 0.0)), 1.0);
    return std::exp(std::max(std::log(c.spot), std::log(c.strike)) + w);
}

GridSpec build_grid(const OptionContract& c, const ModelParams& p, const GreeksConfig& cfg) {
    if (c.has_barrier()) {
        const double s_max = cfg.s_max_trunc > 0.0 ? cfg.s_max_trunc : auto_s_max(c, p);
        return GridSpec::for_barrier(c, p, cfg.n_space, cfg.n_time, s_max);
    }
    return GridSpec::for_european(c, p, cfg.n_space, cfg.n_time);
}

// ---------------------------------------------------------------------------
// Dual-number route
// ---------------------------------------------------------------------------

Dual2 transform_value(const OptionContract& c, const ModelParamsT<Dual2>& mp,
                      const TransformConfig& tc, Dual2 spot) {
    detail::TransformCore<Dual2> core(mp, c.maturity, tc,
                                      std::fabs(std::log(c.spot / c.strike)));
    return c.is_call() ? core.call(spot, Dual2(c.strike)) : core.put(spot, Dual2(c.strike));
}

GreekReport dual_transform(const OptionContract& c, const ModelParams& p,
                           const GreeksConfig& cfg) {
    GreekReport r;
    r.method = "dual";
    r.pricer = "transform";

    // Directions (spot, sigma0): value, delta, vega0 and the mixed second
    // derivative — the vanna — from a single sweep.
    {
        ModelParamsT<Dual2> mp = to_scalar<Dual2>(p);
        mp.sigma0 = Dual2{p.sigma0, 0.0, 1.0, 0.0};
        const Dual2 v = transform_value(c, mp, cfg.transform, Dual2{c.spot, 1.0, 0.0, 0.0});
        r.price = v.v;
        r.delta = v.d1;
        r.vega0 = v.d2;
        r.vanna = v.d12;
        r.price_ok = finite(r.price);
        r.delta_ok = finite(r.delta);
        r.vega0_ok = finite(r.vega0);
        r.vanna_ok = finite(r.vanna);
    }
    // Directions (spot, spot): the mixed term degenerates to the pure second
    // spot derivative — the gamma.
    {
        const ModelParamsT<Dual2> mp = to_scalar<Dual2>(p);
        const Dual2 v = transform_value(c, mp, cfg.transform, Dual2{c.spot, 1.0, 1.0, 0.0});
        r.gamma = v.d12;
        r.gamma_ok = finite(r.gamma);
    }
    // Direction sigmaH alone.
    {
        ModelParamsT<Dual2> mp = to_scalar<Dual2>(p);
        mp.sigma_h = Dual2{p.sigma_h, 1.0, 0.0, 0.0};
        const Dual2 v = transform_value(c, mp, cfg.transform, Dual2(c.spot));
        r.vegah = v.d1;
        r.vegah_ok = finite(r.vegah);
    }
    return r;
}

GreekReport dual_pide(const OptionContract& c, const ModelParams& p, const GreeksConfig& cfg) {
    GreekReport r;
    r.method = "dual";
    r.pricer = "pide";

    const GridSpec grid = build_grid(c, p, cfg);
    ModelParamsT<Dual2> mp = to_scalar<Dual2>(p);
    mp.sigma0 = Dual2{p.sigma0, 1.0, 0.0, 0.0};
    mp.sigma_h = Dual2{p.sigma_h, 0.0, 1.0, 0.0};
    const PideSolution<Dual2> sol = solve_pide_t<Dual2>(c, mp, grid, cfg.pide);

    r.price = sol.price.v;
    r.vega0 = sol.price.d1;
    r.vegah = sol.price.d2;

    // Spot sensitivities from the terminal spatial profile: with x = log S,
    // dV/dS = V_x / S and d2V/dS2 = (V_xx - V_x) / S^2.  The sigma0 component
    // of each node gives the vanna the same way through its slope.
    const std::size_t n = sol.final_layer.size();
    std::vector<double> value(n), dsig0(n);
    for (std::size_t i = 0; i < n; ++i) {
        value[i] = sol.final_layer[i].v;
        dsig0[i] = sol.final_layer[i].d1;
    }
    const double x0 = std::log(c.spot);
    double f = 0.0, fx = 0.0, fxx = 0.0;
    double g = 0.0, gx = 0.0, gxx = 0.0;
    cubic_interpolate_derivs(sol.xs, value, x0, &f, &fx, &fxx);
    cubic_interpolate_derivs(sol.xs, dsig0, x0, &g, &gx, &gxx);

    r.delta = fx / c.spot;
    r.gamma = (fxx - fx) / (c.spot * c.spot);
    r.vanna = gx / c.spot;

    r.price_ok = finite(r.price);
    r.delta_ok = finite(r.delta);
    r.gamma_ok = finite(r.gamma);
    r.vega0_ok = finite(r.vega0);
    r.vegah_ok = finite(r.vegah);
    r.vanna_ok = finite(r.vanna);
    return r;
}

// ---------------------------------------------------------------------------
// Bump-and-revalue route
// ---------------------------------------------------------------------------

// One scalar revaluation with the whole discretisation (finite-difference
// route) frozen at the base point: the grid, and also the local readout
// cubic, are chosen once from the unbumped inputs. Spot bumps then sample a
// single polynomial patch of a single solution surface, so the differences
// measure the surface's derivative rather than the seam between adjacent
// interpolation windows — which is what the dual route differentiates too.
// Solutions are memoised per volatility pair; spot bumps are free.
class BumpEvaluator {
  public:
    BumpEvaluator(const OptionContract& c, const ModelParams& p, const GreeksConfig& cfg)
        : base_contract_(c), base_params_(p), cfg_(cfg) {
        if (cfg.pricer == GreekPricer::pide) grid_ = build_grid(c, p, cfg);
    }

    double operator()(double spot, double sigma0, double sigma_h) const {
        if (cfg_.pricer == GreekPricer::transform) {
            OptionContract c = base_contract_;
            c.spot = spot;
            ModelParams p = base_params_;
            p.sigma0 = sigma0;
            p.sigma_h = sigma_h;
            return price_transform(p, c, cfg_.transform).price;
        }
        return frozen_cubic(field(sigma0, sigma_h), std::log(spot));
    }

  private:
    const std::vector<double>& field(double sigma0, double sigma_h) const {
        const std::pair<double, double> key{sigma0, sigma_h};
        auto it = fields_.find(key);
        if (it != fields_.end()) return it->second;
        ModelParams p = base_params_;
        p.sigma0 = sigma0;
        p.sigma_h = sigma_h;
        PideSolution<double> sol =
            solve_pide_t<double>(base_contract_, to_scalar<double>(p), grid_, cfg_.pide);
        if (xs_.empty()) {
            xs_ = std::move(sol.xs);
            // Same window-selection rule as the solver's own readout,
            // evaluated once at the base spot and then pinned.
            const double x0 = std::log(base_contract_.spot);
            auto itx = std::upper_bound(xs_.begin(), xs_.end(), x0);
            std::ptrdiff_t j = std::max<std::ptrdiff_t>((itx - xs_.begin()) - 1, 0);
            lo_ = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
                j - 1, 0, static_cast<std::ptrdiff_t>(xs_.size()) - 4));
        }
        return fields_.emplace(key, std::move(sol.final_layer)).first->second;
    }

    // Value of the Newton cubic through the four pinned nodes.
    double frozen_cubic(const std::vector<double>& ys, double x) const {
        const double* xw = xs_.data() + lo_;
        const double* yw = ys.data() + lo_;
        const double f01 = (yw[1] - yw[0]) / (xw[1] - xw[0]);
        const double f12 = (yw[2] - yw[1]) / (xw[2] - xw[1]);
        const double f23 = (yw[3] - yw[2]) / (xw[3] - xw[2]);
        const double f012 = (f12 - f01) / (xw[2] - xw[0]);
        const double f123 = (f23 - f12) / (xw[3] - xw[1]);
        const double f0123 = (f123 - f012) / (xw[3] - xw[0]);
        const double a0 = x - xw[0], a1 = x - xw[1], a2 = x - xw[2];
        return yw[0] + f01 * a0 + f012 * a0 * a1 + f0123 * a0 * a1 * a2;
    }

    OptionContract base_contract_;
    ModelParams base_params_;
    GreeksConfig cfg_;
    GridSpec grid_{};
    mutable std::map<std::pair<double, double>, std::vector<double>> fields_;
    mutable std::vector<double> xs_;
    mutable std::size_t lo_ = 0;
};

// First derivative by central differences at steps h and h/2 combined by one
// Richardson extrapolation; falls back to forward differences when the
// domain boundary (a nonnegative volatility) blocks the downward bump.
double diff1(const std::function<double(double)>& f, double x, double h, bool lower_bounded,
             double f0) {
    if (!lower_bounded || x - h >= 0.0) {
        const double d_full = (f(x + h) - f(x - h)) / (2.0 * h);
        const double d_half = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
        return (4.0 * d_half - d_full) / 3.0;
    }
    const double d_full = (f(x + h) - f0) / h;
    const double d_half = (f(x + 0.5 * h) - f0) / (0.5 * h);
    return 2.0 * d_half - d_full;
}

double diff2(const std::function<double(double)>& f, double x, double h, double f0) {
    const double g_full = (f(x + h) - 2.0 * f0 + f(x - h)) / (h * h);
    const double hh = 0.5 * h;
    const double g_half = (f(x + hh) - 2.0 * f0 + f(x - hh)) / (hh * hh);
    return (4.0 * g_half - g_full) / 3.0;
}

// Mixed spot/sigma0 second derivative from the four-point cross stencil,
// Richardson-combined across a step halving; one-sided in sigma0 when the
// downward volatility bump would leave the domain.
double diff_cross(const BumpEvaluator& eval, double s, double v, double sh, double hs, double hv) {
    const bool one_sided = v - hv < 0.0;
    auto cross = [&](double a, double b) {
        if (one_sided) {
            return ((eval(s + a, v + b, sh) - eval(s + a, v, sh)) -
                    (eval(s - a, v + b, sh) - eval(s - a, v, sh))) /
                   (2.0 * a * b);
        }
        return (eval(s + a, v + b, sh) - eval(s + a, v - b, sh) - eval(s - a, v + b, sh) +
                eval(s - a, v - b, sh)) /
               (4.0 * a * b);
    };
    const double d_full = cross(hs, hv);
    const double d_half = cross(0.5 * hs, 0.5 * hv);
    return one_sided ? 2.0 * d_half - d_full : (4.0 * d_half - d_full) / 3.0;
}

GreekReport bump_greeks(const OptionContract& c, const ModelParams& p, const GreeksConfig& cfg) {
    GreekReport r;
    r.method = "bump";
    r.pricer = cfg.pricer == GreekPricer::transform ? "transform" : "pide";

    const BumpEvaluator eval(c, p, cfg);
    const double s = c.spot, v0 = p.sigma0, vh = p.sigma_h;
    r.bump_spot = cfg.bump_rel * s;
    r.bump_sigma0 = cfg.bump_rel * std::max(std::fabs(v0), 0.1);
    r.bump_sigmah = cfg.bump_rel * std::max(std::fabs(vh), 0.1);

    double f0 = 0.0;
    try {
        f0 = eval(s, v0, vh);
        r.price = f0;
        r.price_ok = finite(f0);
    } catch (const std::exception&) {
        return r;  // nothing else can be bumped around a failed base point
    }
    if (!r.price_ok) return r;

    auto in_spot = [&](double x) { return eval(x, v0, vh); };
    auto in_sigma0 = [&](double x) { return eval(s, x, vh); };
    auto in_sigmah = [&](double x) { return eval(s, v0, x); };

    try {
        r.delta = diff1(in_spot, s, r.bump_spot, false, f0);
        r.delta_ok = finite(r.delta);
    } catch (const std::exception&) {
    }
    try {
        r.gamma = diff2(in_spot, s, r.bump_spot, f0);
        r.gamma_ok = finite(r.gamma);
    } catch (const std::exception&) {
    }
    try {
        r.vega0 = diff1(in_sigma0, v0, r.bump_sigma0, true, f0);
        r.vega0_ok = finite(r.vega0);
    } catch (const std::exception&) {
    }
    try {
        r.vegah = diff1(in_sigmah, vh, r.bump_sigmah, true, f0);
        r.vegah_ok = finite(r.vegah);
    } catch (const std::exception&) {
    }
    try {
        r.vanna = diff_cross(eval, s, v0, vh, r.bump_spot, r.bump_sigma0);
        r.vanna_ok = finite(r.vanna);
    } catch (const std::exception&) {
    }
    return r;
}

}  // namespace

GreekReport greeks(const OptionContract& contract, const ModelParams& params,
                   const GreeksConfig& cfg) {
    params.validate();
    contract.validate();
    if (!(cfg.bump_rel > 0.0) || !(cfg.bump_rel < 0.1))
        throw std::invalid_argument("greeks: bump_rel must lie in (0, 0.1)");
    if (cfg.pricer == GreekPricer::transform) {
        if (contract.has_barrier())
            throw std::invalid_argument("greeks: transform route prices european contracts only");
    } else {
        if (cfg.n_space < 8 || cfg.n_time < 1)
            throw std::invalid_argument("greeks: grid must have at least 8 space and 1 time steps");
    }
    if (cfg.method == GreekMethod::dual) {
        return cfg.pricer == GreekPricer::transform ? dual_transform(contract, params, cfg)
                                                    : dual_pide(contract, params, cfg);
    }
    return bump_greeks(contract, params, cfg);
}

GreekReport greeks(const OptionContract& contract, const ModelParams& params, GreekPricer pricer,
                   GreekMethod method) {
    GreeksConfig cfg;
    cfg.pricer = pricer;
    cfg.method = method;
    return greeks(contract, params, cfg);
}

std::vector<VannaSmileRow> vanna_smile(const OptionContract& base, const ModelParams& params,
                                       const std::vector<double>& moneyness,
                                       const GreeksConfig& cfg) {
    params.validate();
    base.validate();
    if (base.has_barrier())
        throw std::invalid_argument("vanna smile: requires a european contract");
    if (moneyness.size() < 9)
        throw std::invalid_argument("vanna smile: needs at least 9 moneyness points");
    for (double m : moneyness)
        if (!(m > 0.0)) throw std::invalid_argument("vanna smile: moneyness must be positive");

    ModelParams memory_only = params;
    memory_only.lambda = 0.0;

    std::vector<VannaSmileRow> rows;
    rows.reserve(moneyness.size());
    for (double m : moneyness) {
        OptionContract c = base;
        c.spot = m * base.strike;
        VannaSmileRow row;
        row.moneyness = m;
        row.vanna_memory_only = greeks(c, memory_only, cfg).vanna;
        row.vanna_full = greeks(c, params, cfg).vanna;
        rows.push_back(row);
    }
    return rows;
}

std::vector<double> moneyness_grid(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("moneyness grid: need 0 < lo < hi");
    if (n < 2) throw std::invalid_argument("moneyness grid: need at least 2 points");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1.0);
    return out;
}

void write_vanna_smile_csv(std::ostream& os, const std::vector<VannaSmileRow>& rows) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os.precision(12);
    os << "moneyness,vanna_memory_only,vanna_full\n";
    for (const auto& r : rows)
        os << r.moneyness << ',' << r.vanna_memory_only << ',' << r.vanna_full << '\n';
    os.flags(flags);
    os.precision(prec);
}

void write_greek_report(std::ostream& os, const GreekReport& r) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os.precision(12);
    os << "price=" << r.price << "\ndelta=" << r.delta << "\ngamma=" << r.gamma
       << "\nvega0=" << r.vega0 << "\nvegah=" << r.vegah << "\nvanna=" << r.vanna
       << "\nmethod=" << r.method << "\npricer=" << r.pricer << "\nbump_spot=" << r.bump_spot
       << "\nbump_sigma0=" << r.bump_sigma0 << "\nbump_sigmah=" << r.bump_sigmah
       << "\ndelta_ok=" << (r.delta_ok ? 1 : 0) << "\ngamma_ok=" << (r.gamma_ok ? 1 : 0)
       << "\nvega0_ok=" << (r.vega0_ok ? 1 : 0) << "\nvegah_ok=" << (r.vegah_ok ? 1 : 0)
       << "\nvanna_ok=" << (r.vanna_ok ? 1 : 0) << "\ncomplete=" << (r.complete() ? 1 : 0)
       << '\n';
    os.flags(flags);
    os.precision(prec);
}

}  // namespace smfj
