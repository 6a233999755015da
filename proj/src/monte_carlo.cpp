#include "smfj/monte_carlo.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "smfj/black_scholes.hpp"
#include "smfj/measure.hpp"
#include "smfj/process.hpp"

namespace smfj {

namespace {

constexpr std::int64_t kUnitsPerBlock = 2048;

struct BlockSum {
    double sum = 0.0;
    double sumsq = 0.0;
    std::int64_t count = 0;
};

struct Estimator {
    const OptionContract* contract = nullptr;
    double log_spot = 0.0;   // paths carry log(S/S0)
    double log_barrier = 0.0;  // also relative to spot
    double sigma0 = 0.0;
    double dt = 0.0;
    double discount = 1.0;
    bool barrier = false;
    bool bridge = false;
    bool terminal_spot = false;  // payoff = S_T (martingale diagnostic)
    bool control = false;
    bool control_same_path = false;  // barrier CV: European payoff of this path
    double control_mean = 0.0;       // already a price (discounted)

    [[nodiscard]] double vanilla(double s_t) const {
        if (terminal_spot) return s_t;
        const double k = contract->strike;
        return contract->is_call() ? std::max(s_t - k, 0.0) : std::max(k - s_t, 0.0);
    }

    // Survival factor of one path's log-price column under the monitoring
    // convention: indicator for discrete monitoring, product of Brownian-
    // bridge non-crossing probabilities when the bridge correction is on.
    template <class Col>
    [[nodiscard]] double survival(const Col& x, int steps) const {
        if (!barrier) return 1.0;
        if (!bridge) {
            for (int j = 0; j <= steps; ++j)
                if (x(j) <= log_barrier) return 0.0;
            return 1.0;
        }
        double w = 1.0;
        const double denom = 2.0 / (sigma0 * sigma0 * dt);
        for (int j = 0; j < steps; ++j) {
            const double a = x(j) - log_barrier;
            const double b = x(j + 1) - log_barrier;
            if (a <= 0.0 || b <= 0.0) return 0.0;
            w *= -std::expm1(-a * b * denom);
        }
        return w;
    }
};

// One path's discounted estimator contribution.
double path_value(const Estimator& est, const PathBatch& batch, int col, int steps) {
    const double vanilla_here = est.vanilla(std::exp(est.log_spot + batch.log_s(steps, col)));
    const double f = est.survival(batch.log_s.col(col), steps) * vanilla_here;
    if (!est.control) return est.discount * f;
    double g;
    if (est.control_same_path) {
        // barrier target: the control is this same path's European payoff,
        // whose exact mean is the Poisson-mixture closed form
        g = vanilla_here;
    } else {
        // European target: the sigma0-only geometric Brownian companion
        g = est.vanilla(std::exp(est.log_spot + batch.log_s_gbm(steps, col)));
    }
    return est.discount * (f - g) + est.control_mean;
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Exact European price of the simulated terminal law: conditional on the
// Poisson jump count the log-price is Gaussian, so the price is a Poisson
// mixture of lognormal closed forms.
double mixture_european(const OptionContract& contract, const ModelParams& p, double maturity) {
    const double ch = sfbm_variance_coeff(p.hurst);
    const double gvar = p.sigma0 * p.sigma0 * maturity +
                        p.sigma_h * p.sigma_h * ch * std::pow(maturity, 2.0 * p.hurst);
    const double kappa = jump_kappa(p.mu_y, p.sigma_y);
    const double base_m =
        std::log(contract.spot) + (p.rate - p.lambda * kappa) * maturity - 0.5 * gvar;
    const double lt = p.lambda * maturity;
    const double lk = std::log(contract.strike);
    double weight = std::exp(-lt);
    double call = 0.0;
    for (int n = 0; n < 400; ++n) {
        if (n > 0) weight *= lt / n;
        if (weight < 1e-16 && n > lt) break;
        const double v = gvar + n * p.sigma_y * p.sigma_y;
        const double m = base_m + n * p.mu_y;
        const double sd = std::sqrt(v);
        const double d2 = (m - lk) / sd;
        call += weight * (std::exp(m + 0.5 * v) * norm_cdf(d2 + sd) - contract.strike * norm_cdf(d2));
    }
    const double disc = std::exp(-p.rate * maturity);
    if (contract.is_call()) return disc * call;
    // put via parity on the same mixture (E[S_T] = spot e^{r maturity})
    return disc * call - contract.spot + contract.strike * disc;
}

PricingResult run_mc(const OptionContract& contract, const ModelParams& params, double maturity,
                     const McConfig& cfg, bool terminal_spot) {
    cfg.validate();
    params.validate();

    const int steps = std::max(1, static_cast<int>(std::llround(cfg.steps_per_year * maturity)));
    PathGrid grid;
    grid.maturity = maturity;
    grid.steps = steps;

    std::int64_t n_paths = cfg.n_paths;
    const int paths_per_unit = cfg.antithetic ? 2 : 1;
    if (cfg.antithetic && (n_paths % 2) != 0) ++n_paths;
    const std::int64_t n_units = n_paths / paths_per_unit;
    const std::int64_t n_blocks = (n_units + kUnitsPerBlock - 1) / kUnitsPerBlock;

    Estimator est;
    est.contract = &contract;
    est.log_spot = std::log(contract.spot);
    est.sigma0 = params.sigma0;
    est.dt = grid.dt();
    est.discount = std::exp(-params.rate * maturity);
    est.terminal_spot = terminal_spot;
    est.barrier = !terminal_spot && contract.has_barrier();
    est.bridge = cfg.bridge_correction;
    if (est.barrier) est.log_barrier = std::log(contract.barrier) - est.log_spot;
    est.control = !terminal_spot && cfg.control_variate == ControlVariate::bs_barrier_analytic;
    if (est.control) {
        est.control_same_path = contract.has_barrier();
        est.control_mean =
            est.control_same_path
                ? mixture_european(contract, params, maturity)
                : (contract.is_call()
                       ? bs_call(contract.spot, contract.strike, maturity, params.sigma0,
                                 params.rate)
                       : bs_put(contract.spot, contract.strike, maturity, params.sigma0,
                                params.rate));
    }

    const PathEngine engine(params, grid, MeasureMode::risk_neutral, cfg.seed, cfg.antithetic);

    std::vector<BlockSum> blocks(static_cast<std::size_t>(n_blocks));
    std::atomic<std::int64_t> next{0};
    const unsigned fields =
        (est.control && !est.control_same_path) ? (kLogS | kGbmCompanion) : kLogS;

    auto worker = [&]() {
        PathBatch batch;
        for (;;) {
            const std::int64_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            const std::int64_t unit0 = b * kUnitsPerBlock;
            const std::int64_t units = std::min<std::int64_t>(kUnitsPerBlock, n_units - unit0);
            const int count = static_cast<int>(units * paths_per_unit);
            engine.generate(unit0 * paths_per_unit, count, batch, fields);
            BlockSum acc;
            for (std::int64_t u = 0; u < units; ++u) {
                double z = path_value(est, batch, static_cast<int>(u * paths_per_unit), steps);
                if (cfg.antithetic) {
                    z = 0.5 * (z + path_value(est, batch,
                                              static_cast<int>(u * paths_per_unit + 1), steps));
                }
                acc.sum += z;
                acc.sumsq += z * z;
            }
            acc.count = units;
            blocks[static_cast<std::size_t>(b)] = acc;
        }
    };

    const int n_threads = static_cast<int>(
        std::min<std::int64_t>(std::max(1, cfg.threads), n_blocks));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    // Deterministic pairwise reduction over the fixed block partition: the
    // result is a function of block index only, never of thread scheduling.
    std::vector<BlockSum> tree = blocks;
    while (tree.size() > 1) {
        std::vector<BlockSum> up((tree.size() + 1) / 2);
        for (std::size_t i = 0; i < up.size(); ++i) {
            up[i] = tree[2 * i];
            if (2 * i + 1 < tree.size()) {
                up[i].sum += tree[2 * i + 1].sum;
                up[i].sumsq += tree[2 * i + 1].sumsq;
                up[i].count += tree[2 * i + 1].count;
            }
        }
        tree.swap(up);
    }
    const double mean = tree[0].sum / static_cast<double>(tree[0].count);
    const double var =
        tree[0].count > 1
            ? std::max(0.0, (tree[0].sumsq - static_cast<double>(tree[0].count) * mean * mean) /
                                static_cast<double>(tree[0].count - 1))
            : 0.0;
    const double se = std::sqrt(var / static_cast<double>(tree[0].count));

    if (cfg.batch_stats) {
        double run_sum = 0.0, run_sq = 0.0;
        std::int64_t run_n = 0;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            run_sum += blocks[b].sum;
            run_sq += blocks[b].sumsq;
            run_n += blocks[b].count;
            const double m = run_sum / static_cast<double>(run_n);
            const double v = run_n > 1 ? std::max(0.0, (run_sq - run_n * m * m) / (run_n - 1.0))
                                       : 0.0;
            cfg.batch_stats->push_back(
                {static_cast<std::int64_t>(b), m, std::sqrt(v / static_cast<double>(run_n))});
        }
    }

    PricingResult out;
    out.price = mean;
    out.std_err = se;
    out.method = "mc";
    out.iterations = n_paths;
    out.residual = 0.0;
    out.norm_ratio = 1.0;
    out.stability_hypothesis = true;
    std::ostringstream gs;
    gs << "paths=" << n_paths << " steps=" << steps << " antithetic=" << (cfg.antithetic ? 1 : 0)
       << " cv=" << (est.control ? "bs_analytic" : "none")
       << " bridge=" << (cfg.bridge_correction ? 1 : 0) << " threads=" << n_threads;
    out.grid = gs.str();
    return out;
}

}  // namespace

void McConfig::validate() const {
    if (n_paths < 100) throw std::invalid_argument("mc: n_paths must be at least 100");
    if (steps_per_year < 1) throw std::invalid_argument("mc: steps_per_year must be positive");
    if (threads < 1) throw std::invalid_argument("mc: threads must be positive");
}

double bs_barrier_analytic(const OptionContract& contract, double sigma, double rate) {
    if (contract.kind != OptionKind::down_and_out_call)
        throw std::invalid_argument("bs_barrier_analytic: down-and-out call only");
    if (!(contract.barrier < contract.strike))
        throw std::invalid_argument("bs_barrier_analytic: requires barrier < strike");
    if (contract.barrier >= contract.spot) return 0.0;
    return bs_barrier_down_out_call(contract.spot, contract.strike, contract.barrier,
                                    contract.maturity, sigma, rate);
}

PricingResult price_mc(const OptionContract& contract, const ModelParams& params,
                       const McConfig& cfg) {
    contract.validate();
    if (contract.has_barrier() && contract.spot <= contract.barrier) {
        PricingResult out;
        out.price = 0.0;
        out.std_err = 0.0;
        out.method = "mc";
        out.iterations = 0;
        out.grid = "knocked-out-at-start";
        return out;
    }
    return run_mc(contract, params, contract.maturity, cfg, /*terminal_spot=*/false);
}

PricingResult mc_discounted_terminal_spot(double spot, const ModelParams& params, double maturity,
                                          const McConfig& cfg) {
    if (!(spot > 0.0) || !(maturity > 0.0))
        throw std::invalid_argument("mc: spot and maturity must be positive");
    OptionContract c;
    c.kind = OptionKind::european_call;
    c.spot = spot;
    c.strike = spot;
    c.maturity = maturity;
    return run_mc(c, params, maturity, cfg, /*terminal_spot=*/true);
}

}  // namespace smfj
