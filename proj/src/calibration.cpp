#include "smfj/calibration.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "smfj/black_scholes.hpp"
#include "smfj/pide_solver.hpp"
#include "smfj/process.hpp"
#include "smfj/rng.hpp"
#include "smfj/transform_pricer.hpp"

namespace smfj {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string to_lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& field, long line_no) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(field, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("quotes: line " + std::to_string(line_no) +
                                    ": not a number: '" + field + "'");
    }
    if (pos != field.size())
        throw std::invalid_argument("quotes: line " + std::to_string(line_no) +
                                    ": trailing characters in '" + field + "'");
    return v;
}

double price_quote(const ModelParams& theta, const Quote& q, CalibPricer pricer) {
    ModelParams p = theta;
    p.rate = q.rate;
    OptionContract c;
    c.kind = OptionKind::european_call;
    c.spot = q.spot;
    c.strike = q.strike;
    c.maturity = q.maturity;
    c.validate();
    if (pricer == CalibPricer::transform)
        return price_transform(p, c, calibration_pricing_config()).price;
    const GridSpec g = GridSpec::for_european(c, p, 200, 100);
    return solve_pide(c, p, g).price;
}

// Blended diffusion level at the quote's maturity (Brownian plus the
// fractional factor's variance contribution), used to anchor the vega weight.
double reference_vol(const ModelParams& theta, double maturity) {
    const double var = theta.sigma0 * theta.sigma0 * maturity +
                       theta.sigma_h * theta.sigma_h * sfbm_variance_coeff(theta.hurst) *
                           std::pow(maturity, 2.0 * theta.hurst);
    return std::sqrt(std::max(var / maturity, 1e-10));
}

void run_indexed(int n, int threads, const std::function<void(int)>& fn) {
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

struct Vec6 {
    double v[6] = {0, 0, 0, 0, 0, 0};
};

ModelParams theta_from(const Vec6& x, double rate) {
    ModelParams p;
    p.sigma0 = x.v[0];
    p.sigma_h = x.v[1];
    p.hurst = x.v[2];
    p.lambda = x.v[3];
    p.mu_y = x.v[4];
    p.sigma_y = x.v[5];
    p.rate = rate;
    return p;
}

}  // namespace

TransformConfig calibration_pricing_config() {
    TransformConfig cfg;
    cfg.talbot_nodes = 12;
    cfg.mellin_step = 0.25;
    cfg.rel_floor = 1e-9;
    return cfg;
}

QuoteSet QuoteSet::from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("quotes: cannot open " + path);
    return from_csv_stream(in);
}

QuoteSet QuoteSet::from_csv_stream(std::istream& in) {
    static const char* kColumns[5] = {"strike", "maturity", "price", "spot", "rate"};
    QuoteSet qs;
    std::string line;
    bool header_seen = false;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto fields = split_fields(t);
        if (!header_seen) {
            if (fields.size() != 5)
                throw std::invalid_argument("quotes: header must have 5 columns, got " +
                                            std::to_string(fields.size()));
            for (int i = 0; i < 5; ++i)
                if (to_lower(fields[static_cast<std::size_t>(i)]) != kColumns[i])
                    throw std::invalid_argument(
                        "quotes: unexpected column '" + fields[static_cast<std::size_t>(i)] +
                        "' (header must be strike,maturity,price,spot,rate)");
            header_seen = true;
            continue;
        }
        if (fields.size() != 5)
            throw std::invalid_argument("quotes: line " + std::to_string(line_no) +
                                        ": expected 5 fields, got " +
                                        std::to_string(fields.size()));
        Quote q;
        q.strike = parse_number(fields[0], line_no);
        q.maturity = parse_number(fields[1], line_no);
        q.price = parse_number(fields[2], line_no);
        q.spot = parse_number(fields[3], line_no);
        q.rate = parse_number(fields[4], line_no);
        if (!(q.strike > 0.0) || !(q.maturity > 0.0) || !(q.price > 0.0) || !(q.spot > 0.0))
            throw std::invalid_argument("quotes: line " + std::to_string(line_no) +
                                        ": strike, maturity, price and spot must be positive");
        qs.quotes.push_back(q);
    }
    if (!header_seen) throw std::invalid_argument("quotes: missing header line");
    return qs;
}

QuoteSet QuoteSet::filtered() const {
    QuoteSet out;
    for (const Quote& q : quotes) {
        const double moneyness = q.spot / q.strike;
        if (moneyness > 0.8 && moneyness < 1.2 && q.maturity < 1.0) out.quotes.push_back(q);
    }
    return out;
}

double objective(const ModelParams& theta, const QuoteSet& quotes, CalibPricer pricer,
                 bool vega_weighted) {
    if (quotes.quotes.empty()) throw std::invalid_argument("calibration: quote set is empty");
    double sum = 0.0;
    for (const Quote& q : quotes.quotes) {
        double model = 0.0;
        try {
            model = price_quote(theta, q, pricer);
        } catch (const std::exception&) {
            return kInf;
        }
        if (!std::isfinite(model)) return kInf;
        double diff = model - q.price;
        if (vega_weighted) {
            const double vega = std::max(
                bs_vega(q.spot, q.strike, q.maturity, reference_vol(theta, q.maturity), q.rate),
                1e-8);
            diff /= vega;
        }
        sum += diff * diff;
    }
    return sum;
}

double rmse_percent(const ModelParams& theta, const QuoteSet& quotes, CalibPricer pricer) {
    if (quotes.quotes.empty()) throw std::invalid_argument("calibration: quote set is empty");
    double sum = 0.0;
    for (const Quote& q : quotes.quotes) {
        if (!(q.price > 0.0))
            throw std::invalid_argument("calibration: rmse needs positive market prices");
        double model = 0.0;
        try {
            model = price_quote(theta, q, pricer);
        } catch (const std::exception&) {
            return kInf;
        }
        if (!std::isfinite(model)) return kInf;
        const double pct = 100.0 * (model - q.price) / q.price;
        sum += pct * pct;
    }
    return std::sqrt(sum / static_cast<double>(quotes.quotes.size()));
}

CalibResult calibrate_de(const QuoteSet& quotes, const ParamBounds& bounds, const DeConfig& cfg) {
    if (quotes.quotes.empty()) throw std::invalid_argument("calibration: quote set is empty");
    if (cfg.population < 5)
        throw std::invalid_argument("calibration: population must be at least 5");
    if (cfg.max_generations < 1)
        throw std::invalid_argument("calibration: max_generations must be positive");
    if (!(cfg.f > 0.0) || !(cfg.f <= 2.0))
        throw std::invalid_argument("calibration: differential weight must lie in (0, 2]");
    if (!(cfg.cr >= 0.0) || !(cfg.cr <= 1.0))
        throw std::invalid_argument("calibration: crossover rate must lie in [0, 1]");
    if (cfg.stagnation < 1) throw std::invalid_argument("calibration: stagnation must be positive");
    if (cfg.threads < 1) throw std::invalid_argument("calibration: threads must be positive");
    for (int d = 0; d < 6; ++d)
        if (!(bounds.lo[d] <= bounds.hi[d]))
            throw std::invalid_argument("calibration: bounds must satisfy lo <= hi");

    const int pop_n = cfg.population;
    constexpr int kDim = 6;
    std::vector<Vec6> pop(static_cast<std::size_t>(pop_n));
    std::vector<double> fit(static_cast<std::size_t>(pop_n), kInf);

    const auto clamp = [&](double x, int d) {
        return std::min(bounds.hi[d], std::max(bounds.lo[d], x));
    };
    // Every candidate (generation, member) owns one deterministic counter
    // stream: results are identical for any thread count.
    const auto stream_id = [&](long gen, int member) {
        return static_cast<std::uint64_t>(gen) * static_cast<std::uint64_t>(pop_n) +
               static_cast<std::uint64_t>(member);
    };
    const auto evaluate = [&](const Vec6& x) {
        ModelParams p = theta_from(x, 0.0);
        try {
            p.validate();
        } catch (const std::exception&) {
            return kInf;
        }
        return objective(p, quotes, cfg.pricer, cfg.vega_weighted);
    };

    for (int i = 0; i < pop_n; ++i) {
        CounterRng rng(cfg.seed, stream_id(0, i));
        for (int d = 0; d < kDim; ++d)
            pop[static_cast<std::size_t>(i)].v[d] =
                bounds.lo[d] + rng.next_uniform() * (bounds.hi[d] - bounds.lo[d]);
    }
    run_indexed(pop_n, cfg.threads,
                [&](int i) { fit[static_cast<std::size_t>(i)] = evaluate(pop[static_cast<std::size_t>(i)]); });
    long evaluations = pop_n;

    int best = 0;
    for (int i = 1; i < pop_n; ++i)
        if (fit[static_cast<std::size_t>(i)] < fit[static_cast<std::size_t>(best)]) best = i;
    if (!std::isfinite(fit[static_cast<std::size_t>(best)]))
        throw std::runtime_error("calibration: no feasible candidate in the initial population");

    std::vector<double> history;
    history.push_back(fit[static_cast<std::size_t>(best)]);

    std::vector<Vec6> trial(static_cast<std::size_t>(pop_n));
    std::vector<double> trial_fit(static_cast<std::size_t>(pop_n), kInf);
    int stale = 0;
    for (long gen = 1; gen <= cfg.max_generations; ++gen) {
        for (int i = 0; i < pop_n; ++i) {
            CounterRng rng(cfg.seed, stream_id(gen, i));
            const auto draw_index = [&] {
                return std::min(pop_n - 1, static_cast<int>(rng.next_uniform() * pop_n));
            };
            int r1 = draw_index();
            while (r1 == i) r1 = draw_index();
            int r2 = draw_index();
            while (r2 == i || r2 == r1) r2 = draw_index();
            int r3 = draw_index();
            while (r3 == i || r3 == r1 || r3 == r2) r3 = draw_index();
            const int j_rand = std::min(kDim - 1, static_cast<int>(rng.next_uniform() * kDim));
            Vec6& t = trial[static_cast<std::size_t>(i)];
            for (int d = 0; d < kDim; ++d) {
                const double u = rng.next_uniform();
                if (u < cfg.cr || d == j_rand) {
                    const double mutant = pop[static_cast<std::size_t>(r1)].v[d] +
                                          cfg.f * (pop[static_cast<std::size_t>(r2)].v[d] -
                                                   pop[static_cast<std::size_t>(r3)].v[d]);
                    t.v[d] = clamp(mutant, d);
                } else {
                    t.v[d] = pop[static_cast<std::size_t>(i)].v[d];
                }
            }
        }
        run_indexed(pop_n, cfg.threads, [&](int i) {
            trial_fit[static_cast<std::size_t>(i)] = evaluate(trial[static_cast<std::size_t>(i)]);
        });
        evaluations += pop_n;

        const double prev_best = fit[static_cast<std::size_t>(best)];
        for (int i = 0; i < pop_n; ++i) {
            if (trial_fit[static_cast<std::size_t>(i)] <= fit[static_cast<std::size_t>(i)]) {
                pop[static_cast<std::size_t>(i)] = trial[static_cast<std::size_t>(i)];
                fit[static_cast<std::size_t>(i)] = trial_fit[static_cast<std::size_t>(i)];
            }
            if (fit[static_cast<std::size_t>(i)] < fit[static_cast<std::size_t>(best)]) best = i;
        }
        history.push_back(fit[static_cast<std::size_t>(best)]);
        const double gain = prev_best - fit[static_cast<std::size_t>(best)];
        if (gain > 1e-12 * std::max(1.0, std::fabs(prev_best)))
            stale = 0;
        else
            ++stale;
        if (stale >= cfg.stagnation) break;
    }

    CalibResult result;
    result.theta_hat = theta_from(pop[static_cast<std::size_t>(best)], quotes.quotes.front().rate);
    result.objective = fit[static_cast<std::size_t>(best)];
    result.history = std::move(history);
    result.evaluations = evaluations;
    result.rmse_pct = rmse_percent(result.theta_hat, quotes, cfg.pricer);
    return result;
}

std::vector<SurfacePoint> rmse_surface(const QuoteSet& quotes, const std::vector<double>& h_grid,
                                       const std::vector<double>& lambda_grid,
                                       const ModelParams& fixed, CalibPricer pricer) {
    if (h_grid.empty() || lambda_grid.empty())
        throw std::invalid_argument("calibration: surface grids must be non-empty");
    std::vector<SurfacePoint> out;
    out.reserve(h_grid.size() * lambda_grid.size());
    for (const double h : h_grid) {
        for (const double lam : lambda_grid) {
            ModelParams p = fixed;
            p.hurst = h;
            p.lambda = lam;
            double r = kInf;
            try {
                p.validate();
                r = rmse_percent(p, quotes, pricer);
            } catch (const std::exception&) {
                r = kInf;
            }
            out.push_back({h, lam, r});
        }
    }
    return out;
}

void write_surface_csv(std::ostream& out, const std::vector<SurfacePoint>& points) {
    const auto flags = out.flags();
    const auto prec = out.precision();
    out << "H,lambda,rmse_pct\n" << std::setprecision(12);
    for (const SurfacePoint& p : points)
        out << p.hurst << ',' << p.lambda << ',' << p.rmse_pct << '\n';
    out.flags(flags);
    out.precision(prec);
}

}  // namespace smfj
