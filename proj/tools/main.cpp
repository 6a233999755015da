// Batch front end: prices, cross-validation tables, path simulations,
// calibration, RMSE surfaces, convergence studies and Greek reports, all
// driven by a flat plain-text config.  Exit codes: 0 ok, 2 config error,
// 3 numerical failure.  Output files start with a provenance comment naming
// the resolved-config hash and seed; reruns with the same config and seed are
// byte-identical (pass --timings to record wall-clock columns instead of
// "na", which intentionally gives up that guarantee).
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "smfj/calibration.hpp"
#include "smfj/greeks.hpp"
#include "smfj/model.hpp"
#include "smfj/monte_carlo.hpp"
#include "smfj/pide_solver.hpp"
#include "smfj/run_config.hpp"
#include "smfj/transform_pricer.hpp"

namespace {

using namespace smfj;

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::string seed;     // empty = not given
    int threads = -1;     // -1 = not given
    std::string method;   // empty = not given
    bool timings = false;
};

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Diagnostics ride in one unquoted CSV field; keep it comma-free.
std::string sanitize(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    return s;
}

class Timer {
  public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                         start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open output file '" + path + "'");
    return os;
}

void provenance(std::ostream& os, const RunConfig& cfg, std::uint64_t seed) {
    os << "# cfg=" << hex64(cfg.hash()) << " seed=" << seed << "\n";
}

// Every run logs the full resolved configuration and the seed it used.
void log_resolved(const RunConfig& cfg, std::uint64_t seed) {
    std::cout << "# resolved configuration (cfg=" << hex64(cfg.hash()) << " seed=" << seed
              << ")\n"
              << cfg.canonical();
}

PricingResult price_one(const std::string& method, const RunConfig& cfg,
                        const OptionContract& c, const ModelParams& p, std::uint64_t seed,
                        int threads) {
    if (method == "transform") {
        if (c.kind == OptionKind::down_and_out_call)
            throw ConfigError("method transform prices european contracts only; "
                              "use pide or mc for barrier contracts");
        return price_transform(p, c, transform_config_from(cfg));
    }
    if (method == "pide") return solve_pide(c, p, grid_from(cfg, c, p), pide_config_from(cfg));
    if (method == "mc") return price_mc(c, p, mc_config_from(cfg, seed, threads));
    throw ConfigError("unknown method '" + method + "' (expected transform, pide or mc)");
}

int cmd_price(const RunConfig& cfg, const CommonArgs& args) {
    const ModelParams p = model_from(cfg);
    const OptionContract c = contract_from(cfg);
    const std::string method = cfg.get_string("run.method");
    const std::uint64_t seed = resolve_seed(cfg, "mc.seed");
    const int threads = static_cast<int>(cfg.get_int("run.threads", 1));
    log_resolved(cfg, seed);

    Timer timer;
    const PricingResult r = price_one(method, cfg, c, p, seed, threads);
    const double elapsed = timer.ms();
    if (!std::isfinite(r.price)) throw std::runtime_error("pricer returned a non-finite price");

    std::string diag = "grid=" + sanitize(r.grid) + ";iterations=" + std::to_string(r.iterations) +
                       ";residual=" + fmt(r.residual) + ";norm_ratio=" + fmt(r.norm_ratio);
    std::ofstream os = open_out(args.out_path);
    provenance(os, cfg, seed);
    os << "method,price,std_err,runtime_ms,diagnostics\n";
    os << method << ',' << fmt(r.price) << ',' << fmt(r.std_err) << ','
       << (args.timings ? fmt(elapsed) : std::string("na")) << ',' << diag << "\n";
    std::cout << "price " << fmt(r.price) << " std_err " << fmt(r.std_err) << " -> "
              << args.out_path << "\n";
    return 0;
}

int cmd_crossval(const RunConfig& cfg, const CommonArgs& args) {
    const ModelParams p = model_from(cfg);
    const OptionContract c = contract_from(cfg);
    const std::uint64_t seed = resolve_seed(cfg, "mc.seed");
    const int threads = static_cast<int>(cfg.get_int("run.threads", 1));

    std::vector<std::string> methods;
    {
        const std::string raw = cfg.get_string("run.methods");
        std::istringstream is(raw);
        std::string item;
        while (std::getline(is, item, ',')) {
            item.erase(0, item.find_first_not_of(" \t"));
            item.erase(item.find_last_not_of(" \t") + 1);
            if (item.empty()) throw ConfigError("config key 'run.methods': empty method name");
            if (std::find(methods.begin(), methods.end(), item) != methods.end())
                throw ConfigError("config key 'run.methods': method '" + item + "' repeated");
            methods.push_back(item);
        }
    }
    if (methods.size() < 2)
        throw ConfigError("crossval needs at least two methods in run.methods");
    if (std::find(methods.begin(), methods.end(), "mc") == methods.end())
        throw ConfigError("crossval compares against mc; add mc to run.methods");
    log_resolved(cfg, seed);

    std::vector<PricingResult> results;
    std::vector<double> runtimes;
    for (const std::string& m : methods) {
        Timer timer;
        results.push_back(price_one(m, cfg, c, p, seed, threads));
        runtimes.push_back(timer.ms() / 1e3);
        if (!std::isfinite(results.back().price))
            throw std::runtime_error("method " + m + " returned a non-finite price");
    }
    double mc_price = 0.0;
    for (std::size_t i = 0; i < methods.size(); ++i)
        if (methods[i] == "mc") mc_price = results[i].price;

    std::ofstream os = open_out(args.out_path);
    provenance(os, cfg, seed);
    os << "method,price,rel_diff_vs_mc_pct,runtime_s\n";
    for (std::size_t i = 0; i < methods.size(); ++i) {
        const double rel = 100.0 * (results[i].price - mc_price) / mc_price;
        os << methods[i] << ',' << fmt(results[i].price) << ',' << fmt(rel) << ','
           << (args.timings ? fmt(runtimes[i]) : std::string("na")) << "\n";
        std::cout << methods[i] << " " << fmt(results[i].price) << " (" << fmt(rel)
                  << "% vs mc)\n";
    }
    std::cout << "-> " << args.out_path << "\n";
    return 0;
}

int cmd_simulate(const RunConfig& cfg, const CommonArgs& args) {
    const ModelParams p = model_from(cfg);
    const OptionContract c = contract_from(cfg);
    const std::uint64_t seed = resolve_seed(cfg, "mc.seed");
    const int threads = static_cast<int>(cfg.get_int("run.threads", 1));
    const long long batches = cfg.get_int("simulate.batches", 20);
    if (batches < 1) throw ConfigError("config key 'simulate.batches': need at least 1");
    log_resolved(cfg, seed);

    std::vector<McBatchStat> stats;
    McConfig mcfg = mc_config_from(cfg, seed, threads);
    mcfg.batch_stats = &stats;
    const PricingResult r = price_mc(c, p, mcfg);
    if (!std::isfinite(r.price)) throw std::runtime_error("simulation returned a non-finite price");

    // Thin the per-block running estimates to ~`batches` evenly spaced rows,
    // always keeping the final one (the full-sample estimate).
    std::vector<std::size_t> pick;
    const std::size_t nb = stats.size();
    const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(batches), nb);
    for (std::size_t j = 1; j <= want; ++j)
        pick.push_back(j * nb / want - 1);
    pick.erase(std::unique(pick.begin(), pick.end()), pick.end());

    std::ofstream os = open_out(args.out_path);
    provenance(os, cfg, seed);
    os << "batch,running_mean,running_se\n";
    for (std::size_t idx : pick)
        os << stats[idx].batch << ',' << fmt(stats[idx].mean) << ',' << fmt(stats[idx].se)
           << "\n";
    std::cout << "price " << fmt(r.price) << " std_err " << fmt(r.std_err) << " over "
              << nb << " blocks -> " << args.out_path << "\n";
    return 0;
}

QuoteSet load_quotes(const RunConfig& cfg) {
    const std::string path = cfg.get_string("calibrate.quotes");
    QuoteSet qs;
    try {
        qs = QuoteSet::from_csv(path);
    } catch (const std::exception& e) {
        throw ConfigError("config key 'calibrate.quotes': " + std::string(e.what()));
    }
    QuoteSet usable = qs.filtered();
    if (usable.quotes.empty())
        throw ConfigError("no quotes survive the liquidity filter (0.8 < spot/strike < 1.2, "
                          "maturity < 1)");
    return usable;
}

int cmd_calibrate(const RunConfig& cfg, const CommonArgs& args) {
    const QuoteSet quotes = load_quotes(cfg);
    const std::uint64_t seed = resolve_seed(cfg, "calibrate.seed");
    const DeConfig de = de_config_from(cfg, seed);
    const ParamBounds bounds = bounds_from(cfg);
    log_resolved(cfg, seed);

    const CalibResult r = calibrate_de(quotes, bounds, de);
    if (!std::isfinite(r.objective))
        throw std::runtime_error("calibration objective is non-finite");

    std::ofstream os = open_out(args.out_path);
    provenance(os, cfg, seed);
    os << "sigma0,sigma_h,hurst,lambda,mu_y,sigma_y,rate,rmse_pct,objective,evaluations,"
          "generations\n";
    os << fmt(r.theta_hat.sigma0) << ',' << fmt(r.theta_hat.sigma_h) << ','
       << fmt(r.theta_hat.hurst) << ',' << fmt(r.theta_hat.lambda) << ','
       << fmt(r.theta_hat.mu_y) << ',' << fmt(r.theta_hat.sigma_y) << ','
       << fmt(r.theta_hat.rate) << ',' << fmt(r.rmse_pct) << ',' << fmt(r.objective) << ','
       << r.evaluations << ',' << (r.history.empty() ? 0 : r.history.size() - 1) << "\n";
    std::cout << "calibrated: sigma0=" << fmt(r.theta_hat.sigma0)
              << " sigma_h=" << fmt(r.theta_hat.sigma_h) << " hurst=" << fmt(r.theta_hat.hurst)
              << " lambda=" << fmt(r.theta_hat.lambda) << " mu_y=" << fmt(r.theta_hat.mu_y)
              << " sigma_y=" << fmt(r.theta_hat.sigma_y) << " rmse_pct=" << fmt(r.rmse_pct)
              << " -> " << args.out_path << "\n";
    return 0;
}

int cmd_surface(const RunConfig& cfg, const CommonArgs& args) {
    const QuoteSet quotes = load_quotes(cfg);
    const ModelParams fixed = model_from(cfg);
    const std::vector<double> h_grid = cfg.get_list("surface.h_values");
    const std::vector<double> l_grid = cfg.get_list("surface.lambda_values");
    const std::uint64_t seed = resolve_seed(cfg, "calibrate.seed");
    const DeConfig de = de_config_from(cfg, seed);  // reuses the pricer selection
    log_resolved(cfg, seed);

    const std::vector<SurfacePoint> points =
        rmse_surface(quotes, h_grid, l_grid, fixed, de.pricer);

    std::ofstream os = open_out(args.out_path);
    provenance(os, cfg, seed);
    write_surface_csv(os, points);
    std::cout << points.size() << " surface points -> " << args.out_path << "\n";
    return 0;
}

int cmd_converge(const RunConfig& cfg, const CommonArgs& args) {
    const ModelParams p = model_from(cfg);
    const OptionContract c = contract_from(cfg);
    const long long n_levels = cfg.get_int("converge.levels", 4);
    if (n_levels < 2 || n_levels > 12)
        throw ConfigError("config key 'converge.levels': need between 2 and 12 levels");
    const double dt0 = cfg.get_double("converge.dt0", c.maturity / 64.0);
    if (!(dt0 > 0.0) || !(dt0 <= c.maturity))
        throw ConfigError("config key 'converge.dt0': need 0 < dt0 <= maturity");
    const double dx_scale = cfg.get_double("converge.dx_scale", 0.25);
    if (!(dx_scale > 0.0)) throw ConfigError("config key 'converge.dx_scale': must be positive");
    const double reference =
        cfg.get_double("converge.reference", std::numeric_limits<double>::quiet_NaN());
    const std::uint64_t seed = resolve_seed(cfg, "mc.seed");
    log_resolved(cfg, seed);

    // Time step halves per level; the space step follows dt^{1/2} so the
    // regression reads the combined refinement as a function of dt alone.
    std::vector<std::pair<double, double>> levels;
    for (long long i = 0; i < n_levels; ++i) {
        const double dt = dt0 / static_cast<double>(1LL << i);
        levels.emplace_back(dt, dx_scale * std::sqrt(dt));
    }
    const ConvergenceStudy cs = convergence_study(c, p, levels, reference, pide_config_from(cfg));

    std::ofstream os = open_out(args.out_path);
    provenance(os, cfg, seed);
    os << "# slope=" << fmt(cs.slope) << " reference=" << fmt(cs.reference) << "\n";
    os << "dt,dx,price,error\n";
    for (std::size_t i = 0; i < cs.dts.size(); ++i)
        os << fmt(cs.dts[i]) << ',' << fmt(cs.dxs[i]) << ',' << fmt(cs.prices[i]) << ','
           << fmt(cs.errors[i]) << "\n";
    std::cout << "slope " << fmt(cs.slope) << " over " << cs.dts.size() << " levels -> "
              << args.out_path << "\n";
    return 0;
}

int cmd_greeks(const RunConfig& cfg, const CommonArgs& args) {
    const ModelParams p = model_from(cfg);
    const OptionContract c = contract_from(cfg);
    const GreeksConfig gcfg = greeks_config_from(cfg);
    const std::uint64_t seed = resolve_seed(cfg, "mc.seed");
    log_resolved(cfg, seed);

    if (cfg.get_bool("greeks.smile", false)) {
        const double lo = cfg.get_double("greeks.smile_lo", 0.8);
        const double hi = cfg.get_double("greeks.smile_hi", 1.2);
        const long long n = cfg.get_int("greeks.smile_points", 9);
        if (n < 9 || n > 1000)
            throw ConfigError("config key 'greeks.smile_points': need between 9 and 1000");
        std::vector<VannaSmileRow> rows;
        try {
            rows = vanna_smile(c, p, moneyness_grid(lo, hi, static_cast<int>(n)), gcfg);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        std::ofstream os = open_out(args.out_path);
        provenance(os, cfg, seed);
        write_vanna_smile_csv(os, rows);
        std::cout << rows.size() << " smile points -> " << args.out_path << "\n";
        return 0;
    }

    GreekReport rep;
    try {
        rep = greeks(c, p, gcfg);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    std::ofstream os = open_out(args.out_path);
    provenance(os, cfg, seed);
    os << "# pricer=" << rep.pricer << " method=" << rep.method << " bump_spot="
       << fmt(rep.bump_spot) << " bump_sigma0=" << fmt(rep.bump_sigma0)
       << " bump_sigmah=" << fmt(rep.bump_sigmah) << "\n";
    os << "greek,value,ok\n";
    os << "price," << fmt(rep.price) << ',' << (rep.price_ok ? 1 : 0) << "\n";
    os << "delta," << fmt(rep.delta) << ',' << (rep.delta_ok ? 1 : 0) << "\n";
    os << "gamma," << fmt(rep.gamma) << ',' << (rep.gamma_ok ? 1 : 0) << "\n";
    os << "vega0," << fmt(rep.vega0) << ',' << (rep.vega0_ok ? 1 : 0) << "\n";
    os << "vegah," << fmt(rep.vegah) << ',' << (rep.vegah_ok ? 1 : 0) << "\n";
    os << "vanna," << fmt(rep.vanna) << ',' << (rep.vanna_ok ? 1 : 0) << "\n";
    os.flush();
    std::cout << (rep.complete() ? "complete" : "partial") << " report -> " << args.out_path
              << "\n";
    if (!rep.complete())
        throw std::runtime_error("greek report incomplete; see flags in " + args.out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Derivative pricing under a mixed classical/sub-fractional diffusion with "
                 "jumps: transform, finite-difference and Monte Carlo engines"};
    app.require_subcommand(1);

    CommonArgs args;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"price", "price one contract with one method"},
        {"crossval", "price with several methods and compare against mc"},
        {"simulate", "Monte Carlo run with running batch statistics"},
        {"calibrate", "fit model parameters to a quote CSV by differential evolution"},
        {"surface", "RMSE landscape over a (hurst, lambda) grid"},
        {"converge", "finite-difference self-convergence study"},
        {"greeks", "sensitivity report or vanna smile"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", args.config_path, "path to the flat key=value config file")
            ->required();
        sub->add_option("--out", args.out_path, "output CSV path (default <command>.csv)");
        sub->add_option("--seed", args.seed, "seed override (sets run.seed)");
        sub->add_option("--threads", args.threads, "worker cap (sets run.threads)");
        sub->add_option("--method", args.method,
                        "pricing method override (sets run.method): transform|pide|mc");
        sub->add_flag("--timings", args.timings,
                      "record wall-clock columns (makes reruns differ byte-wise)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (args.out_path.empty()) args.out_path = cmd + ".csv";

    try {
        RunConfig cfg = RunConfig::from_file(args.config_path);
        if (!args.seed.empty()) cfg.set("run.seed", args.seed);
        if (args.threads >= 0) {
            if (args.threads < 1) throw ConfigError("--threads: need at least 1");
            cfg.set("run.threads", std::to_string(args.threads));
        }
        if (!args.method.empty()) cfg.set("run.method", args.method);

        if (cmd == "price") return cmd_price(cfg, args);
        if (cmd == "crossval") return cmd_crossval(cfg, args);
        if (cmd == "simulate") return cmd_simulate(cfg, args);
        if (cmd == "calibrate") return cmd_calibrate(cfg, args);
        if (cmd == "surface") return cmd_surface(cfg, args);
        if (cmd == "converge") return cmd_converge(cfg, args);
        if (cmd == "greeks") return cmd_greeks(cfg, args);
        throw ConfigError("unknown command '" + cmd + "'");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
