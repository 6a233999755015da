#include "smfj/run_config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace smfj {

namespace {

// Every key the configuration format understands. Parsing rejects anything
// else by name, so a typo like `contract.strke` fails the run instead of
// silently falling back to a default.
constexpr std::array kSchema = {
    // model parameters
    "model.sigma0", "model.sigma_h", "model.hurst", "model.lambda", "model.mu_y",
    "model.sigma_y", "model.rate", "model.mu",
    // contract
    "contract.kind", "contract.spot", "contract.strike", "contract.maturity",
    "contract.barrier",
    // run-level selection and reproducibility
    "run.method", "run.methods", "run.seed", "run.threads",
    // transform pricer
    "transform.talbot_nodes", "transform.mellin_line", "transform.mellin_step",
    "transform.rel_floor", "transform.max_nodes",
    // finite-difference pricer
    "pide.n_space", "pide.n_time", "pide.s_max_trunc", "pide.clustering_q",
    "pide.gauss_hermite_nodes", "pide.krylov_tol", "pide.krylov_max_iter",
    "pide.fft_history", "pide.fft_block", "pide.cross_second_order",
    // Monte Carlo
    "mc.n_paths", "mc.steps_per_year", "mc.seed", "mc.antithetic", "mc.control_variate",
    "mc.bridge_correction",
    // calibration
    "calibrate.quotes", "calibrate.population", "calibrate.max_generations", "calibrate.f",
    "calibrate.cr", "calibrate.seed", "calibrate.stagnation", "calibrate.vega_weighted",
    "calibrate.pricer",
    "bounds.sigma0_lo", "bounds.sigma0_hi", "bounds.sigma_h_lo", "bounds.sigma_h_hi",
    "bounds.hurst_lo", "bounds.hurst_hi", "bounds.lambda_lo", "bounds.lambda_hi",
    "bounds.mu_y_lo", "bounds.mu_y_hi", "bounds.sigma_y_lo", "bounds.sigma_y_hi",
    // RMSE surface
    "surface.h_values", "surface.lambda_values",
    // convergence study
    "converge.levels", "converge.dt0", "converge.dx_scale", "converge.reference",
    // greeks
    "greeks.pricer", "greeks.method", "greeks.bump_rel", "greeks.n_space", "greeks.n_time",
    "greeks.s_max_trunc", "greeks.smile", "greeks.smile_lo", "greeks.smile_hi",
    "greeks.smile_points",
    // simulation report
    "simulate.batches",
};

bool in_schema(const std::string& key) {
    return std::find(kSchema.begin(), kSchema.end(), key) != kSchema.end();
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* wanted) {
    throw ConfigError("config key '" + key + "': cannot read '" + value + "' as " + wanted);
}

double parse_double(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) bad_value(key, value, "a number");
    return x;
}

long long parse_int(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size()) bad_value(key, value, "an integer");
    return x;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return from_stream(in, path);
}

RunConfig RunConfig::from_stream(std::istream& in, const std::string& origin) {
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected `key = value`, got '" + stripped + "'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (value.empty()) throw ConfigError(where + ": empty value for key '" + key + "'");
        if (!in_schema(key)) throw ConfigError(where + ": unknown key '" + key + "'");
        if (cfg.kv_.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        cfg.kv_[key] = value;
    }
    return cfg;
}

bool RunConfig::has(const std::string& key) const { return kv_.count(key) != 0; }

void RunConfig::set(const std::string& key, const std::string& value) {
    if (!in_schema(key)) throw ConfigError("unknown key '" + key + "'");
    kv_[key] = trim(value);
}

std::string RunConfig::get_string(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing required config key '" + key + "'");
    return it->second;
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key) const {
    return parse_double(key, get_string(key));
}

double RunConfig::get_double(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_double(key, it->second);
}

long long RunConfig::get_int(const std::string& key) const {
    return parse_int(key, get_string(key));
}

long long RunConfig::get_int(const std::string& key, long long fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_int(key, it->second);
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const std::string v = trim(it->second);
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || v[0] == '-')
        bad_value(key, it->second, "an unsigned integer");
    return x;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::string v = trim(it->second);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(key, it->second, "a boolean");
}

std::vector<double> RunConfig::get_list(const std::string& key) const {
    const std::string raw = get_string(key);
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= raw.size()) {
        const std::size_t comma = raw.find(',', start);
        const std::string item =
            raw.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (trim(item).empty()) bad_value(key, raw, "a comma-separated number list");
        out.push_back(parse_double(key, item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string RunConfig::canonical() const {
    std::ostringstream os;
    // run.threads caps workers without affecting any result, so it stays out
    // of the canonical form: outputs are byte-identical at any thread count.
    for (const auto& [k, v] : kv_)
        if (k != "run.threads") os << k << " = " << v << "\n";
    return os.str();
}

std::uint64_t RunConfig::hash() const {
    const std::string text = canonical();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

namespace {

// Model/contract validation failures triggered by config values are config
// errors for the command line, not numerical ones.
template <class F>
void checked(F&& validate) {
    try {
        validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace

ModelParams model_from(const RunConfig& cfg) {
    ModelParams p;
    p.sigma0 = cfg.get_double("model.sigma0");
    p.sigma_h = cfg.get_double("model.sigma_h", 0.0);
    p.hurst = cfg.get_double("model.hurst");
    p.lambda = cfg.get_double("model.lambda", 0.0);
    p.mu_y = cfg.get_double("model.mu_y", 0.0);
    p.sigma_y = cfg.get_double("model.sigma_y", 0.0);
    p.rate = cfg.get_double("model.rate");
    p.mu = cfg.get_double("model.mu", 0.0);
    checked([&] { p.validate(); });
    return p;
}

OptionContract contract_from(const RunConfig& cfg) {
    OptionContract c;
    const std::string kind = cfg.get_string("contract.kind");
    if (kind == "european_call")
        c.kind = OptionKind::european_call;
    else if (kind == "european_put")
        c.kind = OptionKind::european_put;
    else if (kind == "down_and_out_call")
        c.kind = OptionKind::down_and_out_call;
    else
        throw ConfigError("config key 'contract.kind': unknown kind '" + kind +
                          "' (expected european_call, european_put or down_and_out_call)");
    c.spot = cfg.get_double("contract.spot");
    c.strike = cfg.get_double("contract.strike");
    c.maturity = cfg.get_double("contract.maturity");
    if (c.kind == OptionKind::down_and_out_call) {
        c.barrier = cfg.get_double("contract.barrier");
    } else if (cfg.has("contract.barrier")) {
        throw ConfigError("config key 'contract.barrier' is set but contract.kind is " + kind);
    }
    checked([&] { c.validate(); });
    return c;
}

TransformConfig transform_config_from(const RunConfig& cfg) {
    TransformConfig t;
    t.talbot_nodes = static_cast<int>(cfg.get_int("transform.talbot_nodes", t.talbot_nodes));
    t.mellin_line = cfg.get_double("transform.mellin_line", t.mellin_line);
    t.mellin_step = cfg.get_double("transform.mellin_step", t.mellin_step);
    t.rel_floor = cfg.get_double("transform.rel_floor", t.rel_floor);
    t.max_nodes = cfg.get_int("transform.max_nodes", t.max_nodes);
    return t;
}

PideConfig pide_config_from(const RunConfig& cfg) {
    PideConfig p;
    p.gauss_hermite_nodes =
        static_cast<int>(cfg.get_int("pide.gauss_hermite_nodes", p.gauss_hermite_nodes));
    p.krylov_tol = cfg.get_double("pide.krylov_tol", p.krylov_tol);
    p.krylov_max_iter = static_cast<int>(cfg.get_int("pide.krylov_max_iter", p.krylov_max_iter));
    p.fft_history = cfg.get_bool("pide.fft_history", p.fft_history);
    p.fft_block = static_cast<int>(cfg.get_int("pide.fft_block", p.fft_block));
    p.cross_second_order = cfg.get_bool("pide.cross_second_order", p.cross_second_order);
    return p;
}

McConfig mc_config_from(const RunConfig& cfg, std::uint64_t seed, int threads) {
    McConfig m;
    m.n_paths = cfg.get_int("mc.n_paths", m.n_paths);
    m.steps_per_year = static_cast<int>(cfg.get_int("mc.steps_per_year", m.steps_per_year));
    m.seed = seed;
    m.threads = threads;
    m.antithetic = cfg.get_bool("mc.antithetic", m.antithetic);
    const std::string cv = cfg.get_string("mc.control_variate", "none");
    if (cv == "none")
        m.control_variate = ControlVariate::none;
    else if (cv == "bs_barrier_analytic")
        m.control_variate = ControlVariate::bs_barrier_analytic;
    else
        throw ConfigError("config key 'mc.control_variate': unknown value '" + cv +
                          "' (expected none or bs_barrier_analytic)");
    m.bridge_correction = cfg.get_bool("mc.bridge_correction", m.bridge_correction);
    return m;
}

DeConfig de_config_from(const RunConfig& cfg, std::uint64_t seed) {
    DeConfig d;
    d.population = static_cast<int>(cfg.get_int("calibrate.population", d.population));
    d.max_generations =
        static_cast<int>(cfg.get_int("calibrate.max_generations", d.max_generations));
    d.f = cfg.get_double("calibrate.f", d.f);
    d.cr = cfg.get_double("calibrate.cr", d.cr);
    d.seed = seed;
    d.threads = static_cast<int>(cfg.get_int("run.threads", d.threads));
    d.stagnation = static_cast<int>(cfg.get_int("calibrate.stagnation", d.stagnation));
    d.vega_weighted = cfg.get_bool("calibrate.vega_weighted", d.vega_weighted);
    const std::string pr = cfg.get_string("calibrate.pricer", "transform");
    if (pr == "transform")
        d.pricer = CalibPricer::transform;
    else if (pr == "pide")
        d.pricer = CalibPricer::pide;
    else
        throw ConfigError("config key 'calibrate.pricer': unknown value '" + pr +
                          "' (expected transform or pide)");
    return d;
}

ParamBounds bounds_from(const RunConfig& cfg) {
    ParamBounds b;
    const char* names[6] = {"sigma0", "sigma_h", "hurst", "lambda", "mu_y", "sigma_y"};
    for (int i = 0; i < 6; ++i) {
        b.lo[i] = cfg.get_double(std::string("bounds.") + names[i] + "_lo", b.lo[i]);
        b.hi[i] = cfg.get_double(std::string("bounds.") + names[i] + "_hi", b.hi[i]);
        if (!(b.lo[i] <= b.hi[i]))
            throw ConfigError(std::string("config bounds for ") + names[i] +
                              ": lower bound exceeds upper bound");
    }
    return b;
}

GreeksConfig greeks_config_from(const RunConfig& cfg) {
    GreeksConfig g;
    const std::string pricer = cfg.get_string("greeks.pricer", "transform");
    if (pricer == "transform")
        g.pricer = GreekPricer::transform;
    else if (pricer == "pide")
        g.pricer = GreekPricer::pide;
    else
        throw ConfigError("config key 'greeks.pricer': unknown value '" + pricer +
                          "' (expected transform or pide)");
    const std::string method = cfg.get_string("greeks.method", "dual");
    if (method == "dual")
        g.method = GreekMethod::dual;
    else if (method == "bump")
        g.method = GreekMethod::bump;
    else
        throw ConfigError("config key 'greeks.method': unknown value '" + method +
                          "' (expected dual or bump)");
    g.bump_rel = cfg.get_double("greeks.bump_rel", g.bump_rel);
    g.n_space = static_cast<int>(cfg.get_int("greeks.n_space", g.n_space));
    g.n_time = static_cast<int>(cfg.get_int("greeks.n_time", g.n_time));
    g.s_max_trunc = cfg.get_double("greeks.s_max_trunc", g.s_max_trunc);
    g.transform = transform_config_from(cfg);
    g.pide = pide_config_from(cfg);
    return g;
}

GridSpec grid_from(const RunConfig& cfg, const OptionContract& c, const ModelParams& p) {
    const int n_space = static_cast<int>(cfg.get_int("pide.n_space", 400));
    const int n_time = static_cast<int>(cfg.get_int("pide.n_time", 400));
    GridSpec g;
    if (c.kind == OptionKind::down_and_out_call) {
        double s_max = cfg.get_double("pide.s_max_trunc", 0.0);
        if (s_max <= 0.0) {
            // Same width rule as the European grid: ten total standard
            // deviations above max(spot, strike), floored at one log unit.
            const double t = c.maturity;
            const double ch = 2.0 - std::pow(2.0, 2.0 * p.hurst - 1.0);
            const double var = p.sigma0 * p.sigma0 * t +
                               p.sigma_h * p.sigma_h * ch * std::pow(t, 2.0 * p.hurst) +
                               p.lambda * t * (p.mu_y * p.mu_y + p.sigma_y * p.sigma_y);
            const double w = std::max(10.0 * std::sqrt(std::max(var, 0.0)), 1.0);
            s_max = std::exp(std::max(std::log(c.spot), std::log(c.strike)) + w);
        }
        g = GridSpec::for_barrier(c, p, n_space, n_time, s_max,
                                  cfg.get_double("pide.clustering_q", 0.97));
    } else {
        g = GridSpec::for_european(c, p, n_space, n_time);
        if (cfg.has("pide.clustering_q")) g.clustering_q = cfg.get_double("pide.clustering_q");
    }
    checked([&] { g.validate(c); });
    return g;
}

std::uint64_t resolve_seed(const RunConfig& cfg, const std::string& specific_key) {
    if (cfg.has("run.seed")) return cfg.get_u64("run.seed", 1);
    return cfg.get_u64(specific_key, 1);
}

}  // namespace smfj
