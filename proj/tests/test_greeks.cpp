#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "smfj/black_scholes.hpp"
#include "smfj/dual.hpp"
#include "smfj/greeks.hpp"
#include "smfj/model.hpp"
#include "smfj/transform_pricer.hpp"

using namespace smfj;

namespace {

ModelParams classical_params() {
    ModelParams p;
    p.sigma0 = 0.2;
    p.sigma_h = 0.0;
    p.hurst = 0.0;
    p.lambda = 0.0;
    p.rate = 0.05;
    return p;
}

ModelParams memory_params() {
    ModelParams p;
    p.sigma0 = 0.14;
    p.sigma_h = 0.10;
    p.hurst = 0.35;
    p.lambda = 0.0;
    p.rate = 0.03;
    return p;
}

ModelParams full_params() {
    ModelParams p = memory_params();
    p.lambda = 0.85;
    p.mu_y = -0.05;
    p.sigma_y = 0.25;
    return p;
}

OptionContract euro_call(double spot, double strike, double maturity) {
    OptionContract c;
    c.kind = OptionKind::european_call;
    c.spot = spot;
    c.strike = strike;
    c.maturity = maturity;
    return c;
}

// Spec'd agreement metric between differentiation methods: absolute gap
// normalised by the dual value, floored at one so tiny greeks are compared
// absolutely.
double rel_gap(double dual, double bump) {
    return std::fabs(dual - bump) / std::max(1.0, std::fabs(dual));
}

} // namespace

TEST_CASE("transform duals reproduce the closed-form greeks without memory or jumps") {
    const OptionContract c = euro_call(100.0, 100.0, 1.0);
    const ModelParams p = classical_params();
    const GreekReport r = greeks(c, p, GreekPricer::transform, GreekMethod::dual);

    CHECK(r.complete());
    CHECK(r.method == "dual");
    CHECK(r.pricer == "transform");

    const double bd = bs_delta_call(100.0, 100.0, 1.0, 0.2, 0.05);
    const double bg = bs_gamma(100.0, 100.0, 1.0, 0.2, 0.05);
    const double bv = bs_vega(100.0, 100.0, 1.0, 0.2, 0.05);
    const double bva = bs_vanna(100.0, 100.0, 1.0, 0.2, 0.05);

    CHECK(r.price == doctest::Approx(bs_call(100.0, 100.0, 1.0, 0.2, 0.05)).epsilon(1e-8));
    CHECK(r.delta == doctest::Approx(bd).epsilon(1e-6));
    CHECK(r.gamma == doctest::Approx(bg).epsilon(1e-6));
    CHECK(r.vega0 == doctest::Approx(bv).epsilon(1e-6));
    CHECK(r.vanna == doctest::Approx(bva).epsilon(1e-6));
    // With the memory channel disabled the value has no sigma_h dependence at
    // all, so the directional derivative is exactly zero.
    CHECK(r.vegah == 0.0);

    // Reference magnitude for the at-the-money delta in this setting.
    CHECK(r.delta == doctest::Approx(0.6368).epsilon(3e-4));
}

TEST_CASE("finite-difference duals land near the closed forms on a moderate grid") {
    const OptionContract c = euro_call(100.0, 100.0, 1.0);
    const ModelParams p = classical_params();
    GreeksConfig cfg;
    cfg.pricer = GreekPricer::pide;
    cfg.method = GreekMethod::dual;
    cfg.n_space = 400;
    cfg.n_time = 200;
    const GreekReport r = greeks(c, p, cfg);

    CHECK(r.complete());
    CHECK(r.pricer == "pide");

    CHECK(std::fabs(r.delta - bs_delta_call(100.0, 100.0, 1.0, 0.2, 0.05)) < 3e-4);
    CHECK(std::fabs(r.gamma - bs_gamma(100.0, 100.0, 1.0, 0.2, 0.05)) < 2e-4);
    CHECK(std::fabs(r.vega0 - bs_vega(100.0, 100.0, 1.0, 0.2, 0.05)) < 5e-2);
    CHECK(std::fabs(r.vanna - bs_vanna(100.0, 100.0, 1.0, 0.2, 0.05)) < 1e-3);
}

TEST_CASE("deep in-the-money delta approaches one") {
    OptionContract c = euro_call(300.0, 100.0, 0.1);
    ModelParams p = classical_params();
    p.sigma0 = 0.1;
    const GreekReport r = greeks(c, p, GreekPricer::transform, GreekMethod::dual);
    CHECK(r.delta > 0.99);
    CHECK(r.delta < 1.0 + 1e-9);
}

TEST_CASE("dual and bump greeks agree on the transform route") {
    const double tol1 = 1e-4; // first-order greeks
    const double tol2 = 1e-3; // second-order greeks

    auto check_pair = [&](const OptionContract& c, const ModelParams& p) {
        const GreekReport d = greeks(c, p, GreekPricer::transform, GreekMethod::dual);
        const GreekReport b = greeks(c, p, GreekPricer::transform, GreekMethod::bump);
        REQUIRE(d.complete());
        REQUIRE(b.complete());
        CHECK(rel_gap(d.delta, b.delta) < tol1);
        CHECK(rel_gap(d.vega0, b.vega0) < tol1);
        CHECK(rel_gap(d.vegah, b.vegah) < tol1);
        CHECK(rel_gap(d.gamma, b.gamma) < tol2);
        CHECK(rel_gap(d.vanna, b.vanna) < tol2);
    };

    check_pair(euro_call(4200.0, 4200.0, 0.5), full_params());

    // Seeded draws across the calibration box (kept away from the short-dated
    // deep-wing corner where the transform representation is unreliable).
    std::mt19937 gen(20260816u);
    auto unif = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(gen);
    };
    for (int i = 0; i < 6; ++i) {
        ModelParams p;
        p.sigma0 = unif(0.08, 0.35);
        p.sigma_h = unif(0.02, 0.30);
        p.hurst = unif(0.15, 0.80);
        p.lambda = unif(0.10, 1.50);
        p.mu_y = unif(-0.25, 0.20);
        p.sigma_y = unif(0.08, 0.40);
        p.rate = unif(0.0, 0.06);
        OptionContract c = euro_call(100.0, 100.0, unif(0.25, 1.25));
        c.spot = 100.0 * unif(0.88, 1.15);
        if (i % 2 == 1) c.kind = OptionKind::european_put;
        CAPTURE(i);
        check_pair(c, p);
    }
}

TEST_CASE("dual and bump greeks agree on the finite-difference route") {
    GreeksConfig cfg;
    cfg.pricer = GreekPricer::pide;
    cfg.n_space = 200;
    cfg.n_time = 100;

    const OptionContract c = euro_call(4200.0, 4200.0, 0.5);
    const ModelParams p = full_params();

    cfg.method = GreekMethod::dual;
    const GreekReport d = greeks(c, p, cfg);
    cfg.method = GreekMethod::bump;
    const GreekReport b = greeks(c, p, cfg);

    REQUIRE(d.complete());
    REQUIRE(b.complete());
    CHECK(rel_gap(d.delta, b.delta) < 1e-4);
    CHECK(rel_gap(d.vega0, b.vega0) < 1e-4);
    CHECK(rel_gap(d.vegah, b.vegah) < 1e-4);
    CHECK(rel_gap(d.gamma, b.gamma) < 1e-3);
    CHECK(rel_gap(d.vanna, b.vanna) < 1e-3);
}

TEST_CASE("gamma is nonnegative for european options") {
    const std::vector<ModelParams> sets = {classical_params(), memory_params(), full_params()};
    for (std::size_t si = 0; si < sets.size(); ++si) {
        for (double m : {0.85, 1.0, 1.15}) {
            const OptionContract c = euro_call(100.0 * m, 100.0, 0.75);
            const GreekReport r = greeks(c, sets[si], GreekPricer::transform, GreekMethod::dual);
            CAPTURE(si);
            CAPTURE(m);
            CHECK(r.gamma >= -1e-10);
        }
    }
}

TEST_CASE("value is first-order homogeneous in spot and strike") {
    // Euler's relation S dV/dS + K dV/dK = V for a payoff that is jointly
    // linear in (spot, strike), checked through the dual seeds directly.
    const ModelParams p = full_params();
    ModelParamsT<Dual2> pd;
    pd.sigma0 = Dual2(p.sigma0);
    pd.sigma_h = Dual2(p.sigma_h);
    pd.lambda = Dual2(p.lambda);
    pd.mu_y = Dual2(p.mu_y);
    pd.sigma_y = Dual2(p.sigma_y);
    pd.rate = Dual2(p.rate);
    pd.hurst = p.hurst;

    for (double moneyness : {0.9, 1.0, 1.1}) {
        const double spot = 4200.0 * moneyness;
        const double strike = 4200.0;
        TransformConfig tc;
        detail::TransformCore<Dual2> core(pd, 0.5, tc, std::fabs(std::log(spot / strike)));
        const Dual2 s{spot, 1.0, 0.0, 0.0};
        const Dual2 k{strike, 0.0, 1.0, 0.0};
        const Dual2 put = core.put(s, k);
        const Dual2 call = core.call(s, k);
        CAPTURE(moneyness);
        CHECK(std::fabs(spot * put.d1 + strike * put.d2 - put.v) <= 1e-6 * std::fabs(put.v));
        CHECK(std::fabs(spot * call.d1 + strike * call.d2 - call.v) <=
              1e-6 * std::fabs(call.v));
    }
}

TEST_CASE("memory volatility raises the at-the-money vega") {
    const OptionContract c = euro_call(4200.0, 4200.0, 0.5);
    ModelParams base = classical_params();
    base.sigma0 = 0.14;
    base.rate = 0.03;

    const GreekReport rb = greeks(c, base, GreekPricer::transform, GreekMethod::dual);
    const GreekReport rm = greeks(c, memory_params(), GreekPricer::transform, GreekMethod::dual);
    CHECK(rm.vega0 > 1.05 * rb.vega0);

    GreeksConfig cfg;
    cfg.pricer = GreekPricer::pide;
    cfg.method = GreekMethod::dual;
    cfg.n_space = 200;
    cfg.n_time = 100;
    const GreekReport pb = greeks(c, base, cfg);
    const GreekReport pm = greeks(c, memory_params(), cfg);
    CHECK(pm.vega0 > 1.05 * pb.vega0);
}

TEST_CASE("vanna smile columns coincide when there are no jumps") {
    const OptionContract base = euro_call(100.0, 100.0, 0.5);
    const std::vector<double> grid = moneyness_grid(0.8, 1.2, 9);
    const std::vector<VannaSmileRow> rows = vanna_smile(base, memory_params(), grid);
    REQUIRE(rows.size() == grid.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].moneyness == doctest::Approx(grid[i]));
        // The jump-free restriction of the full model IS the memory-only
        // model, so the two columns are the same computation.
        CHECK(rows[i].vanna_full == rows[i].vanna_memory_only);
        if (i > 0) CHECK(rows[i].moneyness > rows[i - 1].moneyness);
    }
}

TEST_CASE("vanna smile matches the closed form in the classical limit") {
    const OptionContract base = euro_call(100.0, 100.0, 0.5);
    const ModelParams p = classical_params();
    const std::vector<double> grid = moneyness_grid(0.85, 1.15, 9);
    const std::vector<VannaSmileRow> rows = vanna_smile(base, p, grid);
    for (const VannaSmileRow& row : rows) {
        const double spot = row.moneyness * base.strike;
        const double ref = bs_vanna(spot, base.strike, base.maturity, p.sigma0, p.rate);
        CAPTURE(row.moneyness);
        CHECK(std::fabs(row.vanna_full - ref) < 1e-4);
        CHECK(std::fabs(row.vanna_memory_only - ref) < 1e-4);
    }
}

TEST_CASE("vanna smile emits a well-formed csv") {
    const OptionContract base = euro_call(100.0, 100.0, 0.5);
    const std::vector<VannaSmileRow> rows =
        vanna_smile(base, full_params(), moneyness_grid(0.8, 1.2, 9));

    std::ostringstream os;
    write_vanna_smile_csv(os, rows);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "moneyness,vanna_memory_only,vanna_full");
    std::size_t n = 0;
    while (std::getline(is, line)) {
        double m = 0.0, vm = 0.0, vf = 0.0;
        char c1 = 0, c2 = 0;
        std::istringstream ls(line);
        REQUIRE((ls >> m >> c1 >> vm >> c2 >> vf));
        CHECK(c1 == ',');
        CHECK(c2 == ',');
        REQUIRE(n < rows.size());
        CHECK(m == doctest::Approx(rows[n].moneyness));
        ++n;
    }
    CHECK(n == rows.size());
}

TEST_CASE("report writer prints every field") {
    const GreekReport r =
        greeks(euro_call(100.0, 100.0, 0.5), full_params(), GreekPricer::transform,
               GreekMethod::dual);
    std::ostringstream os;
    write_greek_report(os, r);
    const std::string s = os.str();
    for (const char* key :
         {"price=", "delta=", "gamma=", "vega0=", "vegah=", "vanna=", "method=dual",
          "pricer=transform", "bump_spot=", "delta_ok=1", "complete=1"}) {
        CAPTURE(key);
        CHECK(s.find(key) != std::string::npos);
    }
}

TEST_CASE("greek evaluation is deterministic") {
    const OptionContract c = euro_call(4200.0, 4600.0, 0.75);
    const ModelParams p = full_params();
    const GreekReport a = greeks(c, p, GreekPricer::transform, GreekMethod::dual);
    const GreekReport b = greeks(c, p, GreekPricer::transform, GreekMethod::dual);
    CHECK(a.price == b.price);
    CHECK(a.delta == b.delta);
    CHECK(a.gamma == b.gamma);
    CHECK(a.vega0 == b.vega0);
    CHECK(a.vegah == b.vegah);
    CHECK(a.vanna == b.vanna);
}

TEST_CASE("solver failure produces a flagged partial report") {
    const OptionContract c = euro_call(100.0, 100.0, 0.5);
    const ModelParams p = full_params();

    GreeksConfig cfg;
    cfg.pricer = GreekPricer::pide;
    cfg.n_space = 64;
    cfg.n_time = 16;
    cfg.pide.krylov_max_iter = 1; // starves the linear solver

    cfg.method = GreekMethod::bump;
    const GreekReport r = greeks(c, p, cfg);
    CHECK_FALSE(r.price_ok);
    CHECK_FALSE(r.delta_ok);
    CHECK_FALSE(r.gamma_ok);
    CHECK_FALSE(r.vega0_ok);
    CHECK_FALSE(r.vegah_ok);
    CHECK_FALSE(r.vanna_ok);
    CHECK_FALSE(r.complete());

    cfg.method = GreekMethod::dual;
    CHECK_THROWS_AS(greeks(c, p, cfg), std::runtime_error);
}

TEST_CASE("bump route flags the memory vega when the model forbids the bump") {
    // Without the memory channel the transform uses its exact classical
    // branch, which rejects sigma_h > 0 outright; the sigma_h bump therefore
    // cannot be evaluated and the report says so instead of guessing.
    const OptionContract c = euro_call(100.0, 100.0, 1.0);
    const GreekReport r =
        greeks(c, classical_params(), GreekPricer::transform, GreekMethod::bump);
    CHECK(r.price_ok);
    CHECK(r.delta_ok);
    CHECK(r.gamma_ok);
    CHECK(r.vega0_ok);
    CHECK(r.vanna_ok);
    CHECK_FALSE(r.vegah_ok);
    CHECK_FALSE(r.complete());
    CHECK(std::fabs(r.delta - bs_delta_call(100.0, 100.0, 1.0, 0.2, 0.05)) < 1e-6);
}

TEST_CASE("barrier greeks come from the finite-difference route") {
    OptionContract c;
    c.kind = OptionKind::down_and_out_call;
    c.spot = 4050.0;
    c.strike = 4200.0;
    c.barrier = 3800.0;
    c.maturity = 0.5;

    GreeksConfig cfg;
    cfg.pricer = GreekPricer::pide;
    cfg.method = GreekMethod::dual;
    cfg.n_space = 240;
    cfg.n_time = 120;
    const GreekReport r = greeks(c, full_params(), cfg);

    CHECK(r.complete());
    CHECK(r.price > 0.0);
    CHECK(r.delta > 0.0); // knock-out calls gain value moving away from the barrier
    CHECK(std::isfinite(r.gamma));
    CHECK(std::isfinite(r.vega0));
    CHECK(std::isfinite(r.vegah));
    CHECK(std::isfinite(r.vanna));

    // The transform route prices european contracts only.
    CHECK_THROWS_AS(greeks(c, full_params(), GreekPricer::transform, GreekMethod::dual),
                    std::invalid_argument);
}

TEST_CASE("misuse is rejected") {
    const OptionContract c = euro_call(100.0, 100.0, 0.5);
    const ModelParams p = full_params();

    GreeksConfig cfg;
    cfg.bump_rel = 0.0;
    cfg.method = GreekMethod::bump;
    CHECK_THROWS_AS(greeks(c, p, cfg), std::invalid_argument);
    cfg.bump_rel = 0.5;
    CHECK_THROWS_AS(greeks(c, p, cfg), std::invalid_argument);

    GreeksConfig gcfg;
    gcfg.pricer = GreekPricer::pide;
    gcfg.n_space = 4;
    CHECK_THROWS_AS(greeks(c, p, gcfg), std::invalid_argument);

    CHECK_THROWS_AS(vanna_smile(c, p, {1.0, 1.1}), std::invalid_argument);
    CHECK_THROWS_AS(vanna_smile(c, p, {-1.0, 0.9, 0.95, 1.0, 1.05, 1.1, 1.15, 1.2, 1.25}),
                    std::invalid_argument);

    OptionContract barrier = c;
    barrier.kind = OptionKind::down_and_out_call;
    barrier.barrier = 80.0;
    CHECK_THROWS_AS(vanna_smile(barrier, p, moneyness_grid(0.8, 1.2, 9)),
                    std::invalid_argument);

    CHECK_THROWS_AS(moneyness_grid(0.0, 1.2, 9), std::invalid_argument);
    CHECK_THROWS_AS(moneyness_grid(1.2, 0.8, 9), std::invalid_argument);
    CHECK_THROWS_AS(moneyness_grid(0.8, 1.2, 1), std::invalid_argument);
}
