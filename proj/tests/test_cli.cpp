// Command-line layer tests: the flat-config parser and its typed builders,
// then the installed binary end to end through every subcommand, exit-code
// path and the byte-determinism contract.  The binary path arrives in the
// SMFJ_BIN environment variable.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "smfj/calibration.hpp"
#include "smfj/run_config.hpp"
#include "smfj/transform_pricer.hpp"

#include <sys/wait.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace smfj;

namespace {

std::string bin_path() {
    const char* b = std::getenv("SMFJ_BIN");
    REQUIRE_MESSAGE(b != nullptr, "SMFJ_BIN must point at the CLI binary");
    return b;
}

const fs::path& tmp_root() {
    static const fs::path p = [] {
        fs::path q = fs::current_path() / "cli_tmp";
        fs::remove_all(q);
        fs::create_directories(q);
        return q;
    }();
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spit(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    out << body;
    REQUIRE(out.good());
}

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

// Runs `smfj <argline>` with stdout/stderr captured to files under the
// temporary directory, returning the exit code and both streams.
CliRun run_cli(const std::string& argline, const std::string& tag) {
    const fs::path so = tmp_root() / (tag + ".stdout");
    const fs::path se = tmp_root() / (tag + ".stderr");
    const std::string cmd =
        bin_path() + " " + argline + " > " + so.string() + " 2> " + se.string();
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    CliRun r;
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
    r.out = slurp(so);
    r.err = slurp(se);
    return r;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> ls;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) ls.push_back(line);
    return ls;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

// Comment lines (leading '#') first, then one header, then data rows.
struct CsvFile {
    std::vector<std::string> comments;
    std::string header;
    std::vector<std::vector<std::string>> rows;
};

CsvFile parse_output(const fs::path& p) {
    CsvFile f;
    bool header_seen = false;
    for (const std::string& line : lines_of(slurp(p))) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            f.comments.push_back(line);
        } else if (!header_seen) {
            f.header = line;
            header_seen = true;
        } else {
            f.rows.push_back(split_csv(line));
        }
    }
    return f;
}

bool provenance_ok(const std::string& line, std::uint64_t expect_seed) {
    const std::string pre = "# cfg=";
    if (line.rfind(pre, 0) != 0 || line.size() < pre.size() + 16) return false;
    for (std::size_t i = pre.size(); i < pre.size() + 16; ++i) {
        const char c = line[i];
        const bool hex = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
        if (!hex) return false;
    }
    const std::string rest = line.substr(pre.size() + 16);
    return rest == " seed=" + std::to_string(expect_seed);
}

double to_d(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

// A Black-Scholes-limit configuration: flat clock, no memory, no jumps.
std::string bs_cfg_body(const std::string& method) {
    return "model.sigma0 = 0.2\n"
           "model.sigma_h = 0\n"
           "model.hurst = 0\n"
           "model.lambda = 0\n"
           "model.rate = 0.05\n"
           "contract.kind = european_call\n"
           "contract.spot = 100\n"
           "contract.strike = 100\n"
           "contract.maturity = 1\n"
           "run.method = " + method + "\n";
}

fs::path write_cfg(const std::string& name, const std::string& body) {
    const fs::path p = tmp_root() / name;
    spit(p, body);
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Flat-config parser
// ---------------------------------------------------------------------------

TEST_CASE("config parser: round trip with comments, blanks and padding") {
    std::istringstream in(
        "# leading comment\n"
        "\n"
        "  model.sigma0 =  0.25  \n"
        "contract.kind = european_put   # trailing comment\n"
        "mc.n_paths = 100000\n");
    const RunConfig cfg = RunConfig::from_stream(in, "mem.cfg");
    CHECK(cfg.has("model.sigma0"));
    CHECK(cfg.get_double("model.sigma0") == doctest::Approx(0.25));
    CHECK(cfg.get_string("contract.kind") == "european_put");
    CHECK(cfg.get_int("mc.n_paths", 0) == 100000);
    CHECK_FALSE(cfg.has("model.lambda"));
}

TEST_CASE("config parser: malformed lines name the file and line number") {
    auto parse = [](const std::string& body) {
        std::istringstream in(body);
        return RunConfig::from_stream(in, "bad.cfg");
    };
    CHECK_THROWS_WITH_AS(parse("model.sigma0\n"),
                         doctest::Contains("bad.cfg:1"), ConfigError);
    CHECK_THROWS_WITH_AS(parse("# ok\n = 3\n"),
                         doctest::Contains("bad.cfg:2"), ConfigError);
    CHECK_THROWS_WITH_AS(parse("model.sigma0 = \n"),
                         doctest::Contains("model.sigma0"), ConfigError);
}

TEST_CASE("config parser: unknown and duplicate keys are rejected by name") {
    auto parse = [](const std::string& body) {
        std::istringstream in(body);
        return RunConfig::from_stream(in, "keys.cfg");
    };
    CHECK_THROWS_WITH_AS(parse("model.sigmaO = 0.2\n"),
                         doctest::Contains("model.sigmaO"), ConfigError);
    CHECK_THROWS_WITH_AS(parse("model.sigma0 = 0.2\nmodel.sigma0 = 0.3\n"),
                         doctest::Contains("duplicate"), ConfigError);
    RunConfig cfg;
    CHECK_THROWS_AS(cfg.set("nonsense.key", "1"), ConfigError);
}

TEST_CASE("config parser: typed getters enforce their types and fallbacks") {
    std::istringstream in(
        "model.sigma0 = 0.2\n"
        "contract.kind = european_call\n"
        "mc.antithetic = false\n"
        "surface.h_values = 0.3, 0.4 ,0.5\n"
        "run.seed = 42\n");
    const RunConfig cfg = RunConfig::from_stream(in, "typed.cfg");

    CHECK(cfg.get_double("model.sigma0") == doctest::Approx(0.2));
    CHECK_THROWS_WITH_AS((void)cfg.get_double("contract.kind"),
                         doctest::Contains("contract.kind"), ConfigError);
    CHECK(cfg.get_bool("mc.antithetic", true) == false);
    CHECK(cfg.get_bool("mc.bridge_correction", true) == true);
    CHECK(cfg.get_u64("run.seed", 1) == 42);
    CHECK(cfg.get_int("pide.n_space", 400) == 400);

    const std::vector<double> hs = cfg.get_list("surface.h_values");
    REQUIRE(hs.size() == 3);
    CHECK(hs[1] == doctest::Approx(0.4));

    // Required form names the missing key in full.
    CHECK_THROWS_WITH_AS((void)cfg.get_double("contract.strike"),
                         doctest::Contains("contract.strike"), ConfigError);
}

TEST_CASE("config parser: canonical form is sorted and drives the hash") {
    std::istringstream a_in(
        "model.sigma0 = 0.2\ncontract.kind = european_call\nrun.seed = 1\n");
    std::istringstream b_in(
        "run.seed = 1\ncontract.kind = european_call\nmodel.sigma0 = 0.2\n");
    const RunConfig a = RunConfig::from_stream(a_in, "a.cfg");
    const RunConfig b = RunConfig::from_stream(b_in, "b.cfg");

    CHECK(a.canonical() == b.canonical());
    CHECK(a.hash() == b.hash());
    const std::string canon = a.canonical();
    CHECK(canon.find("contract.kind = european_call\n") < canon.find("model.sigma0"));

    RunConfig c = a;
    c.set("run.seed", "2");
    CHECK(c.hash() != a.hash());

    // The worker cap never changes a result, so it stays out of the hash.
    RunConfig d = a;
    d.set("run.threads", "8");
    CHECK(d.hash() == a.hash());
    CHECK(d.canonical() == a.canonical());
}

// ---------------------------------------------------------------------------
// Typed builders
// ---------------------------------------------------------------------------

namespace {
RunConfig cfg_from(const std::string& body) {
    std::istringstream in(body);
    return RunConfig::from_stream(in, "builder.cfg");
}
}  // namespace

TEST_CASE("builders: contract kinds, required keys and barrier rules") {
    const RunConfig call = cfg_from(
        "contract.kind = european_call\ncontract.spot = 100\n"
        "contract.strike = 95\ncontract.maturity = 0.5\n");
    const OptionContract c = contract_from(call);
    CHECK(c.kind == OptionKind::european_call);
    CHECK(c.strike == doctest::Approx(95.0));

    const RunConfig missing = cfg_from(
        "contract.kind = european_call\ncontract.spot = 100\n"
        "contract.maturity = 0.5\n");
    CHECK_THROWS_WITH_AS(contract_from(missing),
                         doctest::Contains("contract.strike"), ConfigError);

    const RunConfig doc_no_barrier = cfg_from(
        "contract.kind = down_and_out_call\ncontract.spot = 100\n"
        "contract.strike = 105\ncontract.maturity = 0.5\n");
    CHECK_THROWS_WITH_AS(contract_from(doc_no_barrier),
                         doctest::Contains("contract.barrier"), ConfigError);

    const RunConfig euro_with_barrier = cfg_from(
        "contract.kind = european_put\ncontract.spot = 100\n"
        "contract.strike = 105\ncontract.maturity = 0.5\ncontract.barrier = 90\n");
    CHECK_THROWS_AS(contract_from(euro_with_barrier), ConfigError);

    const RunConfig bad_kind = cfg_from(
        "contract.kind = asian_call\ncontract.spot = 100\n"
        "contract.strike = 105\ncontract.maturity = 0.5\n");
    CHECK_THROWS_WITH_AS(contract_from(bad_kind),
                         doctest::Contains("asian_call"), ConfigError);
}

TEST_CASE("builders: model validation failures surface as config errors") {
    const RunConfig bad = cfg_from("model.sigma0 = -0.2\nmodel.rate = 0.03\n");
    CHECK_THROWS_AS(model_from(bad), ConfigError);

    const RunConfig ok = cfg_from(
        "model.sigma0 = 0.14\nmodel.sigma_h = 0.1\nmodel.hurst = 0.35\n"
        "model.lambda = 0.85\nmodel.mu_y = -0.04\nmodel.sigma_y = 0.11\n"
        "model.rate = 0.02\n");
    const ModelParams p = model_from(ok);
    CHECK(p.hurst == doctest::Approx(0.35));
    CHECK_FALSE(p.classical());
}

TEST_CASE("builders: parameter bounds require lo <= hi in every coordinate") {
    const RunConfig bad = cfg_from(
        "bounds.sigma0_lo = 0.3\nbounds.sigma0_hi = 0.1\n");
    CHECK_THROWS_AS(bounds_from(bad), ConfigError);

    const RunConfig ok = cfg_from(
        "bounds.hurst_lo = 0.2\nbounds.hurst_hi = 0.6\n");
    const ParamBounds b = bounds_from(ok);
    CHECK(b.lo[2] == doctest::Approx(0.2));
    CHECK(b.hi[2] == doctest::Approx(0.6));
}

TEST_CASE("builders: seed resolution prefers run.seed, then the module seed") {
    const RunConfig both = cfg_from("run.seed = 9\nmc.seed = 4\n");
    CHECK(resolve_seed(both, "mc.seed") == 9);
    const RunConfig module_only = cfg_from("mc.seed = 4\n");
    CHECK(resolve_seed(module_only, "mc.seed") == 4);
    const RunConfig neither = cfg_from("model.sigma0 = 0.2\n");
    CHECK(resolve_seed(neither, "mc.seed") == 1);
}

TEST_CASE("builders: barrier grids get an automatic truncation above the strike") {
    const RunConfig cfg = cfg_from(
        "model.sigma0 = 0.14\nmodel.sigma_h = 0.1\nmodel.hurst = 0.35\n"
        "model.lambda = 0.85\nmodel.mu_y = -0.04\nmodel.sigma_y = 0.11\n"
        "model.rate = 0.02\n"
        "contract.kind = down_and_out_call\ncontract.spot = 4050\n"
        "contract.strike = 4200\ncontract.maturity = 0.5\ncontract.barrier = 3800\n"
        "pide.n_space = 60\npide.n_time = 20\n");
    const OptionContract c = contract_from(cfg);
    const GridSpec g = grid_from(cfg, c, model_from(cfg));
    CHECK(g.n_space == 60);
    CHECK(std::exp(g.x_max) > 4200.0);
    CHECK(g.x_min == doctest::Approx(std::log(3800.0)));
}

// ---------------------------------------------------------------------------
// Binary end to end
// ---------------------------------------------------------------------------

TEST_CASE("cli price: transform method reproduces the flat-clock reference") {
    const fs::path cfg = write_cfg("price_bs.cfg", bs_cfg_body("transform"));
    const fs::path out = tmp_root() / "price_bs.csv";
    const CliRun r = run_cli("price --config " + cfg.string() + " --out " + out.string(),
                             "price_bs");
    REQUIRE_MESSAGE(r.code == 0, r.err);

    const CsvFile f = parse_output(out);
    REQUIRE(f.comments.size() == 1);
    CHECK(provenance_ok(f.comments[0], 1));
    CHECK(f.header == "method,price,std_err,runtime_ms,diagnostics");
    REQUIRE(f.rows.size() == 1);
    REQUIRE(f.rows[0].size() == 5);
    CHECK(f.rows[0][0] == "transform");
    CHECK(to_d(f.rows[0][1]) == doctest::Approx(10.450583572185).epsilon(1e-9));
    CHECK(f.rows[0][3] == "na");  // wall-clock stays out unless --timings
    // The resolved configuration is echoed to stdout for the run log.
    CHECK(r.out.find("model.sigma0 = 0.2") != std::string::npos);
}

TEST_CASE("cli price: reruns are byte-identical and --seed overrides the config") {
    std::string body = bs_cfg_body("mc");
    body += "mc.n_paths = 20000\nmc.steps_per_year = 32\nmc.seed = 1\n";
    const fs::path cfg = write_cfg("price_mc.cfg", body);

    const fs::path out1 = tmp_root() / "mc1.csv";
    const fs::path out2 = tmp_root() / "mc2.csv";
    const std::string base = "price --config " + cfg.string() + " --out ";
    REQUIRE(run_cli(base + out1.string(), "mc_run1").code == 0);
    REQUIRE(run_cli(base + out2.string(), "mc_run2").code == 0);
    const std::string bytes1 = slurp(out1);
    CHECK(bytes1 == slurp(out2));

    // A different seed must change both the provenance line and the estimate.
    const fs::path out7 = tmp_root() / "mc7.csv";
    REQUIRE(run_cli(base + out7.string() + " --seed 7", "mc_run7").code == 0);
    const CsvFile f1 = parse_output(out1);
    const CsvFile f7 = parse_output(out7);
    CHECK(provenance_ok(f7.comments.at(0), 7));
    CHECK(f1.rows.at(0).at(1) != f7.rows.at(0).at(1));

    // The worker cap must not: files agree byte for byte across --threads.
    const fs::path outt = tmp_root() / "mc_t3.csv";
    REQUIRE(run_cli(base + outt.string() + " --threads 3", "mc_threads").code == 0);
    CHECK(slurp(outt) == bytes1);
}

TEST_CASE("cli price: config mistakes exit 2 and name the offender") {
    // Missing required key.
    std::string body = bs_cfg_body("transform");
    body.erase(body.find("contract.strike = 100\n"), std::string("contract.strike = 100\n").size());
    const fs::path missing = write_cfg("missing_strike.cfg", body);
    const fs::path out = tmp_root() / "never.csv";
    CliRun r = run_cli("price --config " + missing.string() + " --out " + out.string(),
                       "missing_strike");
    CHECK(r.code == 2);
    CHECK(r.err.find("contract.strike") != std::string::npos);

    // Unknown key, named with file and line.
    const fs::path unknown = write_cfg("unknown_key.cfg",
                                       bs_cfg_body("transform") + "model.sigma_z = 0.1\n");
    r = run_cli("price --config " + unknown.string() + " --out " + out.string(), "unknown_key");
    CHECK(r.code == 2);
    CHECK(r.err.find("model.sigma_z") != std::string::npos);
    CHECK(r.err.find("unknown_key.cfg:11") != std::string::npos);

    // run.method absent.
    std::string no_method = bs_cfg_body("transform");
    no_method.erase(no_method.find("run.method"));
    const fs::path nm = write_cfg("no_method.cfg", no_method);
    r = run_cli("price --config " + nm.string() + " --out " + out.string(), "no_method");
    CHECK(r.code == 2);
    CHECK(r.err.find("run.method") != std::string::npos);

    // Transform cannot price a barrier contract.
    const fs::path doc = write_cfg("doc_transform.cfg",
        "model.sigma0 = 0.2\nmodel.rate = 0.02\n"
        "contract.kind = down_and_out_call\ncontract.spot = 4050\n"
        "contract.strike = 4200\ncontract.maturity = 0.5\ncontract.barrier = 3800\n"
        "run.method = transform\n");
    r = run_cli("price --config " + doc.string() + " --out " + out.string(), "doc_transform");
    CHECK(r.code == 2);
    CHECK(r.err.find("european") != std::string::npos);

    // Config file that does not exist.
    r = run_cli("price --config " + (tmp_root() / "ghost.cfg").string() +
                " --out " + out.string(), "ghost_cfg");
    CHECK(r.code == 2);
}

TEST_CASE("cli: bad invocations exit 2 before any pricing work") {
    CHECK(run_cli("frobnicate", "bad_subcommand").code == 2);
    CHECK(run_cli("price", "missing_config_flag").code == 2);
}

TEST_CASE("cli crossval: validates the method list, then reports spreads vs mc") {
    std::string body = bs_cfg_body("transform");
    body.erase(body.find("run.method"));
    const std::string common = body + "mc.n_paths = 60000\nmc.steps_per_year = 32\nmc.seed = 1\n";
    const fs::path out = tmp_root() / "crossval.csv";

    const fs::path single = write_cfg("cv_single.cfg", common + "run.methods = mc\n");
    CliRun r = run_cli("crossval --config " + single.string() + " --out " + out.string(),
                       "cv_single");
    CHECK(r.code == 2);

    const fs::path nomc = write_cfg("cv_nomc.cfg", common + "run.methods = transform,pide\n");
    r = run_cli("crossval --config " + nomc.string() + " --out " + out.string(), "cv_nomc");
    CHECK(r.code == 2);
    CHECK(r.err.find("mc") != std::string::npos);

    const fs::path good = write_cfg("cv_good.cfg", common + "run.methods = transform,mc\n");
    r = run_cli("crossval --config " + good.string() + " --out " + out.string(), "cv_good");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const CsvFile f = parse_output(out);
    CHECK(f.header == "method,price,rel_diff_vs_mc_pct,runtime_s");
    REQUIRE(f.rows.size() == 2);
    double mc_rel = 1e9, tr_rel = 1e9;
    for (const auto& row : f.rows) {
        REQUIRE(row.size() == 4);
        if (row[0] == "mc") mc_rel = to_d(row[2]);
        if (row[0] == "transform") tr_rel = to_d(row[2]);
        CHECK(row[3] == "na");
    }
    CHECK(mc_rel == doctest::Approx(0.0));
    CHECK(std::fabs(tr_rel) < 1.0);  // 60k paths sit well inside one percent
}

TEST_CASE("cli simulate: running-mean trace with deterministic batch rows") {
    std::string body = bs_cfg_body("mc");
    body.erase(body.find("run.method"));
    body += "mc.n_paths = 40000\nmc.steps_per_year = 16\nmc.seed = 3\nsimulate.batches = 8\n";
    const fs::path cfg = write_cfg("simulate.cfg", body);
    const fs::path out1 = tmp_root() / "sim1.csv";
    const fs::path out2 = tmp_root() / "sim2.csv";
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out1.string(),
                    "sim_run1").code == 0);
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + out2.string() +
                    " --threads 2", "sim_run2").code == 0);
    CHECK(slurp(out1) == slurp(out2));

    const CsvFile f = parse_output(out1);
    CHECK(f.header == "batch,running_mean,running_se");
    REQUIRE(f.rows.size() == 8);
    const double last_se = to_d(f.rows.back().at(2));
    CHECK(last_se > 0.0);
    CHECK(last_se < to_d(f.rows.front().at(2)));  // error shrinks as paths accrue
}

TEST_CASE("cli greeks: transform dual report is complete; smile CSV is shaped") {
    const std::string model =
        "model.sigma0 = 0.14\nmodel.sigma_h = 0.1\nmodel.hurst = 0.35\n"
        "model.lambda = 0.85\nmodel.mu_y = -0.04\nmodel.sigma_y = 0.11\n"
        "model.rate = 0.03\n"
        "contract.kind = european_call\ncontract.spot = 4200\n"
        "contract.strike = 4200\ncontract.maturity = 0.5\n";
    const fs::path cfg = write_cfg("greeks_report.cfg",
        model + "greeks.pricer = transform\ngreeks.method = dual\n");
    const fs::path out = tmp_root() / "greeks_report.csv";
    CliRun r = run_cli("greeks --config " + cfg.string() + " --out " + out.string(),
                       "greeks_report");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const CsvFile f = parse_output(out);
    CHECK(f.header == "greek,value,ok");
    REQUIRE(f.rows.size() >= 5);
    bool saw_delta = false, saw_vegah = false;
    for (const auto& row : f.rows) {
        REQUIRE(row.size() == 3);
        CHECK(row[2] == "1");  // exit 0 is only reachable from a complete report
        if (row[0] == "delta") {
            saw_delta = true;
            CHECK(to_d(row[1]) > 0.0);
            CHECK(to_d(row[1]) < 1.0);
        }
        if (row[0] == "vegah") saw_vegah = true;
    }
    CHECK(saw_delta);
    CHECK(saw_vegah);

    const fs::path smile_cfg = write_cfg("greeks_smile.cfg",
        model + "greeks.pricer = transform\ngreeks.method = dual\n"
                "greeks.smile = true\ngreeks.smile_lo = 0.85\n"
                "greeks.smile_hi = 1.15\ngreeks.smile_points = 9\n");
    const fs::path smile_out = tmp_root() / "smile.csv";
    r = run_cli("greeks --config " + smile_cfg.string() + " --out " + smile_out.string(),
                "greeks_smile");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const CsvFile s = parse_output(smile_out);
    CHECK(s.header == "moneyness,vanna_memory_only,vanna_full");
    REQUIRE(s.rows.size() == 9);
    CHECK(to_d(s.rows.front().at(0)) == doctest::Approx(0.85));
    CHECK(to_d(s.rows.back().at(0)) == doctest::Approx(1.15));
}

TEST_CASE("cli greeks: a starved linear solver yields exit 3 with a partial file") {
    const fs::path cfg = write_cfg("greeks_starved.cfg",
        "model.sigma0 = 0.2\nmodel.sigma_h = 0.1\nmodel.hurst = 0.35\nmodel.rate = 0.03\n"
        "contract.kind = european_call\ncontract.spot = 100\n"
        "contract.strike = 100\ncontract.maturity = 0.5\n"
        "greeks.pricer = pide\ngreeks.method = bump\n"
        "greeks.n_space = 100\ngreeks.n_time = 40\n"
        "pide.krylov_max_iter = 1\n");
    const fs::path out = tmp_root() / "greeks_partial.csv";
    const CliRun r = run_cli("greeks --config " + cfg.string() + " --out " + out.string(),
                             "greeks_starved");
    CHECK(r.code == 3);
    CHECK(r.err.find("numerical failure") != std::string::npos);
    const CsvFile f = parse_output(out);  // the partial report is still written
    CHECK(f.header == "greek,value,ok");
    bool any_failed = false;
    for (const auto& row : f.rows) any_failed = any_failed || row.at(2) == "0";
    CHECK(any_failed);
}

TEST_CASE("cli calibrate and surface: smoke run on self-generated quotes") {
    // Synthesize a small memory-only quote set with the transform pricer so
    // the fit has an exact optimum inside the box.
    ModelParams truth;
    truth.sigma0 = 0.18;
    truth.sigma_h = 0.06;
    truth.hurst = 0.4;
    truth.lambda = 0.0;
    truth.mu_y = -0.1;
    truth.sigma_y = 0.2;
    truth.rate = 0.03;
    std::ostringstream q;
    q << "strike,maturity,price,spot,rate\n";
    const TransformConfig tc = calibration_pricing_config();
    for (double T : {0.5, 0.75})
        for (double K : {90.0, 95.0, 100.0, 105.0, 110.0}) {
            OptionContract c;
            c.kind = OptionKind::european_call;
            c.spot = 100.0;
            c.strike = K;
            c.maturity = T;
            const double px = price_transform(truth, c, tc).price;
            q << K << ',' << T << ',' << px << ",100,0.03\n";
        }
    const fs::path quotes = tmp_root() / "quotes.csv";
    spit(quotes, q.str());

    const std::string cal_body =
        "calibrate.quotes = " + quotes.string() + "\n" +
        "calibrate.population = 12\ncalibrate.max_generations = 8\n"
        "calibrate.stagnation = 8\ncalibrate.seed = 5\ncalibrate.pricer = transform\n"
        "bounds.sigma0_lo = 0.1\nbounds.sigma0_hi = 0.3\n"
        "bounds.sigma_h_lo = 0.0\nbounds.sigma_h_hi = 0.15\n"
        "bounds.hurst_lo = 0.2\nbounds.hurst_hi = 0.6\n"
        "bounds.lambda_lo = 0\nbounds.lambda_hi = 0\n"
        "bounds.mu_y_lo = -0.1\nbounds.mu_y_hi = -0.1\n"
        "bounds.sigma_y_lo = 0.2\nbounds.sigma_y_hi = 0.2\n"
        "model.rate = 0.03\n";
    const fs::path cal_cfg = write_cfg("calibrate.cfg", cal_body);
    const fs::path cal_out = tmp_root() / "calibrate.csv";
    CliRun r = run_cli("calibrate --config " + cal_cfg.string() + " --out " + cal_out.string(),
                       "calibrate");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const CsvFile f = parse_output(cal_out);
    CHECK(f.header ==
          "sigma0,sigma_h,hurst,lambda,mu_y,sigma_y,rate,rmse_pct,objective,evaluations,"
          "generations");
    REQUIRE(f.rows.size() == 1);
    const auto& row = f.rows[0];
    REQUIRE(row.size() == 11);
    CHECK(to_d(row[0]) >= 0.1);
    CHECK(to_d(row[0]) <= 0.3);
    CHECK(to_d(row[3]) == doctest::Approx(0.0));  // lambda pinned by its bounds
    CHECK(std::isfinite(to_d(row[7])));
    CHECK(to_d(row[7]) >= 0.0);
    CHECK(to_d(row[9]) > 0.0);

    // Same quotes drive the misfit surface; a 1x2 grid gives two rows.
    const std::string surf_body =
        "calibrate.quotes = " + quotes.string() + "\ncalibrate.pricer = transform\n" +
        "model.sigma0 = 0.18\nmodel.sigma_h = 0.06\nmodel.hurst = 0.4\n"
        "model.lambda = 0\nmodel.mu_y = -0.1\nmodel.sigma_y = 0.2\nmodel.rate = 0.03\n"
        "surface.h_values = 0.4\nsurface.lambda_values = 0, 0.3\n";
    const fs::path surf_cfg = write_cfg("surface.cfg", surf_body);
    const fs::path surf_out = tmp_root() / "surface.csv";
    r = run_cli("surface --config " + surf_cfg.string() + " --out " + surf_out.string(),
                "surface");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const CsvFile s = parse_output(surf_out);
    CHECK(s.header == "H,lambda,rmse_pct");
    REQUIRE(s.rows.size() == 2);
    // The truth column (lambda = 0) must fit essentially exactly; adding
    // spurious jumps must fit worse.
    CHECK(to_d(s.rows[0].at(2)) < 1e-6);
    CHECK(to_d(s.rows[1].at(2)) > to_d(s.rows[0].at(2)));

    // Quote files that vanish under the liquidity filter are config errors.
    const fs::path stale = tmp_root() / "stale_quotes.csv";
    spit(stale, "strike,maturity,price,spot,rate\n100,1.5,12.0,100,0.03\n");
    const fs::path stale_cfg = write_cfg("stale.cfg",
        cal_body.substr(cal_body.find('\n') + 1).insert(
            0, "calibrate.quotes = " + stale.string() + "\n"));
    r = run_cli("calibrate --config " + stale_cfg.string() + " --out " + cal_out.string(),
                "stale_quotes");
    CHECK(r.code == 2);
    CHECK(r.err.find("liquidity") != std::string::npos);

    // Missing quote files too.
    const fs::path ghost_cfg = write_cfg("ghost_quotes.cfg",
        cal_body.substr(cal_body.find('\n') + 1).insert(
            0, "calibrate.quotes = " + (tmp_root() / "ghost.csv").string() + "\n"));
    r = run_cli("calibrate --config " + ghost_cfg.string() + " --out " + cal_out.string(),
                "ghost_quotes");
    CHECK(r.code == 2);
}

TEST_CASE("cli converge: halving steps writes the slope line and level rows") {
    const fs::path cfg = write_cfg("converge.cfg",
        "model.sigma0 = 0.2\nmodel.rate = 0.05\n"
        "contract.kind = european_call\ncontract.spot = 100\n"
        "contract.strike = 100\ncontract.maturity = 0.25\n"
        "converge.levels = 3\nconverge.dt0 = 0.05\nconverge.dx_scale = 0.25\n");
    const fs::path out = tmp_root() / "converge.csv";
    const CliRun r = run_cli("converge --config " + cfg.string() + " --out " + out.string(),
                             "converge");
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const CsvFile f = parse_output(out);
    REQUIRE(f.comments.size() == 2);
    CHECK(provenance_ok(f.comments[0], 1));
    CHECK(f.comments[1].rfind("# slope=", 0) == 0);
    CHECK(f.header == "dt,dx,price,error");
    REQUIRE(f.rows.size() == 3);
    CHECK(to_d(f.rows[0].at(0)) == doctest::Approx(0.05));
    CHECK(to_d(f.rows[1].at(0)) == doctest::Approx(0.025));
    for (const auto& row : f.rows) CHECK(std::isfinite(to_d(row.at(2))));

    const fs::path bad = write_cfg("converge_bad.cfg",
        "model.sigma0 = 0.2\nmodel.rate = 0.05\n"
        "contract.kind = european_call\ncontract.spot = 100\n"
        "contract.strike = 100\ncontract.maturity = 0.25\n"
        "converge.levels = 1\n");
    CHECK(run_cli("converge --config " + bad.string() + " --out " + out.string(),
                  "converge_bad").code == 2);
}
