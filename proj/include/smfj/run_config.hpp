#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "smfj/calibration.hpp"
#include "smfj/greeks.hpp"
#include "smfj/model.hpp"
#include "smfj/monte_carlo.hpp"
#include "smfj/pide_solver.hpp"
#include "smfj/transform_pricer.hpp"

namespace smfj {

// A defect in the configuration itself — unknown key, missing required key,
// ill-typed value.  The command line maps ConfigError to exit code 2 and any
// other failure (a numerical one) to exit code 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat plain-text configuration: one `section.key = value` assignment per
// line, `#` starts a comment, blank lines are ignored.  There is no nesting
// and no quoting; list-valued keys hold comma-separated scalars.  Every key
// must belong to the published schema — a typo is rejected at parse time with
// the offending key named.
class RunConfig {
  public:
    static RunConfig from_file(const std::string& path);
    static RunConfig from_stream(std::istream& in, const std::string& origin = "<config>");

    [[nodiscard]] bool has(const std::string& key) const;
    // Inserts or overwrites; the key is checked against the schema.
    void set(const std::string& key, const std::string& value);

    // Required lookups throw ConfigError naming the missing key; forms with a
    // fallback return it when the key is absent.
    [[nodiscard]] std::string get_string(const std::string& key) const;
    [[nodiscard]] std::string get_string(const std::string& key,
                                         const std::string& fallback) const;
    [[nodiscard]] double get_double(const std::string& key) const;
    [[nodiscard]] double get_double(const std::string& key, double fallback) const;
    [[nodiscard]] long long get_int(const std::string& key) const;
    [[nodiscard]] long long get_int(const std::string& key, long long fallback) const;
    [[nodiscard]] std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
    [[nodiscard]] std::vector<double> get_list(const std::string& key) const;

    // Sorted `key = value` lines — the full resolved configuration, including
    // any command-line overrides applied through set().
    [[nodiscard]] std::string canonical() const;
    // FNV-1a 64-bit hash of canonical(); stamped into every output header so
    // a result file names the exact configuration that produced it.
    [[nodiscard]] std::uint64_t hash() const;

    [[nodiscard]] const std::map<std::string, std::string>& entries() const { return kv_; }

  private:
    std::map<std::string, std::string> kv_;
};

// ---------------------------------------------------------------------------
// Builders from configuration to the domain structures. Each reads only its
// own section; required keys are reported by their full dotted name.
// ---------------------------------------------------------------------------

ModelParams model_from(const RunConfig& cfg);
OptionContract contract_from(const RunConfig& cfg);
TransformConfig transform_config_from(const RunConfig& cfg);
PideConfig pide_config_from(const RunConfig& cfg);
// `seed` is the resolved run seed (see resolve_seed); threads the worker cap.
McConfig mc_config_from(const RunConfig& cfg, std::uint64_t seed, int threads);
DeConfig de_config_from(const RunConfig& cfg, std::uint64_t seed);
ParamBounds bounds_from(const RunConfig& cfg);
GreeksConfig greeks_config_from(const RunConfig& cfg);
// European grid, or the clustered barrier grid for knock-out contracts.
GridSpec grid_from(const RunConfig& cfg, const OptionContract& c, const ModelParams& p);

// Seed precedence: run.seed (the --seed flag lands there) over the
// command-specific key over 1.
std::uint64_t resolve_seed(const RunConfig& cfg, const std::string& specific_key);

}  // namespace smfj
