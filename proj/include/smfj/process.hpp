#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "smfj/model.hpp"

namespace smfj {

// Covariance of the driving sub-fractional Gaussian factor:
//   R(t,s) = t^{2H} + s^{2H} - ((t+s)^{2H} + |t-s|^{2H}) / 2,
// with Var = c_H t^{2H}, c_H = 2 - 2^{2H-1}; H = 1/2 recovers min(t,s).
double sfbm_covariance(double t, double s, double hurst);
inline double sfbm_variance_coeff(double hurst) { return 2.0 - std::pow(2.0, 2.0 * hurst - 1.0); }

enum class MeasureMode { risk_neutral, physical, esscher_tilted };

struct PathGrid {
    double maturity = 1.0;
    int steps = 250;
    [[nodiscard]] double dt() const { return maturity / steps; }
    [[nodiscard]] double time(int j) const { return maturity * j / steps; }
};

// Random stream layout: each antithetic pair owns a fixed block of stream ids,
// so any draw is addressable without generating its predecessors and results
// never depend on how paths are split across batches or threads.
namespace stream_slot {
constexpr std::uint64_t kPerPair = 8;
constexpr std::uint64_t gauss = 0;   // 2*steps normals: Brownian first, factor second
constexpr std::uint64_t jumps = 1;   // Poisson count, times, sizes
constexpr std::uint64_t bridge = 2;  // barrier-crossing uniforms (consumed by MC)
}  // namespace stream_slot

struct PathBatch {
    // (steps+1) x count; column p holds log S over the grid for path first+p.
    Eigen::MatrixXd log_s;
    // Same Brownian increments, sigma0-only geometric Brownian motion
    // (control-variate companion); filled when requested.
    Eigen::MatrixXd log_s_gbm;
    // Cumulative jump counts per grid time; filled when requested.
    Eigen::MatrixXi jump_count;
};

enum BatchFields : unsigned { kLogS = 1, kGbmCompanion = 2, kJumpCounts = 4 };

// Exact-in-distribution sampling of the log-price at the grid times: the joint
// Gaussian part comes from a Cholesky factor of the exact increment
// covariance, jumps from a compound Poisson layer, and the drift keeps
// E[e^{-rt} S_t] = S_0 under risk_neutral / E[S_t] = S_0 e^{mu t} under
// physical.  esscher_tilted draws jumps from the tilted law (zero mean
// relative size) with intensity lambda*.
class PathEngine {
  public:
    PathEngine(const ModelParams& params, PathGrid grid, MeasureMode mode, std::uint64_t seed,
               bool antithetic);

    [[nodiscard]] const PathGrid& grid() const { return grid_; }
    [[nodiscard]] bool antithetic() const { return antithetic_; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] double spot_drift(int j) const { return drift_[j]; }  // cumulative, log scale
    [[nodiscard]] const Eigen::MatrixXd& factor_cholesky() const { return chol_; }
    // Covariance of the scaled factor increments sigmaH * (S_{t_{j+1}} - S_{t_j});
    // the Brownian sigma0^2 dt diagonal is handled analytically on top of this.
    [[nodiscard]] const Eigen::MatrixXd& factor_covariance() const { return cov_; }

    // Fill `out` for paths [first, first+count).  Column layout is stable under
    // any partition of the index range.
    void generate(std::int64_t first, int count, PathBatch& out, unsigned what = kLogS) const;

  private:
    ModelParams params_;
    PathGrid grid_;
    MeasureMode mode_;
    std::uint64_t seed_;
    bool antithetic_;
    double jump_mu_ = 0.0, jump_sigma_ = 0.0, jump_rate_ = 0.0;  // law actually sampled
    std::vector<double> drift_;      // cumulative log drift at each grid time
    std::vector<double> drift_gbm_;  // risk-neutral sigma0-only companion drift
    Eigen::MatrixXd cov_;            // factor increment covariance (steps x steps)
    Eigen::MatrixXd chol_;           // lower Cholesky factor of cov_
};

}  // namespace smfj
