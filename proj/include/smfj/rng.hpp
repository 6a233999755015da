#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace smfj {

// Counter-based RNG (Philox4x32-10).  The generator is a pure function
// (key, counter) -> 128 random bits, so any draw of any logical stream can be
// produced in isolation: results do not depend on thread scheduling or on how
// work is partitioned across threads.
struct Philox4x32 {
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::uint64_t key, std::uint64_t ctr_hi,
                                              std::uint64_t ctr_lo) {
        std::uint32_t c0 = static_cast<std::uint32_t>(ctr_lo);
        std::uint32_t c1 = static_cast<std::uint32_t>(ctr_lo >> 32);
        std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi);
        std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi >> 32);
        std::uint32_t k0 = static_cast<std::uint32_t>(key);
        std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c0;
            const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c2;
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            const std::uint32_t n0 = hi1 ^ c1 ^ k0;
            const std::uint32_t n1 = lo1;
            const std::uint32_t n2 = hi0 ^ c3 ^ k1;
            const std::uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += kW0; k1 += kW1;
        }
        return {c0, c1, c2, c3};
    }
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }
inline double normal_pdf(double x) { return 0.39894228040143267794 * std::exp(-0.5 * x * x); }

// Inverse of the standard normal CDF.  Rational initial guess (peak relative
// error ~1.15e-9) polished by one Halley step to full double precision.
inline double normal_icdf(double u) {
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double lo = 0.02425, hi = 1.0 - 0.02425;
    double x;
    if (u < lo) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u <= hi) {
        const double q = u - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement against the erfc-based CDF.
    const double e = normal_cdf(x) - u;
    const double p = normal_pdf(x);
    const double w = e / p;
    return x - w / (1.0 + 0.5 * x * w);
}

// One logical random stream: (seed, stream) select the key/counter prefix,
// draws consume successive 128-bit blocks.  Cheap to construct; construction
// plus n draws is identical no matter which thread runs it.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(seed), hi_(stream), lo_(0), have_(0) {}

    std::uint32_t next_u32() {
        if (have_ == 0) {
            buf_ = Philox4x32::block(key_, hi_, lo_++);
            have_ = 4;
        }
        return buf_[4 - have_--];
    }

    // 53-bit uniform in (0, 1); never exactly 0 or 1, safe for icdf.
    double next_uniform() {
        const std::uint64_t a = next_u32();
        const std::uint64_t b = next_u32();
        const std::uint64_t x = ((a << 32) | b) >> 11;
        return (static_cast<double>(x) + 0.5) * 1.1102230246251565e-16;  // 2^-53
    }

    double next_normal() { return normal_icdf(next_uniform()); }

    // Poisson(mean) by inversion of the CDF; single uniform per draw keeps the
    // stream layout independent of the sampled value's magnitude.
    int next_poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double u = next_uniform();
        double p = std::exp(-mean);
        double cdf = p;
        int k = 0;
        while (u > cdf && k < 4096) {
            ++k;
            p *= mean / k;
            cdf += p;
        }
        return k;
    }

  private:
    std::uint64_t key_;
    std::uint64_t hi_;
    std::uint64_t lo_;
    int have_;
    std::array<std::uint32_t, 4> buf_{};
};

}  // namespace smfj
