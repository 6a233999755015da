#include "smfj/transform_pricer.hpp"

#include <cmath>
#include <sstream>

#include "smfj/measure.hpp"

namespace smfj {

std::complex<double> transform_denominator(std::complex<double> s, std::complex<double> z,
                                           const ModelParams& p) {
    const double beta = 1.0 - p.hurst;
    const double kappa = jump_kappa(p.mu_y, p.sigma_y);
    const std::complex<double> phi =
        std::exp(-p.mu_y * z + 0.5 * p.sigma_y * p.sigma_y * z * z);
    return std::pow(s, 1.0 - beta) - 0.5 * p.sigma0 * p.sigma0 * (z * z + z) -
           p.sigma0 * p.sigma_h * z * z * std::pow(s, -beta) - (p.rate - p.lambda * kappa) * z +
           p.lambda * (phi - 1.0);
}

namespace {

std::string grid_note(const detail::TransformCore<double>& core, const TransformConfig& cfg) {
    std::ostringstream os;
    os << "talbot=" << cfg.talbot_nodes << " step=" << core.step()
       << " nodes=" << core.nodes_used() << (core.classical() ? " branch=classical" : " branch=memory");
    return os.str();
}

}  // namespace

PricingResult price_transform(const ModelParams& params, const OptionContract& contract,
                              const TransformConfig& cfg) {
    params.validate();
    contract.validate();
    if (contract.kind == OptionKind::down_and_out_call)
        throw std::invalid_argument("transform route prices european contracts only");

    detail::TransformCore<double> core(to_scalar<double>(params), contract.maturity, cfg,
                                       std::fabs(std::log(contract.spot / contract.strike)));
    PricingResult out;
    out.method = "transform";
    out.price = contract.kind == OptionKind::european_call
                    ? core.call(contract.spot, contract.strike)
                    : core.put(contract.spot, contract.strike);
    out.iterations = core.nodes_used();
    out.residual = core.tail_ratio();
    out.grid = grid_note(core, cfg);
    return out;
}

std::vector<double> price_transform_strikes(const ModelParams& params, double spot,
                                            const std::vector<double>& strikes, double maturity,
                                            OptionKind kind, const TransformConfig& cfg) {
    params.validate();
    if (kind == OptionKind::down_and_out_call)
        throw std::invalid_argument("transform route prices european contracts only");
    double hint = 0.0;
    for (double k : strikes) hint = std::max(hint, std::fabs(std::log(spot / k)));
    detail::TransformCore<double> core(to_scalar<double>(params), maturity, cfg, hint);
    std::vector<double> out;
    out.reserve(strikes.size());
    for (double k : strikes)
        out.push_back(kind == OptionKind::european_call ? core.call(spot, k) : core.put(spot, k));
    return out;
}

}  // namespace smfj
