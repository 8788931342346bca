#include "feederflow/density.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace feederflow {

DensityProfile coarse_grain(const FeederNetwork& net,
                            const std::vector<PointInjection>& injections,
                            const CoarseGrainSpec& spec,
                            const Grid& grid,
                            double epsilon) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("coarse_grain: epsilon must be > 0");
    if (!(spec.sigma_km > 0.0))
        throw std::invalid_argument("coarse_grain: sigma must be > 0");
    if (spec.truncation_radius < 5.0)
        throw std::invalid_argument("coarse_grain: truncation_radius must be >= 5 sigma");
    if (grid.segments.size() != net.segments.size())
        throw std::invalid_argument("coarse_grain: grid does not match network");
    for (const auto& sg : grid.segments)
        if (spec.sigma_km < 2.0 * sg.h)
            throw std::invalid_argument("coarse_grain: sigma < 2h, kernel under-resolved");

    DensityProfile d;
    d.epsilon = epsilon;
    d.p_tilde.reserve(grid.segments.size());
    d.q_tilde.reserve(grid.segments.size());
    for (const auto& sg : grid.segments) {
        d.p_tilde.emplace_back(Eigen::ArrayXd::Zero(sg.x.size()));
        d.q_tilde.emplace_back(Eigen::ArrayXd::Zero(sg.x.size()));
    }

    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * spec.sigma_km * spec.sigma_km);
    const double cutoff = spec.truncation_radius * spec.sigma_km;

    for (const auto& inj : injections) {
        const int e = net.segment_index(inj.segment);
        if (e < 0)
            throw std::invalid_argument("coarse_grain: injection on unknown segment '" + inj.segment + "'");
        const double length = net.segments[e].length_km;
        if (!(inj.xi_km > 0.0) || !(inj.xi_km < length))
            throw std::invalid_argument("coarse_grain: injection position must lie strictly inside segment '" +
                                        inj.segment + "'");
        const auto& x = grid.segments[e].x;
        auto& p = d.p_tilde[e];
        auto& q = d.q_tilde[e];
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            const double dx = x(k) - inj.xi_km;
            if (std::abs(dx) > cutoff) continue;
            const double g = norm * std::exp(-dx * dx / (2.0 * spec.sigma_km * spec.sigma_km));
            p(k) += inj.active_power_P * g;
            q(k) += inj.reactive_power_Q * g;
        }
    }
    for (auto& p : d.p_tilde) p /= epsilon;
    for (auto& q : d.q_tilde) q /= epsilon;
    return d;
}

std::pair<DensityProfile, DensityProfile> split(const DensityProfile& profile,
                                                double eps_ev,
                                                double eps_load) {
    if (eps_ev < 0.0 || eps_load < 0.0)
        throw std::invalid_argument("split: shares must be non-negative");
    const double sum = eps_ev + eps_load;
    if (std::abs(sum - profile.epsilon) > 1e-12 * std::max(1.0, profile.epsilon))
        throw std::invalid_argument("split: eps_ev + eps_load must equal the profile's epsilon");

    DensityProfile ev = profile;
    ev.epsilon = eps_ev;
    DensityProfile load = profile;
    load.epsilon = eps_load;
    return {std::move(ev), std::move(load)};
}

}  // namespace feederflow
