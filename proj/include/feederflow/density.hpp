#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "feederflow/network.hpp"

namespace feederflow {

enum class InjectionCategory { Ev, Load };

/// A point load/station on a segment. Sign convention: power flowing into the
/// feeder is positive, so consumption (loads, EV charging) carries P < 0 and
/// discharging P > 0.
struct PointInjection {
    std::string segment;
    double xi_km = 0.0;            // segment-local position, 0 < xi < length
    double active_power_P = 0.0;   // per-unit
    double reactive_power_Q = 0.0; // per-unit
    InjectionCategory category = InjectionCategory::Load;
};

struct CoarseGrainSpec {
    double sigma_km = 0.05;
    double truncation_radius = 8.0;  // in multiples of sigma, >= 5
};

/// Scaled power densities sampled on a grid: physical p(x_k) = epsilon * p_tilde(x_k).
struct DensityProfile {
    std::vector<Eigen::ArrayXd> p_tilde;  // per-unit / km, one array per segment
    std::vector<Eigen::ArrayXd> q_tilde;
    double epsilon = 1.0;
};

/// Replaces point injections by Gaussian bumps of width sigma, evaluated
/// segment-locally (no leakage across junctions), and divides by epsilon.
/// The Gaussian is cut at truncation_radius*sigma and not renormalized.
/// Throws std::invalid_argument for epsilon <= 0, sigma < 2h, or an injection
/// placed off its segment.
DensityProfile coarse_grain(const FeederNetwork& network,
                            const std::vector<PointInjection>& injections,
                            const CoarseGrainSpec& spec,
                            const Grid& grid,
                            double epsilon);

/// Splits a density into an EV share and a baseline-load share that keep the
/// common shape functions and carry eps_ev and eps_load respectively.
/// Requires eps_ev, eps_load >= 0 with eps_ev + eps_load == profile.epsilon.
std::pair<DensityProfile, DensityProfile> split(const DensityProfile& profile,
                                                double eps_ev,
                                                double eps_load);

}  // namespace feederflow
