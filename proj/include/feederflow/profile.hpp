#pragma once

#include <Eigen/Core>
#include <vector>

#include "feederflow/network.hpp"

namespace feederflow {

/// Solution fields over the whole network, one array per segment aligned with
/// the grid: voltage phase theta [rad], amplitude v [pu], the ancillary flow
/// variable s = -v^2 dtheta/dx [pu], and the voltage gradient w = dv/dx [pu/km].
struct Profile {
    std::vector<Eigen::ArrayXd> theta;
    std::vector<Eigen::ArrayXd> v;
    std::vector<Eigen::ArrayXd> s;
    std::vector<Eigen::ArrayXd> w;
};

/// The unloaded solution: theta = 0, v = 1, s = 0, w = 0 on every sample.
Profile flat_profile(const Grid& grid);

}  // namespace feederflow
