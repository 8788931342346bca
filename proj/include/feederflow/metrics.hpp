#pragma once

#include <Eigen/Core>
#include <vector>

#include "feederflow/density.hpp"
#include "feederflow/network.hpp"
#include "feederflow/nonlinear.hpp"
#include "feederflow/profile.hpp"

namespace feederflow {

struct ProfileDiff {
    std::vector<Eigen::ArrayXd> e_theta, e_v, e_s, e_w;
};

/// Sample-wise a - b for each field; grids must match.
ProfileDiff diff(const Profile& a, const Profile& b);

/// sqrt of the trapezoidal integral of e^2 over every segment: the RMS-style
/// quantification |e|_2 = sqrt(int e(x)^2 dx) over all feeders.
double l2_like(const std::vector<Eigen::ArrayXd>& e, const Grid& grid);

/// Worst-case quantification: max |e(x)| across all segments.
double linf_like(const std::vector<Eigen::ArrayXd>& e, const Grid& grid);

struct ConvergenceRow {
    int order = 0;
    double dw_root = 0.0;        // |w_series - w_nonlinear| at the root sample
    double dv_far_leaf = 0.0;    // |v_series - v_nonlinear| at the farthest leaf
    double dtheta_far_leaf = 0.0;
    double l2_v = 0.0;
    double linf_v = 0.0;
};

/// Table of truncation-order accuracy against the nonlinear solution: one row
/// per requested order. The far leaf is the leaf at maximal arclength from the
/// root. Propagates solver errors.
std::vector<ConvergenceRow> convergence_report(const FeederNetwork& network,
                                               const DensityProfile& density,
                                               const Grid& grid,
                                               const std::vector<int>& orders,
                                               const SolveOptions& options = {});

}  // namespace feederflow
