#pragma once

#include <algorithm>

#include "feederflow/density.hpp"
#include "feederflow/network.hpp"
#include "feederflow/profile.hpp"

namespace feederflow {

struct SolveOptions {
    double newton_tol = 1e-10;
    int max_iterations = 50;
    double damping = 1.0;  // initial step fraction, halved on residual increase
};

/// Max-norm residual of the discrete system, split by equation family.
struct Residuals {
    double odes = 0.0;       // central/one-sided collocation rows
    double boundary = 0.0;   // root theta/v and leaf s/w rows
    double junction = 0.0;   // continuity and flow-sum rows at junctions
    double svr = 0.0;        // tap-changer jump rows

    double max() const { return std::max({odes, boundary, junction, svr}); }
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;
};

/// Solves the nonlinear two-point boundary value problem over the whole
/// network with a damped Newton iteration on the central finite-difference
/// system (one-sided second-order stencils at segment ends). Junction and SVR
/// matching conditions enter as algebraic rows. Throws NonConvergence or
/// VoltageCollapse; the returned profile always satisfies v > 0 and
/// residual(...).max() <= options.newton_tol.
Profile solve_tpbv(const FeederNetwork& network,
                   const DensityProfile& density,
                   const Grid& grid,
                   const SolveOptions& options = {},
                   SolveStats* stats = nullptr);

/// Exact recomputation of the discrete residual of a profile.
Residuals residual(const FeederNetwork& network,
                   const DensityProfile& density,
                   const Grid& grid,
                   const Profile& profile);

struct ShootingOptions {
    double tol = 1e-13;          // |w(L)| at the found initial gradient
    double bracket_halfwidth = 0.0;  // 0 = automatic around the linear estimate
    int sweep_points = 81;
    int max_bisections = 200;
};

/// Independent single-segment reference solver: quadrature of s from s(L) = 0,
/// then a 1-D root find on the initial voltage gradient eta with
/// phi(eta) = w(L; v(0)=1, w(0)=eta) integrated by a classical 4-stage
/// one-step method on a refined grid, then quadrature of theta. Shares no code
/// with the finite-difference path. Throws BracketFailure when no sign change
/// of phi exists in the searched bracket.
Profile shooting_oracle(const FeederNetwork& network,
                        const DensityProfile& density,
                        const Grid& grid,
                        const ShootingOptions& options = {});

}  // namespace feederflow
