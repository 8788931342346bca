#pragma once

#include <Eigen/Core>
#include <string>
#include <utility>
#include <vector>

#include "feederflow/density.hpp"
#include "feederflow/network.hpp"
#include "feederflow/profile.hpp"

namespace feederflow {

/// Fields of one perturbation order, one array per segment. theta and s are
/// only derived up to order 4; above that the vectors stay empty.
struct OrderFields {
    std::vector<Eigen::ArrayXd> theta;
    std::vector<Eigen::ArrayXd> v;
    std::vector<Eigen::ArrayXd> s;
    std::vector<Eigen::ArrayXd> w;
};

struct PerturbationSeries {
    Grid grid;
    double epsilon = 0.0;       // epsilon of the source density
    int max_full_order = 0;     // highest order with theta, s (<= 4)
    int max_vw_order = 0;       // highest order with v, w
    std::vector<OrderFields> orders;  // orders[n-1] holds order n

    const OrderFields& order(int n) const { return orders.at(static_cast<std::size_t>(n - 1)); }
};

/// Solves the order-n linear initial-value system (n = 1..4) by leaf-to-root
/// trapezoidal quadrature for s_n, w_n (terminal values zero at leaves,
/// summation across junctions) and root-to-leaf quadrature for v_n, theta_n
/// (zero at the root, continuity at junctions). SVR matching applies the
/// per-order jump factors. lower must contain all orders below n.
OrderFields solve_order(int n,
                        const FeederNetwork& network,
                        const DensityProfile& density_tilde,
                        const Grid& grid,
                        const PerturbationSeries& lower);

/// Order-n voltage pair (v_n, w_n) for any n >= 3 from the closed recursion
/// dw_n/dx = -3 s1^2 v_{n-2} + (G p~ + B q~)/(G^2+B^2) v_{n-1}. For n = 3, 4
/// this coincides with solve_order's v/w output.
std::pair<std::vector<Eigen::ArrayXd>, std::vector<Eigen::ArrayXd>> solve_vw_order(
    int n,
    const FeederNetwork& network,
    const DensityProfile& density_tilde,
    const Grid& grid,
    const PerturbationSeries& lower);

/// Convenience driver: all orders 1..order (theta, s capped at order 4).
PerturbationSeries compute_series(const FeederNetwork& network,
                                  const DensityProfile& density,
                                  const Grid& grid,
                                  int order);

/// Truncated series evaluation: v = 1 + sum eps^n v_n and so on. theta and s
/// are truncated at max_full_order when order exceeds it; requesting more than
/// max_vw_order throws.
Profile assemble(const PerturbationSeries& series, double epsilon, int order);

struct ImpactSpec {
    double eps_ev = 0.0;
    double eps_load = 0.0;
    int order = 4;
};

struct ImpactResult {
    std::vector<Eigen::ArrayXd> delta_v;  // per-segment EV-conditioned voltage change
    double max_abs = 0.0;
    std::string segment;                  // location of the maximum
    double x_km = 0.0;                    // segment-local position of the maximum
};

/// EV impact conditioned on the baseline loads: the difference of the
/// truncated voltage series evaluated at eps_ev + eps_load and at eps_load,
/// i.e. delta_v = sum_n ((eps_ev+eps_load)^n - eps_load^n) v_n.
/// Requires eps_ev + eps_load to equal the series' epsilon.
ImpactResult ev_impact(const FeederNetwork& network,
                       const PerturbationSeries& series,
                       const ImpactSpec& spec);

}  // namespace feederflow
