#include <doctest.h>

#include <cmath>

#include "feederflow/errors.hpp"
#include "feederflow/perturbation.hpp"
#include "feederflow/quadrature.hpp"
#include "helpers.hpp"

using namespace feederflow;

namespace {

double max_abs(const std::vector<Eigen::ArrayXd>& f) {
    double m = 0.0;
    for (const auto& a : f) m = std::max(m, a.abs().maxCoeff());
    return m;
}

DensityProfile fig_density(const FeederNetwork& net, const Grid& grid, double eps = 0.01) {
    return coarse_grain(net, testnets::fig_injections(), {}, grid, eps);
}

}  // namespace

TEST_CASE("zero density produces a zero series") {
    const auto net = testnets::single_feeder();
    const Grid grid = discretize(net, 0.01);
    const auto series = compute_series(net, testnets::zero_density(grid), grid, 6);
    for (int n = 1; n <= 4; ++n) {
        CHECK(max_abs(series.order(n).theta) == 0.0);
        CHECK(max_abs(series.order(n).v) == 0.0);
        CHECK(max_abs(series.order(n).s) == 0.0);
        CHECK(max_abs(series.order(n).w) == 0.0);
    }
    for (int n = 5; n <= 6; ++n) {
        CHECK(max_abs(series.order(n).v) == 0.0);
        CHECK(max_abs(series.order(n).w) == 0.0);
    }
}

TEST_CASE("constant consumption has the closed-form first order") {
    const double G = 3.881, B = 6.856, L = 5.0, c = 0.3;
    const double Y2 = G * G + B * B;
    const auto net = testnets::single_feeder(L, G, B);
    const Grid grid = discretize(net, 0.01);

    DensityProfile d = testnets::zero_density(grid, 1.0);
    d.p_tilde[0].setConstant(-c);

    const auto f1 = solve_order(1, net, d, grid, {});
    const auto& x = grid.segments[0].x;
    // symbolic antiderivatives of the constant-source linear system
    const Eigen::ArrayXd s_exact = -(B * c / Y2) * (x - L);
    const Eigen::ArrayXd w_exact = (G * c / Y2) * (x - L);
    const Eigen::ArrayXd v_exact = (G * c / Y2) * (0.5 * x.square() - L * x);
    const Eigen::ArrayXd theta_exact = (B * c / Y2) * (0.5 * x.square() - L * x);
    CHECK((f1.s[0] - s_exact).abs().maxCoeff() < 1e-13);
    CHECK((f1.w[0] - w_exact).abs().maxCoeff() < 1e-13);
    CHECK((f1.v[0] - v_exact).abs().maxCoeff() < 1e-13);
    CHECK((f1.theta[0] - theta_exact).abs().maxCoeff() < 1e-13);
}

TEST_CASE("s vanishes identically above first order") {
    const auto net = testnets::single_feeder();
    const Grid grid = discretize(net, 0.005);
    const auto series = compute_series(net, fig_density(net, grid), grid, 4);
    for (int n = 2; n <= 4; ++n) CHECK(max_abs(series.order(n).s) == 0.0);
}

TEST_CASE("per-order boundary values are imposed exactly") {
    const auto net = testnets::branched();
    const Grid grid = discretize(net, 0.005);
    const DensityProfile d =
        coarse_grain(net, testnets::branched_injections(), {}, grid, 0.01);
    const auto series = compute_series(net, d, grid, 4);
    const Topology topo = build_topology(net);
    for (int n = 1; n <= 4; ++n) {
        const auto& f = series.order(n);
        CHECK(f.theta[0](0) == 0.0);
        CHECK(f.v[0](0) == 0.0);
        for (std::size_t e = 0; e < net.segments.size(); ++e) {
            if (net.nodes[topo.down_node_of_segment[e]].kind != NodeKind::Leaf) continue;
            CHECK(f.s[e](f.s[e].size() - 1) == 0.0);
            CHECK(f.w[e](f.w[e].size() - 1) == 0.0);
        }
    }
}

TEST_CASE("junction sums hold per order") {
    const auto net = testnets::branched();
    const Grid grid = discretize(net, 0.005);
    const DensityProfile d =
        coarse_grain(net, testnets::branched_injections(), {}, grid, 0.01);
    const auto series = compute_series(net, d, grid, 4);
    for (int n = 1; n <= 4; ++n) {
        const auto& f = series.order(n);
        const double s_up = f.s[0](f.s[0].size() - 1);
        const double w_up = f.w[0](f.w[0].size() - 1);
        CHECK(std::abs(s_up - (f.s[1](0) + f.s[2](0))) < 1e-15);
        CHECK(std::abs(w_up - (f.w[1](0) + f.w[2](0))) < 1e-15);
        // theta and v continuous across the junction
        CHECK(f.theta[1](0) == doctest::Approx(f.theta[0](f.theta[0].size() - 1)).epsilon(1e-15));
        CHECK(f.v[2](0) == doctest::Approx(f.v[0](f.v[0].size() - 1)).epsilon(1e-15));
    }
}

TEST_CASE("SVR per-order jumps follow the tap ratio") {
    const double ratio = 1.02;
    const auto net = testnets::svr_feeder(ratio);
    const Grid grid = discretize(net, 0.005);
    const DensityProfile d = coarse_grain(net, testnets::svr_injections(), {}, grid, 0.01);
    const auto series = compute_series(net, d, grid, 4);
    for (int n = 1; n <= 4; ++n) {
        const auto& f = series.order(n);
        const Eigen::Index last = f.v[0].size() - 1;
        CHECK(f.v[0](last) == doctest::Approx(f.v[1](0) / ratio).epsilon(1e-14));
        CHECK(f.w[0](last) == doctest::Approx(ratio * f.w[1](0)).epsilon(1e-14));
        CHECK(f.theta[0](last) == doctest::Approx(f.theta[1](0)).epsilon(1e-14));
        CHECK(f.s[0](last) == doctest::Approx(f.s[1](0)).epsilon(1e-14));
    }
}

TEST_CASE("the closed v/w recursion reproduces orders three and four") {
    const auto net = testnets::single_feeder();
    const Grid grid = discretize(net, 0.002);
    const DensityProfile d = fig_density(net, grid);
    const auto series = compute_series(net, d, grid, 4);

    for (int n : {3, 4}) {
        const auto [v, w] = solve_vw_order(n, net, d, grid, series);
        CHECK((v[0] - series.order(n).v[0]).abs().maxCoeff() <= 1e-12);
        CHECK((w[0] - series.order(n).w[0]).abs().maxCoeff() <= 1e-12);
    }
    CHECK_THROWS_AS(solve_vw_order(2, net, d, grid, series), std::invalid_argument);

    PerturbationSeries only_two = series;
    only_two.orders.resize(2);
    only_two.max_vw_order = 2;
    only_two.max_full_order = 2;
    CHECK_THROWS_AS(solve_vw_order(4, net, d, grid, only_two), MissingLowerOrder);
}

TEST_CASE("epsilon-weighted corrections keep shrinking at higher orders") {
    const auto net = testnets::single_feeder();
    const Grid grid = discretize(net, 0.002);
    const DensityProfile d = fig_density(net, grid);
    const auto series = compute_series(net, d, grid, 8);
    double previous = std::numeric_limits<double>::infinity();
    for (int n = 4; n <= 8; ++n) {
        const double correction = std::pow(d.epsilon, n) * max_abs(series.order(n).v);
        CHECK(correction < previous);
        previous = correction;
    }
}

TEST_CASE("order one is linear in the injections") {
    const auto net = testnets::single_feeder();
    const Grid grid = discretize(net, 0.005);
    auto inj_a = testnets::fig_injections();
    std::vector<PointInjection> a(inj_a.begin(), inj_a.begin() + 2);
    std::vector<PointInjection> b(inj_a.begin() + 2, inj_a.end());

    const auto fa = solve_order(1, net, coarse_grain(net, a, {}, grid, 0.01), grid, {});
    const auto fb = solve_order(1, net, coarse_grain(net, b, {}, grid, 0.01), grid, {});
    const auto fab = solve_order(1, net, coarse_grain(net, inj_a, {}, grid, 0.01), grid, {});
    CHECK(((fa.v[0] + fb.v[0]) - fab.v[0]).abs().maxCoeff() < 1e-12);
    CHECK(((fa.w[0] + fb.w[0]) - fab.w[0]).abs().maxCoeff() < 1e-12);
    CHECK(((fa.s[0] + fb.s[0]) - fab.s[0]).abs().maxCoeff() < 1e-12);
}

TEST_CASE("assemble truncates and validates orders") {
    const auto net = testnets::single_feeder();
    const Grid grid = discretize(net, 0.005);
    const DensityProfile d = fig_density(net, grid);
    const auto series = compute_series(net, d, grid, 6);

    const Profile p0 = assemble(series, 0.0, 4);
    CHECK((p0.v[0] - 1.0).abs().maxCoeff() == 0.0);
    CHECK(p0.theta[0].abs().maxCoeff() == 0.0);

    const Profile p6 = assemble(series, d.epsilon, 6);  // theta/s capped at order 4
    CHECK(p6.v[0](p6.v[0].size() - 1) < 1.0);
    CHECK_THROWS_AS(assemble(series, d.epsilon, 7), std::invalid_argument);
}

TEST_CASE("assembled profiles are invariant under the epsilon bookkeeping") {
    const auto net = testnets::single_feeder();
    const Grid grid = discretize(net, 0.01);
    const auto inj = testnets::fig_injections();
    const auto ref_density = coarse_grain(net, inj, {}, grid, 1e-1);
    const Profile ref = assemble(compute_series(net, ref_density, grid, 4), 1e-1, 4);
    for (double eps : {1e-3, 1e-6, 1e-8}) {
        const auto d = coarse_grain(net, inj, {}, grid, eps);
        const Profile p = assemble(compute_series(net, d, grid, 4), eps, 4);
        CHECK((p.v[0] - ref.v[0]).abs().maxCoeff() < 1e-9);
        CHECK((p.theta[0] - ref.theta[0]).abs().maxCoeff() < 1e-9);
        CHECK((p.w[0] - ref.w[0]).abs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("ev_impact matches the explicit cross-term structure") {
    const auto net = testnets::single_feeder();
    const Grid grid = discretize(net, 0.005);
    const DensityProfile d = fig_density(net, grid);
    const auto series = compute_series(net, d, grid, 3);

    const double ev = 0.4 * d.epsilon, load = 0.6 * d.epsilon;
    const ImpactResult r = ev_impact(net, series, {ev, load, 3});
    const auto& v1 = series.order(1).v[0];
    const auto& v2 = series.order(2).v[0];
    const auto& v3 = series.order(3).v[0];
    const Eigen::ArrayXd explicit_form = ev * v1 + (ev * ev + 2.0 * ev * load) * v2 +
                                         (ev * ev * ev + 3.0 * ev * load * (ev + load)) * v3;
    CHECK((r.delta_v[0] - explicit_form).abs().maxCoeff() < 1e-15);
    CHECK(r.max_abs > 0.0);
    CHECK(r.segment == "feeder");

    const ImpactResult zero = ev_impact(net, series, {0.0, d.epsilon, 3});
    CHECK(max_abs(zero.delta_v) == 0.0);

    CHECK_THROWS_AS(ev_impact(net, series, {0.5 * d.epsilon, 0.9 * d.epsilon, 3}),
                    std::invalid_argument);
    CHECK_THROWS_AS(ev_impact(net, series, {0.4 * d.epsilon, 0.6 * d.epsilon, 9}),
                    std::invalid_argument);
}

TEST_CASE("solve_order rejects missing lower orders and bad grids") {
    const auto net = testnets::single_feeder();
    const Grid grid = discretize(net, 0.01);
    const DensityProfile d = fig_density(net, grid);
    CHECK_THROWS_AS(solve_order(3, net, d, grid, {}), MissingLowerOrder);
    CHECK_THROWS_AS(solve_order(0, net, d, grid, {}), std::invalid_argument);

    const Grid finer = discretize(net, 0.005);
    CHECK_THROWS_AS(solve_order(1, net, d, finer, {}), GridMismatch);
}
