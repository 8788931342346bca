#include <doctest.h>

#include <cmath>
#include <random>

#include "feederflow/errors.hpp"
#include "feederflow/metrics.hpp"
#include "feederflow/perturbation.hpp"
#include "helpers.hpp"

using namespace feederflow;

namespace {

std::vector<Eigen::ArrayXd> constant_field(const Grid& grid, double value) {
    std::vector<Eigen::ArrayXd> f;
    for (const auto& sg : grid.segments) f.emplace_back(Eigen::ArrayXd::Constant(sg.x.size(), value));
    return f;
}

std::vector<Eigen::ArrayXd> random_field(const Grid& grid, std::mt19937& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<Eigen::ArrayXd> f;
    for (const auto& sg : grid.segments) {
        Eigen::ArrayXd a(sg.x.size());
        for (Eigen::Index k = 0; k < a.size(); ++k) a(k) = dist(rng);
        f.push_back(std::move(a));
    }
    return f;
}

}  // namespace

TEST_CASE("diff of a profile with itself is zero") {
    const auto net = testnets::single_feeder();
    const Grid grid = discretize(net, 0.01);
    const Profile p = flat_profile(grid);
    const ProfileDiff d = diff(p, p);
    CHECK(l2_like(d.e_v, grid) == 0.0);
    CHECK(linf_like(d.e_theta, grid) == 0.0);
}

TEST_CASE("the RMS-style norm of a unit field is the root of the line length") {
    // 1.0 + 0.76 + 0.76 km of feeder, as in the branched example
    const auto net = testnets::branched();
    const Grid grid = discretize(net, 0.005);
    const auto ones = constant_field(grid, 1.0);
    CHECK(l2_like(ones, grid) == doctest::Approx(std::sqrt(2.52)).epsilon(1e-12));
    CHECK(linf_like(ones, grid) == 1.0);
}

TEST_CASE("the worst-case norm picks out a single spike") {
    const auto net = testnets::single_feeder();
    const Grid grid = discretize(net, 0.01);
    auto f = constant_field(grid, 0.0);
    f[0](37) = -0.01;
    CHECK(linf_like(f, grid) == doctest::Approx(0.01));
    CHECK(l2_like(f, grid) > 0.0);
}

TEST_CASE("discrete norm axioms hold on random fields") {
    const auto net = testnets::branched();
    const Grid grid = discretize(net, 0.01);
    std::mt19937 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const auto a = random_field(grid, rng);
        const auto b = random_field(grid, rng);
        const double la = l2_like(a, grid), lb = l2_like(b, grid);
        CHECK(la >= 0.0);

        std::vector<Eigen::ArrayXd> scaled, sum;
        for (std::size_t e = 0; e < a.size(); ++e) {
            scaled.push_back(-2.5 * a[e]);
            sum.push_back(a[e] + b[e]);
        }
        CHECK(l2_like(scaled, grid) == doctest::Approx(2.5 * la).epsilon(1e-12));
        CHECK(linf_like(scaled, grid) ==
              doctest::Approx(2.5 * linf_like(a, grid)).epsilon(1e-12));
        CHECK(l2_like(sum, grid) <= la + lb + 1e-12);
        // comparison against the worst case over the total 2.52 km length
        CHECK(la <= std::sqrt(2.52) * linf_like(a, grid) + 1e-12);
    }
}

TEST_CASE("convergence report rows decrease for a single load") {
    const auto net = testnets::single_feeder();
    const Grid grid = discretize(net, 0.005);
    const std::vector<PointInjection> one{{"feeder", 2.5, -0.4, 0.0, InjectionCategory::Load}};
    const DensityProfile d = coarse_grain(net, one, {}, grid, 0.01);
    const auto rows = convergence_report(net, d, grid, {1, 2, 3, 4});
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        CHECK(rows[i].dv_far_leaf > rows[i + 1].dv_far_leaf);
        CHECK(rows[i].l2_v > rows[i + 1].l2_v);
        CHECK(rows[i].linf_v > rows[i + 1].linf_v);
    }
    CHECK(rows[0].order == 1);
}

TEST_CASE("convergence report of the unloaded feeder is identically zero") {
    const auto net = testnets::single_feeder();
    const Grid grid = discretize(net, 0.01);
    const auto rows = convergence_report(net, testnets::zero_density(grid), grid, {1, 2});
    for (const auto& r : rows) {
        CHECK(r.dv_far_leaf <= 1e-12);
        CHECK(r.dw_root <= 1e-12);
        CHECK(r.dtheta_far_leaf <= 1e-12);
        CHECK(r.l2_v <= 1e-12);
    }
}

TEST_CASE("diff rejects mismatched grids") {
    const auto net = testnets::single_feeder();
    const Grid a = discretize(net, 0.01);
    const Grid b = discretize(net, 0.005);
    CHECK_THROWS_AS(diff(flat_profile(a), flat_profile(b)), GridMismatch);
}
