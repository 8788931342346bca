#include "feederflow/nonlinear.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <cmath>
#include <string>
#include <vector>

#include "feederflow/errors.hpp"
#include "feederflow/perturbation.hpp"

namespace feederflow {
namespace {

enum Field : int { FTheta = 0, FV = 1, FS = 2, FW = 3 };
enum Family : std::uint8_t { FamOde = 0, FamBoundary = 1, FamJunction = 2, FamSvr = 3 };

struct System {
    const FeederNetwork& net;
    const Grid& grid;
    Topology topo;
    std::vector<Eigen::Index> offset;          // first sample of each segment
    Eigen::Index n_unknowns = 0;
    std::vector<Eigen::ArrayXd> rs, kappa;     // physical source terms per segment
    std::vector<std::uint8_t> family;          // per-row equation family

    Eigen::Index idx(int e, Eigen::Index k, int f) const {
        return 4 * (offset[static_cast<std::size_t>(e)] + k) + f;
    }
};

System make_system(const FeederNetwork& net, const DensityProfile& d, const Grid& grid) {
    if (grid.segments.size() != net.segments.size() || d.p_tilde.size() != grid.segments.size())
        throw GridMismatch("nonlinear: density/grid/network sizes disagree");
    for (std::size_t e = 0; e < grid.segments.size(); ++e)
        if (d.p_tilde[e].size() != grid.segments[e].x.size())
            throw GridMismatch("nonlinear: density not sampled on this grid");

    System sys{net, grid, build_topology(net), {}, 0, {}, {}, {}};
    sys.offset.resize(net.segments.size());
    Eigen::Index acc = 0;
    for (std::size_t e = 0; e < net.segments.size(); ++e) {
        sys.offset[e] = acc;
        acc += grid.segments[e].x.size();
    }
    sys.n_unknowns = 4 * acc;

    sys.rs.reserve(net.segments.size());
    sys.kappa.reserve(net.segments.size());
    for (std::size_t e = 0; e < net.segments.size(); ++e) {
        const double G = net.segments[e].conductance_G;
        const double B = net.segments[e].susceptance_B;
        const double Y2 = G * G + B * B;
        const Eigen::ArrayXd p = d.epsilon * d.p_tilde[e];
        const Eigen::ArrayXd q = d.epsilon * d.q_tilde[e];
        sys.rs.emplace_back((B * p - G * q) / Y2);
        sys.kappa.emplace_back((G * p + B * q) / Y2);
    }
    return sys;
}

using Triplets = std::vector<Eigen::Triplet<double>>;

/// Builds the residual vector and, when trips is non-null, the matching
/// Jacobian triplets. One walker keeps both in lockstep. When families is
/// non-null it is filled with the per-row equation family (state-independent).
void assemble(const System& sys, const Eigen::VectorXd& y, Eigen::VectorXd& F, Triplets* trips,
              std::vector<std::uint8_t>* families) {
    F.setZero(sys.n_unknowns);
    if (families) families->assign(static_cast<std::size_t>(sys.n_unknowns), FamOde);
    auto put = [&](Eigen::Index row, Eigen::Index col, double val) {
        if (trips) trips->emplace_back(static_cast<int>(row), static_cast<int>(col), val);
    };
    auto tag = [&](Eigen::Index row, std::uint8_t fam) {
        if (families) (*families)[static_cast<std::size_t>(row)] = fam;
    };

    for (std::size_t e = 0; e < sys.net.segments.size(); ++e) {
        const auto& sg = sys.grid.segments[e];
        const Eigen::Index n = sg.x.size();
        const double h = sg.h;
        const int ei = static_cast<int>(e);

        // collocation row of field f at sample k with difference stencil
        // {(j0,c0),(j1,c1),(j2,c2)}; central stencils pass c2 = 0
        auto ode_row = [&](int f, Eigen::Index k, Eigen::Index j0, double c0, Eigen::Index j1,
                           double c1, Eigen::Index j2, double c2) {
            const Eigen::Index row = sys.idx(ei, k, f);
            const double vk = y[sys.idx(ei, k, FV)];
            const double sk = y[sys.idx(ei, k, FS)];
            double diff = c0 * y[sys.idx(ei, j0, f)] + c1 * y[sys.idx(ei, j1, f)];
            put(row, sys.idx(ei, j0, f), c0);
            put(row, sys.idx(ei, j1, f), c1);
            if (c2 != 0.0) {
                diff += c2 * y[sys.idx(ei, j2, f)];
                put(row, sys.idx(ei, j2, f), c2);
            }
            switch (f) {
                case FTheta:
                    F[row] = diff + sk / (vk * vk);
                    put(row, sys.idx(ei, k, FS), 1.0 / (vk * vk));
                    put(row, sys.idx(ei, k, FV), -2.0 * sk / (vk * vk * vk));
                    break;
                case FV:
                    F[row] = diff - y[sys.idx(ei, k, FW)];
                    put(row, sys.idx(ei, k, FW), -1.0);
                    break;
                case FS:
                    F[row] = diff - sys.rs[e](k);
                    break;
                case FW:
                    F[row] = diff - sk * sk / (vk * vk * vk) + sys.kappa[e](k) / vk;
                    put(row, sys.idx(ei, k, FS), -2.0 * sk / (vk * vk * vk));
                    put(row, sys.idx(ei, k, FV),
                        3.0 * sk * sk / (vk * vk * vk * vk) - sys.kappa[e](k) / (vk * vk));
                    break;
            }
        };
        auto central = [&](int f, Eigen::Index k) {
            ode_row(f, k, k - 1, -0.5 / h, k + 1, 0.5 / h, 0, 0.0);
        };
        auto forward = [&](int f) { ode_row(f, 0, 0, -1.5 / h, 1, 2.0 / h, 2, -0.5 / h); };
        auto backward = [&](int f) {
            ode_row(f, n - 1, n - 1, 1.5 / h, n - 2, -2.0 / h, n - 3, 0.5 / h);
        };

        for (Eigen::Index k = 1; k + 1 < n; ++k)
            for (int f = 0; f < 4; ++f) central(f, k);

        // upstream end: theta/v slots carry boundary or matching rows,
        // s/w integrate toward the root so their stencils close here
        const int un = sys.topo.up_node_of_segment[e];
        const Node& up = sys.net.nodes[un];
        if (up.kind == NodeKind::Root) {
            const Eigen::Index rt = sys.idx(ei, 0, FTheta);
            F[rt] = y[rt];
            put(rt, rt, 1.0);
            tag(rt, FamBoundary);
            const Eigen::Index rv = sys.idx(ei, 0, FV);
            F[rv] = y[rv] - 1.0;
            put(rv, rv, 1.0);
            tag(rv, FamBoundary);
        } else {
            const int parent = sys.topo.up_segment_of_node[un];
            const Eigen::Index pn = sys.grid.segments[parent].x.size();
            const std::uint8_t fam = up.kind == NodeKind::Svr ? FamSvr : FamJunction;
            const Eigen::Index rt = sys.idx(ei, 0, FTheta);
            F[rt] = y[sys.idx(parent, pn - 1, FTheta)] - y[rt];
            put(rt, sys.idx(parent, pn - 1, FTheta), 1.0);
            put(rt, rt, -1.0);
            tag(rt, fam);
            const Eigen::Index rv = sys.idx(ei, 0, FV);
            const double inv_n = up.kind == NodeKind::Svr ? 1.0 / up.turn_ratio : 1.0;
            F[rv] = y[sys.idx(parent, pn - 1, FV)] - inv_n * y[rv];
            put(rv, sys.idx(parent, pn - 1, FV), 1.0);
            put(rv, rv, -inv_n);
            tag(rv, fam);
        }
        forward(FS);
        forward(FW);

        // downstream end: s/w slots carry boundary or matching rows
        const int dn = sys.topo.down_node_of_segment[e];
        const Node& down = sys.net.nodes[dn];
        if (down.kind == NodeKind::Leaf) {
            const Eigen::Index rs_ = sys.idx(ei, n - 1, FS);
            F[rs_] = y[rs_];
            put(rs_, rs_, 1.0);
            tag(rs_, FamBoundary);
            const Eigen::Index rw = sys.idx(ei, n - 1, FW);
            F[rw] = y[rw];
            put(rw, rw, 1.0);
            tag(rw, FamBoundary);
        } else {
            const std::uint8_t fam = down.kind == NodeKind::Svr ? FamSvr : FamJunction;
            const double nr = down.kind == NodeKind::Svr ? down.turn_ratio : 1.0;
            const Eigen::Index rs_ = sys.idx(ei, n - 1, FS);
            F[rs_] = y[rs_];
            put(rs_, rs_, 1.0);
            for (int c : sys.topo.down_segments_of_node[dn]) {
                F[rs_] -= y[sys.idx(c, 0, FS)];
                put(rs_, sys.idx(c, 0, FS), -1.0);
            }
            tag(rs_, fam);
            const Eigen::Index rw = sys.idx(ei, n - 1, FW);
            F[rw] = y[rw];
            put(rw, rw, 1.0);
            for (int c : sys.topo.down_segments_of_node[dn]) {
                F[rw] -= nr * y[sys.idx(c, 0, FW)];
                put(rw, sys.idx(c, 0, FW), -nr);
            }
            tag(rw, fam);
        }
        backward(FTheta);
        backward(FV);
    }
}

Eigen::VectorXd pack(const System& sys, const Profile& p) {
    Eigen::VectorXd y(sys.n_unknowns);
    for (std::size_t e = 0; e < sys.grid.segments.size(); ++e)
        for (Eigen::Index k = 0; k < sys.grid.segments[e].x.size(); ++k) {
            const int ei = static_cast<int>(e);
            y[sys.idx(ei, k, FTheta)] = p.theta[e](k);
            y[sys.idx(ei, k, FV)] = p.v[e](k);
            y[sys.idx(ei, k, FS)] = p.s[e](k);
            y[sys.idx(ei, k, FW)] = p.w[e](k);
        }
    return y;
}

Profile unpack(const System& sys, const Eigen::VectorXd& y) {
    Profile p = flat_profile(sys.grid);
    for (std::size_t e = 0; e < sys.grid.segments.size(); ++e)
        for (Eigen::Index k = 0; k < sys.grid.segments[e].x.size(); ++k) {
            const int ei = static_cast<int>(e);
            p.theta[e](k) = y[sys.idx(ei, k, FTheta)];
            p.v[e](k) = y[sys.idx(ei, k, FV)];
            p.s[e](k) = y[sys.idx(ei, k, FS)];
            p.w[e](k) = y[sys.idx(ei, k, FW)];
        }
    return p;
}

double min_voltage(const System& sys, const Eigen::VectorXd& y) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < sys.grid.segments.size(); ++e)
        for (Eigen::Index k = 0; k < sys.grid.segments[e].x.size(); ++k)
            m = std::min(m, y[sys.idx(static_cast<int>(e), k, FV)]);
    return m;
}

Eigen::VectorXd starting_point(const System& sys, const FeederNetwork& net,
                               const DensityProfile& d, const Grid& grid) {
    // first-order perturbation start when it stays well away from collapse
    PerturbationSeries s1 = compute_series(net, d, grid, 1);
    Profile start = assemble(s1, d.epsilon, 1);
    double mv = std::numeric_limits<double>::infinity();
    for (const auto& v : start.v) mv = std::min(mv, v.minCoeff());
    if (mv > 0.05) return pack(sys, start);
    return pack(sys, flat_profile(grid));
}

}  // namespace

Profile flat_profile(const Grid& grid) {
    Profile p;
    p.theta.reserve(grid.segments.size());
    p.v.reserve(grid.segments.size());
    p.s.reserve(grid.segments.size());
    p.w.reserve(grid.segments.size());
    for (const auto& sg : grid.segments) {
        p.theta.emplace_back(Eigen::ArrayXd::Zero(sg.x.size()));
        p.v.emplace_back(Eigen::ArrayXd::Ones(sg.x.size()));
        p.s.emplace_back(Eigen::ArrayXd::Zero(sg.x.size()));
        p.w.emplace_back(Eigen::ArrayXd::Zero(sg.x.size()));
    }
    return p;
}

Profile solve_tpbv(const FeederNetwork& net, const DensityProfile& d, const Grid& grid,
                   const SolveOptions& options, SolveStats* stats) {
    if (!(options.newton_tol > 0.0) || options.max_iterations < 1 ||
        !(options.damping > 0.0 && options.damping <= 1.0))
        throw std::invalid_argument("solve_tpbv: bad options");

    const System sys = make_system(net, d, grid);
    Eigen::VectorXd y = starting_point(sys, net, d, grid);

    Eigen::VectorXd F;
    assemble(sys, y, F, nullptr, nullptr);
    double rnorm = F.lpNorm<Eigen::Infinity>();

    Eigen::SparseMatrix<double> J(sys.n_unknowns, sys.n_unknowns);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        if (rnorm <= options.newton_tol) {
            const double mv = min_voltage(sys, y);
            if (mv <= 0.0)
                throw VoltageCollapse(iter, mv, "solve_tpbv: converged to a collapsed profile");
            if (stats) *stats = {iter, rnorm};
            return unpack(sys, y);
        }

        Triplets trips;
        trips.reserve(static_cast<std::size_t>(sys.n_unknowns) * 8);
        assemble(sys, y, F, &trips, nullptr);
        J.setFromTriplets(trips.begin(), trips.end());
        lu.compute(J);
        if (lu.info() != Eigen::Success)
            throw NonConvergence(iter, rnorm, "solve_tpbv: singular Jacobian");
        const Eigen::VectorXd step = lu.solve(-F);

        double alpha = options.damping;
        bool accepted = false;
        bool any_positive_trial = false;
        Eigen::VectorXd y_try, F_try;
        while (alpha >= 1e-12) {
            y_try = y + alpha * step;
            if (min_voltage(sys, y_try) > 0.0) {
                any_positive_trial = true;
                assemble(sys, y_try, F_try, nullptr, nullptr);
                const double rn_try = F_try.lpNorm<Eigen::Infinity>();
                if (rn_try < rnorm) {
                    y = std::move(y_try);
                    rnorm = rn_try;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            if (!any_positive_trial)
                throw VoltageCollapse(iter + 1, min_voltage(sys, y + step),
                                      "solve_tpbv: every damped step drives v <= 0");
            throw NonConvergence(iter + 1, rnorm, "solve_tpbv: damped Newton stalled");
        }
    }
    if (rnorm <= options.newton_tol) {
        const double mv = min_voltage(sys, y);
        if (mv <= 0.0)
            throw VoltageCollapse(options.max_iterations, mv,
                                  "solve_tpbv: converged to a collapsed profile");
        if (stats) *stats = {options.max_iterations, rnorm};
        return unpack(sys, y);
    }
    throw NonConvergence(options.max_iterations, rnorm,
                         "solve_tpbv: no convergence within the iteration budget");
}

Residuals residual(const FeederNetwork& net, const DensityProfile& d, const Grid& grid,
                   const Profile& profile) {
    const System sys = make_system(net, d, grid);
    if (profile.v.size() != grid.segments.size())
        throw GridMismatch("residual: profile does not match grid");
    for (std::size_t e = 0; e < grid.segments.size(); ++e)
        if (profile.v[e].size() != grid.segments[e].x.size())
            throw GridMismatch("residual: profile does not match grid");

    const Eigen::VectorXd y = pack(sys, profile);
    Eigen::VectorXd F;
    std::vector<std::uint8_t> families;
    assemble(sys, y, F, nullptr, &families);

    Residuals r;
    for (Eigen::Index i = 0; i < F.size(); ++i) {
        const double a = std::abs(F[i]);
        switch (families[static_cast<std::size_t>(i)]) {
            case FamOde: r.odes = std::max(r.odes, a); break;
            case FamBoundary: r.boundary = std::max(r.boundary, a); break;
            case FamJunction: r.junction = std::max(r.junction, a); break;
            case FamSvr: r.svr = std::max(r.svr, a); break;
        }
    }
    return r;
}

}  // namespace feederflow
