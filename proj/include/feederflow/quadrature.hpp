#pragma once

#include <Eigen/Core>

namespace feederflow {

/// Composite-trapezoid antiderivative on a uniform grid: out(0) = 0,
/// out(k) = integral of f from x(0) to x(k).
inline Eigen::ArrayXd cumulative_trapezoid(const Eigen::ArrayXd& f, double h) {
    Eigen::ArrayXd out(f.size());
    out(0) = 0.0;
    for (Eigen::Index k = 1; k < f.size(); ++k)
        out(k) = out(k - 1) + 0.5 * h * (f(k - 1) + f(k));
    return out;
}

/// Composite-trapezoid integral over the whole segment.
inline double trapezoid(const Eigen::ArrayXd& f, double h) {
    if (f.size() < 2) return 0.0;
    return h * (f.sum() - 0.5 * (f(0) + f(f.size() - 1)));
}

}  // namespace feederflow
