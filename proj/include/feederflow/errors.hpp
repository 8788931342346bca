#pragma once

#include <stdexcept>
#include <string>

namespace feederflow {

/// Base class for numerical failures of the solvers.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Newton iteration stalled before reaching the requested tolerance.
class NonConvergence : public SolverError {
public:
    NonConvergence(int iterations, double residual, const std::string& what)
        : SolverError(what), iterations(iterations), residual(residual) {}
    int iterations;
    double residual;
};

/// An iterate (or a converged solution) drove the voltage amplitude to v <= 0.
/// Signals a loading magnitude beyond the existence regime of the problem.
class VoltageCollapse : public SolverError {
public:
    VoltageCollapse(int iterations, double min_v, const std::string& what)
        : SolverError(what), iterations(iterations), min_v(min_v) {}
    int iterations;
    double min_v;
};

/// The shooting solver found no sign change of w(L) over the searched
/// initial-gradient bracket.
class BracketFailure : public SolverError {
public:
    BracketFailure(double lo, double hi, const std::string& what)
        : SolverError(what), lo(lo), hi(hi) {}
    double lo;
    double hi;
};

/// Shape/grid disagreement between arguments.
class GridMismatch : public std::invalid_argument {
public:
    explicit GridMismatch(const std::string& what) : std::invalid_argument(what) {}
};

/// A perturbation order was requested without all lower orders present.
class MissingLowerOrder : public std::invalid_argument {
public:
    explicit MissingLowerOrder(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace feederflow
