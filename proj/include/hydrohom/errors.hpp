////////////////////////////////////////////////////////////////////////////////
// errors.hpp
////////////////////////////////////////////////////////////////////////////////
// Error taxonomy shared by the library and the command-line front end. Each
// class maps to a stable process exit code so batch runs can be triaged from
// shell scripts.
////////////////////////////////////////////////////////////////////////////////
#ifndef HYDROHOM_ERRORS_HPP
#define HYDROHOM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hydrohom {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual int exit_code() const { return 1; }
};

// Mismatched grids / tensor shapes between operands.
struct DimensionMismatch : Error {
    using Error::Error;
};

// The stacked (a; b) matrix is rank deficient (or too ill conditioned) at a
// grid point, so no dual basis exists there.
struct SingularBasis : Error {
    SingularBasis(const std::string& msg, std::size_t node_, double cond_)
        : Error(msg), node(node_), condition(cond_) {}
    std::size_t node;
    double condition;
};

// A thermodynamic positivity bound failed (e.g. gamma*n + s dropped below
// the configured floor in the Dirac preset).
struct DegenerateThermodynamics : Error {
    DegenerateThermodynamics(const std::string& msg, double min_value_)
        : Error(msg), min_value(min_value_) {}
    double min_value;
};

// The quadratic form is only a seminorm (zero oscillation) and the requested
// operation needs definiteness.
struct DegenerateForm : Error {
    using Error::Error;
    int exit_code() const override { return 4; }
};

struct NoConvergence : Error {
    NoConvergence(const std::string& msg, int iterations_, double residual_)
        : Error(msg), iterations(iterations_), residual(residual_) {}
    int exit_code() const override { return 3; }
    int iterations;
    double residual;
};

// 1/epsilon is not an integer, so the unit cell does not tile the domain.
struct NonIntegerScale : Error {
    using Error::Error;
};

// Problem too large for the dense oracle path.
struct TooLarge : Error {
    using Error::Error;
};

// Grid does not resolve the requested oscillation scale.
struct ResolutionInsufficient : Error {
    using Error::Error;
};

struct SingularTensor : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
    int exit_code() const override { return 2; }
};

} // namespace hydrohom

#endif
