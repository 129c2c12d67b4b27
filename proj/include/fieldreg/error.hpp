#pragma once

#include <stdexcept>
#include <string>

namespace fieldreg {

// Invalid arguments or configuration (maps to CLI exit code 2).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Evaluation point outside the unit cube.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Operands defined on different grids.
class GridMismatch : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// File could not be read or written (maps to CLI exit code 4).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iterative solve ran out of budget (maps to CLI exit code 3).
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::size_t iterations, double final_residual)
        : std::runtime_error(what), iterations_(iterations), final_residual_(final_residual) {}

    std::size_t iterations() const noexcept { return iterations_; }
    double final_residual() const noexcept { return final_residual_; }

private:
    std::size_t iterations_;
    double final_residual_;
};

} // namespace fieldreg
