#pragma once

#include <stdexcept>
#include <string>

namespace cvarmix {

/// Thrown when a caller violates a documented precondition.
class ContractViolation : public std::invalid_argument {
public:
    explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// Thrown when a computation cannot complete (non-convergence, resource caps,
/// unreachable goals). Distinct from contract violations: the inputs were
/// legal but the result does not exist or was not found.
class DiagnosticError : public std::runtime_error {
public:
    explicit DiagnosticError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cvarmix
