#pragma once

#include <stdexcept>
#include <string>

namespace mcob {

/// Failure categories surfaced by the solvers. The CLI maps them to exit codes.
enum class ErrorKind {
    RejectedInput,
    SolverFailure,
    DegenerateSupport,
    OutOfRange,
    DomainTooSmall,
    Inconsistency,
    CalibrationFailure,
    ConditionViolation,
    ResolutionInsufficient,
    OverlapDetected,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::RejectedInput: return "rejected-input";
        case ErrorKind::SolverFailure: return "solver-failure";
        case ErrorKind::DegenerateSupport: return "degenerate-support";
        case ErrorKind::OutOfRange: return "out-of-range";
        case ErrorKind::DomainTooSmall: return "domain-too-small";
        case ErrorKind::Inconsistency: return "inconsistency";
        case ErrorKind::CalibrationFailure: return "calibration-failure";
        case ErrorKind::ConditionViolation: return "condition-violation";
        case ErrorKind::ResolutionInsufficient: return "resolution-insufficient";
        case ErrorKind::OverlapDetected: return "overlap-detected";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Thrown when the complementarity iteration stalls; carries the last residual.
class SolverFailure : public Error {
public:
    SolverFailure(const std::string& what, double residual, long step = -1)
        : Error(ErrorKind::SolverFailure,
                what + " (residual " + std::to_string(residual) +
                    (step >= 0 ? ", step " + std::to_string(step) : std::string()) + ")"),
          residual_(residual),
          step_(step) {}

    double residual() const noexcept { return residual_; }
    long step() const noexcept { return step_; }

private:
    double residual_;
    long step_;
};

/// A hierarchy gate failed. `tag` names the inequality that was violated.
class ConditionViolation : public Error {
public:
    ConditionViolation(std::string tag, const std::string& what)
        : Error(ErrorKind::ConditionViolation, tag + ": " + what), tag_(std::move(tag)) {}

    const std::string& tag() const noexcept { return tag_; }

private:
    std::string tag_;
};

[[noreturn]] inline void reject(const std::string& what) {
    throw Error(ErrorKind::RejectedInput, what);
}

}  // namespace mcob
