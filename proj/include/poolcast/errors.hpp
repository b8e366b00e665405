#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace poolcast {

/// Exit-code family a failure belongs to. The CLI maps these onto process
/// status codes (usage 2, data 3, numeric 4).
enum class ErrorKind { Usage, Data, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::Numeric, "domain error: " + what) {}
};

/// Reports that cannot have been produced by the declared information structure.
class InfeasibleReports : public Error {
public:
    explicit InfeasibleReports(const std::string& what)
        : Error(ErrorKind::Numeric, "infeasible reports: " + what) {}
};

class UnsupportedVariant : public Error {
public:
    explicit UnsupportedVariant(const std::string& what)
        : Error(ErrorKind::Numeric, "unsupported variant: " + what) {}
};

class DegenerateModel : public Error {
public:
    explicit DegenerateModel(const std::string& what)
        : Error(ErrorKind::Numeric, "degenerate model: " + what) {}
};

class UndefinedMetric : public Error {
public:
    explicit UndefinedMetric(const std::string& what)
        : Error(ErrorKind::Numeric, "undefined metric: " + what) {}
};

/// Extremizing classification requested where it is not defined.
class UndefinedClassification : public Error {
public:
    explicit UndefinedClassification(const std::string& what)
        : Error(ErrorKind::Numeric, "undefined classification: " + what) {}
};

class SeparationError : public Error {
public:
    explicit SeparationError(const std::string& what)
        : Error(ErrorKind::Numeric, "separation: " + what) {}
};

/// Optimizer ran out of iterations/restarts. Carries the best iterate seen.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, Eigen::VectorXd best, double best_value)
        : Error(ErrorKind::Numeric, "no convergence: " + what),
          best_(std::move(best)),
          best_value_(best_value) {}

    const Eigen::VectorXd& best_iterate() const noexcept { return best_; }
    double best_value() const noexcept { return best_value_; }

private:
    Eigen::VectorXd best_;
    double best_value_;
};

/// Malformed input files, column mismatches, bad model documents.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error(ErrorKind::Data, "schema error: " + what) {}
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, "usage: " + what) {}
};

}  // namespace poolcast
