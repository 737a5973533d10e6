#pragma once

#include <stdexcept>
#include <string>

namespace saa {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Expression source could not be parsed. Carries 1-based line/column.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int col)
        : Error(msg + " (line " + std::to_string(line) + ", col " + std::to_string(col) + ")"),
          line(line), col(col) {}
    int line;
    int col;
};

/// Evaluation left the expression domain (division by zero, sqrt of a
/// negative). Carries the offending subexpression and the point.
class DomainError : public Error {
public:
    DomainError(const std::string& msg, std::string node, std::string point)
        : Error(msg + " in '" + node + "' at " + point),
          node(std::move(node)), point(std::move(point)) {}
    std::string node;
    std::string point;
};

/// |h_c0c| fell below eps_sing: the singular feedback r = -h00c/hc0c is
/// undefined and the arc cannot be continued.
class SingularDegenerate : public Error {
public:
    using Error::Error;
};

/// Newton iteration failed to reach the constraint locus.
class NoConvergence : public Error {
public:
    using Error::Error;
};

/// A linear solve was requested on a matrix with condition number beyond
/// the configured bound.
class SingularMatrix : public Error {
public:
    using Error::Error;
};

/// The two independent computations of Zdot_I disagree beyond tolerance.
class CrossCheckFailure : public Error {
public:
    using Error::Error;
};

/// Z_I(0) lies in the vertical fibre; the Jacobi boundary spaces degenerate.
class DegenerateFrame : public Error {
public:
    using Error::Error;
};

/// The monitored locus residuals |2h_c-1|, |h_0c| exceeded tol_inv.
class InvariantBlowup : public Error {
public:
    using Error::Error;
};

/// Malformed run configuration or system description.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace saa
