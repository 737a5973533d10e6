#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "saa/errors.hpp"

namespace saa {

using ParamMap = std::map<std::string, double>;

/// Expression AST for vector-field components.
///
/// Grammar (EBNF):
///   expr   := ('+'|'-')? term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := base ('^' integer)?
///   base   := number | ident | '(' expr ')' | func '(' expr ')'
///   func   := sin | cos | exp | sqrt | neg
///
/// Coordinates are named x1..xn; x, y, z alias x1, x2, x3. Any other
/// identifier is a named parameter bound at system construction.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { Const, Var, Param, Neg, Sin, Cos, Exp, Sqrt, Add, Sub, Mul, Div, Pow };

    Kind kind;
    double value = 0.0;      // Const
    int var = -1;            // Var: 1-based coordinate index
    std::string name;        // Param
    int exponent = 0;        // Pow
    ExprPtr a, b;            // children (a for unary/pow, a+b for binary)

    static ExprPtr constant(double v);
    static ExprPtr variable(int index1);
    static ExprPtr parameter(std::string name);
    static ExprPtr unary(Kind k, ExprPtr child);
    static ExprPtr binary(Kind k, ExprPtr lhs, ExprPtr rhs);
    static ExprPtr pow(ExprPtr base, int exponent);
};

/// Parse DSL source into an AST. Throws ParseError with 1-based line/column.
ExprPtr parse_field_expr(const std::string& source);

/// Minimal-parenthesis pretty printer; parse(to_string(e)) == e structurally.
std::string to_string(const Expr& e);

/// Structural equality.
bool expr_equal(const Expr& lhs, const Expr& rhs);

/// Largest coordinate index referenced (0 if none).
int max_var_index(const Expr& e);

/// Collect parameter names into `out`.
void collect_params(const Expr& e, std::vector<std::string>& out);

/// Truncated third-order Taylor data of a scalar expression at a point.
/// hess is symmetric; third is n^3 row-major, symmetric in all index
/// permutations.
struct Jet3 {
    double value = 0.0;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    std::vector<double> third;
    int n = 0;
    int order = 3;

    double third_at(int i, int j, int k) const { return third[(i * n + j) * n + k]; }
};

/// Evaluate value and derivatives up to `order` (0..3) by propagating
/// truncated Taylor coefficients through the tree. Throws DomainError on
/// division by zero or sqrt of a non-positive argument.
Jet3 eval_jet(const Expr& e, const Eigen::VectorXd& point, const ParamMap& params, int order = 3);

}  // namespace saa
