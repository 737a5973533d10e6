#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "saa/expr.hpp"

namespace saa {

/// Control-affine system q' = f0(q) + sum_j u_j f_j(q) with expression
/// fields. Immutable after construction; evaluation is pure.
class ControlAffineSystem {
public:
    /// fields[i][k] is component k of f_i; i = 0 is the drift.
    ControlAffineSystem(int n, int m, std::vector<std::vector<ExprPtr>> fields, ParamMap params);

    int n() const { return n_; }
    int m() const { return m_; }
    const ParamMap& params() const { return params_; }
    const std::vector<std::vector<ExprPtr>>& fields() const { return fields_; }

    /// f_i(q).
    Eigen::VectorXd field_value(int i, const Eigen::VectorXd& q) const;
    /// Df_i(q), entry (k,l) = d(f_i)_k / dx_l.
    Eigen::MatrixXd field_jacobian(int i, const Eigen::VectorXd& q) const;

private:
    int n_;
    int m_;
    std::vector<std::vector<ExprPtr>> fields_;
    ParamMap params_;
};

/// Jets of every field component at one base point, up to `order`.
/// d2[i][k](l,s) = d^2 (f_i)_k / dx_l dx_s.
struct SystemJets {
    std::vector<Eigen::VectorXd> f;
    std::vector<Eigen::MatrixXd> df;
    std::vector<std::vector<Eigen::MatrixXd>> d2;
    int order = 2;
};

SystemJets eval_system_jets(const ControlAffineSystem& sys, const Eigen::VectorXd& q,
                            int order = 2);

/// Preset systems from the worked examples: heisenberg_drift, martinet_drift,
/// su2_left_invariant. All take parameters alpha, beta, gamma.
ControlAffineSystem builtin_system(const std::string& name, const ParamMap& params);

}  // namespace saa
