#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "saa/hamiltonian.hpp"

namespace saa {

struct FlowOptions {
    double eps_sing = kDefaultEpsSingular;
    double tol_inv = 1e-6;       // locus-drift gate; beyond it integrate throws
    double fd_scale = 1e-6;      // FD step = fd_scale * (1 + |lambda|)
    bool project = false;        // re-apply the locus constraints after each step
    double seed_tol = 1e-12;     // Newton residual target on (|hI|^2-1, h0c)
    int seed_max_iters = 50;
    double cond_limit = 1e12;    // pullback conditioning gate
};

/// One singular extremal on a fixed grid: lambda(t), feedback, control, the
/// variational flow J_t and the monitored locus drift per node.
struct SingularExtremal {
    int n = 0;
    int m = 0;
    Eigen::VectorXd t;                 // node times, t[0] = 0
    std::vector<CotangentPoint> lam;   // per node
    Eigen::VectorXd r;                 // feedback per node
    Eigen::MatrixXd u;                 // m x nodes
    std::vector<Eigen::MatrixXd> J;    // 2n x 2n per node, J[0] = Id
    Eigen::VectorXd drift_hc;          // |2 h_c - 1|
    Eigen::VectorXd drift_h0c;         // |h_0c|
    bool r_admissible = true;          // r in [0,1] at every node

    int nodes() const { return static_cast<int>(t.size()); }
    double dt() const { return nodes() > 1 ? t[1] - t[0] : 0.0; }
    double horizon() const { return nodes() > 0 ? t[nodes() - 1] : 0.0; }

    /// Nearest-node lookup; throws if `time` is farther than a rounding
    /// tolerance from every node (interpolation is not supported).
    int node_index(double time) const;
};

/// The singular Hamiltonian field hvec_0 + r(lambda) hvec_c in canonical
/// coordinates, with hvec_c = sum_i h_i hvec_i.
Eigen::VectorXd vector_field(const ControlAffineSystem& sys, const CotangentPoint& lam,
                             double eps_sing = kDefaultEpsSingular);

/// Frozen-control Hamiltonian field hvec_0 + sum_i u_i hvec_i.
Eigen::VectorXd frozen_field(const ControlAffineSystem& sys, const CotangentPoint& lam,
                             const Eigen::VectorXd& u);

/// Jacobian of the frozen-control field at lam (control frozen at the
/// singular feedback value u(lam)), by central differences. This is the
/// generator of the variational flow; freezing the control is what makes
/// J_t symplectic.
Eigen::MatrixXd variational_matrix(const ControlAffineSystem& sys, const CotangentPoint& lam,
                                   const FlowOptions& opts);

/// Newton iteration over the fibre onto {|h_I|^2 = 1, h_0c = 0} with
/// minimal-norm updates. Throws NoConvergence / SingularDegenerate.
CotangentPoint seed_on_locus(const ControlAffineSystem& sys, const Eigen::VectorXd& q0,
                             const Eigen::VectorXd& p_guess, const FlowOptions& opts = {});

/// Fixed-step RK4 on the coupled system (lambda, J).
SingularExtremal integrate(const ControlAffineSystem& sys, const CotangentPoint& lam0, double T,
                           int n_steps, const FlowOptions& opts = {});

Eigen::VectorXd pushforward(const SingularExtremal& ext, int node, const Eigen::VectorXd& v,
                            double cond_limit = 1e12);
Eigen::VectorXd pullback(const SingularExtremal& ext, int node, const Eigen::VectorXd& v,
                         double cond_limit = 1e12);

/// CSV with header t,q1..qn,p1..pn,r,u1..um,drift_hc,drift_h0c.
void write_extremal_csv(const SingularExtremal& ext, std::ostream& os);
/// Sidecar dump of the J matrices: per node a `t,<value>` line followed by
/// 2n rows of 2n comma-separated entries (row-major), blank line between
/// blocks.
void write_jacobians_csv(const SingularExtremal& ext, std::ostream& os);

}  // namespace saa
