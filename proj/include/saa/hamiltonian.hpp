#pragma once

#include <Eigen/Dense>

#include "saa/system.hpp"

namespace saa {

/// Point of the cotangent bundle in canonical coordinates.
struct CotangentPoint {
    Eigen::VectorXd q;
    Eigen::VectorXd p;

    Eigen::VectorXd flat() const {
        Eigen::VectorXd v(q.size() + p.size());
        v << q, p;
        return v;
    }
    static CotangentPoint from_flat(const Eigen::VectorXd& v) {
        int n = static_cast<int>(v.size()) / 2;
        return {v.head(n), v.tail(n)};
    }
};

/// Sign conventions: {a,b} = avec(b); in canonical coordinates the
/// Hamiltonian field is (dq, dp) = (dh/dp, -dh/dq), and
/// sigma(v, w) = <v_p, w_q> - <w_p, v_q>.
Eigen::MatrixXd symplectic_form_matrix(int n);
double symplectic_pairing(const Eigen::VectorXd& v, const Eigen::VectorXd& w);

/// All lifted-Hamiltonian data at one point: values, pairwise brackets, and
/// the nested aggregates entering the singular feedback.
struct BracketBundle {
    Eigen::VectorXd hI;   // h_1..h_m
    double h0 = 0.0;
    Eigen::MatrixXd hij;  // (m+1)x(m+1), index 0 = drift; exactly antisymmetric
    double h0c = 0.0;     // {h_0, h_c} = sum_i h_i h_{0i}
    double h00c = 0.0;    // sum_i h_{0i}^2 + h_i h_{00i}
    double hc0c = 0.0;    // sum_{i,j} h_j (h_{ji} h_{0i} + h_i h_{j0i})
    Eigen::VectorXd hcI;  // hcI_i = sum_j h_j h_{ji}
};

/// h_i(lambda) = <p, f_i(q)>.
double lift(const ControlAffineSystem& sys, const CotangentPoint& lam, int i);

/// h_{ij}(lambda) = <p, [f_i,f_j](q)>, [f_i,f_j] = Df_j f_i - Df_i f_j.
double poisson_pair(const ControlAffineSystem& sys, const CotangentPoint& lam, int i, int j);

BracketBundle bracket_bundle(const ControlAffineSystem& sys, const CotangentPoint& lam);
BracketBundle bracket_bundle(const ControlAffineSystem& sys, const SystemJets& jets,
                             const Eigen::VectorXd& p);

constexpr double kDefaultEpsSingular = 1e-9;
constexpr double kDefaultEpsClassify = 1e-9;

/// r = -h00c/hc0c. Throws SingularDegenerate when |hc0c| <= eps_sing.
double singular_feedback(const BracketBundle& bundle, double eps_sing = kDefaultEpsSingular);

/// u = r * hI.
Eigen::VectorXd singular_control(const BracketBundle& bundle,
                                 double eps_sing = kDefaultEpsSingular);

enum class PointClass { Boundary, Inactive, SingularCandidate };

struct Classification {
    PointClass cls;
    double gap;  // |hI| - 1
};

Classification classify_point(const BracketBundle& bundle, double eps_cls = kDefaultEpsClassify);

/// Hamiltonian vector field of the lift of a field with value fv and
/// Jacobian dfv at q: (fv, -dfv^T p).
Eigen::VectorXd ham_lift_vector(const Eigen::VectorXd& fv, const Eigen::MatrixXd& dfv,
                                const Eigen::VectorXd& p);

/// hvec_i(lambda) in canonical coordinates.
Eigen::VectorXd hvec_field(const ControlAffineSystem& sys, const CotangentPoint& lam, int i);

/// Value and Jacobian of the bracket field [f_i, f_j] at q (needs order-2 jets).
void bracket_field(const SystemJets& jets, int i, int j, Eigen::VectorXd& value,
                   Eigen::MatrixXd& jacobian);

/// Hamiltonian vector field of h_{0c} = sum_i h_i h_{0i}, assembled from the
/// nested-bracket expansion (order-2 jets; no phase-space differencing).
Eigen::VectorXd hvec_h0c(const ControlAffineSystem& sys, const SystemJets& jets,
                         const Eigen::VectorXd& p);

}  // namespace saa
