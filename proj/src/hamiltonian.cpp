#include "saa/hamiltonian.hpp"

#include <cmath>

namespace saa {

Eigen::MatrixXd symplectic_form_matrix(int n) {
    Eigen::MatrixXd Om = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    Om.topRightCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
    Om.bottomLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    return Om;
}

double symplectic_pairing(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
    int n = static_cast<int>(v.size()) / 2;
    return v.tail(n).dot(w.head(n)) - w.tail(n).dot(v.head(n));
}

double lift(const ControlAffineSystem& sys, const CotangentPoint& lam, int i) {
    return lam.p.dot(sys.field_value(i, lam.q));
}

double poisson_pair(const ControlAffineSystem& sys, const CotangentPoint& lam, int i, int j) {
    Eigen::VectorXd fi = sys.field_value(i, lam.q);
    Eigen::VectorXd fj = sys.field_value(j, lam.q);
    Eigen::MatrixXd di = sys.field_jacobian(i, lam.q);
    Eigen::MatrixXd dj = sys.field_jacobian(j, lam.q);
    return lam.p.dot(dj * fi - di * fj);
}

void bracket_field(const SystemJets& jets, int i, int j, Eigen::VectorXd& value,
                   Eigen::MatrixXd& jacobian) {
    const int n = static_cast<int>(jets.f[0].size());
    value = jets.df[j] * jets.f[i] - jets.df[i] * jets.f[j];
    jacobian.resize(n, n);
    // d/dx_l [f_i,f_j]_k = sum_s d2(f_j)_k(s,l) f_i_s + df_j(k,s) df_i(s,l) - (i<->j)
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
            double acc = 0.0;
            for (int s = 0; s < n; ++s)
                acc += jets.d2[j][k](s, l) * jets.f[i][s] - jets.d2[i][k](s, l) * jets.f[j][s];
            jacobian(k, l) = acc;
        }
    jacobian += jets.df[j] * jets.df[i] - jets.df[i] * jets.df[j];
}

namespace {

// <p, [f_i, g]> for a bracket field g = [f_a, f_b] given by value/jacobian.
double lifted_double_bracket(const SystemJets& jets, const Eigen::VectorXd& p, int i,
                             const Eigen::VectorXd& g, const Eigen::MatrixXd& dg) {
    return p.dot(dg * jets.f[i] - jets.df[i] * g);
}

}  // namespace

BracketBundle bracket_bundle(const ControlAffineSystem& sys, const SystemJets& jets,
                             const Eigen::VectorXd& p) {
    const int m = sys.m();
    BracketBundle b;
    b.hI.resize(m);
    for (int i = 1; i <= m; ++i) b.hI[i - 1] = p.dot(jets.f[i]);
    b.h0 = p.dot(jets.f[0]);

    b.hij = Eigen::MatrixXd::Zero(m + 1, m + 1);
    for (int i = 0; i <= m; ++i)
        for (int j = i + 1; j <= m; ++j) {
            double v = p.dot(jets.df[j] * jets.f[i] - jets.df[i] * jets.f[j]);
            b.hij(i, j) = v;
            b.hij(j, i) = -v;
        }

    // Bracket fields [f_0, f_i] with Jacobians, reused by h00c and hc0c.
    std::vector<Eigen::VectorXd> g0(m + 1);
    std::vector<Eigen::MatrixXd> dg0(m + 1);
    for (int i = 1; i <= m; ++i) bracket_field(jets, 0, i, g0[i], dg0[i]);

    b.h0c = 0.0;
    b.h00c = 0.0;
    for (int i = 1; i <= m; ++i) {
        double h0i = b.hij(0, i);
        b.h0c += b.hI[i - 1] * h0i;
        b.h00c += h0i * h0i + b.hI[i - 1] * lifted_double_bracket(jets, p, 0, g0[i], dg0[i]);
    }

    b.hc0c = 0.0;
    for (int i = 1; i <= m; ++i) {
        double h0i = b.hij(0, i);
        for (int j = 1; j <= m; ++j) {
            b.hc0c += b.hI[j - 1] * (b.hij(j, i) * h0i +
                                     b.hI[i - 1] * lifted_double_bracket(jets, p, j, g0[i], dg0[i]));
        }
    }

    b.hcI.resize(m);
    for (int i = 1; i <= m; ++i) {
        double acc = 0.0;
        for (int j = 1; j <= m; ++j) acc += b.hI[j - 1] * b.hij(j, i);
        b.hcI[i - 1] = acc;
    }
    return b;
}

BracketBundle bracket_bundle(const ControlAffineSystem& sys, const CotangentPoint& lam) {
    return bracket_bundle(sys, eval_system_jets(sys, lam.q, 2), lam.p);
}

double singular_feedback(const BracketBundle& bundle, double eps_sing) {
    if (std::abs(bundle.hc0c) <= eps_sing)
        throw SingularDegenerate("h_c0c = " + std::to_string(bundle.hc0c) +
                                 " is below eps_sing; singular feedback undefined");
    return -bundle.h00c / bundle.hc0c;
}

Eigen::VectorXd singular_control(const BracketBundle& bundle, double eps_sing) {
    return singular_feedback(bundle, eps_sing) * bundle.hI;
}

Classification classify_point(const BracketBundle& bundle, double eps_cls) {
    double gap = bundle.hI.norm() - 1.0;
    if (gap > eps_cls) return {PointClass::Boundary, gap};
    if (gap < -eps_cls) return {PointClass::Inactive, gap};
    return {PointClass::SingularCandidate, gap};
}

Eigen::VectorXd ham_lift_vector(const Eigen::VectorXd& fv, const Eigen::MatrixXd& dfv,
                                const Eigen::VectorXd& p) {
    Eigen::VectorXd v(2 * fv.size());
    v << fv, -dfv.transpose() * p;
    return v;
}

Eigen::VectorXd hvec_field(const ControlAffineSystem& sys, const CotangentPoint& lam, int i) {
    return ham_lift_vector(sys.field_value(i, lam.q), sys.field_jacobian(i, lam.q), lam.p);
}

Eigen::VectorXd hvec_h0c(const ControlAffineSystem& sys, const SystemJets& jets,
                         const Eigen::VectorXd& p) {
    const int m = sys.m();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * sys.n());
    Eigen::VectorXd g;
    Eigen::MatrixXd dg;
    for (int i = 1; i <= m; ++i) {
        bracket_field(jets, 0, i, g, dg);
        double hi = p.dot(jets.f[i]);
        double h0i = p.dot(g);
        out += h0i * ham_lift_vector(jets.f[i], jets.df[i], p) + hi * ham_lift_vector(g, dg, p);
    }
    return out;
}

}  // namespace saa
