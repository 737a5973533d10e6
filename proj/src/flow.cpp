#include "saa/flow.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace saa {

namespace {

// h-values and gradients in p of the two locus constraints at fixed q.
struct LocusResidual {
    Eigen::Vector2d c;       // (|hI|^2 - 1, h0c)
    Eigen::MatrixXd dc_dp;   // 2 x n
};

LocusResidual locus_residual(const ControlAffineSystem& sys, const SystemJets& jets,
                             const Eigen::VectorXd& p) {
    const int n = sys.n(), m = sys.m();
    LocusResidual out;
    out.dc_dp = Eigen::MatrixXd::Zero(2, n);
    double hI2 = 0.0, h0c = 0.0;
    Eigen::VectorXd g;
    Eigen::MatrixXd dg;
    for (int i = 1; i <= m; ++i) {
        double hi = p.dot(jets.f[i]);
        hI2 += hi * hi;
        out.dc_dp.row(0) += 2.0 * hi * jets.f[i].transpose();
        bracket_field(jets, 0, i, g, dg);
        double h0i = p.dot(g);
        h0c += hi * h0i;
        out.dc_dp.row(1) += (h0i * jets.f[i] + hi * g).transpose();
    }
    out.c << hI2 - 1.0, h0c;
    return out;
}

}  // namespace

Eigen::VectorXd vector_field(const ControlAffineSystem& sys, const CotangentPoint& lam,
                             double eps_sing) {
    SystemJets jets = eval_system_jets(sys, lam.q, 2);
    BracketBundle b = bracket_bundle(sys, jets, lam.p);
    double r = singular_feedback(b, eps_sing);
    Eigen::VectorXd v = ham_lift_vector(jets.f[0], jets.df[0], lam.p);
    for (int i = 1; i <= sys.m(); ++i)
        v += r * b.hI[i - 1] * ham_lift_vector(jets.f[i], jets.df[i], lam.p);
    return v;
}

Eigen::VectorXd frozen_field(const ControlAffineSystem& sys, const CotangentPoint& lam,
                             const Eigen::VectorXd& u) {
    SystemJets jets = eval_system_jets(sys, lam.q, 1);
    Eigen::VectorXd v = ham_lift_vector(jets.f[0], jets.df[0], lam.p);
    for (int i = 1; i <= sys.m(); ++i)
        v += u[i - 1] * ham_lift_vector(jets.f[i], jets.df[i], lam.p);
    return v;
}

Eigen::MatrixXd variational_matrix(const ControlAffineSystem& sys, const CotangentPoint& lam,
                                   const FlowOptions& opts) {
    const int dim = 2 * sys.n();
    BracketBundle b = bracket_bundle(sys, lam);
    Eigen::VectorXd u = singular_feedback(b, opts.eps_sing) * b.hI;

    Eigen::VectorXd base = lam.flat();
    double h = opts.fd_scale * (1.0 + base.norm());
    Eigen::MatrixXd A(dim, dim);
    for (int k = 0; k < dim; ++k) {
        Eigen::VectorXd xp = base, xm = base;
        xp[k] += h;
        xm[k] -= h;
        A.col(k) = (frozen_field(sys, CotangentPoint::from_flat(xp), u) -
                    frozen_field(sys, CotangentPoint::from_flat(xm), u)) /
                   (2.0 * h);
    }
    return A;
}

CotangentPoint seed_on_locus(const ControlAffineSystem& sys, const Eigen::VectorXd& q0,
                             const Eigen::VectorXd& p_guess, const FlowOptions& opts) {
    SystemJets jets = eval_system_jets(sys, q0, 2);
    Eigen::VectorXd p = p_guess;
    for (int it = 0; it < opts.seed_max_iters; ++it) {
        LocusResidual res = locus_residual(sys, jets, p);
        if (std::abs(res.c[0]) < opts.seed_tol && std::abs(res.c[1]) < opts.seed_tol) {
            CotangentPoint lam{q0, p};
            BracketBundle b = bracket_bundle(sys, jets, p);
            if (std::abs(b.hc0c) <= opts.eps_sing)
                throw SingularDegenerate("seed converged onto a locus point with h_c0c ~ 0");
            return lam;
        }
        // Minimal-norm Newton step dp = J^+ (-c). The pseudo-inverse copes
        // with rank-deficient constraints (h_0c can vanish identically on
        // the fibre, as it does for Martinet at x = 0); residual components
        // outside the row space stall and run into NoConvergence below.
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(res.dc_dp,
                                              Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-12);
        Eigen::VectorXd dp = svd.solve(-res.c);
        if (dp.norm() <= 1e-15 * (1.0 + p.norm()))
            throw NoConvergence("Newton stalled while seeding the singular locus");
        p += dp;
    }
    throw NoConvergence("seed_on_locus did not converge in " +
                        std::to_string(opts.seed_max_iters) + " iterations");
}

namespace {

void project_to_locus(const ControlAffineSystem& sys, CotangentPoint& lam) {
    SystemJets jets = eval_system_jets(sys, lam.q, 2);
    for (int it = 0; it < 5; ++it) {
        LocusResidual res = locus_residual(sys, jets, lam.p);
        if (std::abs(res.c[0]) < 1e-14 && std::abs(res.c[1]) < 1e-14) return;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(res.dc_dp,
                                              Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(1e-12);
        lam.p += svd.solve(-res.c);
    }
}

}  // namespace

SingularExtremal integrate(const ControlAffineSystem& sys, const CotangentPoint& lam0, double T,
                           int n_steps, const FlowOptions& opts) {
    const int n = sys.n(), m = sys.m();
    const int dim = 2 * n;
    const int nodes = n_steps + 1;

    SingularExtremal ext;
    ext.n = n;
    ext.m = m;
    ext.t.resize(nodes);
    ext.lam.resize(nodes);
    ext.r.resize(nodes);
    ext.u.resize(m, nodes);
    ext.J.resize(nodes);
    ext.drift_hc.resize(nodes);
    ext.drift_h0c.resize(nodes);

    auto eval_node = [&](int k, const CotangentPoint& lam) {
        SystemJets jets = eval_system_jets(sys, lam.q, 2);
        BracketBundle b = bracket_bundle(sys, jets, lam.p);
        double r = singular_feedback(b, opts.eps_sing);
        ext.r[k] = r;
        ext.u.col(k) = r * b.hI;
        ext.drift_hc[k] = std::abs(b.hI.squaredNorm() - 1.0);
        ext.drift_h0c[k] = std::abs(b.h0c);
        if (ext.drift_hc[k] > opts.tol_inv || ext.drift_h0c[k] > opts.tol_inv)
            throw InvariantBlowup("locus drift " +
                                  std::to_string(std::max(ext.drift_hc[k], ext.drift_h0c[k])) +
                                  " exceeded tol_inv at t = " + std::to_string(ext.t[k]));
        if (r < 0.0 || r > 1.0) ext.r_admissible = false;
    };

    CotangentPoint lam = lam0;
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(dim, dim);
    double dt = n_steps > 0 ? T / n_steps : 0.0;

    ext.t[0] = 0.0;
    ext.lam[0] = lam;
    ext.J[0] = J;
    eval_node(0, lam);

    auto fb = [&](const CotangentPoint& l) { return vector_field(sys, l, opts.eps_sing); };
    auto am = [&](const CotangentPoint& l) { return variational_matrix(sys, l, opts); };

    for (int s = 0; s < n_steps; ++s) {
        Eigen::VectorXd y = lam.flat();

        Eigen::VectorXd k1 = fb(lam);
        Eigen::MatrixXd K1 = am(lam) * J;
        CotangentPoint l2 = CotangentPoint::from_flat(y + 0.5 * dt * k1);
        Eigen::VectorXd k2 = fb(l2);
        Eigen::MatrixXd K2 = am(l2) * (J + 0.5 * dt * K1);
        CotangentPoint l3 = CotangentPoint::from_flat(y + 0.5 * dt * k2);
        Eigen::VectorXd k3 = fb(l3);
        Eigen::MatrixXd K3 = am(l3) * (J + 0.5 * dt * K2);
        CotangentPoint l4 = CotangentPoint::from_flat(y + dt * k3);
        Eigen::VectorXd k4 = fb(l4);
        Eigen::MatrixXd K4 = am(l4) * (J + dt * K3);

        lam = CotangentPoint::from_flat(y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        J += dt / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
        if (opts.project) project_to_locus(sys, lam);

        ext.t[s + 1] = (s + 1) * dt;
        ext.lam[s + 1] = lam;
        ext.J[s + 1] = J;
        eval_node(s + 1, lam);
    }
    return ext;
}

int SingularExtremal::node_index(double time) const {
    double step = dt();
    double tol = 1e-9 * std::max(1.0, horizon());
    if (step == 0.0) {
        if (std::abs(time - t[0]) > tol) throw Error("time off the single-node grid");
        return 0;
    }
    int k = static_cast<int>(std::lround(time / step));
    k = std::max(0, std::min(nodes() - 1, k));
    if (std::abs(time - t[k]) > tol)
        throw Error("time " + std::to_string(time) +
                    " is not a grid node (nearest-node semantics, no interpolation)");
    return k;
}

namespace {

double condition_estimate(const Eigen::MatrixXd& M) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    double smin = svd.singularValues().tail(1)[0];
    double smax = svd.singularValues()[0];
    return smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
}

}  // namespace

Eigen::VectorXd pushforward(const SingularExtremal& ext, int node, const Eigen::VectorXd& v,
                            double cond_limit) {
    const Eigen::MatrixXd& J = ext.J.at(node);
    if (condition_estimate(J) > cond_limit)
        throw SingularMatrix("variational flow matrix condition exceeds limit at node " +
                             std::to_string(node));
    return J * v;
}

Eigen::VectorXd pullback(const SingularExtremal& ext, int node, const Eigen::VectorXd& v,
                         double cond_limit) {
    const Eigen::MatrixXd& J = ext.J.at(node);
    if (condition_estimate(J) > cond_limit)
        throw SingularMatrix("variational flow matrix condition exceeds limit at node " +
                             std::to_string(node));
    return J.partialPivLu().solve(v);
}

void write_extremal_csv(const SingularExtremal& ext, std::ostream& os) {
    os << "t";
    for (int i = 1; i <= ext.n; ++i) os << ",q" << i;
    for (int i = 1; i <= ext.n; ++i) os << ",p" << i;
    os << ",r";
    for (int i = 1; i <= ext.m; ++i) os << ",u" << i;
    os << ",drift_hc,drift_h0c\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (int k = 0; k < ext.nodes(); ++k) {
        put(ext.t[k]);
        for (int i = 0; i < ext.n; ++i) {
            os << ',';
            put(ext.lam[k].q[i]);
        }
        for (int i = 0; i < ext.n; ++i) {
            os << ',';
            put(ext.lam[k].p[i]);
        }
        os << ',';
        put(ext.r[k]);
        for (int i = 0; i < ext.m; ++i) {
            os << ',';
            put(ext.u(i, k));
        }
        os << ',';
        put(ext.drift_hc[k]);
        os << ',';
        put(ext.drift_h0c[k]);
        os << '\n';
    }
}

void write_jacobians_csv(const SingularExtremal& ext, std::ostream& os) {
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (int k = 0; k < ext.nodes(); ++k) {
        os << "t,";
        put(ext.t[k]);
        os << '\n';
        const Eigen::MatrixXd& J = ext.J[k];
        for (int r = 0; r < J.rows(); ++r) {
            for (int c = 0; c < J.cols(); ++c) {
                if (c) os << ',';
                put(J(r, c));
            }
            os << '\n';
        }
        os << '\n';
    }
}

}  // namespace saa
