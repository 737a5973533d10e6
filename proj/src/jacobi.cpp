#include "saa/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace saa {

namespace {

double sigma(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
    return symplectic_pairing(v, w);
}

Eigen::MatrixXd sigma_rows(const Eigen::MatrixXd& G, int n) {
    // Row i = sigma(G_i, .) as a covector: G_i^T Omega.
    Eigen::MatrixXd R(G.cols(), 2 * n);
    for (int i = 0; i < G.cols(); ++i) {
        R.row(i).head(n) = G.col(i).tail(n).transpose();
        R.row(i).tail(n) = -G.col(i).head(n).transpose();
    }
    return R;
}

Eigen::MatrixXd perp_basis(const Eigen::VectorXd& hI) {
    const int m = static_cast<int>(hI.size());
    if (m == 1) return Eigen::MatrixXd(1, 0);
    if (m == 2) {
        Eigen::MatrixXd W(2, 1);
        double nrm = hI.norm();
        W << -hI[1] / nrm, hI[0] / nrm;
        return W;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(hI);
    Eigen::MatrixXd Q = qr.householderQ();
    return Q.rightCols(m - 1);
}

struct NodeCore {
    ZFrame frame;
    BracketBundle bundle;
};

NodeCore frame_core(const SingularExtremal& ext, const ControlAffineSystem& sys, int node,
                    const FrameOptions& opts) {
    const int n = ext.n, m = ext.m;
    const CotangentPoint& lam = ext.lam.at(node);
    SystemJets jets = eval_system_jets(sys, lam.q, 2);
    BracketBundle b = bracket_bundle(sys, jets, lam.p);
    double r = singular_feedback(b, opts.eps_sing);

    const Eigen::MatrixXd& J = ext.J.at(node);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    double smin = svd.singularValues().tail(1)[0];
    double smax = svd.singularValues()[0];
    if (!(smin > 0.0) || smax / smin > opts.cond_limit)
        throw SingularMatrix("variational flow matrix ill-conditioned at node " +
                             std::to_string(node));
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);

    ZFrame f;
    f.t = ext.t[node];
    f.node = node;
    f.hI = b.hI;
    f.r = r;
    f.hc0c = b.hc0c;
    f.Zcols.resize(2 * n, m);
    for (int i = 1; i <= m; ++i)
        f.Zcols.col(i - 1) = lu.solve(ham_lift_vector(jets.f[i], jets.df[i], lam.p));
    f.ZI = f.Zcols * b.hI;

    // Zdot_I = pullback of ( hvec_0c + r sum_{i,j} h_j h_{ji} hvec_i ).
    Eigen::VectorXd v = hvec_h0c(sys, jets, lam.p);
    for (int i = 1; i <= m; ++i) {
        double coeff = 0.0;
        for (int j = 1; j <= m; ++j) coeff += b.hI[j - 1] * b.hij(j, i);
        v += r * coeff * ham_lift_vector(jets.f[i], jets.df[i], lam.p);
    }
    f.ZIdot = lu.solve(v);
    f.Wbasis = perp_basis(b.hI);
    return {std::move(f), std::move(b)};
}

void cross_check_zidot(const ZFrame& f, const Eigen::VectorXd& fd, double tol) {
    double err = (f.ZIdot - fd).norm();
    if (err > tol * (1.0 + f.ZIdot.norm()))
        throw CrossCheckFailure("Zdot_I bracket formula and time differencing disagree by " +
                                std::to_string(err) + " at t = " + std::to_string(f.t));
}

}  // namespace

ZFrame z_frame(const SingularExtremal& ext, const ControlAffineSystem& sys, int node,
               const FrameOptions& opts) {
    NodeCore core = frame_core(ext, sys, node, opts);
    if (opts.cross_check && ext.nodes() >= 3) {
        double dt = ext.dt();
        const int last = ext.nodes() - 1;
        Eigen::VectorXd fd;
        if (node == 0) {
            fd = (-3.0 * core.frame.ZI + 4.0 * frame_core(ext, sys, 1, opts).frame.ZI -
                  frame_core(ext, sys, 2, opts).frame.ZI) /
                 (2.0 * dt);
        } else if (node == last) {
            fd = (3.0 * core.frame.ZI - 4.0 * frame_core(ext, sys, last - 1, opts).frame.ZI +
                  frame_core(ext, sys, last - 2, opts).frame.ZI) /
                 (2.0 * dt);
        } else {
            fd = (frame_core(ext, sys, node + 1, opts).frame.ZI -
                  frame_core(ext, sys, node - 1, opts).frame.ZI) /
                 (2.0 * dt);
        }
        cross_check_zidot(core.frame, fd, opts.cross_check_tol);
    }
    return core.frame;
}

LegendreSample legendre_sample(const ZFrame& frame, double eps_sing) {
    if (frame.r <= eps_sing)
        throw SingularDegenerate("Legendre form needs r > eps_sing (r = " +
                                 std::to_string(frame.r) + ")");
    const int m = static_cast<int>(frame.hI.size());
    LegendreSample s;
    s.t = frame.t;
    s.hc0c = frame.hc0c;
    s.l.resize(m, m);
    s.l.topLeftCorner(m - 1, m - 1) =
        Eigen::MatrixXd::Identity(m - 1, m - 1) / frame.r;
    Eigen::VectorXd a(m - 1);
    for (int i = 0; i < m - 1; ++i) a[i] = sigma(frame.Zcols * frame.Wbasis.col(i), frame.ZI);
    double alpha = sigma(frame.ZI, frame.ZIdot);
    s.l.block(0, m - 1, m - 1, 1) = a;
    s.l.block(m - 1, 0, 1, m - 1) = a.transpose();
    s.l(m - 1, m - 1) = alpha;
    s.schur = alpha - frame.r * a.squaredNorm();
    return s;
}

LegendreSample legendre_sample(const SingularExtremal& ext, const ControlAffineSystem& sys,
                               int node, const FrameOptions& opts) {
    return legendre_sample(z_frame(ext, sys, node, opts), opts.eps_sing);
}

FrameSet build_frames(const SingularExtremal& ext, const ControlAffineSystem& sys,
                      const FrameOptions& opts) {
    const int nodes = ext.nodes();
    FrameSet out;
    out.frames.reserve(nodes);
    for (int k = 0; k < nodes; ++k) out.frames.push_back(frame_core(ext, sys, k, opts).frame);
    if (opts.cross_check && nodes >= 3) {
        double dt = ext.dt();
        for (int k = 0; k < nodes; ++k) {
            Eigen::VectorXd fd;
            if (k == 0)
                fd = (-3.0 * out.frames[0].ZI + 4.0 * out.frames[1].ZI - out.frames[2].ZI) /
                     (2.0 * dt);
            else if (k == nodes - 1)
                fd = (3.0 * out.frames[k].ZI - 4.0 * out.frames[k - 1].ZI +
                      out.frames[k - 2].ZI) /
                     (2.0 * dt);
            else
                fd = (out.frames[k + 1].ZI - out.frames[k - 1].ZI) / (2.0 * dt);
            cross_check_zidot(out.frames[k], fd, opts.cross_check_tol);
        }
    }
    out.legendre.reserve(nodes);
    for (int k = 0; k < nodes; ++k)
        out.legendre.push_back(legendre_sample(out.frames[k], opts.eps_sing));
    return out;
}

std::pair<double, bool> check_glc(const SingularExtremal& ext, const ControlAffineSystem& sys,
                                  double tol_sglc) {
    double glc_min = std::numeric_limits<double>::infinity();
    for (int k = 0; k < ext.nodes(); ++k)
        glc_min = std::min(glc_min, bracket_bundle(sys, ext.lam[k]).hc0c);
    return {glc_min, glc_min > tol_sglc};
}

namespace {

Eigen::MatrixXd zcal_columns(const ZFrame& f) {
    const int m = static_cast<int>(f.hI.size());
    Eigen::MatrixXd G(f.ZI.size(), m);
    if (m > 1) G.leftCols(m - 1) = f.Zcols * f.Wbasis;
    G.col(m - 1) = -f.ZIdot;
    return G;
}

void check_l_condition(const Eigen::MatrixXd& l, double cond_limit) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(l);
    double smin = svd.singularValues().tail(1)[0];
    if (!(smin > 0.0) || svd.singularValues()[0] / smin > cond_limit)
        throw SingularMatrix("Legendre form is numerically singular");
}

}  // namespace

Eigen::VectorXd jacobi_rhs(const ZFrame& frame, const LegendreSample& l,
                           const Eigen::VectorXd& eta, double cond_limit) {
    const int n = static_cast<int>(frame.ZI.size()) / 2;
    Eigen::MatrixXd G = zcal_columns(frame);
    check_l_condition(l.l, cond_limit);
    Eigen::VectorXd c = sigma_rows(G, n) * eta;
    return -G * l.l.partialPivLu().solve(c);
}

namespace {

Eigen::MatrixXd lagrangian_extension(const Eigen::VectorXd& ZI) {
    const int n = static_cast<int>(ZI.size()) / 2;
    if (ZI.head(n).norm() <= 1e-10 * ZI.norm())
        throw DegenerateFrame("Z_I lies in the vertical fibre");
    Eigen::MatrixXd U(2 * n, n + 1);
    U.setZero();
    U.block(n, 0, n, n) = Eigen::MatrixXd::Identity(n, n);
    U.col(n) = ZI;
    Eigen::RowVectorXd w(n + 1);
    for (int j = 0; j <= n; ++j) w[j] = sigma(ZI, U.col(j));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(w, Eigen::ComputeFullV);
    Eigen::MatrixXd nullsp = svd.matrixV().rightCols(n);
    Eigen::MatrixXd raw = U * nullsp;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    Eigen::MatrixXd Q = qr.householderQ();
    return Q.leftCols(n);
}

Eigen::MatrixXd vertical_basis(int n) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(2 * n, n);
    P.block(n, 0, n, n) = Eigen::MatrixXd::Identity(n, n);
    return P;
}

}  // namespace

BoundarySubspaces boundary_subspaces(const ZFrame& frame0, const ZFrame& frameT,
                                     BoundaryConvention convention) {
    const int n = static_cast<int>(frame0.ZI.size()) / 2;
    if (convention == BoundaryConvention::Rev)
        return {lagrangian_extension(frame0.ZI), vertical_basis(n)};
    return {vertical_basis(n), lagrangian_extension(frameT.ZI)};
}

namespace {

struct JacobiPropagation {
    std::vector<Eigen::MatrixXd> Y;  // solution basis per node, 2n x n
    std::vector<Eigen::MatrixXd> B;  // Jacobi generator per node
};

JacobiPropagation propagate_jacobi(const FrameSet& fs, const Eigen::MatrixXd& start, double dt) {
    const int nodes = static_cast<int>(fs.frames.size());
    const int n = static_cast<int>(fs.frames[0].ZI.size()) / 2;
    JacobiPropagation out;
    out.B.reserve(nodes);
    for (int k = 0; k < nodes; ++k) {
        Eigen::MatrixXd G = zcal_columns(fs.frames[k]);
        out.B.push_back(-G * fs.legendre[k].l.partialPivLu().solve(sigma_rows(G, n)));
    }
    out.Y.reserve(nodes);
    out.Y.push_back(start);
    Eigen::MatrixXd Y = start;
    for (int k = 0; k + 1 < nodes; ++k) {
        const Eigen::MatrixXd& B0 = out.B[k];
        const Eigen::MatrixXd& B1 = out.B[k + 1];
        Eigen::MatrixXd Bm = 0.5 * (B0 + B1);  // frames live on the grid; no sub-stepping
        Eigen::MatrixXd K1 = B0 * Y;
        Eigen::MatrixXd K2 = Bm * (Y + 0.5 * dt * K1);
        Eigen::MatrixXd K3 = Bm * (Y + 0.5 * dt * K2);
        Eigen::MatrixXd K4 = B1 * (Y + dt * K3);
        Y += dt / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
        out.Y.push_back(Y);
    }
    return out;
}

// Solution basis at an off-grid time, one RK4 substep from the node below
// with the generator interpolated linearly between the bracketing nodes.
Eigen::MatrixXd substep(const JacobiPropagation& prop, double dt, double t0_node, int k,
                        double t) {
    double h = t - (t0_node + k * dt);
    const Eigen::MatrixXd& B0 = prop.B[k];
    const Eigen::MatrixXd& B1 = prop.B[k + 1];
    auto Bat = [&](double frac) -> Eigen::MatrixXd { return B0 + frac * (B1 - B0); };
    Eigen::MatrixXd Bm = Bat(0.5 * h / dt);
    Eigen::MatrixXd Bb = Bat(h / dt);
    const Eigen::MatrixXd& Y = prop.Y[k];
    Eigen::MatrixXd K1 = B0 * Y;
    Eigen::MatrixXd K2 = Bm * (Y + 0.5 * h * K1);
    Eigen::MatrixXd K3 = Bm * (Y + 0.5 * h * K2);
    Eigen::MatrixXd K4 = Bb * (Y + h * K3);
    return Y + h / 6.0 * (K1 + 2.0 * K2 + 2.0 * K3 + K4);
}

int kernel_dimension(const Eigen::MatrixXd& M, double rel_cut) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    double smax = svd.singularValues()[0];
    if (smax == 0.0) return static_cast<int>(M.rows());
    int dim = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] < rel_cut * smax) ++dim;
    return dim;
}

}  // namespace

ConjugateScan find_conjugate_times(const SingularExtremal& ext, const ControlAffineSystem& sys,
                                   BoundaryConvention convention, const ScanOptions& opts) {
    const int n = ext.n;
    const int nodes = ext.nodes();
    const double T = ext.horizon();
    const double dt = ext.dt();
    ConjugateScan out;
    if (nodes < 2) return out;

    FrameSet fs = build_frames(ext, sys, opts.frames);
    BoundarySubspaces bs =
        boundary_subspaces(fs.frames.front(), fs.frames.back(), convention);
    JacobiPropagation prop = propagate_jacobi(fs, bs.start, dt);

    Eigen::MatrixXd Esig = sigma_rows(bs.end, n);  // pairing rows of the end-space basis
    auto Mat = [&](const Eigen::MatrixXd& Y) -> Eigen::MatrixXd { return Esig * Y; };

    std::vector<double> dets(nodes), smins(nodes);
    for (int k = 0; k < nodes; ++k) {
        Eigen::MatrixXd M = Mat(prop.Y[k]);
        dets[k] = M.determinant();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
        smins[k] = svd.singularValues().tail(1)[0];
        out.detscan.push_back({ext.t[k], dets[k], smins[k]});
    }

    double maxabs = 0.0;
    for (double d : dets) maxabs = std::max(maxabs, std::abs(d));
    if (maxabs == 0.0) {
        out.inconclusive = true;
        return out;
    }
    double band = opts.noise_band_rel * maxabs;

    // Skip the structural zero at t = 0 (the start space meets the end space
    // by construction there).
    int first = 0;
    while (first < nodes && std::abs(dets[first]) <= band) ++first;
    if (first == nodes) {
        out.inconclusive = true;
        return out;
    }

    // Hover guard: a long in-band run after the determinant came alive.
    int run = 0;
    for (int k = first; k < nodes; ++k) {
        run = std::abs(dets[k]) <= band ? run + 1 : 0;
        if (run > opts.hover_nodes) out.inconclusive = true;
    }

    auto det_at = [&](double t) -> double {
        int k = std::min(static_cast<int>(t / dt), nodes - 2);
        return Mat(substep(prop, dt, 0.0, k, t)).determinant();
    };
    double tol_t = opts.tol_t_rel * T;

    auto refine = [&](double a, double b, double da, double db) -> double {
        while (b - a > tol_t) {
            double mid = 0.5 * (a + b);
            double dm = det_at(mid);
            if ((dm < 0.0) == (da < 0.0)) {
                a = mid;
                da = dm;
            } else {
                b = mid;
                db = dm;
            }
        }
        (void)db;
        return 0.5 * (a + b);
    };

    auto multiplicity_at = [&](double t) -> int {
        int k = std::min(static_cast<int>(t / dt), nodes - 2);
        Eigen::MatrixXd M = Mat(substep(prop, dt, 0.0, k, t));
        return kernel_dimension(M, opts.mult_svd_rel);
    };

    // Sign changes between consecutive out-of-band samples (in-band gaps are
    // bridged so a crossing buried in the band is still caught).
    int prev = first;
    for (int k = first + 1; k < nodes; ++k) {
        if (std::abs(dets[k]) <= band) continue;
        if ((dets[k] < 0.0) != (dets[prev] < 0.0)) {
            double t_star = refine(ext.t[prev], ext.t[k], dets[prev], dets[k]);
            int mult = std::max(1, multiplicity_at(t_star));
            bool endpoint = t_star >= T - dt;
            out.times.push_back({t_star, mult, endpoint});
        }
        prev = k;
    }

    // Even-multiplicity dips and an endpoint zero: in-band local minima of
    // |det| away from detected crossings.
    auto near_existing = [&](double t) {
        for (const auto& ct : out.times)
            if (std::abs(ct.t - t) <= std::max(2.0 * dt, 4.0 * tol_t)) return true;
        return false;
    };
    for (int k = std::max(first, 1); k < nodes; ++k) {
        bool in_band = std::abs(dets[k]) <= band;
        bool local_min = k == nodes - 1
                             ? std::abs(dets[k]) <= std::abs(dets[k - 1])
                             : (std::abs(dets[k]) <= std::abs(dets[k - 1]) &&
                                std::abs(dets[k]) <= std::abs(dets[k + 1]));
        if (!in_band || !local_min || near_existing(ext.t[k])) continue;
        bool crossing = k > 0 && k < nodes - 1 && (dets[k - 1] < 0.0) != (dets[k + 1] < 0.0);
        if (crossing) continue;  // handled by the sign-change pass
        int mult = kernel_dimension(Mat(prop.Y[k]), opts.mult_svd_rel);
        if (mult >= 1) out.times.push_back({ext.t[k], mult, k >= nodes - 2});
    }

    // Endpoint hit: the determinant is heading through zero within one grid
    // cell of T (the root may sit just past the horizon after discretization
    // shifts). Secant extrapolation from the last two nodes decides.
    if (nodes >= 2 && dets[nodes - 1] != dets[nodes - 2] && !near_existing(T)) {
        double slope = (dets[nodes - 1] - dets[nodes - 2]) / dt;
        if (slope != 0.0) {
            double t_pred = ext.t[nodes - 1] - dets[nodes - 1] / slope;
            if (t_pred > T - dt && t_pred <= T + dt) {
                int mult = std::max(1, kernel_dimension(Mat(prop.Y[nodes - 1]),
                                                        opts.mult_svd_rel));
                out.times.push_back({std::min(t_pred, T), mult, true});
            }
        }
    }

    std::sort(out.times.begin(), out.times.end(),
              [](const ConjugateTime& a, const ConjugateTime& b) { return a.t < b.t; });
    return out;
}

int estimate_corank(const SingularExtremal& ext, const ControlAffineSystem& sys,
                    double rank_tol) {
    const int n = ext.n, m = ext.m;
    const int nodes = ext.nodes();
    const double dt = ext.dt();

    int windows = std::min(40, std::max(1, nodes / 4));
    int width = std::max(1, nodes / windows);

    std::vector<Eigen::VectorXd> cols;
    for (int w = 0; w < windows; ++w) {
        int lo = w * width;
        int hi = std::min(nodes, lo + width);
        if (lo >= nodes) break;
        // Pullback columns and h_I over this window, one field direction at
        // a time: v = e_dir * 1_window.
        std::vector<Eigen::VectorXd> acc(m, Eigen::VectorXd::Zero(n));
        Eigen::VectorXd cost = Eigen::VectorXd::Zero(m);
        for (int k = lo; k < hi; ++k) {
            SystemJets jets = eval_system_jets(sys, ext.lam[k].q, 1);
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(ext.J[k]);
            for (int dir = 0; dir < m; ++dir) {
                Eigen::VectorXd Z =
                    lu.solve(ham_lift_vector(jets.f[dir + 1], jets.df[dir + 1], ext.lam[k].p));
                acc[dir] += dt * Z.head(n);
                cost[dir] += dt * ext.lam[k].p.dot(jets.f[dir + 1]);
            }
        }
        for (int dir = 0; dir < m; ++dir) {
            Eigen::VectorXd g(n + 1);
            g << acc[dir], cost[dir];
            cols.push_back(g);
        }
    }

    Eigen::MatrixXd G(n + 1, static_cast<int>(cols.size()));
    for (int j = 0; j < G.cols(); ++j) G.col(j) = cols[j];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
    double smax = svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
    int rank = 0;
    if (smax > 0.0)
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()[i] > rank_tol * smax) ++rank;
    return (n + 1) - rank;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::NotOptimal_GLC: return "NotOptimal_GLC";
        case Verdict::NotOptimal_Conjugate: return "NotOptimal_Conjugate";
        case Verdict::LocallyOptimal: return "LocallyOptimal";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "Inconclusive";
}

ConjugateReport optimality_verdict(double glc_min, bool sglc_holds, const ConjugateScan& scan,
                                   int corank, double T, double tol_sglc) {
    ConjugateReport rep;
    rep.glc_min = glc_min;
    rep.sglc_holds = sglc_holds;
    rep.conjugate_times = scan.times;
    rep.corank = corank;
    rep.scan_inconclusive = scan.inconclusive;
    rep.tol_sglc = tol_sglc;

    if (glc_min < -tol_sglc) {
        rep.verdict = Verdict::NotOptimal_GLC;
        return rep;
    }
    if (!sglc_holds) {
        rep.verdict = Verdict::Inconclusive;
        return rep;
    }
    int interior = 0;
    bool endpoint_hit = false;
    for (const auto& ct : scan.times) {
        if (ct.at_endpoint || ct.t >= T)
            endpoint_hit = true;
        else
            interior += ct.multiplicity;
    }
    if (scan.inconclusive) {
        rep.verdict = Verdict::Inconclusive;
    } else if (interior >= corank) {
        rep.verdict = Verdict::NotOptimal_Conjugate;
    } else if (interior == 0 && !endpoint_hit) {
        rep.verdict = Verdict::LocallyOptimal;
    } else {
        rep.verdict = Verdict::Inconclusive;
    }
    return rep;
}

}  // namespace saa
