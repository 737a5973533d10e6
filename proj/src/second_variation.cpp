#include "saa/second_variation.hpp"

#include <cmath>

namespace saa {

namespace {

// Midpoint-node frames for each variation interval, plus the terminal frame.
struct CollocationData {
    std::vector<ZFrame> mid;
    std::vector<Eigen::MatrixXd> l;  // Legendre matrix at the midpoints
    ZFrame terminal;
    double delta = 0.0;
};

CollocationData collocate(const SingularExtremal& ext, const ControlAffineSystem& sys,
                          const VariationGrid& grid, const FrameOptions& opts) {
    const int N = grid.N;
    const int steps = ext.nodes() - 1;
    if (steps % (2 * N) != 0)
        throw ConfigError("extremal steps (" + std::to_string(steps) +
                          ") must be an even multiple of the variation grid N = " +
                          std::to_string(N));
    const int mult = steps / N;
    CollocationData out;
    out.delta = ext.horizon() / N;
    out.mid.reserve(N);
    for (int k = 0; k < N; ++k) {
        ZFrame f = z_frame(ext, sys, k * mult + mult / 2, opts);
        out.l.push_back(legendre_sample(f, opts.eps_sing).l);
        out.mid.push_back(std::move(f));
    }
    out.terminal = z_frame(ext, sys, steps, opts);
    return out;
}

// sigma(a, b) pairwise over columns.
Eigen::MatrixXd sigma_block(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    Eigen::MatrixXd R(A.cols(), B.cols());
    for (int i = 0; i < A.cols(); ++i)
        for (int j = 0; j < B.cols(); ++j) R(i, j) = symplectic_pairing(A.col(i), B.col(j));
    return R;
}

Eigen::MatrixXd constraint_rows(const CollocationData& cd, const VariationGrid& grid, int n,
                                int m) {
    const int N = grid.N;
    const int D = grid.dim(m);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, D);
    for (int k = 0; k < N; ++k) {
        Eigen::MatrixXd Gk(2 * n, m);
        if (m > 1) Gk.leftCols(m - 1) = cd.mid[k].Zcols * cd.mid[k].Wbasis;
        Gk.col(m - 1) = -cd.mid[k].ZIdot;
        C.block(0, k * m, n, m) = cd.delta * Gk.topRows(n);
    }
    C.col(grid.phiT_index(m)) = cd.terminal.ZI.head(n);
    return C;
}

}  // namespace

QTMatrix assemble_qt(const SingularExtremal& ext, const ControlAffineSystem& sys,
                     const VariationGrid& grid, const FrameOptions& opts) {
    const int n = ext.n, m = ext.m, N = grid.N;
    CollocationData cd = collocate(ext, sys, grid, opts);
    const double dlt = cd.delta;
    const int D = grid.dim(m);

    // Zcal columns per interval: [Zcols*W, -ZIdot].
    std::vector<Eigen::MatrixXd> G(N);
    for (int k = 0; k < N; ++k) {
        G[k].resize(2 * n, m);
        if (m > 1) G[k].leftCols(m - 1) = cd.mid[k].Zcols * cd.mid[k].Wbasis;
        G[k].col(m - 1) = -cd.mid[k].ZIdot;
    }

    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(D, D);
    for (int k = 0; k < N; ++k) B.block(k * m, k * m, m, m) += dlt * cd.l[k];
    for (int k = 0; k < N; ++k) {
        for (int j = 0; j < k; ++j)
            B.block(k * m, j * m, m, m) += dlt * dlt * sigma_block(G[k], G[j]);
        B.block(k * m, k * m, m, m) += 0.5 * dlt * dlt * sigma_block(G[k], G[k]);
    }
    Eigen::MatrixXd ZIT = cd.terminal.ZI;
    for (int j = 0; j < N; ++j)
        B.block(grid.phiT_index(m), j * m, 1, m) += dlt * sigma_block(ZIT, G[j]);

    QTMatrix out;
    out.Q = 0.5 * (B + B.transpose());
    out.C = constraint_rows(cd, grid, n, m);
    out.T = ext.horizon();
    out.N = N;
    out.m = m;
    return out;
}

QTMatrix assemble_qt_raw(const SingularExtremal& ext, const ControlAffineSystem& sys,
                         const VariationGrid& grid, const FrameOptions& opts) {
    const int n = ext.n, m = ext.m, N = grid.N;
    CollocationData cd = collocate(ext, sys, grid, opts);
    const double dlt = cd.delta;
    const int D = grid.dim(m);

    // rho recovered from the phi coefficients as a discrete derivative under
    // the midpoint-sample convention with phi(0) = 0: fourth-order centered
    // stencils in the bulk, short closures at the edges (their O(dlt^2)
    // error carries O(dlt) total quadrature weight).
    //   rho_0 = (phi_0 + phi_1/3) / delta     (quadratic through 0, phi_0, phi_1)
    //   rho_{N-1} = (3 phi_{N-1} - 4 phi_{N-2} + phi_{N-3}) / (2 delta)
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(N, D);
    auto phi_col = [&](int k) { return grid.phi_index(k, m); };
    if (N >= 5) {
        R(0, phi_col(0)) = 1.0 / dlt;
        R(0, phi_col(1)) = 1.0 / (3.0 * dlt);
        R(1, phi_col(2)) = 0.5 / dlt;
        R(1, phi_col(0)) = -0.5 / dlt;
        for (int k = 2; k < N - 2; ++k) {
            R(k, phi_col(k - 2)) = 1.0 / (12.0 * dlt);
            R(k, phi_col(k - 1)) = -8.0 / (12.0 * dlt);
            R(k, phi_col(k + 1)) = 8.0 / (12.0 * dlt);
            R(k, phi_col(k + 2)) = -1.0 / (12.0 * dlt);
        }
        R(N - 2, phi_col(N - 1)) = 0.5 / dlt;
        R(N - 2, phi_col(N - 3)) = -0.5 / dlt;
        R(N - 1, phi_col(N - 1)) = 1.5 / dlt;
        R(N - 1, phi_col(N - 2)) = -2.0 / dlt;
        R(N - 1, phi_col(N - 3)) = 0.5 / dlt;
    } else {
        for (int k = 0; k < N; ++k) {
            R(k, phi_col(k)) = 1.0 / dlt;
            if (k > 0) R(k, phi_col(k - 1)) = -1.0 / dlt;
        }
    }

    // Z_t v per interval as a linear map of the coefficient vector:
    // v_std = rho * hI + W w, so Zv = Zcols * (hI rho + W w).
    std::vector<Eigen::MatrixXd> Zv(N);  // 2n x D
    for (int k = 0; k < N; ++k) {
        const ZFrame& f = cd.mid[k];
        Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(2 * n, D);
        coeff += (f.Zcols * f.hI) * R.row(k);
        for (int j = 0; j + 1 < m; ++j) {
            Eigen::VectorXd col = f.Zcols * f.Wbasis.col(j);
            coeff.col(grid.w_index(k, j, m)) += col;
        }
        Zv[k] = std::move(coeff);
    }

    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(D, D);
    for (int k = 0; k < N; ++k)
        for (int j = 0; j + 1 < m; ++j) {
            int idx = grid.w_index(k, j, m);
            B(idx, idx) += dlt / cd.mid[k].r;
        }
    // Causal double sum in sigma, with the half-weight diagonal cell.
    const int dim2 = 2 * n;
    Eigen::MatrixXd Om = symplectic_form_matrix(n);
    Eigen::MatrixXd prefix = Eigen::MatrixXd::Zero(dim2, D);
    for (int k = 0; k < N; ++k) {
        Eigen::MatrixXd sig_k = Zv[k].transpose() * Om;  // D x 2n
        B += dlt * dlt * (sig_k * prefix);
        B += 0.5 * dlt * dlt * (sig_k * Zv[k]);
        prefix += Zv[k];
    }

    QTMatrix out;
    out.Q = 0.5 * (B + B.transpose());
    out.C = constraint_rows(cd, grid, n, m);
    out.T = ext.horizon();
    out.N = N;
    out.m = m;
    return out;
}

Eigen::VectorXd projected_spectrum(const QTMatrix& qt) {
    // Orthonormal basis of ker C; rank-deficient constraint rows are dropped
    // by the SVD cut automatically.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(qt.C, Eigen::ComputeFullV);
    double smax = svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (smax > 0.0 && svd.singularValues()[i] > 1e-12 * smax) ++rank;
    Eigen::MatrixXd K = svd.matrixV().rightCols(qt.C.cols() - rank);
    Eigen::MatrixXd P = K.transpose() * qt.Q * K;
    P = 0.5 * (P + P.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P);
    return eig.eigenvalues();
}

int morse_index(const QTMatrix& qt, double tol_eig) {
    Eigen::VectorXd ev = projected_spectrum(qt);
    double smax = 0.0;
    for (int i = 0; i < ev.size(); ++i) smax = std::max(smax, std::abs(ev[i]));
    int count = 0;
    for (int i = 0; i < ev.size(); ++i)
        if (ev[i] < -tol_eig * smax) ++count;
    return count;
}

}  // namespace saa
