#pragma once

#include "saa/jacobi.hpp"

namespace saa {

/// Piecewise-constant collocation of the second variation on N intervals of
/// [0,T]. Coefficient layout: for interval k, m-1 w-coefficients in the
/// Wbasis frame followed by the phi value (indices k*m .. k*m+m-1), then the
/// independent terminal value phiT at index N*m. Total dimension
/// D = N(m-1) + N + 1.
struct VariationGrid {
    int N = 400;

    int dim(int m) const { return N * m + 1; }
    int w_index(int k, int j, int m) const { return k * m + j; }
    int phi_index(int k, int m) const { return k * m + m - 1; }
    int phiT_index(int m) const { return N * m; }
};

/// Discretized form Q plus the admissibility constraint rows C
/// (phi(T) Z_I(T) + integral of Zcal v projected onto the horizontal
/// complement of Pi0).
struct QTMatrix {
    Eigen::MatrixXd Q;  // D x D, symmetric
    Eigen::MatrixXd C;  // n x D
    double T = 0.0;
    int N = 0;
    int m = 0;
};

/// Integrated-by-parts form: boundary term + l_t block + causal double sum.
/// Requires the extremal grid to hold an even multiple of N steps so the
/// interval midpoints are grid nodes.
QTMatrix assemble_qt(const SingularExtremal& ext, const ControlAffineSystem& sys,
                     const VariationGrid& grid, const FrameOptions& opts = {});

/// Pre-integration-by-parts form in (rho, w) variables; rho is recovered
/// from phi by second-order differences (centered inside, one-sided at the
/// ends, phi(0) = 0). Used to validate the integration-by-parts identity.
QTMatrix assemble_qt_raw(const SingularExtremal& ext, const ControlAffineSystem& sys,
                         const VariationGrid& grid, const FrameOptions& opts = {});

/// Number of eigenvalues of Q restricted to ker C below -tol_eig * sigma_max.
int morse_index(const QTMatrix& qt, double tol_eig = 1e-8);

/// Eigenvalues of Q restricted to ker C, ascending.
Eigen::VectorXd projected_spectrum(const QTMatrix& qt);

}  // namespace saa
