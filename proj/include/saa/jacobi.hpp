#pragma once

#include <optional>
#include <string>
#include <vector>

#include "saa/flow.hpp"

namespace saa {

/// Pulled-back Hamiltonian frame at one grid node: columns Z_t e_i, the
/// vector Z_I(t), its derivative, and an orthonormal basis of h_I(t)^perp.
struct ZFrame {
    double t = 0.0;
    int node = 0;
    Eigen::MatrixXd Zcols;   // 2n x m, column i = pullback of hvec_i at lambda(t)
    Eigen::VectorXd ZI;      // Zcols * hI(t)
    Eigen::VectorXd ZIdot;   // bracket-formula derivative, pulled back
    Eigen::MatrixXd Wbasis;  // m x (m-1), orthonormal, Wbasis^T hI = 0
    Eigen::VectorXd hI;      // h_I(lambda(t))
    double r = 0.0;
    double hc0c = 0.0;
};

/// Legendre form sample in the (Wbasis, phi) coordinates.
struct LegendreSample {
    double t = 0.0;
    Eigen::MatrixXd l;   // m x m symmetric
    double schur = 0.0;  // sigma(Z_I, Zdot_I) - r |sigma(Z_t ., Z_I)|^2
    double hc0c = 0.0;
};

struct FrameOptions {
    double eps_sing = kDefaultEpsSingular;
    double cond_limit = 1e12;
    bool cross_check = true;          // verify ZIdot against time differencing of ZI
    double cross_check_tol = 1e-5;    // relative, scaled by (1 + |ZIdot|)
};

ZFrame z_frame(const SingularExtremal& ext, const ControlAffineSystem& sys, int node,
               const FrameOptions& opts = {});

LegendreSample legendre_sample(const SingularExtremal& ext, const ControlAffineSystem& sys,
                               int node, const FrameOptions& opts = {});
LegendreSample legendre_sample(const ZFrame& frame, double eps_sing = kDefaultEpsSingular);

/// Frames and Legendre samples on the whole grid (single pass, with the
/// cross-check applied where enabled).
struct FrameSet {
    std::vector<ZFrame> frames;
    std::vector<LegendreSample> legendre;
};
FrameSet build_frames(const SingularExtremal& ext, const ControlAffineSystem& sys,
                      const FrameOptions& opts = {});

/// min_t h_c0c(t) over the grid and whether the strict condition holds.
std::pair<double, bool> check_glc(const SingularExtremal& ext, const ControlAffineSystem& sys,
                                  double tol_sglc = 1e-8);

/// Right-hand side of the Jacobi equation eta' = -Zcal_t l_t^{-1}
/// sigma(Zcal_t ., eta) evaluated on one frame.
Eigen::VectorXd jacobi_rhs(const ZFrame& frame, const LegendreSample& l,
                           const Eigen::VectorXd& eta, double cond_limit = 1e12);

enum class BoundaryConvention {
    Rev,  // start (Pi0 + R Z_I(0)) cap (R Z_I(0))^angle, end Pi0
    Fwd,  // start Pi0, end (Pi0 + R Z_I(T)) cap (R Z_I(T))^angle
};

/// Orthonormal bases (2n x n) of the start and end subspaces of the Jacobi
/// boundary value problem. Throws DegenerateFrame if Z_I lies in the fibre.
struct BoundarySubspaces {
    Eigen::MatrixXd start;
    Eigen::MatrixXd end;
};
BoundarySubspaces boundary_subspaces(const ZFrame& frame0, const ZFrame& frameT,
                                     BoundaryConvention convention = BoundaryConvention::Rev);

struct ConjugateTime {
    double t = 0.0;
    int multiplicity = 1;
    bool at_endpoint = false;
};

struct DetScanRow {
    double t;
    double det;
    double smin;
};

struct ConjugateScan {
    std::vector<ConjugateTime> times;
    std::vector<DetScanRow> detscan;
    bool inconclusive = false;  // det hovered inside the noise band
};

struct ScanOptions {
    FrameOptions frames;
    double tol_t_rel = 1e-8;          // bisection time tolerance, relative to T
    double mult_svd_rel = 1e-7;       // singular-value cut for multiplicity
    double noise_band_rel = 1e-10;    // |det| below band*max is "zero"
    int hover_nodes = 3;              // > this many consecutive in-band nodes => inconclusive
};

/// Integrate the Jacobi equation for a basis of the start space and locate
/// zeros / sign changes of the boundary-pairing determinant. Callers are
/// expected to have verified the strict Legendre condition on [0,T]; the
/// inversion of l_t rests on it.
ConjugateScan find_conjugate_times(const SingularExtremal& ext, const ControlAffineSystem& sys,
                                   BoundaryConvention convention = BoundaryConvention::Rev,
                                   const ScanOptions& opts = {});

/// Sampled-variation estimate of the corank of the extended endpoint map.
int estimate_corank(const SingularExtremal& ext, const ControlAffineSystem& sys,
                    double rank_tol = 1e-8);

enum class Verdict { NotOptimal_GLC, NotOptimal_Conjugate, LocallyOptimal, Inconclusive };

std::string to_string(Verdict v);

struct ConjugateReport {
    double glc_min = 0.0;
    bool sglc_holds = false;
    std::vector<ConjugateTime> conjugate_times;
    int corank = 1;
    Verdict verdict = Verdict::Inconclusive;
    bool scan_inconclusive = false;
    double tol_sglc = 1e-8;
};

/// Combine GLC, the conjugate scan and the corank estimate into the verdict
/// of the three optimality theorems. Conjugate times are counted on the open
/// interval (0,T); an endpoint hit blocks LocallyOptimal.
ConjugateReport optimality_verdict(double glc_min, bool sglc_holds,
                                   const ConjugateScan& scan, int corank, double T,
                                   double tol_sglc = 1e-8);

}  // namespace saa
