#pragma once

// Shared fixtures and independent oracles for the test suites. Everything in
// here must stay independent of the implementation paths it checks: finite
// differences act on values only, the mini RK4 integrator is local to the
// tests, and the closed-form group solution is derived from quaternions.

#include <cmath>
#include <functional>
#include <random>

#include "saa/config.hpp"
#include "saa/second_variation.hpp"

namespace testsup {

inline saa::ParamMap abg(double a, double b, double g) {
    return {{"alpha", a}, {"beta", b}, {"gamma", g}};
}

// Known-good singular seeds for the presets (see the worked examples).
inline saa::CotangentPoint heisenberg_seed(double a, double b, double pz = 1.0) {
    double s = std::hypot(a, b);
    Eigen::VectorXd q0 = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd p0(3);
    p0 << -a / s, -b / s, pz;
    return {q0, p0};
}

inline saa::CotangentPoint martinet_seed(double theta, double y0 = 0.0, double z0 = 0.0) {
    Eigen::VectorXd q0(3), p0(3);
    q0 << 0.0, y0, z0;
    p0 << std::cos(theta), std::sin(theta),
        std::sin(2.0 * theta) >= 0.0 ? 1.0 : -1.0;
    return {q0, p0};
}

// Chart at the identity: h_A = p1, h_C = p2, h_B = p3. Plus branch with
// alpha^2 + beta^2 = 1: (h_A, h_B) = (alpha, beta), h_C = kappa.
inline saa::CotangentPoint su2_seed(double alpha, double beta, double kappa) {
    Eigen::VectorXd q0 = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd p0(3);
    p0 << alpha, kappa, beta;
    return {q0, p0};
}

// Central finite difference of a scalar function of a vector.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h) {
    Eigen::VectorXd g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

// Classical RK4 for a generic autonomous field, used as a flow oracle.
inline Eigen::VectorXd rk4_flow(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                Eigen::VectorXd y, double T, int steps) {
    double dt = T / steps;
    for (int s = 0; s < steps; ++s) {
        Eigen::VectorXd k1 = f(y);
        Eigen::VectorXd k2 = f(y + 0.5 * dt * k1);
        Eigen::VectorXd k3 = f(y + 0.5 * dt * k2);
        Eigen::VectorXd k4 = f(y + dt * k3);
        y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return y;
}

// Closed-form SU(2) base trajectory in the chart g = e^{x1 A} e^{x2 C} e^{x3 B}
// for beta = 0: rotation about (alpha, 0, kappa)/norm at rate
// (gamma/kappa)*norm, extracted as X-Z-Y Tait-Bryan angles. The x1 and x3
// angles are unwrapped by continuity along the closed-form family (the chart
// carries them past the atan2 branch cut).
inline Eigen::VectorXd su2_exact_q(double alpha, double gamma, double kappa, double t) {
    double nrm = std::hypot(alpha, kappa);
    Eigen::Vector3d axis(alpha / nrm, 0.0, kappa / nrm);
    Eigen::Matrix3d K;
    K << 0, -axis[2], axis[1], axis[2], 0, -axis[0], -axis[1], axis[0], 0;
    auto angles = [&](double s) {
        double phi = s * (gamma / kappa) * nrm;
        Eigen::Matrix3d R = Eigen::Matrix3d::Identity() + std::sin(phi) * K +
                            (1.0 - std::cos(phi)) * K * K;
        Eigen::Vector3d q;
        q[1] = std::asin(-R(0, 1));
        q[0] = std::atan2(R(2, 1), R(1, 1));
        q[2] = std::atan2(R(0, 2), R(0, 0));
        return q;
    };
    const int samples = 4096;
    const double two_pi = 2.0 * M_PI;
    Eigen::Vector3d prev = angles(0.0);
    Eigen::Vector3d shift = Eigen::Vector3d::Zero();
    for (int i = 1; i <= samples; ++i) {
        Eigen::Vector3d cur = angles(t * i / samples);
        for (int c : {0, 2}) {
            double jump = cur[c] - prev[c];
            if (jump > M_PI) shift[c] -= two_pi;
            if (jump < -M_PI) shift[c] += two_pi;
        }
        prev = cur;
    }
    return prev + shift;
}

// Exact covector from the conserved left-invariant Hamiltonians:
// p = Xi(q)^{-T} (h_A, h_B, h_C).
inline Eigen::VectorXd su2_exact_p(const saa::ControlAffineSystem& su2_fields_sys,
                                   const Eigen::VectorXd& q, const Eigen::Vector3d& hABC) {
    Eigen::Matrix3d Xi;
    Xi.col(0) = su2_fields_sys.field_value(1, q);  // A
    Xi.col(1) = su2_fields_sys.field_value(2, q);  // B
    // C is not a control field of the preset; rebuild it from the drift:
    // f0 = alpha A + beta B + gamma C.
    double a = su2_fields_sys.params().at("alpha");
    double b = su2_fields_sys.params().at("beta");
    double g = su2_fields_sys.params().at("gamma");
    Eigen::Vector3d C =
        (su2_fields_sys.field_value(0, q) - a * Xi.col(0) - b * Xi.col(1)) / g;
    Xi.col(2) = C;
    return Xi.transpose().fullPivLu().solve(hABC);
}

// Bisection roots of 2 - 2cos(x) - x sin(x) on (0.5, 9.5): the SU(2)
// conjugate-point equation; expected times are root/k.
inline std::vector<double> su2_conjugate_equation_roots() {
    auto f = [](double x) { return 2.0 - 2.0 * std::cos(x) - x * std::sin(x); };
    std::vector<double> roots;
    const int samples = 20000;
    double lo = 0.5, hi = 9.5;
    double prev_x = lo, prev_f = f(lo);
    for (int i = 1; i <= samples; ++i) {
        double x = lo + (hi - lo) * i / samples;
        double fx = f(x);
        if ((fx < 0.0) != (prev_f < 0.0)) {
            double a = prev_x, b = x, fa = prev_f;
            while (b - a > 1e-14) {
                double mid = 0.5 * (a + b);
                double fm = f(mid);
                if ((fm < 0.0) == (fa < 0.0)) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            roots.push_back(0.5 * (a + b));
        }
        prev_x = x;
        prev_f = fx;
    }
    return roots;
}

}  // namespace testsup
