#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <random>

#include "test_support.hpp"

using namespace saa;
using testsup::abg;

namespace {

CotangentPoint random_point(std::mt19937& rng, double amp = 1.0) {
    std::uniform_real_distribution<double> d(-amp, amp);
    Eigen::VectorXd q(3), p(3);
    for (int i = 0; i < 3; ++i) {
        q[i] = d(rng);
        p[i] = d(rng);
    }
    return {q, p};
}

}  // namespace

TEST_CASE("lifts on the worked examples") {
    ControlAffineSystem heis = builtin_system("heisenberg_drift", abg(0.6, 0.8, 0.3));
    CotangentPoint lam{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3)};
    lam.p << 1.0, 0.0, 0.0;
    CHECK(lift(heis, lam, 1) == doctest::Approx(1.0));  // h_X at the origin

    ControlAffineSystem mart = builtin_system("martinet_drift", abg(0.3, 0.1, 0.2));
    CotangentPoint lm{Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3)};
    lm.p << 0.4, 0.7, -0.2;
    CHECK(lift(mart, lm, 2) == doctest::Approx(0.7));  // h_2 = p_y at x = 0

    lm.p.setZero();
    CHECK(lift(mart, lm, 1) == 0.0);
}

TEST_CASE("preset bracket tables at 50 random points") {
    std::mt19937 rng(3);
    ControlAffineSystem heis = builtin_system("heisenberg_drift", abg(0.6, 0.8, 0.3));
    ControlAffineSystem mart = builtin_system("martinet_drift", abg(0.3, 0.1, 0.2));
    ControlAffineSystem su2 = builtin_system("su2_left_invariant", abg(1.0, 0.0, 1.5));

    for (int trial = 0; trial < 50; ++trial) {
        CotangentPoint lam = random_point(rng);

        // Heisenberg: {h_X,h_Y} = h_Z = p_z; [X,Y] = Z, [X,Z] = [Y,Z] = 0.
        CHECK(poisson_pair(heis, lam, 1, 2) == doctest::Approx(lam.p[2]).epsilon(1e-12));
        Eigen::VectorXd Z(3);
        Z << 0, 0, 1;
        SystemJets jets = eval_system_jets(heis, lam.q, 2);
        Eigen::VectorXd g;
        Eigen::MatrixXd dg;
        bracket_field(jets, 1, 2, g, dg);
        CHECK((g - Z).norm() < 1e-12);
        {
            // Z = (f0 - a X - b Y)/g; [X,Z] and [Y,Z] vanish.
            Eigen::VectorXd zf, xz, yz;
            Eigen::MatrixXd dzf;
            bracket_field(jets, 1, 0, xz, dzf);  // [X, f0] = b[X,Y]
            CHECK((xz - 0.8 * Z).norm() < 1e-12);
            bracket_field(jets, 2, 0, yz, dzf);  // [Y, f0] = -a[X,Y]
            CHECK((yz + 0.6 * Z).norm() < 1e-12);
        }

        // Martinet bracket list: f_01 = 0, f_02 = a x dz, f_12 = x dz,
        // f_002 = a^2 dz, f_102 = a dz, f_101 = f_201 = f_202 = f_001 = 0.
        CHECK(poisson_pair(mart, lam, 1, 2) ==
              doctest::Approx(lam.q[0] * lam.p[2]).epsilon(1e-12));
        {
            const double a = 0.3;
            SystemJets mj = eval_system_jets(mart, lam.q, 2);
            Eigen::VectorXd g;
            Eigen::MatrixXd dg;
            Eigen::Vector3d dz(0, 0, 1);
            bracket_field(mj, 0, 1, g, dg);
            CHECK(g.norm() < 1e-12);
            bracket_field(mj, 0, 2, g, dg);
            CHECK((g - a * lam.q[0] * dz).norm() < 1e-12);
            auto dbl = [&](int i, int j, int k) {
                Eigen::VectorXd inner;
                Eigen::MatrixXd dinner;
                bracket_field(mj, j, k, inner, dinner);
                return (dinner * mj.f[i] - mj.df[i] * inner).eval();
            };
            CHECK((dbl(0, 0, 2) - a * a * dz).norm() < 1e-12);
            CHECK((dbl(1, 0, 2) - a * dz).norm() < 1e-12);
            CHECK(dbl(0, 0, 1).norm() < 1e-12);
            CHECK(dbl(1, 0, 1).norm() < 1e-12);
            CHECK(dbl(2, 0, 1).norm() < 1e-12);
            CHECK(dbl(2, 0, 2).norm() < 1e-12);
        }

        // SU(2) cyclic table. h_C and its brackets enter through the drift:
        // h_0 = a h_A + b h_B + g h_C with (a, b, g) = (1, 0, 1.5), so
        // {h_B,h_C} = {h_B,h_0}/g and {h_C,h_A} = ({h_0,h_A} - b{h_B,h_A})/g.
        CotangentPoint ls = lam;
        ls.q *= 0.4;  // stay clear of the chart boundary
        double hA = lift(su2, ls, 1), hB = lift(su2, ls, 2);
        double hC = (lift(su2, ls, 0) - 1.0 * hA - 0.0 * hB) / 1.5;
        BracketBundle bs = bracket_bundle(su2, ls);
        CHECK(bs.hij(1, 2) == doctest::Approx(hC).epsilon(1e-11));              // {h_A,h_B}=h_C
        CHECK((bs.hij(2, 0) - 1.0 * bs.hij(2, 1)) / 1.5 ==
              doctest::Approx(hA).epsilon(1e-11));                              // {h_B,h_C}=h_A
        CHECK(bs.hij(0, 1) / 1.5 == doctest::Approx(hB).epsilon(1e-11));        // {h_C,h_A}=h_B
    }
}

TEST_CASE("antisymmetry is exact and the Jacobi identity holds") {
    std::mt19937 rng(5);
    for (const char* name : {"heisenberg_drift", "martinet_drift", "su2_left_invariant"}) {
        ControlAffineSystem sys = builtin_system(name, abg(0.4, 0.3, 0.9));
        for (int trial = 0; trial < 200; ++trial) {
            CotangentPoint lam = random_point(rng, 0.8);
            BracketBundle b = bracket_bundle(sys, lam);
            for (int i = 0; i <= 2; ++i) {
                CHECK(b.hij(i, i) == 0.0);
                for (int j = 0; j <= 2; ++j) CHECK(b.hij(i, j) + b.hij(j, i) == 0.0);
            }
        }
        // {h_i,{h_j,h_k}} + cyclic = 0 via double bracket fields.
        for (int trial = 0; trial < 20; ++trial) {
            CotangentPoint lam = random_point(rng, 0.8);
            SystemJets jets = eval_system_jets(sys, lam.q, 2);
            auto dbl = [&](int i, int j, int k) {
                Eigen::VectorXd g;
                Eigen::MatrixXd dg;
                bracket_field(jets, j, k, g, dg);
                return lam.p.dot(dg * jets.f[i] - jets.df[i] * g);
            };
            for (auto [i, j, k] : {std::array<int, 3>{0, 1, 2}, {1, 2, 0}, {0, 0, 1}}) {
                double res = dbl(i, j, k) + dbl(j, k, i) + dbl(k, i, j);
                CHECK(std::abs(res) < 1e-10);
            }
        }
    }
}

TEST_CASE("bundle aggregates on the worked examples") {
    // Martinet at x=0: h_0c = h_2 h_02 = 0 and h_c0c = alpha p_x p_y p_z.
    double alpha = 0.3;
    ControlAffineSystem mart = builtin_system("martinet_drift", abg(alpha, 0.1, 0.2));
    CotangentPoint lam = testsup::martinet_seed(2.8);
    BracketBundle b = bracket_bundle(mart, lam);
    CHECK(std::abs(b.h0c) < 1e-14);
    CHECK(b.hc0c ==
          doctest::Approx(alpha * lam.p[0] * lam.p[1] * lam.p[2]).epsilon(1e-12));
    CHECK(b.hc0c == doctest::Approx(alpha / 2.0 * std::abs(std::sin(5.6))).epsilon(1e-12));

    // Heisenberg on the singular locus with p_z = 1: h_c0c = -sqrt(a^2+b^2).
    ControlAffineSystem heis = builtin_system("heisenberg_drift", abg(0.6, 0.8, 0.3));
    BracketBundle bh = bracket_bundle(heis, testsup::heisenberg_seed(0.6, 0.8));
    CHECK(bh.hc0c == doctest::Approx(-1.0).epsilon(1e-12));

    // SU(2) plus branch: h_c0c = h_C^2 (alpha h_A + beta h_B) = kappa^2.
    ControlAffineSystem su2 = builtin_system("su2_left_invariant", abg(1.0, 0.0, 1.5));
    BracketBundle bs = bracket_bundle(su2, testsup::su2_seed(1.0, 0.0, 1.0));
    CHECK(bs.hc0c == doctest::Approx(1.0).epsilon(1e-12));

    // hcI internal consistency.
    for (int i = 1; i <= 2; ++i) {
        double acc = 0.0;
        for (int j = 1; j <= 2; ++j) acc += bs.hI[j - 1] * bs.hij(j, i);
        CHECK(bs.hcI[i - 1] == doctest::Approx(acc).epsilon(1e-14));
    }
}

TEST_CASE("singular feedback and control on the worked examples") {
    ControlAffineSystem heis = builtin_system("heisenberg_drift", abg(0.6, 0.8, 0.3));
    BracketBundle bh = bracket_bundle(heis, testsup::heisenberg_seed(0.6, 0.8));
    CHECK(singular_feedback(bh) == doctest::Approx(1.0).epsilon(1e-12));  // sqrt(a^2+b^2)
    Eigen::VectorXd u = singular_control(bh);
    CHECK(u[0] == doctest::Approx(-0.6).epsilon(1e-12));
    CHECK(u[1] == doctest::Approx(-0.8).epsilon(1e-12));

    double alpha = 0.3, theta = 2.8;
    ControlAffineSystem mart = builtin_system("martinet_drift", abg(alpha, 0.1, 0.2));
    BracketBundle bm = bracket_bundle(mart, testsup::martinet_seed(theta));
    CHECK(singular_feedback(bm) == doctest::Approx(-alpha / std::cos(theta)).epsilon(1e-12));
    Eigen::VectorXd um = singular_control(bm);
    CHECK(um[0] == doctest::Approx(-alpha).epsilon(1e-12));
    CHECK(um[1] == doctest::Approx(-alpha * std::tan(theta)).epsilon(1e-12));

    double gamma = 1.5, kappa = 1.0;
    ControlAffineSystem su2 = builtin_system("su2_left_invariant", abg(1.0, 0.0, gamma));
    BracketBundle bs = bracket_bundle(su2, testsup::su2_seed(1.0, 0.0, kappa));
    CHECK(singular_feedback(bs) == doctest::Approx(gamma / kappa - 1.0).epsilon(1e-12));

    BracketBundle degenerate = bs;
    degenerate.hc0c = 1e-12;
    CHECK_THROWS_AS(singular_feedback(degenerate), SingularDegenerate);
}

TEST_CASE("pointwise classification") {
    BracketBundle b;
    b.hI.resize(2);
    b.hI << 2.0, 0.0;
    CHECK(classify_point(b).cls == PointClass::Boundary);
    b.hI << 0.3, 0.0;
    CHECK(classify_point(b).cls == PointClass::Inactive);
    b.hI << 1.0, 0.0;
    Classification c = classify_point(b);
    CHECK(c.cls == PointClass::SingularCandidate);
    CHECK(c.gap == 0.0);
}

TEST_CASE("hc0c equals the h_c-flow derivative of h_0c (4th-order FD oracle)") {
    std::mt19937 rng(9);
    for (const char* name : {"heisenberg_drift", "martinet_drift", "su2_left_invariant"}) {
        ControlAffineSystem sys = builtin_system(name, abg(0.5, 0.2, 0.8));
        int done = 0;
        while (done < 5) {
            CotangentPoint lam = random_point(rng, 0.7);
            BracketBundle b = bracket_bundle(sys, lam);
            if (std::abs(b.hc0c) < 1e-3) continue;
            ++done;

            auto hvec_c = [&](const Eigen::VectorXd& y) {
                CotangentPoint l = CotangentPoint::from_flat(y);
                SystemJets jets = eval_system_jets(sys, l.q, 1);
                Eigen::VectorXd v = Eigen::VectorXd::Zero(6);
                for (int i = 1; i <= 2; ++i)
                    v += l.p.dot(jets.f[i]) * ham_lift_vector(jets.f[i], jets.df[i], l.p);
                return v;
            };
            auto shift = [&](double s) {
                Eigen::VectorXd y = testsup::rk4_flow(hvec_c, lam.flat(), s, 40);
                return bracket_bundle(sys, CotangentPoint::from_flat(y)).h0c;
            };
            double h = 1e-2;
            double fd = (-shift(2 * h) + 8 * shift(h) - 8 * shift(-h) + shift(-2 * h)) / (12 * h);
            CHECK(std::abs(b.hc0c - fd) <= 1e-6 * std::max(1.0, std::abs(b.hc0c)));
        }
    }
}

TEST_CASE("fiber linearity of the lift") {
    std::mt19937 rng(13);
    ControlAffineSystem sys = builtin_system("martinet_drift", abg(0.3, 0.1, 0.2));
    for (int trial = 0; trial < 20; ++trial) {
        CotangentPoint lam = random_point(rng);
        double s = 3.7;
        CotangentPoint scaled{lam.q, s * lam.p};
        for (int i = 0; i <= 2; ++i)
            CHECK(std::abs(lift(sys, scaled, i) - s * lift(sys, lam, i)) <=
                  1e-14 * std::max(1.0, std::abs(s * lift(sys, lam, i))));
    }
}
