#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "saa/expr.hpp"
#include "saa/system.hpp"

using namespace saa;

TEST_CASE("parser maps the examples to the expected trees") {
    // x1^2/2 -> Div(Pow(Var 1, 2), 2)
    ExprPtr e = parse_field_expr("x1^2/2");
    REQUIRE(e->kind == Expr::Kind::Div);
    CHECK(e->a->kind == Expr::Kind::Pow);
    CHECK(e->a->a->kind == Expr::Kind::Var);
    CHECK(e->a->a->var == 1);
    CHECK(e->a->exponent == 2);
    CHECK(e->b->kind == Expr::Kind::Const);
    CHECK(e->b->value == 2.0);

    // -y/2 -> Neg(Div(Var 2, 2))
    ExprPtr f = parse_field_expr("-y/2");
    REQUIRE(f->kind == Expr::Kind::Neg);
    REQUIRE(f->a->kind == Expr::Kind::Div);
    CHECK(f->a->a->kind == Expr::Kind::Var);
    CHECK(f->a->a->var == 2);
}

TEST_CASE("syntax errors carry the position") {
    try {
        parse_field_expr("sin(");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 1);
        CHECK(e.col == 5);
    }
    CHECK_THROWS_AS(parse_field_expr("x %"), ParseError);
    CHECK_THROWS_AS(parse_field_expr("(x"), ParseError);
    CHECK_THROWS_AS(parse_field_expr("x^y"), ParseError);    // non-constant exponent
    CHECK_THROWS_AS(parse_field_expr("foo(x)"), ParseError); // unknown function
    CHECK_THROWS_AS(parse_field_expr(""), ParseError);
}

TEST_CASE("aliases and coordinate indices") {
    CHECK(parse_field_expr("x")->var == 1);
    CHECK(parse_field_expr("y")->var == 2);
    CHECK(parse_field_expr("z")->var == 3);
    CHECK(parse_field_expr("x7")->var == 7);
    CHECK(parse_field_expr("alpha")->kind == Expr::Kind::Param);
    ExprPtr n = parse_field_expr("neg(x)");
    CHECK(n->kind == Expr::Kind::Neg);
    CHECK(n->a->var == 1);
}

TEST_CASE("presets demand their parameters") {
    CHECK_THROWS_AS(builtin_system("martinet_drift", {{"alpha", 0.3}}), ConfigError);
    CHECK_THROWS_AS(builtin_system("nope", {{"alpha", 1.0}, {"beta", 0.0}, {"gamma", 1.0}}),
                    ConfigError);
}

namespace {

ExprPtr random_expr(std::mt19937& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 8);
    std::uniform_real_distribution<double> cval(-2.0, 2.0);
    std::uniform_int_distribution<int> var(1, 3);
    switch (pick(rng)) {
        case 0: return Expr::constant(cval(rng));
        case 1:
        case 2: return Expr::variable(var(rng));
        case 3: return Expr::unary(Expr::Kind::Sin, random_expr(rng, depth - 1));
        case 4: return Expr::unary(Expr::Kind::Cos, random_expr(rng, depth - 1));
        case 5: return Expr::unary(Expr::Kind::Neg, random_expr(rng, depth - 1));
        case 6:
            return Expr::binary(Expr::Kind::Add, random_expr(rng, depth - 1),
                                random_expr(rng, depth - 1));
        case 7:
            return Expr::binary(Expr::Kind::Mul, random_expr(rng, depth - 1),
                                random_expr(rng, depth - 1));
        default: return Expr::pow(random_expr(rng, depth - 1), 2);
    }
}

}  // namespace

TEST_CASE("pretty-print round trip on random trees and the preset corpus") {
    // The identity holds on the parser's image, so raw random trees are
    // normalized through one parse first (negative literals come out as
    // Neg(Const)).
    std::mt19937 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        ExprPtr e = parse_field_expr(to_string(*random_expr(rng, 4)));
        ExprPtr back = parse_field_expr(to_string(*e));
        CHECK(expr_equal(*e, *back));
    }
    for (const char* preset : {"heisenberg_drift", "martinet_drift", "su2_left_invariant"}) {
        ControlAffineSystem sys = builtin_system(preset, {{"alpha", 0.3}, {"beta", 0.2}, {"gamma", 0.7}});
        for (const auto& field : sys.fields())
            for (const auto& comp : field) {
                ExprPtr back = parse_field_expr(to_string(*comp));
                CHECK(expr_equal(*comp, *back));
            }
    }
}

TEST_CASE("jet values on the worked examples") {
    ParamMap none;
    Eigen::VectorXd x(3);
    x << 3.0, 0.0, 0.0;
    Jet3 j = eval_jet(*parse_field_expr("x1^2/2"), x, none);
    CHECK(j.value == doctest::Approx(4.5).epsilon(1e-14));
    CHECK(j.grad[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(j.grad[1] == 0.0);
    CHECK(j.hess(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(j.hess(1, 1) == 0.0);

    Jet3 c = eval_jet(*parse_field_expr("1.5"), x, none);
    CHECK(c.value == 1.5);
    CHECK(c.grad.norm() == 0.0);
    CHECK(c.hess.norm() == 0.0);

    Eigen::VectorXd x2(2);
    x2 << 2.0, 5.0;
    Jet3 p = eval_jet(*parse_field_expr("x1*x2"), x2, none);
    CHECK(p.value == doctest::Approx(10.0));
    CHECK(p.grad[0] == doctest::Approx(5.0));
    CHECK(p.grad[1] == doctest::Approx(2.0));
    CHECK(p.hess(0, 1) == doctest::Approx(1.0));
    for (double t : p.third) CHECK(t == 0.0);
}

TEST_CASE("domain errors identify the offending node") {
    ParamMap none;
    Eigen::VectorXd x(2);
    x << 1.0, 0.0;
    CHECK_THROWS_AS(eval_jet(*parse_field_expr("x1/x2"), x, none), DomainError);
    x << -1.0, 1.0;
    CHECK_THROWS_AS(eval_jet(*parse_field_expr("sqrt(x1)"), x, none), DomainError);
    CHECK_THROWS_AS(eval_jet(*parse_field_expr("missing*x1"), x, none), ConfigError);
}

TEST_CASE("jets match finite differences on 100 random polynomial/trig expressions") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> pt(-1.5, 1.5);
    ParamMap none;
    int checked = 0;
    while (checked < 100) {
        ExprPtr e = random_expr(rng, 4);
        Eigen::VectorXd x(3);
        for (int i = 0; i < 3; ++i) x[i] = pt(rng);
        Jet3 j = eval_jet(*e, x, none);
        if (std::abs(j.value) > 1e3) continue;  // discard wild trees, keep FD meaningful
        ++checked;

        auto val = [&](const Eigen::VectorXd& y) { return eval_jet(*e, y, none, 0).value; };
        double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
        double h = 1e-4 * scale;

        for (int i = 0; i < 3; ++i) {
            Eigen::VectorXd xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            double fd = (val(xp) - val(xm)) / (2.0 * h);
            CHECK(std::abs(j.grad[i] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) {
                Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
                xpp[i] += h; xpp[k] += h;
                xpm[i] += h; xpm[k] -= h;
                xmp[i] -= h; xmp[k] += h;
                xmm[i] -= h; xmm[k] -= h;
                double fd = (val(xpp) - val(xpm) - val(xmp) + val(xmm)) / (4.0 * h * h);
                CHECK(std::abs(j.hess(i, k) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
            }
        // Third derivatives: difference the (FD-verified) analytic Hessian;
        // a pure triple-value stencil at this step drowns in roundoff.
        for (int i = 0; i < 3; ++i) {
            Eigen::VectorXd xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            Eigen::MatrixXd hp = eval_jet(*e, xp, none, 2).hess;
            Eigen::MatrixXd hm = eval_jet(*e, xm, none, 2).hess;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    double fd = (hp(a, b) - hm(a, b)) / (2.0 * h);
                    CHECK(std::abs(j.third_at(i, a, b) - fd) <=
                          1e-5 * std::max(1.0, std::abs(fd)));
                }
        }
    }
}

TEST_CASE("jet symmetry invariants") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> pt(-1.0, 1.0);
    ParamMap none;
    for (int trial = 0; trial < 30; ++trial) {
        ExprPtr e = random_expr(rng, 4);
        Eigen::VectorXd x(3);
        for (int i = 0; i < 3; ++i) x[i] = pt(rng);
        Jet3 j = eval_jet(*e, x, none);
        double scale = std::max(1.0, j.hess.norm());
        CHECK((j.hess - j.hess.transpose()).norm() <= 1e-14 * scale);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c) {
                    CHECK(j.third_at(a, b, c) == doctest::Approx(j.third_at(b, a, c)).epsilon(1e-12));
                    CHECK(j.third_at(a, b, c) == doctest::Approx(j.third_at(a, c, b)).epsilon(1e-12));
                }
    }
}

TEST_CASE("deterministic evaluation") {
    ControlAffineSystem sys = builtin_system("su2_left_invariant",
                                             {{"alpha", 1.0}, {"beta", 0.0}, {"gamma", 1.5}});
    Eigen::VectorXd q(3);
    q << 0.2, -0.3, 0.4;
    SystemJets a = eval_system_jets(sys, q, 2);
    SystemJets b = eval_system_jets(sys, q, 2);
    for (int i = 0; i <= sys.m(); ++i) {
        CHECK((a.f[i] - b.f[i]).norm() == 0.0);
        CHECK((a.df[i] - b.df[i]).norm() == 0.0);
    }
}
