#include "saa/expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace saa {

ExprPtr Expr::constant(double v) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Const;
    e->value = v;
    return e;
}

ExprPtr Expr::variable(int index1) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Var;
    e->var = index1;
    return e;
}

ExprPtr Expr::parameter(std::string name) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Param;
    e->name = std::move(name);
    return e;
}

ExprPtr Expr::unary(Kind k, ExprPtr child) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->a = std::move(child);
    return e;
}

ExprPtr Expr::binary(Kind k, ExprPtr lhs, ExprPtr rhs) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->a = std::move(lhs);
    e->b = std::move(rhs);
    return e;
}

ExprPtr Expr::pow(ExprPtr base, int exponent) {
    auto e = std::make_shared<Expr>();
    e->kind = Kind::Pow;
    e->a = std::move(base);
    e->exponent = exponent;
    return e;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

class Parser {
public:
    explicit Parser(const std::string& src) : src_(src) {}

    ExprPtr parse() {
        skip_ws();
        ExprPtr e = expr();
        skip_ws();
        if (pos_ < src_.size()) fail("trailing input");
        return e;
    }

private:
    const std::string& src_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

    char peek() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }

    char advance() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
    }

    bool accept(char c) {
        skip_ws();
        if (peek() == c) {
            advance();
            return true;
        }
        return false;
    }

    void expect(char c, const char* what) {
        if (!accept(c)) fail(std::string("expected ") + what);
    }

    ExprPtr expr() {
        skip_ws();
        bool lead_neg = false;
        if (peek() == '-') {
            advance();
            lead_neg = true;
        } else if (peek() == '+') {
            advance();
        }
        ExprPtr e = term();
        if (lead_neg) e = Expr::unary(Expr::Kind::Neg, e);
        for (;;) {
            if (accept('+')) {
                e = Expr::binary(Expr::Kind::Add, e, term());
            } else if (accept('-')) {
                e = Expr::binary(Expr::Kind::Sub, e, term());
            } else {
                return e;
            }
        }
    }

    ExprPtr term() {
        ExprPtr e = factor();
        for (;;) {
            if (accept('*')) {
                e = Expr::binary(Expr::Kind::Mul, e, factor());
            } else if (accept('/')) {
                e = Expr::binary(Expr::Kind::Div, e, factor());
            } else {
                return e;
            }
        }
    }

    ExprPtr factor() {
        ExprPtr e = base();
        if (accept('^')) {
            skip_ws();
            bool neg = false;
            if (peek() == '-') {
                advance();
                neg = true;
            }
            if (!std::isdigit(static_cast<unsigned char>(peek())))
                fail("pow exponent must be a constant integer");
            long v = 0;
            while (std::isdigit(static_cast<unsigned char>(peek()))) v = v * 10 + (advance() - '0');
            e = Expr::pow(e, static_cast<int>(neg ? -v : v));
        }
        return e;
    }

    ExprPtr base() {
        skip_ws();
        char c = peek();
        if (c == '\0') fail("unexpected end of input");
        if (c == '(') {
            advance();
            ExprPtr e = expr();
            expect(')', "')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
        fail(std::string("unexpected character '") + c + "'");
    }

    ExprPtr number() {
        size_t start = pos_;
        bool digits = false;
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance(), digits = true;
        if (peek() == '.') {
            advance();
            while (std::isdigit(static_cast<unsigned char>(peek()))) advance(), digits = true;
        }
        if (!digits) fail("malformed number");
        if (peek() == 'e' || peek() == 'E') {
            advance();
            if (peek() == '+' || peek() == '-') advance();
            if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("malformed exponent");
            while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
        }
        return Expr::constant(std::stod(src_.substr(start, pos_ - start)));
    }

    ExprPtr ident() {
        size_t start = pos_;
        while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') advance();
        std::string name = src_.substr(start, pos_ - start);

        skip_ws();
        if (peek() == '(') {
            Expr::Kind k;
            if (name == "sin") k = Expr::Kind::Sin;
            else if (name == "cos") k = Expr::Kind::Cos;
            else if (name == "exp") k = Expr::Kind::Exp;
            else if (name == "sqrt") k = Expr::Kind::Sqrt;
            else if (name == "neg") k = Expr::Kind::Neg;
            else fail("unknown function '" + name + "'");
            advance();
            ExprPtr arg = expr();
            expect(')', "')'");
            return Expr::unary(k, arg);
        }

        if (name == "x") return Expr::variable(1);
        if (name == "y") return Expr::variable(2);
        if (name == "z") return Expr::variable(3);
        if (name.size() > 1 && name[0] == 'x') {
            bool digits = true;
            for (size_t i = 1; i < name.size(); ++i)
                if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
            if (digits) {
                int idx = std::stoi(name.substr(1));
                if (idx < 1) fail("coordinate index must be >= 1");
                return Expr::variable(idx);
            }
        }
        return Expr::parameter(name);
    }
};

int precedence(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Add:
        case Expr::Kind::Sub: return 1;
        case Expr::Kind::Mul:
        case Expr::Kind::Div: return 2;
        case Expr::Kind::Neg: return 1;  // prints as leading '-term'
        case Expr::Kind::Pow: return 3;
        case Expr::Kind::Const: return e.value < 0.0 ? 1 : 4;  // "-1.5" needs parens mid-term
        default: return 4;
    }
}

void print(const Expr& e, std::ostream& os, int parent_prec) {
    int prec = precedence(e);
    bool paren = prec < parent_prec;
    if (paren) os << '(';
    switch (e.kind) {
        case Expr::Kind::Const: {
            std::ostringstream tmp;
            tmp.precision(17);
            tmp << e.value;
            os << tmp.str();
            break;
        }
        case Expr::Kind::Var: os << 'x' << e.var; break;
        case Expr::Kind::Param: os << e.name; break;
        case Expr::Kind::Neg:
            os << '-';
            print(*e.a, os, 2);  // bind tighter than +/- so -a/b stays Neg(Div(a,b))
            break;
        case Expr::Kind::Sin:
        case Expr::Kind::Cos:
        case Expr::Kind::Exp:
        case Expr::Kind::Sqrt: {
            const char* f = e.kind == Expr::Kind::Sin   ? "sin"
                            : e.kind == Expr::Kind::Cos ? "cos"
                            : e.kind == Expr::Kind::Exp ? "exp"
                                                        : "sqrt";
            os << f << '(';
            print(*e.a, os, 0);
            os << ')';
            break;
        }
        case Expr::Kind::Add:
        case Expr::Kind::Sub:
            print(*e.a, os, prec);
            os << (e.kind == Expr::Kind::Add ? '+' : '-');
            print(*e.b, os, prec + 1);
            break;
        case Expr::Kind::Mul:
        case Expr::Kind::Div:
            print(*e.a, os, prec);
            os << (e.kind == Expr::Kind::Mul ? '*' : '/');
            print(*e.b, os, prec + 1);
            break;
        case Expr::Kind::Pow:
            print(*e.a, os, prec + 1);
            os << '^' << e.exponent;
            break;
    }
    if (paren) os << ')';
}

}  // namespace

ExprPtr parse_field_expr(const std::string& source) { return Parser(source).parse(); }

std::string to_string(const Expr& e) {
    std::ostringstream os;
    print(e, os, 0);
    return os.str();
}

bool expr_equal(const Expr& lhs, const Expr& rhs) {
    if (lhs.kind != rhs.kind) return false;
    switch (lhs.kind) {
        case Expr::Kind::Const: return lhs.value == rhs.value;
        case Expr::Kind::Var: return lhs.var == rhs.var;
        case Expr::Kind::Param: return lhs.name == rhs.name;
        case Expr::Kind::Pow: return lhs.exponent == rhs.exponent && expr_equal(*lhs.a, *rhs.a);
        case Expr::Kind::Neg:
        case Expr::Kind::Sin:
        case Expr::Kind::Cos:
        case Expr::Kind::Exp:
        case Expr::Kind::Sqrt: return expr_equal(*lhs.a, *rhs.a);
        default: return expr_equal(*lhs.a, *rhs.a) && expr_equal(*lhs.b, *rhs.b);
    }
}

int max_var_index(const Expr& e) {
    int m = e.kind == Expr::Kind::Var ? e.var : 0;
    if (e.a) m = std::max(m, max_var_index(*e.a));
    if (e.b) m = std::max(m, max_var_index(*e.b));
    return m;
}

void collect_params(const Expr& e, std::vector<std::string>& out) {
    if (e.kind == Expr::Kind::Param) out.push_back(e.name);
    if (e.a) collect_params(*e.a, out);
    if (e.b) collect_params(*e.b, out);
}

// ---------------------------------------------------------------------------
// Jet evaluation
// ---------------------------------------------------------------------------

namespace {

struct JetCtx {
    const Eigen::VectorXd& x;
    const ParamMap& params;
    int order;
    int n;
};

Jet3 jet_scalar(const JetCtx& c, double v) {
    Jet3 j;
    j.n = c.n;
    j.order = c.order;
    j.value = v;
    if (c.order >= 1) j.grad = Eigen::VectorXd::Zero(c.n);
    if (c.order >= 2) j.hess = Eigen::MatrixXd::Zero(c.n, c.n);
    if (c.order >= 3) j.third.assign(static_cast<size_t>(c.n) * c.n * c.n, 0.0);
    return j;
}

Jet3 jet_add(const Jet3& a, const Jet3& b, double sb) {
    Jet3 j = a;
    j.value += sb * b.value;
    if (j.order >= 1) j.grad += sb * b.grad;
    if (j.order >= 2) j.hess += sb * b.hess;
    if (j.order >= 3)
        for (size_t i = 0; i < j.third.size(); ++i) j.third[i] += sb * b.third[i];
    return j;
}

Jet3 jet_mul(const Jet3& a, const Jet3& b) {
    const int n = a.n;
    Jet3 j;
    j.n = n;
    j.order = a.order;
    j.value = a.value * b.value;
    if (j.order >= 1) j.grad = a.value * b.grad + b.value * a.grad;
    if (j.order >= 2)
        j.hess = a.value * b.hess + b.value * a.hess + a.grad * b.grad.transpose() +
                 b.grad * a.grad.transpose();
    if (j.order >= 3) {
        j.third.assign(static_cast<size_t>(n) * n * n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int jj = 0; jj < n; ++jj)
                for (int k = 0; k < n; ++k) {
                    size_t idx = (static_cast<size_t>(i) * n + jj) * n + k;
                    j.third[idx] = a.value * b.third[idx] + b.value * a.third[idx] +
                                   a.grad[i] * b.hess(jj, k) + a.grad[jj] * b.hess(i, k) +
                                   a.grad[k] * b.hess(i, jj) + b.grad[i] * a.hess(jj, k) +
                                   b.grad[jj] * a.hess(i, k) + b.grad[k] * a.hess(i, jj);
                }
    }
    return j;
}

// Composition with a scalar function given derivatives c1..c3 at u.value.
Jet3 jet_compose(const Jet3& u, double c0, double c1, double c2, double c3) {
    const int n = u.n;
    Jet3 j;
    j.n = n;
    j.order = u.order;
    j.value = c0;
    if (j.order >= 1) j.grad = c1 * u.grad;
    if (j.order >= 2) j.hess = c2 * (u.grad * u.grad.transpose()).eval() + c1 * u.hess;
    if (j.order >= 3) {
        j.third.assign(static_cast<size_t>(n) * n * n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int jj = 0; jj < n; ++jj)
                for (int k = 0; k < n; ++k) {
                    size_t idx = (static_cast<size_t>(i) * n + jj) * n + k;
                    j.third[idx] = c3 * u.grad[i] * u.grad[jj] * u.grad[k] +
                                   c2 * (u.hess(i, jj) * u.grad[k] + u.hess(i, k) * u.grad[jj] +
                                         u.hess(jj, k) * u.grad[i]) +
                                   c1 * u.third[idx];
                }
    }
    return j;
}

Jet3 jet_eval(const JetCtx& c, const Expr& e);

Jet3 jet_recip(const JetCtx& c, const Jet3& u, const Expr& node) {
    if (u.value == 0.0) {
        std::ostringstream pt;
        pt << "(" << c.x.transpose() << ")";
        throw DomainError("division by zero", to_string(node), pt.str());
    }
    double iv = 1.0 / u.value;
    return jet_compose(u, iv, -iv * iv, 2.0 * iv * iv * iv, -6.0 * iv * iv * iv * iv);
}

Jet3 jet_eval(const JetCtx& c, const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Const: return jet_scalar(c, e.value);
        case Expr::Kind::Param: {
            auto it = c.params.find(e.name);
            if (it == c.params.end()) throw ConfigError("unbound parameter '" + e.name + "'");
            return jet_scalar(c, it->second);
        }
        case Expr::Kind::Var: {
            if (e.var > c.n)
                throw ConfigError("coordinate x" + std::to_string(e.var) + " exceeds dimension " +
                                  std::to_string(c.n));
            Jet3 j = jet_scalar(c, c.x[e.var - 1]);
            if (c.order >= 1) j.grad[e.var - 1] = 1.0;
            return j;
        }
        case Expr::Kind::Neg: {
            Jet3 j = jet_eval(c, *e.a);
            j.value = -j.value;
            if (j.order >= 1) j.grad = -j.grad;
            if (j.order >= 2) j.hess = -j.hess;
            if (j.order >= 3)
                for (auto& t : j.third) t = -t;
            return j;
        }
        case Expr::Kind::Sin: {
            Jet3 u = jet_eval(c, *e.a);
            double s = std::sin(u.value), co = std::cos(u.value);
            return jet_compose(u, s, co, -s, -co);
        }
        case Expr::Kind::Cos: {
            Jet3 u = jet_eval(c, *e.a);
            double s = std::sin(u.value), co = std::cos(u.value);
            return jet_compose(u, co, -s, -co, s);
        }
        case Expr::Kind::Exp: {
            Jet3 u = jet_eval(c, *e.a);
            double ex = std::exp(u.value);
            return jet_compose(u, ex, ex, ex, ex);
        }
        case Expr::Kind::Sqrt: {
            Jet3 u = jet_eval(c, *e.a);
            if (u.value <= 0.0) {
                std::ostringstream pt;
                pt << "(" << c.x.transpose() << ")";
                throw DomainError("sqrt of non-positive argument", to_string(e), pt.str());
            }
            double rv = std::sqrt(u.value);
            return jet_compose(u, rv, 0.5 / rv, -0.25 / (rv * u.value),
                               0.375 / (rv * u.value * u.value));
        }
        case Expr::Kind::Add: return jet_add(jet_eval(c, *e.a), jet_eval(c, *e.b), 1.0);
        case Expr::Kind::Sub: return jet_add(jet_eval(c, *e.a), jet_eval(c, *e.b), -1.0);
        case Expr::Kind::Mul: return jet_mul(jet_eval(c, *e.a), jet_eval(c, *e.b));
        case Expr::Kind::Div: {
            Jet3 a = jet_eval(c, *e.a);
            Jet3 b = jet_eval(c, *e.b);
            return jet_mul(a, jet_recip(c, b, e));
        }
        case Expr::Kind::Pow: {
            Jet3 u = jet_eval(c, *e.a);
            int k = e.exponent;
            if (k == 0) return jet_scalar(c, 1.0);
            bool inv = k < 0;
            if (inv) k = -k;
            Jet3 acc = u;
            for (int i = 1; i < k; ++i) acc = jet_mul(acc, u);
            return inv ? jet_recip(c, acc, e) : acc;
        }
    }
    throw Error("unreachable expression kind");
}

}  // namespace

Jet3 eval_jet(const Expr& e, const Eigen::VectorXd& point, const ParamMap& params, int order) {
    JetCtx c{point, params, order, static_cast<int>(point.size())};
    return jet_eval(c, e);
}

}  // namespace saa
