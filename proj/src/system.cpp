#include "saa/system.hpp"

#include <algorithm>

namespace saa {

ControlAffineSystem::ControlAffineSystem(int n, int m, std::vector<std::vector<ExprPtr>> fields,
                                         ParamMap params)
    : n_(n), m_(m), fields_(std::move(fields)), params_(std::move(params)) {
    if (n_ < 2) throw ConfigError("state dimension must satisfy n >= 2");
    if (m_ < 1) throw ConfigError("control dimension must satisfy m >= 1");
    if (static_cast<int>(fields_.size()) != m_ + 1)
        throw ConfigError("expected " + std::to_string(m_ + 1) + " fields, got " +
                          std::to_string(fields_.size()));
    for (const auto& field : fields_) {
        if (static_cast<int>(field.size()) != n_)
            throw ConfigError("each field needs " + std::to_string(n_) + " components");
        for (const auto& comp : field) {
            if (!comp) throw ConfigError("null field component");
            if (max_var_index(*comp) > n_)
                throw ConfigError("component '" + to_string(*comp) + "' references x" +
                                  std::to_string(max_var_index(*comp)) + " but n = " +
                                  std::to_string(n_));
            std::vector<std::string> names;
            collect_params(*comp, names);
            for (const auto& nm : names)
                if (!params_.count(nm)) throw ConfigError("unbound parameter '" + nm + "'");
        }
    }
}

Eigen::VectorXd ControlAffineSystem::field_value(int i, const Eigen::VectorXd& q) const {
    Eigen::VectorXd v(n_);
    for (int k = 0; k < n_; ++k) v[k] = eval_jet(*fields_[i][k], q, params_, 0).value;
    return v;
}

Eigen::MatrixXd ControlAffineSystem::field_jacobian(int i, const Eigen::VectorXd& q) const {
    Eigen::MatrixXd J(n_, n_);
    for (int k = 0; k < n_; ++k) J.row(k) = eval_jet(*fields_[i][k], q, params_, 1).grad;
    return J;
}

SystemJets eval_system_jets(const ControlAffineSystem& sys, const Eigen::VectorXd& q, int order) {
    const int n = sys.n(), m = sys.m();
    SystemJets out;
    out.order = order;
    out.f.resize(m + 1);
    if (order >= 1) out.df.resize(m + 1);
    if (order >= 2) out.d2.resize(m + 1);
    for (int i = 0; i <= m; ++i) {
        out.f[i].resize(n);
        if (order >= 1) out.df[i].resize(n, n);
        if (order >= 2) out.d2[i].assign(n, Eigen::MatrixXd(n, n));
        for (int k = 0; k < n; ++k) {
            Jet3 j = eval_jet(*sys.fields()[i][k], q, sys.params(), order);
            out.f[i][k] = j.value;
            if (order >= 1) out.df[i].row(k) = j.grad;
            if (order >= 2) out.d2[i][k] = j.hess;
        }
    }
    return out;
}

namespace {

std::vector<ExprPtr> parse_components(std::initializer_list<const char*> comps) {
    std::vector<ExprPtr> out;
    for (const char* s : comps) out.push_back(parse_field_expr(s));
    return out;
}

void require_params(const ParamMap& params) {
    for (const char* nm : {"alpha", "beta", "gamma"})
        if (!params.count(nm)) throw ConfigError(std::string("preset needs parameter '") + nm + "'");
}

}  // namespace

ControlAffineSystem builtin_system(const std::string& name, const ParamMap& params) {
    require_params(params);
    if (name == "heisenberg_drift") {
        // X = dx - (y/2)dz, Y = dy + (x/2)dz, Z = dz; f0 = aX + bY + cZ.
        return ControlAffineSystem(
            3, 2,
            {parse_components({"alpha", "beta", "gamma + (beta*x - alpha*y)/2"}),
             parse_components({"1", "0", "-y/2"}),
             parse_components({"0", "1", "x/2"})},
            params);
    }
    if (name == "martinet_drift") {
        return ControlAffineSystem(3, 2,
                                   {parse_components({"alpha", "beta", "gamma"}),
                                    parse_components({"1", "0", "0"}),
                                    parse_components({"0", "1", "x^2/2"})},
                                   params);
    }
    if (name == "su2_left_invariant") {
        // Left-invariant frame of SU(2) in exponential coordinates of the
        // second kind, product order g = e^{x1 A} e^{x2 C} e^{x3 B}. Middle
        // generator C keeps |x2| < pi/2 along the singular extremals with
        // beta = 0 (sin x2 = sin(kt) * kappa / sqrt(alpha^2 + kappa^2)).
        // Lifted Hamiltonians obey {h_A,h_B}=h_C, {h_B,h_C}=h_A, {h_C,h_A}=h_B.
        const char* A1 = "cos(x3)/cos(x2)";
        const char* A2 = "-sin(x3)";
        const char* A3 = "sin(x2)*cos(x3)/cos(x2)";
        const char* C1 = "sin(x3)/cos(x2)";
        const char* C2 = "cos(x3)";
        const char* C3 = "sin(x2)*sin(x3)/cos(x2)";
        auto lin = [&](const char* a, const char* c, const char* b_is_one) {
            std::string s = std::string("alpha*(") + a + ") + gamma*(" + c + ")";
            if (b_is_one) s += std::string(" + beta*(") + b_is_one + ")";
            return s;
        };
        std::vector<ExprPtr> f0 = {parse_field_expr(lin(A1, C1, nullptr)),
                                   parse_field_expr(lin(A2, C2, nullptr)),
                                   parse_field_expr(lin(A3, C3, "1"))};
        return ControlAffineSystem(3, 2,
                                   {std::move(f0),
                                    parse_components({A1, A2, A3}),
                                    parse_components({"0", "0", "1"})},
                                   params);
    }
    throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace saa
