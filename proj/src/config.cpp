#include "saa/config.hpp"

#include <chrono>
#include <fstream>

namespace saa {

namespace {

Eigen::VectorXd vec_from_json(const nlohmann::json& a, const char* what) {
    if (!a.is_array() || a.empty()) throw ConfigError(std::string(what) + " must be a non-empty array");
    Eigen::VectorXd v(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) throw ConfigError(std::string(what) + " entries must be numbers");
        v[i] = a[i].get<double>();
    }
    return v;
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be an object");
    RunConfig cfg;

    if (!doc.contains("system") || !doc["system"].is_object())
        throw ConfigError("config needs a 'system' object");
    const auto& sysj = doc["system"];
    if (sysj.contains("params"))
        for (auto it = sysj["params"].begin(); it != sysj["params"].end(); ++it)
            cfg.params[it.key()] = it.value().get<double>();
    if (sysj.contains("preset")) {
        cfg.preset = sysj["preset"].get<std::string>();
    } else {
        if (!sysj.contains("n") || !sysj.contains("m") || !sysj.contains("fields"))
            throw ConfigError("system needs either 'preset' or {n, m, fields}");
        cfg.n = sysj["n"].get<int>();
        cfg.m = sysj["m"].get<int>();
        for (const auto& row : sysj["fields"]) {
            std::vector<std::string> comps;
            for (const auto& c : row) comps.push_back(c.get<std::string>());
            cfg.field_exprs.push_back(std::move(comps));
        }
    }

    if (!doc.contains("seed") || !doc["seed"].is_object())
        throw ConfigError("config needs a 'seed' object with q0 and p_guess");
    cfg.q0 = vec_from_json(doc["seed"]["q0"], "seed.q0");
    cfg.p_guess = vec_from_json(doc["seed"]["p_guess"], "seed.p_guess");

    cfg.T = doc.value("T", 1.0);
    cfg.n_steps = doc.value("n_steps", 1000);
    cfg.morse_grid = doc.value("morse_grid", 400);
    if (cfg.T <= 0.0) throw ConfigError("T must be positive");
    if (cfg.n_steps < 10) throw ConfigError("n_steps must be at least 10");
    if (cfg.morse_grid < 2) throw ConfigError("morse_grid must be at least 2");

    if (doc.contains("tolerances")) {
        const auto& t = doc["tolerances"];
        cfg.tol.eps_sing = t.value("eps_sing", cfg.tol.eps_sing);
        cfg.tol.eps_cls = t.value("eps_cls", cfg.tol.eps_cls);
        cfg.tol.tol_inv = t.value("tol_inv", cfg.tol.tol_inv);
        cfg.tol.tol_sglc = t.value("tol_sglc", cfg.tol.tol_sglc);
        cfg.tol.tol_t = t.value("tol_t", cfg.tol.tol_t);
        cfg.tol.tol_eig = t.value("tol_eig", cfg.tol.tol_eig);
        for (double v : {cfg.tol.eps_sing, cfg.tol.eps_cls, cfg.tol.tol_inv, cfg.tol.tol_sglc,
                         cfg.tol.tol_t, cfg.tol.tol_eig})
            if (!(v > 0.0)) throw ConfigError("all tolerances must be positive");
    }

    if (doc.contains("flags")) {
        const auto& f = doc["flags"];
        cfg.project = f.value("project", false);
        cfg.morse_check = f.value("morse_check", false);
        cfg.dump_jacobian = f.value("dump_jacobian", false);
        cfg.no_timestamp = f.value("no_timestamp", false);
        std::string conv = f.value("convention", "rev");
        if (conv == "rev") cfg.convention = BoundaryConvention::Rev;
        else if (conv == "fwd") cfg.convention = BoundaryConvention::Fwd;
        else throw ConfigError("flags.convention must be 'rev' or 'fwd'");
    }
    cfg.out_dir = doc.value("out", std::string("."));
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_run_config(doc);
}

ControlAffineSystem make_system(const RunConfig& cfg) {
    if (cfg.preset) return builtin_system(*cfg.preset, cfg.params);
    std::vector<std::vector<ExprPtr>> fields;
    for (const auto& row : cfg.field_exprs) {
        std::vector<ExprPtr> comps;
        for (const auto& s : row) comps.push_back(parse_field_expr(s));
        fields.push_back(std::move(comps));
    }
    return ControlAffineSystem(cfg.n, cfg.m, std::move(fields), cfg.params);
}

FlowOptions flow_options(const RunConfig& cfg) {
    FlowOptions o;
    o.eps_sing = cfg.tol.eps_sing;
    o.tol_inv = cfg.tol.tol_inv;
    o.project = cfg.project;
    return o;
}

FrameOptions frame_options(const RunConfig& cfg) {
    FrameOptions o;
    o.eps_sing = cfg.tol.eps_sing;
    return o;
}

ScanOptions scan_options(const RunConfig& cfg) {
    ScanOptions o;
    o.frames = frame_options(cfg);
    o.tol_t_rel = cfg.tol.tol_t;
    return o;
}

nlohmann::json report_to_json(const ConjugateReport& rep, const RunConfig& cfg) {
    nlohmann::json j;
    j["glc_min"] = rep.glc_min;
    j["sglc"] = rep.sglc_holds;
    nlohmann::json times = nlohmann::json::array();
    for (const auto& ct : rep.conjugate_times)
        times.push_back({{"t", ct.t},
                         {"multiplicity", ct.multiplicity},
                         {"at_endpoint", ct.at_endpoint}});
    j["conjugate_times"] = times;
    j["corank"] = rep.corank;
    j["verdict"] = to_string(rep.verdict);
    j["scan_inconclusive"] = rep.scan_inconclusive;
    j["tolerances"] = {{"eps_sing", cfg.tol.eps_sing},   {"eps_cls", cfg.tol.eps_cls},
                       {"tol_inv", cfg.tol.tol_inv},     {"tol_sglc", cfg.tol.tol_sglc},
                       {"tol_t", cfg.tol.tol_t},         {"tol_eig", cfg.tol.tol_eig}};
    j["grid"] = {{"T", cfg.T}, {"n_steps", cfg.n_steps}};
    if (!cfg.no_timestamp) {
        auto now = std::chrono::system_clock::now().time_since_epoch();
        j["timestamp"] = std::chrono::duration_cast<std::chrono::seconds>(now).count();
    }
    return j;
}

}  // namespace saa
