#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "saa/jacobi.hpp"
#include "saa/second_variation.hpp"

namespace saa {

/// Tolerances surfaced in the run configuration. Defaults match the library
/// defaults.
struct Tolerances {
    double eps_sing = 1e-9;
    double eps_cls = 1e-9;
    double tol_inv = 1e-6;
    double tol_sglc = 1e-8;
    double tol_t = 1e-8;   // relative to T
    double tol_eig = 1e-8;
};

struct RunConfig {
    std::optional<std::string> preset;
    int n = 0;
    int m = 0;
    std::vector<std::vector<std::string>> field_exprs;  // used when preset is absent
    ParamMap params;

    Eigen::VectorXd q0;
    Eigen::VectorXd p_guess;

    double T = 1.0;
    int n_steps = 1000;
    int morse_grid = 400;

    Tolerances tol;
    bool project = false;
    BoundaryConvention convention = BoundaryConvention::Rev;
    bool morse_check = false;
    bool dump_jacobian = false;
    bool no_timestamp = false;
    std::string out_dir = ".";
};

/// Parse and validate a run configuration document. Throws ConfigError on
/// schema violations (T <= 0, n_steps < 10, non-positive tolerances, ...).
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

ControlAffineSystem make_system(const RunConfig& cfg);

FlowOptions flow_options(const RunConfig& cfg);
FrameOptions frame_options(const RunConfig& cfg);
ScanOptions scan_options(const RunConfig& cfg);

nlohmann::json report_to_json(const ConjugateReport& rep, const RunConfig& cfg);

}  // namespace saa
