// Command-line front end: classify a seed, run the conjugate-point pipeline,
// or cross-check the verdict against the discretized second variation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "saa/config.hpp"

namespace fs = std::filesystem;

namespace {

int log_level() {
    const char* env = std::getenv("SAA_LOG");
    if (!env) return 1;
    std::string v = env;
    if (v == "error") return 0;
    if (v == "debug") return 2;
    return 1;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[saa] " << msg << "\n";
}
void debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "[saa:debug] " << msg << "\n";
}

struct CliOverrides {
    std::string config_path;
    std::string out_dir;
    int steps = -1;
    int grid = -1;
    std::string convention;
    bool project = false;
    bool morse_check = false;
    bool dump_jacobian = false;
    bool no_timestamp = false;
};

saa::RunConfig load(const CliOverrides& ov) {
    saa::RunConfig cfg = saa::load_run_config(ov.config_path);
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (ov.steps > 0) cfg.n_steps = ov.steps;
    if (ov.grid > 0) cfg.morse_grid = ov.grid;
    if (!ov.convention.empty()) {
        if (ov.convention == "rev") cfg.convention = saa::BoundaryConvention::Rev;
        else if (ov.convention == "fwd") cfg.convention = saa::BoundaryConvention::Fwd;
        else throw saa::ConfigError("--convention must be rev or fwd");
    }
    if (ov.project) cfg.project = true;
    if (ov.morse_check) cfg.morse_check = true;
    if (ov.dump_jacobian) cfg.dump_jacobian = true;
    if (ov.no_timestamp) cfg.no_timestamp = true;
    if (cfg.n_steps < 10) throw saa::ConfigError("n_steps must be at least 10");
    return cfg;
}

struct PipelineResult {
    saa::SingularExtremal ext;
    double glc_min = 0.0;
    bool sglc = false;
    saa::ConjugateScan scan;
    int corank = 1;
    saa::ConjugateReport report;
};

PipelineResult run_pipeline(const saa::ControlAffineSystem& sys, const saa::RunConfig& cfg) {
    PipelineResult res;
    saa::CotangentPoint lam0 = saa::seed_on_locus(sys, cfg.q0, cfg.p_guess, flow_options(cfg));
    debug("seed converged");
    res.ext = saa::integrate(sys, lam0, cfg.T, cfg.n_steps, flow_options(cfg));
    std::tie(res.glc_min, res.sglc) = saa::check_glc(res.ext, sys, cfg.tol.tol_sglc);
    info("glc_min = " + std::to_string(res.glc_min));
    if (res.sglc) {
        res.scan = saa::find_conjugate_times(res.ext, sys, cfg.convention, scan_options(cfg));
        info(std::to_string(res.scan.times.size()) + " conjugate time(s) detected");
    }
    res.corank = saa::estimate_corank(res.ext, sys);
    res.report = saa::optimality_verdict(res.glc_min, res.sglc, res.scan, res.corank, cfg.T,
                                         cfg.tol.tol_sglc);
    return res;
}

void write_text(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw saa::Error("cannot write " + p.string());
    out << content;
}

int cmd_classify(const CliOverrides& ov) {
    saa::RunConfig cfg = load(ov);
    saa::ControlAffineSystem sys = saa::make_system(cfg);
    saa::CotangentPoint lam{cfg.q0, cfg.p_guess};
    saa::BracketBundle b = saa::bracket_bundle(sys, lam);
    saa::Classification cls = saa::classify_point(b, cfg.tol.eps_cls);

    std::cout.precision(12);
    std::cout << "|h_I|  = " << b.hI.norm() << "\n"
              << "h_0c   = " << b.h0c << "\n"
              << "h_c0c  = " << b.hc0c << "\n";
    if (std::abs(b.hc0c) > cfg.tol.eps_sing) {
        double r = saa::singular_feedback(b, cfg.tol.eps_sing);
        std::cout << "r      = " << r << "\n"
                  << "u      = [" << (r * b.hI).transpose() << "]\n";
    } else {
        std::cout << "r      = n/a (h_c0c below eps_sing)\n";
    }
    switch (cls.cls) {
        case saa::PointClass::Boundary: std::cout << "class  = Boundary\n"; break;
        case saa::PointClass::Inactive: std::cout << "class  = Inactive\n"; break;
        case saa::PointClass::SingularCandidate:
            std::cout << "class  = SingularCandidate (gap = " << cls.gap << ")\n";
            break;
    }
    return 0;
}

// Morse cross-check on its own grid: the collocation needs the extremal
// steps to be an even multiple of N, so the extremal is re-integrated.
nlohmann::json morse_section(const saa::ControlAffineSystem& sys, saa::RunConfig cfg,
                             Eigen::VectorXd* spectrum_out) {
    int N = cfg.morse_grid;
    int mult = std::max(2, (cfg.n_steps + 2 * N - 1) / (2 * N) * 2);
    cfg.n_steps = N * mult;
    PipelineResult res = run_pipeline(sys, cfg);
    saa::VariationGrid grid{N};
    saa::QTMatrix qt = saa::assemble_qt(res.ext, sys, grid, frame_options(cfg));
    int index = saa::morse_index(qt, cfg.tol.tol_eig);
    if (spectrum_out) *spectrum_out = saa::projected_spectrum(qt);
    int conj_count = 0;
    for (const auto& ct : res.scan.times)
        if (!ct.at_endpoint) conj_count += ct.multiplicity;
    nlohmann::json j;
    j["index"] = index;
    j["grid_N"] = N;
    if (res.sglc) {
        j["conjugate_count"] = conj_count;
        j["agreement"] = (index == conj_count);
    }
    return j;
}

int cmd_analyze(const CliOverrides& ov) {
    saa::RunConfig cfg = load(ov);
    saa::ControlAffineSystem sys = saa::make_system(cfg);
    PipelineResult res = run_pipeline(sys, cfg);

    fs::create_directories(cfg.out_dir);
    {
        std::ofstream out(fs::path(cfg.out_dir) / "extremal.csv", std::ios::binary);
        saa::write_extremal_csv(res.ext, out);
    }
    {
        std::ofstream out(fs::path(cfg.out_dir) / "detscan.csv", std::ios::binary);
        out << "t,det,smin\n";
        char buf[96];
        for (const auto& row : res.scan.detscan) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", row.t, row.det, row.smin);
            out << buf;
        }
    }
    if (cfg.dump_jacobian) {
        std::ofstream out(fs::path(cfg.out_dir) / "jacobians.csv", std::ios::binary);
        saa::write_jacobians_csv(res.ext, out);
    }
    nlohmann::json rep = saa::report_to_json(res.report, cfg);
    if (cfg.morse_check) rep["morse"] = morse_section(sys, cfg, nullptr);
    write_text(fs::path(cfg.out_dir) / "report.json", rep.dump(2) + "\n");

    std::cout << rep.dump(2) << "\n";
    return res.report.verdict == saa::Verdict::Inconclusive ? 2 : 0;
}

int cmd_morse(const CliOverrides& ov) {
    saa::RunConfig cfg = load(ov);
    saa::ControlAffineSystem sys = saa::make_system(cfg);

    Eigen::VectorXd spectrum;
    nlohmann::json j = morse_section(sys, cfg, &spectrum);

    fs::create_directories(cfg.out_dir);
    {
        std::ofstream out(fs::path(cfg.out_dir) / "spectrum.csv", std::ios::binary);
        out << "index,eigenvalue\n";
        char buf[64];
        for (int i = 0; i < spectrum.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%d,%.17g\n", i, spectrum[i]);
            out << buf;
        }
    }

    std::cout << "morse_index = " << j["index"].get<int>() << "\n";
    if (j.contains("agreement")) {
        std::cout << "conjugate_count = " << j["conjugate_count"].get<int>() << "\n"
                  << "agreement = " << (j["agreement"].get<bool>() ? "true" : "false") << "\n";
    } else {
        std::cout << "conjugate_count = n/a (SGLC fails; scan skipped)\n";
    }
    return 0;
}

int cmd_dump_frames(const CliOverrides& ov) {
    saa::RunConfig cfg = load(ov);
    saa::ControlAffineSystem sys = saa::make_system(cfg);
    PipelineResult res = run_pipeline(sys, cfg);
    saa::FrameSet fs_data = saa::build_frames(res.ext, sys, frame_options(cfg));

    fs::create_directories(cfg.out_dir);
    std::ofstream out(fs::path(cfg.out_dir) / "frames.csv", std::ios::binary);
    const int dim = 2 * res.ext.n;
    out << "t";
    for (int i = 0; i < dim; ++i) out << ",ZI" << i + 1;
    for (int i = 0; i < dim; ++i) out << ",ZIdot" << i + 1;
    out << ",schur,hc0c\n";
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (size_t k = 0; k < fs_data.frames.size(); ++k) {
        put(fs_data.frames[k].t);
        for (int i = 0; i < dim; ++i) {
            out << ',';
            put(fs_data.frames[k].ZI[i]);
        }
        for (int i = 0; i < dim; ++i) {
            out << ',';
            put(fs_data.frames[k].ZIdot[i]);
        }
        out << ',';
        put(fs_data.legendre[k].schur);
        out << ',';
        put(fs_data.legendre[k].hc0c);
        out << '\n';
    }
    if (cfg.dump_jacobian) {
        std::ofstream jout(fs::path(cfg.out_dir) / "jacobians.csv", std::ios::binary);
        saa::write_jacobians_csv(res.ext, jout);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"singular-arc analyzer: GLC, Jacobi conjugate points and Morse index "
                 "for L1-minimal control-affine problems"};
    app.require_subcommand(1);

    CliOverrides ov;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", ov.config_path, "run configuration (JSON)")->required();
        sub->add_option("--out", ov.out_dir, "output directory");
        sub->add_option("--steps", ov.steps, "override n_steps");
        sub->add_option("--grid", ov.grid, "override the Morse variation grid N");
        sub->add_option("--convention", ov.convention, "Jacobi boundary convention (rev|fwd)");
        sub->add_flag("--project", ov.project, "re-project onto the locus each step");
        sub->add_flag("--morse-check", ov.morse_check, "also run the Morse cross-check");
        sub->add_flag("--dump-jacobian", ov.dump_jacobian, "dump variational-flow matrices");
        sub->add_flag("--no-timestamp", ov.no_timestamp, "omit the timestamp from report.json");
    };

    CLI::App* classify = app.add_subcommand("classify", "classify the seed covector");
    CLI::App* analyze = app.add_subcommand("analyze", "run the full conjugate-point pipeline");
    CLI::App* morse = app.add_subcommand("morse", "Morse-index cross-check of the pipeline");
    CLI::App* dumpf = app.add_subcommand("dump-frames", "dump pulled-back frames as CSV");
    for (CLI::App* sub : {classify, analyze, morse, dumpf}) add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        if (classify->parsed()) return cmd_classify(ov);
        if (analyze->parsed()) return cmd_analyze(ov);
        if (morse->parsed()) return cmd_morse(ov);
        if (dumpf->parsed()) return cmd_dump_frames(ov);
    } catch (const saa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
