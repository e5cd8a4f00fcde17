#include "bgsep/commands.hpp"

#include "bgsep/config.hpp"
#include "bgsep/error.hpp"
#include "bgsep/pipeline.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace bgsep {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

class Manifest {
public:
    Manifest(std::string command, const ExperimentConfig& config)
        : start_(std::chrono::steady_clock::now()) {
        j_["tool"] = "bgsep";
        j_["version"] = tool_version;
        j_["command"] = std::move(command);
        j_["config"] = to_config_text(config);
        j_["seeds"] = {{"support", config.seeds.support},
                       {"coeff", config.seeds.coeff},
                       {"noise", config.seeds.noise}};
        j_["inputs"] = ordered_json::object();
        j_["outputs"] = ordered_json::array();
        j_["metrics"] = ordered_json::object();
    }

    void input(const std::string& key, const std::string& value) { j_["inputs"][key] = value; }
    void output(const fs::path& p) { j_["outputs"].push_back(p.string()); }
    ordered_json& metrics() { return j_["metrics"]; }

    void write(const fs::path& path, bool success, const std::string& error = {}) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        j_["timings"] = {{"wall_seconds", secs}};
        j_["success"] = success;
        if (!error.empty()) j_["error"] = error;
        std::ofstream out(path);
        if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
        out << j_.dump(2) << "\n";
    }

private:
    ordered_json j_;
    std::chrono::steady_clock::time_point start_;
};

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    out << std::setprecision(17);
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out = open_out(path);
    out << text;
}

void write_coefficients(const fs::path& path, const Eigen::VectorXd& c) {
    std::ofstream out = open_out(path);
    out << "i,c_i\n";
    for (Eigen::Index i = 0; i < c.size(); ++i) {
        out << i + 1 << "," << c[i] << "\n";
    }
}

void write_support(const fs::path& path, const SeparationState& state, double threshold) {
    std::ofstream out = open_out(path);
    out << "i,c_i\n";
    for (int i : state.support(threshold)) out << i + 1 << "," << state.c[i] << "\n";
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
}

std::string require_instance(const CommandOptions& opts) {
    if (!opts.instance_dir) throw Error(ErrorCode::invalid_argument, "--instance is required");
    if (!fs::is_directory(*opts.instance_dir)) {
        throw Error(ErrorCode::io, "instance directory not found: " + *opts.instance_dir);
    }
    return *opts.instance_dir;
}

ExperimentConfig command_config(const CommandOptions& opts) {
    ExperimentConfig config;
    if (opts.config_path) config = load_config(*opts.config_path);
    else if (opts.instance_dir) config = read_bundle_config(require_instance(opts));
    apply_overrides(config, opts);
    config.validate();
    return config;
}

SampledFunction on_grid(const SampledFunction& f, const GridPtr& grid, const std::string& what) {
    if (!(*f.grid() == *grid)) {
        throw Error(ErrorCode::grid_mismatch, what + ": grid does not match the config");
    }
    return SampledFunction(grid, f.values());
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return 1;
}

ordered_json separation_metrics(const NonlinearOutcome& nl) {
    return {{"rel_error", nl.rel_error},
            {"K_constraints", nl.state.constraint_count()},
            {"residual_sq", nl.state.residual_sq},
            {"delta", nl.problem.delta()},
            {"support_size", static_cast<int>(nl.state.support(nl.support_threshold).size())},
            {"success", nl.state.success}};
}

}  // namespace

void apply_overrides(ExperimentConfig& config, const CommandOptions& opts) {
    if (opts.q) config.q = *opts.q;
    if (opts.delta) config.delta = *opts.delta;
    if (opts.rank_tol) config.projector_rank_tol = *opts.rank_tol;
    if (opts.seed_support) config.seeds.support = *opts.seed_support;
    if (opts.seed_coeff) config.seeds.coeff = *opts.seed_coeff;
    if (opts.seed_noise) config.seeds.noise = *opts.seed_noise;
    if (opts.noise_mode) config.noise_mode = *opts.noise_mode;
}

std::string resolve_out_dir(const CommandOptions& opts, const std::string& fallback) {
    if (opts.out_dir) return *opts.out_dir;
    if (const char* env = std::getenv("BGSEP_OUT_DIR"); env && *env) return env;
    return fallback;
}

void write_bundle(const std::string& dir_name, const PlantedInstance& inst) {
    const fs::path dir(dir_name);
    ensure_dir(dir);
    write_text(dir / "config.ini", to_config_text(inst.config));
    write_csv((dir / "f_obs.csv").string(), inst.f_obs);
    write_csv((dir / "f_clean.csv").string(), inst.f_clean);
    write_csv((dir / "f_V.csv").string(), inst.f_v);
    write_csv((dir / "g.csv").string(), inst.g);
    write_csv((dir / "noise.csv").string(), SampledFunction(inst.f_obs.grid(), inst.noise));
    std::ofstream sup = open_out(dir / "support.csv");
    sup << "i,c_i\n";
    for (std::size_t k = 0; k < inst.true_support.size(); ++k) {
        sup << inst.true_support[k] + 1 << "," << inst.true_coeffs[static_cast<Eigen::Index>(k)] << "\n";
    }
}

ExperimentConfig read_bundle_config(const std::string& dir) {
    return load_config((fs::path(dir) / "config.ini").string());
}

PlantedInstance read_bundle(const std::string& dir_name, const ModelSpaces& spaces,
                            const ExperimentConfig& config) {
    const fs::path dir(dir_name);
    auto load = [&](const char* name) {
        return on_grid(read_csv((dir / name).string()), spaces.grid, name);
    };
    SampledFunction f_obs = load("f_obs.csv");
    SampledFunction f_clean = load("f_clean.csv");
    SampledFunction f_v = load("f_V.csv");
    SampledFunction g = load("g.csv");

    std::ifstream sup(dir / "support.csv");
    if (!sup) throw Error(ErrorCode::io, "cannot read " + (dir / "support.csv").string());
    std::string line;
    std::getline(sup, line);
    std::vector<int> support;
    std::vector<double> coeffs;
    int line_no = 1;
    while (std::getline(sup, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        int i = 0;
        char comma = 0;
        double c = 0.0;
        if (!(ls >> i >> comma >> c) || comma != ',' || i < 1 || i > spaces.basis.size()) {
            throw Error(ErrorCode::io, "support.csv:" + std::to_string(line_no) + ": malformed row");
        }
        support.push_back(i - 1);
        coeffs.push_back(c);
    }
    const SampledFunction& reference = config.noise_reference == NoiseReference::signal ? f_v : f_clean;
    Eigen::VectorXd sd = noise_std(reference, config.noise_percent, config.noise_mode);
    Eigen::VectorXd noise = f_obs.values() - f_clean.values();
    return PlantedInstance{config,
                           std::move(support),
                           Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size())),
                           std::move(f_v),
                           std::move(g),
                           std::move(f_clean),
                           std::move(f_obs),
                           std::move(noise),
                           std::move(sd)};
}

int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&]() {
        const ExperimentConfig config = command_config(opts);
        const fs::path dir = resolve_out_dir(opts, "instance");
        Manifest manifest("simulate", config);
        if (opts.config_path) manifest.input("config", *opts.config_path);

        const ModelSpaces spaces = make_model_spaces(config);
        const PlantedInstance inst = make_instance(config, spaces);
        write_bundle(dir.string(), inst);
        for (const char* name : {"config.ini", "f_obs.csv", "f_clean.csv", "f_V.csv", "g.csv", "noise.csv",
                                 "support.csv"}) {
            manifest.output(dir / name);
        }
        manifest.metrics() = {{"basis_size", spaces.basis.size()},
                              {"background_size", spaces.background.size()},
                              {"support_size", static_cast<int>(inst.true_support.size())},
                              {"f_V_norm", inst.f_v.norm()},
                              {"g_norm", inst.g.norm()},
                              {"noise_sq", inst.noise.squaredNorm()}};
        manifest.write(dir / "manifest.json", true);
        out << "instance written to " << dir.string() << " (M = " << spaces.basis.size()
            << ", K = " << inst.true_support.size() << ")\n";
        return 0;
    });
}

int cmd_svd_report(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&]() {
        const std::string instance = require_instance(opts);
        const ExperimentConfig config = command_config(opts);
        const fs::path dir = resolve_out_dir(opts, instance);
        ensure_dir(dir);
        Manifest manifest("svd-report", config);
        manifest.input("instance", instance);

        const ModelSetup setup = make_model_setup(config);
        const SingularSystem& sys = setup.projector.system;
        {
            std::ofstream csv = open_out(dir / "svd.csv");
            csv << "n,sigma_n,lambda_n\n";
            for (int n = 0; n < sys.rank(); ++n) {
                csv << n + 1 << "," << sys.sigmas[n] << "," << sys.sigmas[n] * sys.sigmas[n] << "\n";
            }
        }
        manifest.output(dir / "svd.csv");

        const int n = sys.rank();
        const int tail = std::min(5, n);
        ordered_json first = ordered_json::array();
        ordered_json last = ordered_json::array();
        for (int k = 0; k < tail; ++k) first.push_back(sys.sigmas[k]);
        for (int k = n - tail; k < n; ++k) last.push_back(sys.sigmas[k]);
        manifest.metrics() = {{"rank", n},
                              {"rank_tol", config.projector_rank_tol},
                              {"background_rank", setup.projector.w_perp.size()},
                              {"sigma_max", sys.sigmas[0]},
                              {"sigma_min", sys.sigmas[n - 1]},
                              {"largest_five", first},
                              {"smallest_five", last}};
        manifest.write(dir / "svd_report_manifest.json", true);

        out << std::setprecision(5);
        out << "rank " << n << " (background J' = " << setup.projector.w_perp.size() << ")\n";
        out << "sigma_1 = " << sys.sigmas[0] << "\n";
        out << "last five:";
        for (int k = n - tail; k < n; ++k) out << " " << sys.sigmas[k];
        out << "\n";
        return 0;
    });
}

int cmd_project(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&]() {
        const std::string instance = require_instance(opts);
        const ExperimentConfig config = command_config(opts);
        const fs::path dir = resolve_out_dir(opts, instance);
        ensure_dir(dir);
        Manifest manifest("project", config);
        manifest.input("instance", instance);

        const ModelSetup setup = make_model_setup(config);
        const PlantedInstance inst = read_bundle(instance, setup.spaces, config);
        const LinearOutcome lin = run_linear(setup, inst.f_obs, inst.f_v, config.truncations);

        write_csv((dir / "recovered_linear.csv").string(), lin.full.recovered);
        manifest.output(dir / "recovered_linear.csv");
        ordered_json truncated = ordered_json::array();
        out << std::setprecision(6) << "full rank r = " << lin.full.r << ": rel_error " << lin.full.rel_error
            << "\n";
        for (const LinearRecovery& t : lin.truncated) {
            const fs::path p = dir / ("recovered_linear_r" + std::to_string(t.r) + ".csv");
            write_csv(p.string(), t.recovered);
            manifest.output(p);
            truncated.push_back({{"r", t.r}, {"rel_error", t.rel_error}});
            out << "truncated r = " << t.r << ": rel_error " << t.rel_error << "\n";
        }
        manifest.metrics() = {{"rank", lin.full.r}, {"rel_error", lin.full.rel_error}, {"truncated", truncated}};
        manifest.write(dir / "project_manifest.json", true);
        return 0;
    });
}

int cmd_separate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    const fs::path* failure_path = nullptr;
    fs::path manifest_path;
    std::optional<Manifest> manifest;
    const int code = guarded(err, [&]() {
        const std::string instance = require_instance(opts);
        const ExperimentConfig config = command_config(opts);
        const fs::path dir = resolve_out_dir(opts, instance);
        ensure_dir(dir);
        manifest_path = dir / "separate_manifest.json";
        failure_path = &manifest_path;
        manifest.emplace("separate", config);
        manifest->input("instance", instance);

        const ModelSetup setup = make_model_setup(config);
        const PlantedInstance inst = read_bundle(instance, setup.spaces, config);
        const NonlinearOutcome nl = run_nonlinear(setup, inst);

        write_coefficients(dir / "coefficients.csv", nl.state.c);
        write_support(dir / "recovered_support.csv", nl.state, config.support_threshold);
        write_csv((dir / "recovered_fV.csv").string(), nl.recovered);
        write_text(dir / "solver_report.json", solver_report(nl.problem, nl.state, config.support_threshold) + "\n");
        for (const char* name : {"coefficients.csv", "recovered_support.csv", "recovered_fV.csv",
                                 "solver_report.json"}) {
            manifest->output(dir / name);
        }
        manifest->metrics() = separation_metrics(nl);
        manifest->write(manifest_path, nl.state.success,
                        nl.state.success ? std::string() : "residual did not reach delta");
        failure_path = nullptr;

        out << std::setprecision(6) << (nl.state.success ? "success" : "FAILED") << ": K = "
            << nl.state.constraint_count() << ", support " << nl.state.support(config.support_threshold).size() << ", residual "
            << nl.state.residual_sq << " (delta " << nl.problem.delta() << "), rel_error " << nl.rel_error
            << "\n";
        if (!nl.state.success) err << "separation did not reach delta\n";
        return nl.state.success ? 0 : 1;
    });
    if (failure_path && manifest) {
        try {
            manifest->write(*failure_path, false, "separation aborted with an error");
        } catch (const std::exception&) {
        }
    }
    return code;
}

namespace {

struct ExperimentRow {
    double noise_percent = 0.0;
    int k = 0;
    double rel_linear = 0.0;
    double rel_nonlinear = 0.0;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    int realization = 0;
    bool success = false;
};

ExperimentRow experiment_case(const ModelSetup& setup, ExperimentConfig config, int realization, double level,
                              const fs::path& dir) {
    config.noise_percent = level;
    config.seeds.support += static_cast<std::uint64_t>(realization);
    config.seeds.coeff += static_cast<std::uint64_t>(realization);
    config.seeds.noise += static_cast<std::uint64_t>(realization);

    const PlantedInstance inst = make_instance(config, setup.spaces);
    write_bundle(dir.string(), inst);
    const LinearOutcome lin = run_linear(setup, inst.f_obs, inst.f_v, 0);
    const NonlinearOutcome nl = run_nonlinear(setup, inst);
    write_coefficients(dir / "coefficients.csv", nl.state.c);
    write_csv((dir / "recovered_fV.csv").string(), nl.recovered);
    write_csv((dir / "recovered_linear.csv").string(), lin.full.recovered);
    write_text(dir / "solver_report.json", solver_report(nl.problem, nl.state, config.support_threshold) + "\n");

    const SingularSystem& sys = setup.projector.system;
    return ExperimentRow{level, nl.state.constraint_count(), lin.full.rel_error, nl.rel_error,
                         sys.sigmas[sys.rank() - 1], sys.sigmas[0], realization, nl.state.success};
}

}  // namespace

int cmd_experiment(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&]() {
        const ExperimentConfig config = command_config(opts);
        const fs::path dir = resolve_out_dir(opts, "experiment");
        ensure_dir(dir);
        Manifest manifest("experiment", config);
        if (opts.config_path) manifest.input("config", *opts.config_path);

        const ModelSetup setup = make_model_setup(config);
        std::ofstream csv = open_out(dir / "summary.csv");
        csv << "noise_percent,K_constraints,rel_error_linear,rel_error_nonlinear,sigma_min,sigma_max,realization,"
               "success\n";
        csv.flush();
        manifest.output(dir / "summary.csv");

        bool all_ok = true;
        std::string failure;
        ordered_json rows = ordered_json::array();
        for (int rr = 0; rr < config.realizations && failure.empty(); ++rr) {
            std::vector<std::future<ExperimentRow>> jobs;
            for (std::size_t li = 0; li < config.experiment_noise_levels.size(); ++li) {
                const double level = config.experiment_noise_levels[li];
                const fs::path case_dir = dir / ("r" + std::to_string(rr) + "_noise" + std::to_string(li));
                jobs.push_back(std::async(std::launch::async, experiment_case, std::cref(setup), config, rr,
                                          level, case_dir));
            }
            for (auto& job : jobs) {
                try {
                    const ExperimentRow row = job.get();
                    csv << row.noise_percent << "," << row.k << "," << row.rel_linear << "," << row.rel_nonlinear
                        << "," << row.sigma_min << "," << row.sigma_max << "," << row.realization << ","
                        << (row.success ? "true" : "false") << "\n";
                    csv.flush();
                    all_ok = all_ok && row.success;
                    rows.push_back({{"noise_percent", row.noise_percent},
                                    {"realization", row.realization},
                                    {"K_constraints", row.k},
                                    {"rel_error_linear", row.rel_linear},
                                    {"rel_error_nonlinear", row.rel_nonlinear},
                                    {"success", row.success}});
                    out << std::setprecision(6) << "realization " << row.realization << ", noise "
                        << row.noise_percent << "%: K = " << row.k << ", linear " << row.rel_linear
                        << ", nonlinear " << row.rel_nonlinear << (row.success ? "" : " (FAILED)") << "\n";
                } catch (const std::exception& e) {
                    if (failure.empty()) failure = e.what();
                }
            }
        }
        manifest.metrics() = {{"rows", rows}};
        if (!failure.empty()) {
            manifest.write(dir / "experiment_manifest.json", false, failure);
            throw Error(ErrorCode::exhausted, "experiment aborted, partial summary kept: " + failure);
        }
        manifest.write(dir / "experiment_manifest.json", all_ok,
                       all_ok ? std::string() : "at least one separation did not reach delta");
        return all_ok ? 0 : 1;
    });
}

}  // namespace bgsep
