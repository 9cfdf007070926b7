// Command line front-end: data collection, offline pipeline, closed-loop
// runs and full table sweeps, driven by a JSON config file.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "dpc/harness.hpp"
#include "dpc/io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

dpc::ExperimentConfig load_or_die(const std::string& path, std::uint64_t seed_override,
                                  bool has_seed) {
    dpc::ExperimentConfig cfg = dpc::load_config(path);
    if (has_seed) cfg.data_seed = seed_override;
    return cfg;
}

int cmd_collect(const dpc::ExperimentConfig& cfg, const std::string& out) {
    fs::create_directories(out);
    for (std::size_t si = 0; si < cfg.scenarios.size(); ++si) {
        const int half = dpc::HankelConfig{cfg.T_ini, cfg.N, cfg.T, 1, 2}.required_samples();
        const dpc::Dataset data =
            dpc::collect(cfg.plant, cfg.excitation, 2 * half, cfg.scenarios[si], cfg.data_seed);
        const std::string path = out + "/dataset_s" + std::to_string(si) + ".csv";
        dpc::write_dataset_csv(path, data);
        std::cout << "wrote " << path << " (" << data.count << " samples, noise_std="
                  << cfg.scenarios[si] << ")\n";
    }
    return kExitOk;
}

int cmd_pipeline(const dpc::ExperimentConfig& cfg, const std::string& out) {
    fs::create_directories(out);
    for (std::size_t si = 0; si < cfg.scenarios.size(); ++si) {
        const dpc::ModelBundle bundle = dpc::offline_pipeline(cfg, cfg.scenarios[si]);
        const std::string dir = out + "/model_s" + std::to_string(si);
        dpc::save_model_bundle(dir, bundle.files());
        std::cout << "scenario " << si << ": L=" << bundle.report.L
                  << ", reduced decision dim="
                  << bundle.report.stages.back().decision_dim
                  << ", one-step validation RMS ratio=" << bundle.report.validation_rms
                  << ", bundle at " << dir << "\n";
    }
    return kExitOk;
}

int cmd_run(const dpc::ExperimentConfig& cfg, const std::string& out, int scenario,
            int controller) {
    if (scenario < 0 || scenario >= static_cast<int>(cfg.scenarios.size())) {
        std::cerr << "run: scenario index out of range\n";
        return kExitConfig;
    }
    if (controller < 0 || controller >= static_cast<int>(cfg.controllers.size())) {
        std::cerr << "run: controller index out of range\n";
        return kExitConfig;
    }
    fs::create_directories(out);
    const dpc::ModelBundle bundle = dpc::offline_pipeline(cfg, cfg.scenarios[scenario]);
    const dpc::Matrix noise = dpc::scenario_noise(
        2, cfg.sim.T_sim, cfg.scenarios[scenario],
        cfg.noise_seed + static_cast<std::uint64_t>(scenario));
    const dpc::RunLog log =
        dpc::run_closed_loop(cfg, bundle, cfg.controllers[controller], noise);
    std::cout << "controller=" << log.controller << " lambda=" << log.lambda
              << " AME=" << log.ame_mean << " unstable=" << (log.unstable ? 1 : 0)
              << " solver_failures=" << log.solver_failures
              << " mean_solve_ms=" << log.mean_solve_ms << "\n";
    return log.unstable && cfg.sim.abort_on_failure ? kExitSolver : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-driven predictive control toolkit (kernel basis selection, "
                 "SVD reduction, SPC/DeePC closed-loop benchmarks)"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "results";
    std::uint64_t seed = 0;
    bool has_seed = false;
    int threads = 1;

    app.add_option("--config", config_path, "JSON experiment config")->required(false);
    app.add_option("--out", out_dir, "Output directory");
    auto* seed_opt = app.add_option("--seed", seed, "Override data seed");
    app.add_option("--threads", threads, "Worker threads for independent runs");

    auto* c_collect = app.add_subcommand("collect", "Record excitation datasets as CSV");
    auto* c_pipeline = app.add_subcommand("pipeline", "Run the offline pipeline, save model bundles");
    auto* c_run = app.add_subcommand("run", "One closed-loop run");
    auto* c_sweep = app.add_subcommand("sweep", "Full sweep: tables 1-3, trajectories, summary");
    auto* c_report = app.add_subcommand("report", "Rebuild tables from per-run CSVs");

    int scenario = 0, controller = 0;
    c_run->add_option("--scenario", scenario, "Scenario index");
    c_run->add_option("--controller", controller, "Controller index in the config list");

    CLI11_PARSE(app, argc, argv);
    has_seed = seed_opt->count() > 0;

    try {
        if (c_report->parsed()) {
            dpc::rebuild_report(out_dir);
            std::cout << "report rebuilt under " << out_dir << "\n";
            return kExitOk;
        }
        if (config_path.empty()) {
            std::cerr << "error: --config is required for this command\n";
            return kExitConfig;
        }
        dpc::ExperimentConfig cfg;
        try {
            cfg = load_or_die(config_path, seed, has_seed);
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return kExitConfig;
        }

        if (c_collect->parsed()) return cmd_collect(cfg, out_dir);
        if (c_pipeline->parsed()) return cmd_pipeline(cfg, out_dir);
        if (c_run->parsed()) return cmd_run(cfg, out_dir, scenario, controller);
        if (c_sweep->parsed()) {
            const dpc::SweepResult res = dpc::sweep_and_report(cfg, out_dir, threads);
            std::cout << "sweep complete: " << res.runs.size() << " runs, outputs under "
                      << res.out_dir << "\n";
            return kExitOk;
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitOk;
}
