#pragma once

#include <string>
#include <vector>

#include "dpc/group_lasso.hpp"
#include "dpc/hankel.hpp"
#include "dpc/io.hpp"
#include "dpc/ocp.hpp"
#include "dpc/plant.hpp"

namespace dpc {

struct KernelOptions {
    double base_scale = 1.0;
    std::vector<double> grid_scales{0.25, 0.5, 1.0, 2.0, 4.0};
    bool refit = true;
};

/// Piecewise-constant-amplitude sinusoid on channel 1 with the
/// derivative-consistent reference on channel 2.
struct ReferenceSpec {
    double omega = 0.5;  // [rad/s]
    std::vector<double> amplitudes{1.0, 2.0, 1.5, 0.5};
    int segment_len = 100;  // steps per amplitude segment
};

struct ControllerSpec {
    ControlMode mode = ControlMode::Spc;
    double lambda = 0.0;
    bool reduced = true;

    std::string name() const;
};

struct SimOptions {
    int T_sim = 400;
    double blowup = 100.0;        // AME / output magnitude beyond which a run is unstable
    bool abort_on_failure = false;  // default: hold previous input on solver failure
};

struct ExperimentConfig {
    VanDerPolParams plant;
    ExcitationSpec excitation;
    int T = 2000;
    int T_ini = 1;
    int N = 10;
    std::vector<double> scenarios{0.0, 0.05};  // measurement-noise std per scenario
    KernelOptions kernel;
    LassoConfig lasso;
    double weight_q = 1.0;
    double weight_r = 0.1;
    double weight_p = 1.0;
    BoxConstraints boxes;
    double smooth_eps = 1e-12;
    double solver_tol = 1e-9;
    int solver_max_iter = 200;
    ReferenceSpec reference;
    std::vector<ControllerSpec> controllers;
    SimOptions sim;
    std::uint64_t data_seed = 1234;
    std::uint64_t noise_seed = 99;

    CostWeights weights() const;  // m = 1, p = 2 benchmark weights
    OcpSpec ocp_spec(const ControllerSpec& ctrl) const;
    void validate() const;
};

ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

struct PipelineStage {
    std::string name;
    int basis_count = 0;
    int decision_dim = 0;
    double cpu_s = 0.0;
};

struct PipelineReport {
    std::vector<PipelineStage> stages;
    int L = 0;
    int lasso_sweeps = 0;
    double validation_rms = 0.0;       // one-step-ahead RMS error on validation data
    Vector per_step_rms;               // horizon-step RMS errors on validation data
};

struct ModelBundle {
    BasisModel basis;
    ReducedData reduced;
    PredictorMatrix M;
    Matrix Yf_raw;
    HankelConfig hankel;
    PipelineReport report;

    OcpModel ocp_model() const { return OcpModel{basis, reduced, M, Yf_raw}; }
    ModelFiles files() const;
};

/// Offline pipeline: collect train+validation data, Gram matrix, group LASSO
/// selection, optional width refit, SVD reduction, predictor matrix.
ModelBundle offline_pipeline(const ExperimentConfig& cfg, double noise_std);

struct StepRecord {
    int k = 0;
    Vector r, u, y;
    SolveStatus status = SolveStatus::Converged;
    double cost = 0.0;
    double reg_value = 0.0;
    double solve_ms = 0.0;
    bool warmup = false;
};

struct RunLog {
    std::string controller;
    double lambda = 0.0;
    double noise_std = 0.0;
    std::vector<StepRecord> steps;
    Vector ame_per_channel;
    double ame_mean = 0.0;
    bool unstable = false;
    int solver_failures = 0;
    double mean_solve_ms = 0.0;
    std::uint64_t noise_hash = 0;
};

/// Reference samples r(0..length-1), one p-vector per step.
std::vector<Vector> reference_trajectory(const ReferenceSpec& ref, double ts, int length);

/// Measurement-noise sample path shared by every controller in a scenario.
Matrix scenario_noise(int p, int length, double noise_std, std::uint64_t seed);
std::uint64_t hash_matrix(const Matrix& M);

RunLog run_closed_loop(const ExperimentConfig& cfg, const ModelBundle& bundle,
                       const ControllerSpec& ctrl, const Matrix& noise);

/// Elementwise mean absolute error per output channel.
Vector ame(const std::vector<Vector>& y, const std::vector<Vector>& r);
Vector ame_spc(const std::vector<Vector>& y, const std::vector<Vector>& y_spc);

struct SweepResult {
    std::vector<RunLog> runs;             // all runs, scenario-major order
    std::vector<PipelineReport> reports;  // one per scenario
    std::string out_dir;
};

/// Full Table-style sweep: per scenario run the offline pipeline, SPC, and
/// every configured controller against the shared noise path; emit
/// table1/table2/table3 CSVs, per-run trajectory CSVs, runs.json and
/// summary.json under `out_dir`.
SweepResult sweep_and_report(const ExperimentConfig& cfg, const std::string& out_dir,
                             int threads = 1);

/// Rebuild the metric tables and summary from the per-run trajectory CSVs
/// found in `out_dir` (written by a previous sweep).
void rebuild_report(const std::string& out_dir);

}  // namespace dpc
