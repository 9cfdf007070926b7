#include "dpc/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "dpc/predictor.hpp"
#include "json.hpp"

namespace dpc {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using clock_type = std::chrono::steady_clock;

std::string ControllerSpec::name() const {
    switch (mode) {
        case ControlMode::Spc: return "spc";
        case ControlMode::DeepcPi: return "deepc-pi";
        case ControlMode::Deepc2: return "deepc-2";
    }
    return "unknown";
}

CostWeights ExperimentConfig::weights() const {
    CostWeights w;
    w.Q = weight_q * Matrix::Identity(2, 2);
    w.P = weight_p * Matrix::Identity(2, 2);
    w.R = weight_r * Matrix::Identity(1, 1);
    return w;
}

OcpSpec ExperimentConfig::ocp_spec(const ControllerSpec& ctrl) const {
    OcpSpec spec;
    spec.mode = ctrl.mode;
    spec.reduced = ctrl.reduced;
    spec.lambda = ctrl.lambda;
    spec.N = N;
    spec.T_ini = T_ini;
    spec.m = 1;
    spec.p = 2;
    spec.weights = weights();
    spec.boxes = boxes;
    spec.smooth_eps = smooth_eps;
    spec.solver.tol = solver_tol;
    spec.solver.max_iter = solver_max_iter;
    return spec;
}

void ExperimentConfig::validate() const {
    if (T < 1 || T_ini < 1 || N < 1) {
        throw std::invalid_argument("config: T, T_ini and N must be >= 1");
    }
    if (scenarios.empty()) throw std::invalid_argument("config: at least one scenario required");
    for (double s : scenarios) {
        if (s < 0.0) throw std::invalid_argument("config: negative noise std");
    }
    if (sim.T_sim < 1) throw std::invalid_argument("config: T_sim must be >= 1");
    if (reference.amplitudes.empty() || reference.segment_len < 1) {
        throw std::invalid_argument("config: invalid reference spec");
    }
    weights().validate(1, 2);
}

namespace {

ControlMode mode_from_string(const std::string& s) {
    if (s == "spc") return ControlMode::Spc;
    if (s == "deepc-pi") return ControlMode::DeepcPi;
    if (s == "deepc-2") return ControlMode::Deepc2;
    throw std::invalid_argument("config: unknown controller mode '" + s + "'");
}

std::string mode_to_string(ControlMode m) {
    return ControllerSpec{m, 0.0, true}.name();
}

Vector bound_from_json(const ordered_json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return Vector();
    const auto& arr = j[key];
    Vector v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v(i) = arr[i].get<double>();
    return v;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::invalid_argument("config: JSON parse error in " + path + ": " + e.what());
    }

    ExperimentConfig cfg;
    if (j.contains("plant")) {
        const auto& p = j["plant"];
        cfg.plant.mu = p.value("mu", cfg.plant.mu);
        cfg.plant.ts = p.value("ts", cfg.plant.ts);
    }
    if (j.contains("excitation")) {
        const auto& e = j["excitation"];
        cfg.excitation.num_tones = e.value("num_tones", cfg.excitation.num_tones);
        cfg.excitation.f_lo = e.value("f_lo", cfg.excitation.f_lo);
        cfg.excitation.f_hi = e.value("f_hi", cfg.excitation.f_hi);
        cfg.excitation.amplitude = e.value("amplitude", cfg.excitation.amplitude);
    }
    cfg.excitation.ts = cfg.plant.ts;
    if (j.contains("data")) {
        const auto& d = j["data"];
        cfg.T = d.value("T", cfg.T);
        cfg.T_ini = d.value("T_ini", cfg.T_ini);
        cfg.N = d.value("N", cfg.N);
        cfg.data_seed = d.value("seed", cfg.data_seed);
    }
    if (j.contains("scenarios")) cfg.scenarios = j["scenarios"].get<std::vector<double>>();
    if (j.contains("kernel")) {
        const auto& k = j["kernel"];
        cfg.kernel.base_scale = k.value("base_scale", cfg.kernel.base_scale);
        if (k.contains("grid_scales")) {
            cfg.kernel.grid_scales = k["grid_scales"].get<std::vector<double>>();
        }
        cfg.kernel.refit = k.value("refit", cfg.kernel.refit);
    }
    if (j.contains("lasso")) {
        const auto& l = j["lasso"];
        cfg.lasso.alpha = l.value("alpha", cfg.lasso.alpha);
        cfg.lasso.T_max = l.value("t_max", cfg.lasso.T_max);
        cfg.lasso.tol = l.value("tol", cfg.lasso.tol);
    }
    if (j.contains("cost")) {
        const auto& c = j["cost"];
        cfg.weight_q = c.value("q", cfg.weight_q);
        cfg.weight_r = c.value("r", cfg.weight_r);
        cfg.weight_p = c.value("p", cfg.weight_p);
    }
    if (j.contains("boxes")) {
        const auto& b = j["boxes"];
        cfg.boxes.u_min = bound_from_json(b, "u_min");
        cfg.boxes.u_max = bound_from_json(b, "u_max");
        cfg.boxes.y_min = bound_from_json(b, "y_min");
        cfg.boxes.y_max = bound_from_json(b, "y_max");
    }
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        cfg.solver_tol = s.value("tol", cfg.solver_tol);
        cfg.solver_max_iter = s.value("max_iter", cfg.solver_max_iter);
        cfg.smooth_eps = s.value("smooth_eps", cfg.smooth_eps);
    }
    if (j.contains("reference")) {
        const auto& r = j["reference"];
        cfg.reference.omega = r.value("omega", cfg.reference.omega);
        if (r.contains("amplitudes")) {
            cfg.reference.amplitudes = r["amplitudes"].get<std::vector<double>>();
        }
        cfg.reference.segment_len = r.value("segment_len", cfg.reference.segment_len);
    }
    if (j.contains("controllers")) {
        cfg.controllers.clear();
        for (const auto& c : j["controllers"]) {
            ControllerSpec spec;
            spec.mode = mode_from_string(c.value("mode", std::string("spc")));
            spec.lambda = c.value("lambda", 0.0);
            spec.reduced = c.value("reduced", true);
            cfg.controllers.push_back(spec);
        }
    }
    if (j.contains("sim")) {
        const auto& s = j["sim"];
        cfg.sim.T_sim = s.value("T_sim", cfg.sim.T_sim);
        cfg.sim.blowup = s.value("blowup", cfg.sim.blowup);
        cfg.sim.abort_on_failure = s.value("abort_on_failure", cfg.sim.abort_on_failure);
    }
    cfg.noise_seed = j.value("noise_seed", cfg.noise_seed);
    cfg.validate();
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["plant"] = {{"mu", cfg.plant.mu}, {"ts", cfg.plant.ts}};
    j["excitation"] = {{"num_tones", cfg.excitation.num_tones},
                       {"f_lo", cfg.excitation.f_lo},
                       {"f_hi", cfg.excitation.f_hi},
                       {"amplitude", cfg.excitation.amplitude}};
    j["data"] = {{"T", cfg.T}, {"T_ini", cfg.T_ini}, {"N", cfg.N}, {"seed", cfg.data_seed}};
    j["scenarios"] = cfg.scenarios;
    j["kernel"] = {{"base_scale", cfg.kernel.base_scale},
                   {"grid_scales", cfg.kernel.grid_scales},
                   {"refit", cfg.kernel.refit}};
    j["lasso"] = {{"alpha", cfg.lasso.alpha}, {"t_max", cfg.lasso.T_max}, {"tol", cfg.lasso.tol}};
    j["cost"] = {{"q", cfg.weight_q}, {"r", cfg.weight_r}, {"p", cfg.weight_p}};
    auto bound_to_json = [](const Vector& v) {
        ordered_json arr = ordered_json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
        return arr;
    };
    ordered_json boxes;
    if (cfg.boxes.u_min.size() > 0) boxes["u_min"] = bound_to_json(cfg.boxes.u_min);
    if (cfg.boxes.u_max.size() > 0) boxes["u_max"] = bound_to_json(cfg.boxes.u_max);
    if (cfg.boxes.y_min.size() > 0) boxes["y_min"] = bound_to_json(cfg.boxes.y_min);
    if (cfg.boxes.y_max.size() > 0) boxes["y_max"] = bound_to_json(cfg.boxes.y_max);
    if (!boxes.empty()) j["boxes"] = boxes;
    j["solver"] = {{"tol", cfg.solver_tol},
                   {"max_iter", cfg.solver_max_iter},
                   {"smooth_eps", cfg.smooth_eps}};
    j["reference"] = {{"omega", cfg.reference.omega},
                      {"amplitudes", cfg.reference.amplitudes},
                      {"segment_len", cfg.reference.segment_len}};
    ordered_json ctrls = ordered_json::array();
    for (const auto& c : cfg.controllers) {
        ctrls.push_back({{"mode", mode_to_string(c.mode)},
                         {"lambda", c.lambda},
                         {"reduced", c.reduced}});
    }
    j["controllers"] = ctrls;
    j["sim"] = {{"T_sim", cfg.sim.T_sim},
                {"blowup", cfg.sim.blowup},
                {"abort_on_failure", cfg.sim.abort_on_failure}};
    j["noise_seed"] = cfg.noise_seed;
    return j.dump(2);
}

ModelFiles ModelBundle::files() const {
    ModelFiles mf;
    mf.basis = basis;
    mf.reduced = reduced;
    mf.M = M;
    mf.Yf_raw = Yf_raw;
    mf.T_ini = hankel.T_ini;
    mf.N = hankel.N;
    mf.m = hankel.m;
    mf.p = hankel.p;
    mf.T = hankel.T;
    return mf;
}

namespace {

Dataset slice_dataset(const Dataset& data, int start, int count, const std::string& label) {
    Dataset out;
    out.label = label;
    out.u.assign(data.u.begin() + start, data.u.begin() + start + count);
    out.y.assign(data.y.begin() + start, data.y.begin() + start + count);
    out.count = count;
    return out;
}

}  // namespace

ModelBundle offline_pipeline(const ExperimentConfig& cfg, double noise_std) {
    auto run_stage = [](const char* name, auto&& fn) {
        try {
            return fn();
        } catch (const std::exception& e) {
            throw std::runtime_error(std::string("offline_pipeline stage '") + name +
                                     "': " + e.what());
        }
    };

    ModelBundle bundle;
    bundle.hankel = HankelConfig{cfg.T_ini, cfg.N, cfg.T, 1, 2};
    const int half = bundle.hankel.required_samples();

    const Dataset full = run_stage("collect", [&] {
        return collect(cfg.plant, cfg.excitation, 2 * half, noise_std, cfg.data_seed);
    });
    const Dataset train = slice_dataset(full, 0, half, "train");
    const Dataset val = slice_dataset(full, half, half, "val");

    const HankelSet hs_tr = run_stage("hankel", [&] { return build_hankel(train, bundle.hankel); });
    const HankelSet hs_val = run_stage("hankel", [&] { return build_hankel(val, bundle.hankel); });

    const int nm = cfg.N * 1;
    const int np = cfg.N * 2;

    auto t0 = clock_type::now();
    const Matrix Z_tr = trajectory_matrix(hs_tr);
    const KernelWidths widths0 = variance_widths(Z_tr, cfg.kernel.base_scale);
    const GramMatrix gm = run_stage("gram", [&] { return gram(hs_tr, widths0); });
    const double gram_s = std::chrono::duration<double>(clock_type::now() - t0).count();

    t0 = clock_type::now();
    LassoResult lr;
    BasisModel basis = run_stage("lasso", [&] {
        lr = group_lasso(gm, hs_tr.Y_f, cfg.lasso);
        return extract_basis(gm, lr);
    });
    if (cfg.kernel.refit && !cfg.kernel.grid_scales.empty()) {
        basis = run_stage("refit", [&] {
            std::vector<KernelWidths> grid{widths0};
            for (double s : cfg.kernel.grid_scales) {
                grid.push_back(variance_widths(Z_tr, cfg.kernel.base_scale * s));
            }
            return refit_widths(basis, hs_tr, hs_val, grid);
        });
    }
    const double lasso_s = std::chrono::duration<double>(clock_type::now() - t0).count();

    t0 = clock_type::now();
    bundle.reduced = run_stage("svd", [&] { return svd_reduce(basis.Phi, hs_tr.Y_f); });
    bundle.M = run_stage("spc-matrix", [&] {
        return spc_matrix(basis.Phi, hs_tr.Y_f, bundle.reduced);
    });
    const double svd_s = std::chrono::duration<double>(clock_type::now() - t0).count();

    bundle.basis = std::move(basis);
    bundle.Yf_raw = hs_tr.Y_f;

    // Validation prediction errors, per horizon step over the validation columns.
    const Matrix Z_val = trajectory_matrix(hs_val);
    bundle.report.per_step_rms = Vector::Zero(cfg.N);
    Vector ref_rms = Vector::Zero(cfg.N);
    for (int j = 0; j < Z_val.cols(); ++j) {
        const Vector yhat = bundle.M.M * bundle.basis.evaluate(Z_val.col(j));
        const Vector err = yhat - hs_val.Y_f.col(j);
        for (int i = 0; i < cfg.N; ++i) {
            bundle.report.per_step_rms(i) += err.segment(i * 2, 2).squaredNorm();
            ref_rms(i) += hs_val.Y_f.col(j).segment(i * 2, 2).squaredNorm();
        }
    }
    for (int i = 0; i < cfg.N; ++i) {
        const double denom = std::sqrt(ref_rms(i) / Z_val.cols());
        bundle.report.per_step_rms(i) = std::sqrt(bundle.report.per_step_rms(i) / Z_val.cols());
        if (i == 0 && denom > 0.0) {
            bundle.report.validation_rms = bundle.report.per_step_rms(i) / denom;
        }
    }

    bundle.report.L = bundle.basis.L;
    bundle.report.lasso_sweeps = lr.sweeps;
    bundle.report.stages = {
        {"Initial", cfg.T, cfg.T + nm + np, gram_s},
        {"LASSO", bundle.basis.L, cfg.T + nm + np, lasso_s},
        {"SVD", bundle.basis.L, nm + bundle.reduced.keep, svd_s},
    };
    return bundle;
}

std::vector<Vector> reference_trajectory(const ReferenceSpec& ref, double ts, int length) {
    std::vector<Vector> r(length, Vector::Zero(2));
    for (int k = 0; k < length; ++k) {
        const int seg = (k / ref.segment_len) % static_cast<int>(ref.amplitudes.size());
        const double A = ref.amplitudes[seg];
        const double t = k * ts;
        r[k](0) = A * std::sin(ref.omega * t);
        r[k](1) = A * ref.omega * std::cos(ref.omega * t);
    }
    return r;
}

Matrix scenario_noise(int p, int length, double noise_std, std::uint64_t seed) {
    Matrix noise = Matrix::Zero(p, length);
    if (noise_std > 0.0) {
        Rng rng(seed);
        std::normal_distribution<double> dist(0.0, noise_std);
        for (int k = 0; k < length; ++k) {
            for (int i = 0; i < p; ++i) noise(i, k) = dist(rng);
        }
    }
    return noise;
}

std::uint64_t hash_matrix(const Matrix& M) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    const auto* bytes = reinterpret_cast<const unsigned char*>(M.data());
    const std::size_t n = sizeof(double) * M.size();
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

Vector ame(const std::vector<Vector>& y, const std::vector<Vector>& r) {
    if (y.size() != r.size()) throw std::invalid_argument("ame: length mismatch");
    if (y.empty()) throw std::invalid_argument("ame: empty logs");
    Vector acc = Vector::Zero(y.front().size());
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (y[k].size() != acc.size() || r[k].size() != acc.size()) {
            throw std::invalid_argument("ame: channel count mismatch");
        }
        acc += (y[k] - r[k]).cwiseAbs();
    }
    return acc / static_cast<double>(y.size());
}

Vector ame_spc(const std::vector<Vector>& y, const std::vector<Vector>& y_spc) {
    return ame(y, y_spc);
}

RunLog run_closed_loop(const ExperimentConfig& cfg, const ModelBundle& bundle,
                       const ControllerSpec& ctrl, const Matrix& noise) {
    RunLog log;
    log.controller = ctrl.name();
    log.lambda = ctrl.lambda;
    log.noise_hash = hash_matrix(noise);

    const OcpSpec spec = cfg.ocp_spec(ctrl);
    const OcpModel model = bundle.ocp_model();
    const Plant plant = make_vdp(cfg.plant);
    const auto r_full = reference_trajectory(cfg.reference, cfg.plant.ts, cfg.sim.T_sim + cfg.N + 1);

    Vector x = Vector::Zero(2);
    std::vector<Vector> u_hist, y_hist;
    Vector u_prev = Vector::Zero(1);
    Vector u_ws;  // warm start: previous solution shifted by one step

    double total_ms = 0.0;
    int solved_steps = 0;

    for (int k = 0; k < cfg.sim.T_sim; ++k) {
        if (!x.allFinite()) {
            log.unstable = true;
            break;
        }
        Vector y = plant.output(x) + noise.col(k);
        if (y.cwiseAbs().maxCoeff() > cfg.sim.blowup) {
            log.unstable = true;
            break;
        }
        y_hist.push_back(y);

        StepRecord rec;
        rec.k = k;
        rec.r = r_full[k];
        rec.y = y;

        Vector u_applied = Vector::Zero(1);
        if (k < cfg.T_ini - 1) {
            rec.warmup = true;  // not enough history yet, apply zero input
        } else {
            const InitWindow w = init_window(u_hist, y_hist, cfg.T_ini, k);
            Vector r_h(cfg.N * 2);
            for (int i = 0; i < cfg.N; ++i) r_h.segment(i * 2, 2) = r_full[k + 1 + i];

            const auto t0 = clock_type::now();
            SolveResult sol;
            if (ctrl.mode == ControlMode::Spc) {
                sol = solve_spc(spec, model, w.x_ini, u_prev, r_h, u_ws);
            } else {
                sol = solve_deepc(spec, model, w.x_ini, u_prev, r_h, u_ws);
            }
            rec.solve_ms =
                std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
            total_ms += rec.solve_ms;
            ++solved_steps;

            rec.status = sol.status;
            rec.cost = sol.cost;
            rec.reg_value = sol.reg_value;

            const bool failed = sol.status == SolveStatus::Infeasible || !sol.u_star.allFinite();
            if (failed) {
                ++log.solver_failures;
                if (cfg.sim.abort_on_failure) {
                    rec.u = u_prev;
                    log.steps.push_back(rec);
                    log.unstable = true;
                    break;
                }
                u_applied = u_prev;  // hold previous input
            } else {
                if (sol.status != SolveStatus::Converged) ++log.solver_failures;
                u_applied = sol.u_star.head(1);
                // Shift the horizon for the next warm start.
                u_ws = Vector(cfg.N);
                u_ws.head(cfg.N - 1) = sol.u_star.tail(cfg.N - 1);
                u_ws(cfg.N - 1) = sol.u_star(cfg.N - 1);
            }
        }

        rec.u = u_applied;
        log.steps.push_back(rec);
        u_hist.push_back(u_applied);
        u_prev = u_applied;
        x = plant.step(x, u_applied);
    }

    if (!log.steps.empty()) {
        std::vector<Vector> ys, rs;
        ys.reserve(log.steps.size());
        for (const auto& s : log.steps) {
            ys.push_back(s.y);
            rs.push_back(s.r);
        }
        log.ame_per_channel = ame(ys, rs);
        log.ame_mean = log.ame_per_channel.mean();
    } else {
        log.ame_per_channel = Vector::Constant(2, kInf);
        log.ame_mean = kInf;
        log.unstable = true;
    }
    if (static_cast<int>(log.steps.size()) < cfg.sim.T_sim) log.unstable = true;
    if (!std::isfinite(log.ame_mean) || log.ame_mean > cfg.sim.blowup) log.unstable = true;
    log.mean_solve_ms = solved_steps > 0 ? total_ms / solved_steps : 0.0;
    return log;
}

namespace {

std::string run_file_name(int scenario, const ControllerSpec& ctrl) {
    std::ostringstream ss;
    ss << "run_s" << scenario << "_" << ctrl.name();
    if (ctrl.mode != ControlMode::Spc) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", ctrl.lambda);
        ss << "_lam" << buf;
    }
    ss << ".csv";
    return ss.str();
}

void write_run_csv(const std::string& path, const RunLog& log) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("sweep: cannot open " + path);
    out << "k,r_1,r_2,u_1,y_1,y_2,status,warmup,cost,reg_value\n";
    for (const auto& s : log.steps) {
        out << s.k << ',' << format_double(s.r(0)) << ',' << format_double(s.r(1)) << ','
            << format_double(s.u(0)) << ',' << format_double(s.y(0)) << ','
            << format_double(s.y(1)) << ',' << static_cast<int>(s.status) << ','
            << (s.warmup ? 1 : 0) << ',' << format_double(s.cost) << ','
            << format_double(s.reg_value) << '\n';
    }
}

struct RunEntry {
    int scenario = 0;
    double noise_std = 0.0;
    ControllerSpec ctrl;
    std::string csv;
    RunLog log;
    Vector ame_spc_per_channel;
    double ame_spc_mean = 0.0;
};

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min(threads, n);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

SweepResult sweep_and_report(const ExperimentConfig& cfg, const std::string& out_dir,
                             int threads) {
    cfg.validate();
    if (cfg.controllers.empty()) {
        throw std::invalid_argument("sweep: empty controller list");
    }
    fs::create_directories(out_dir);
    const fs::path base(out_dir);

    SweepResult result;
    result.out_dir = out_dir;

    std::vector<std::vector<RunEntry>> per_scenario(cfg.scenarios.size());
    std::vector<double> pipeline_s(cfg.scenarios.size(), 0.0);

    for (std::size_t si = 0; si < cfg.scenarios.size(); ++si) {
        const double noise_std = cfg.scenarios[si];
        const auto tp0 = clock_type::now();
        const ModelBundle bundle = offline_pipeline(cfg, noise_std);
        pipeline_s[si] = std::chrono::duration<double>(clock_type::now() - tp0).count();
        result.reports.push_back(bundle.report);
        save_model_bundle((base / ("model_s" + std::to_string(si))).string(), bundle.files());

        const Matrix noise =
            scenario_noise(2, cfg.sim.T_sim, noise_std,
                           cfg.noise_seed + static_cast<std::uint64_t>(si));

        // SPC always runs first in the list; it is the AME_spc baseline.
        std::vector<ControllerSpec> order;
        order.push_back(ControllerSpec{ControlMode::Spc, 0.0, true});
        for (const auto& c : cfg.controllers) {
            if (c.mode != ControlMode::Spc) order.push_back(c);
        }

        auto& entries = per_scenario[si];
        entries.resize(order.size());
        parallel_for(static_cast<int>(order.size()), threads, [&](int i) {
            RunEntry e;
            e.scenario = static_cast<int>(si);
            e.noise_std = noise_std;
            e.ctrl = order[i];
            e.log = run_closed_loop(cfg, bundle, order[i], noise);
            e.log.noise_std = noise_std;
            e.csv = run_file_name(static_cast<int>(si), order[i]);
            entries[i] = std::move(e);
        });

        std::vector<Vector> y_spc;
        for (const auto& s : entries[0].log.steps) y_spc.push_back(s.y);
        for (auto& e : entries) {
            if (!e.log.steps.empty() && e.log.steps.size() == y_spc.size()) {
                std::vector<Vector> ys;
                for (const auto& s : e.log.steps) ys.push_back(s.y);
                e.ame_spc_per_channel = ame_spc(ys, y_spc);
                e.ame_spc_mean = e.ame_spc_per_channel.mean();
            } else {
                e.ame_spc_per_channel = Vector::Constant(2, kInf);
                e.ame_spc_mean = kInf;
            }
            write_run_csv((base / e.csv).string(), e.log);
        }
    }

    // table1.csv: pipeline structure per scenario (timings go to summary.json).
    {
        std::ofstream out(base / "table1.csv");
        out << "scenario,noise_std,stage,basis_count,decision_dim\n";
        for (std::size_t si = 0; si < result.reports.size(); ++si) {
            for (const auto& st : result.reports[si].stages) {
                out << si << ',' << format_double(cfg.scenarios[si]) << ',' << st.name << ','
                    << st.basis_count << ',' << st.decision_dim << '\n';
            }
        }
    }

    // table2.csv / table3.csv: closed-loop metrics for scenario 0 / 1.
    for (std::size_t si = 0; si < per_scenario.size(); ++si) {
        const std::string name =
            si == 0 ? "table2.csv" : (si == 1 ? "table3.csv" : "table" + std::to_string(si + 2) + ".csv");
        std::ofstream out(base / name);
        out << "controller,lambda,ame_mean,ame_1,ame_2,ame_spc_mean,ame_spc_1,ame_spc_2,"
               "unstable,solver_failures\n";
        for (const auto& e : per_scenario[si]) {
            out << e.ctrl.name() << ',' << format_double(e.ctrl.lambda) << ','
                << format_double(e.log.ame_mean) << ',' << format_double(e.log.ame_per_channel(0))
                << ',' << format_double(e.log.ame_per_channel(1)) << ','
                << format_double(e.ame_spc_mean) << ',' << format_double(e.ame_spc_per_channel(0))
                << ',' << format_double(e.ame_spc_per_channel(1)) << ','
                << (e.log.unstable ? 1 : 0) << ',' << e.log.solver_failures << '\n';
        }
    }

    // validation.csv: per-horizon-step RMS prediction error on validation data.
    {
        std::ofstream out(base / "validation.csv");
        out << "scenario,step,rms_error\n";
        for (std::size_t si = 0; si < result.reports.size(); ++si) {
            const Vector& rms = result.reports[si].per_step_rms;
            for (int i = 0; i < rms.size(); ++i) {
                out << si << ',' << (i + 1) << ',' << format_double(rms(i)) << '\n';
            }
        }
    }

    // runs.json: manifest used by `report` to rebuild tables from the CSVs.
    ordered_json manifest = ordered_json::array();
    for (const auto& entries : per_scenario) {
        for (const auto& e : entries) {
            ordered_json r;
            r["scenario"] = e.scenario;
            r["noise_std"] = e.noise_std;
            r["controller"] = e.ctrl.name();
            r["lambda"] = e.ctrl.lambda;
            r["csv"] = e.csv;
            r["T_sim"] = cfg.sim.T_sim;
            r["blowup"] = cfg.sim.blowup;
            r["ame_mean"] = e.log.ame_mean;
            r["ame"] = {e.log.ame_per_channel(0), e.log.ame_per_channel(1)};
            r["ame_spc_mean"] = e.ame_spc_mean;
            r["unstable"] = e.log.unstable;
            r["solver_failures"] = e.log.solver_failures;
            r["noise_hash"] = e.log.noise_hash;
            manifest.push_back(r);
        }
    }
    {
        std::ofstream out(base / "runs.json");
        out << manifest.dump(2) << '\n';
    }

    // summary.json: scalars, structure checks and timing.
    ordered_json summary;
    summary["config"] = ordered_json::parse(config_to_json(cfg));
    ordered_json scen = ordered_json::array();
    for (std::size_t si = 0; si < per_scenario.size(); ++si) {
        ordered_json s;
        s["noise_std"] = cfg.scenarios[si];
        s["L"] = result.reports[si].L;
        s["lasso_sweeps"] = result.reports[si].lasso_sweeps;
        s["validation_one_step_rms_ratio"] = result.reports[si].validation_rms;
        s["offline_pipeline_s"] = pipeline_s[si];
        ordered_json stages = ordered_json::array();
        for (const auto& st : result.reports[si].stages) {
            stages.push_back({{"stage", st.name},
                              {"basis_count", st.basis_count},
                              {"decision_dim", st.decision_dim},
                              {"cpu_s", st.cpu_s}});
        }
        s["stages"] = stages;

        ordered_json runs = ordered_json::array();
        double spc_ame = kInf;
        for (const auto& e : per_scenario[si]) {
            if (e.ctrl.mode == ControlMode::Spc) spc_ame = e.log.ame_mean;
            runs.push_back({{"controller", e.ctrl.name()},
                            {"lambda", e.ctrl.lambda},
                            {"ame_mean", e.log.ame_mean},
                            {"ame_spc_mean", e.ame_spc_mean},
                            {"unstable", e.log.unstable},
                            {"solver_failures", e.log.solver_failures},
                            {"mean_solve_ms", e.log.mean_solve_ms},
                            {"ts_budget_ms", cfg.plant.ts * 1000.0}});
        }
        s["spc_ame_mean"] = spc_ame;
        s["runs"] = runs;

        // Relational claims checked by the acceptance suite.
        std::vector<double> pi_lambdas, pi_amespc;
        bool pi_all_stable = true;
        bool deepc2_diverges_high_lambda = true;
        bool has_high_lambda_deepc2 = false;
        for (const auto& e : per_scenario[si]) {
            if (e.ctrl.mode == ControlMode::DeepcPi) {
                pi_lambdas.push_back(e.ctrl.lambda);
                pi_amespc.push_back(e.ame_spc_mean);
                pi_all_stable = pi_all_stable && !e.log.unstable;
            }
            if (e.ctrl.mode == ControlMode::Deepc2 && e.ctrl.lambda >= 1e6) {
                has_high_lambda_deepc2 = true;
                const bool diverged =
                    e.log.unstable || (std::isfinite(spc_ame) && e.log.ame_mean >= 5.0 * spc_ame);
                deepc2_diverges_high_lambda = deepc2_diverges_high_lambda && diverged;
            }
        }
        bool pi_decreasing = pi_amespc.size() >= 2;
        for (std::size_t i = 1; i < pi_amespc.size(); ++i) {
            if (!(pi_amespc[i] < pi_amespc[i - 1])) pi_decreasing = false;
        }
        s["checks"] = {{"pi_ame_spc_strictly_decreasing", pi_decreasing},
                       {"pi_all_stable", pi_all_stable},
                       {"deepc2_unstable_at_high_lambda",
                        has_high_lambda_deepc2 ? deepc2_diverges_high_lambda : false}};
        scen.push_back(s);
    }
    summary["scenarios"] = scen;
    {
        std::ofstream out(base / "summary.json");
        out << summary.dump(2) << '\n';
    }

    for (auto& entries : per_scenario) {
        for (auto& e : entries) result.runs.push_back(std::move(e.log));
    }
    return result;
}

void rebuild_report(const std::string& out_dir) {
    const fs::path base(out_dir);
    std::ifstream in(base / "runs.json");
    if (!in) throw std::runtime_error("report: cannot open " + out_dir + "/runs.json");
    ordered_json manifest;
    in >> manifest;

    struct Rebuilt {
        int scenario;
        std::string controller;
        double lambda;
        Vector ame_pc;
        double ame_mean;
        Vector ame_spc_pc;
        double ame_spc_mean;
        bool unstable;
    };
    std::vector<Rebuilt> rows;
    std::map<int, std::vector<Vector>> spc_y;

    auto read_run = [&](const std::string& csv, std::vector<Vector>& ys, std::vector<Vector>& rs) {
        std::ifstream f(base / csv);
        if (!f) throw std::runtime_error("report: cannot open " + csv);
        std::string line;
        std::getline(f, line);  // header
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string cell;
            std::vector<double> vals;
            while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
            Vector r(2), y(2);
            r << vals[1], vals[2];
            y << vals[4], vals[5];
            rs.push_back(r);
            ys.push_back(y);
        }
    };

    // First pass: SPC baselines.
    for (const auto& r : manifest) {
        if (r["controller"] == "spc") {
            std::vector<Vector> ys, rs;
            read_run(r["csv"].get<std::string>(), ys, rs);
            spc_y[r["scenario"].get<int>()] = ys;
        }
    }
    int max_scenario = 0;
    for (const auto& rj : manifest) {
        std::vector<Vector> ys, rs;
        read_run(rj["csv"].get<std::string>(), ys, rs);
        Rebuilt row;
        row.scenario = rj["scenario"].get<int>();
        max_scenario = std::max(max_scenario, row.scenario);
        row.controller = rj["controller"].get<std::string>();
        row.lambda = rj["lambda"].get<double>();
        row.unstable = rj["unstable"].get<bool>();
        if (!ys.empty()) {
            row.ame_pc = ame(ys, rs);
            row.ame_mean = row.ame_pc.mean();
        } else {
            row.ame_pc = Vector::Constant(2, kInf);
            row.ame_mean = kInf;
        }
        const auto it = spc_y.find(row.scenario);
        if (it != spc_y.end() && ys.size() == it->second.size() && !ys.empty()) {
            row.ame_spc_pc = ame_spc(ys, it->second);
            row.ame_spc_mean = row.ame_spc_pc.mean();
        } else {
            row.ame_spc_pc = Vector::Constant(2, kInf);
            row.ame_spc_mean = kInf;
        }
        rows.push_back(std::move(row));
    }

    for (int si = 0; si <= max_scenario; ++si) {
        const std::string name =
            si == 0 ? "table2.csv" : (si == 1 ? "table3.csv" : "table" + std::to_string(si + 2) + ".csv");
        std::ofstream out(base / name);
        out << "controller,lambda,ame_mean,ame_1,ame_2,ame_spc_mean,ame_spc_1,ame_spc_2,"
               "unstable,solver_failures\n";
        for (const auto& row : rows) {
            if (row.scenario != si) continue;
            int failures = 0;
            for (const auto& rj : manifest) {
                if (rj["scenario"].get<int>() == si &&
                    rj["controller"].get<std::string>() == row.controller &&
                    rj["lambda"].get<double>() == row.lambda) {
                    failures = rj["solver_failures"].get<int>();
                }
            }
            out << row.controller << ',' << format_double(row.lambda) << ','
                << format_double(row.ame_mean) << ',' << format_double(row.ame_pc(0)) << ','
                << format_double(row.ame_pc(1)) << ',' << format_double(row.ame_spc_mean) << ','
                << format_double(row.ame_spc_pc(0)) << ',' << format_double(row.ame_spc_pc(1))
                << ',' << (row.unstable ? 1 : 0) << ',' << failures << '\n';
        }
    }
}

}  // namespace dpc
