#include "dpc/plant.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpc {

PlantState vdp_step(const PlantState& state, double u, const VanDerPolParams& params) {
    if (state.x.size() != 2) {
        throw std::invalid_argument("vdp_step: state must have dimension 2, got " +
                                    std::to_string(state.x.size()));
    }
    const double x1 = state.x(0);
    const double x2 = state.x(1);
    const double ts = params.ts;
    Vector next(2);
    next(0) = x1 + ts * x2;
    next(1) = -ts * x1 + x2 + ts * u + ts * params.mu * (1.0 - x1 * x1) * x2;
    return PlantState{next, state.k + 1};
}

Vector measure(const PlantState& state, const VanDerPolParams& params, Rng& rng) {
    Vector y = state.x;
    if (params.noise_std > 0.0) {
        std::normal_distribution<double> dist(0.0, params.noise_std);
        for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += dist(rng);
    }
    return y;
}

Plant make_vdp(const VanDerPolParams& params) {
    Plant plant;
    plant.n = 2;
    plant.m = 1;
    plant.p = 2;
    plant.step = [params](const Vector& x, const Vector& u) {
        return vdp_step(PlantState{x, 0}, u(0), params).x;
    };
    plant.output = [](const Vector& x) { return x; };
    return plant;
}

std::vector<Vector> multisine(int length, int m, const ExcitationSpec& spec, std::uint64_t seed) {
    if (length < 1) throw std::invalid_argument("multisine: length must be >= 1");
    if (m < 1) throw std::invalid_argument("multisine: m must be >= 1");

    std::vector<std::vector<Tone>> tones(m);
    if (!spec.tones.empty()) {
        for (auto& t : tones) t = spec.tones;
    } else {
        if (spec.num_tones < 1) throw std::invalid_argument("multisine: num_tones must be >= 1");
        if (!(spec.f_hi > spec.f_lo) || spec.f_lo < 0.0) {
            throw std::invalid_argument("multisine: empty frequency band [f_lo, f_hi]");
        }
        Rng rng(seed);
        std::uniform_real_distribution<double> freq(spec.f_lo, spec.f_hi);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
        for (int c = 0; c < m; ++c) {
            tones[c].resize(spec.num_tones);
            for (auto& t : tones[c]) {
                t.amplitude = spec.amplitude;
                t.freq_hz = freq(rng);
                t.phase = phase(rng);
            }
        }
    }

    std::vector<Vector> u(length, Vector::Zero(m));
    for (int k = 0; k < length; ++k) {
        const double t = k * spec.ts;
        for (int c = 0; c < m; ++c) {
            double v = 0.0;
            for (const auto& tone : tones[c]) {
                v += tone.amplitude * std::sin(2.0 * std::numbers::pi * tone.freq_hz * t + tone.phase);
            }
            u[k](c) = v;
        }
    }
    return u;
}

Dataset collect(const Plant& plant, const ExcitationSpec& excitation, int length,
                double noise_std, std::uint64_t seed, const Vector& x0,
                const std::string& label) {
    if (length < 1) throw std::invalid_argument("collect: length must be >= 1");
    if (noise_std < 0.0) throw std::invalid_argument("collect: noise_std must be >= 0");

    Vector x = x0.size() > 0 ? x0 : Vector::Zero(plant.n);
    if (x.size() != plant.n) throw std::invalid_argument("collect: x0 dimension mismatch");

    // Two independent streams so the excitation does not depend on noise_std.
    const auto u_seq = multisine(length, plant.m, excitation, seed);
    Rng noise_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> dist(0.0, 1.0);

    Dataset data;
    data.label = label;
    data.u.reserve(length);
    data.y.reserve(length);
    for (int k = 0; k < length; ++k) {
        if (!x.allFinite()) {
            throw std::runtime_error("collect: non-finite plant state at time index " +
                                     std::to_string(k));
        }
        Vector y = plant.output(x);
        if (noise_std > 0.0) {
            for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += noise_std * dist(noise_rng);
        }
        data.u.push_back(u_seq[k]);
        data.y.push_back(y);
        x = plant.step(x, u_seq[k]);
    }
    data.count = length;
    return data;
}

Dataset collect(const VanDerPolParams& params, const ExcitationSpec& excitation, int length,
                double noise_std, std::uint64_t seed, const Vector& x0,
                const std::string& label) {
    return collect(make_vdp(params), excitation, length, noise_std, seed, x0, label);
}

}  // namespace dpc
