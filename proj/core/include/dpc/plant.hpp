#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dpc/types.hpp"

namespace dpc {

/// Discrete-time plant state: state vector plus sample index.
struct PlantState {
    Vector x;
    int k = 0;
};

struct VanDerPolParams {
    double mu = 1.0;          // damping coefficient
    double ts = 0.1;          // sampling time [s]
    double noise_std = 0.0;   // per-channel output noise std
    std::uint64_t seed = 0;   // RNG seed for noise/excitation
};

/// One tone of a multisine signal.
struct Tone {
    double amplitude = 1.0;
    double freq_hz = 1.0;
    double phase = 0.0;
};

/// Sum-of-sinusoids excitation. If `tones` is non-empty it is used as-is,
/// otherwise `num_tones` tones are drawn from [f_lo, f_hi] with random phases.
struct ExcitationSpec {
    int num_tones = 20;
    double f_lo = 0.01;   // [Hz]
    double f_hi = 2.0;    // [Hz]
    double amplitude = 1.0;  // per-tone amplitude
    double ts = 0.1;         // sample period used to evaluate the tones
    std::vector<Tone> tones;  // explicit tones override the random draw
};

/// Recorded input/output samples with provenance label.
struct Dataset {
    std::vector<Vector> u;
    std::vector<Vector> y;
    int count = 0;
    std::string label;

    int m() const { return u.empty() ? 0 : static_cast<int>(u.front().size()); }
    int p() const { return y.empty() ? 0 : static_cast<int>(y.front().size()); }
};

/// Generic discrete-time plant: x+ = step(x, u), y = output(x).
struct Plant {
    std::function<Vector(const Vector&, const Vector&)> step;
    std::function<Vector(const Vector&)> output;
    int n = 0;
    int m = 0;
    int p = 0;
};

/// Noise-free van der Pol state update (forward-Euler discretization).
PlantState vdp_step(const PlantState& state, double u, const VanDerPolParams& params);

/// Measured output x + v with v ~ N(0, noise_std^2) per channel.
Vector measure(const PlantState& state, const VanDerPolParams& params, Rng& rng);

/// Wraps the van der Pol dynamics in the generic plant interface.
Plant make_vdp(const VanDerPolParams& params);

/// Multisine input sequence of `length` samples with `m` channels,
/// deterministic in `seed`.
std::vector<Vector> multisine(int length, int m, const ExcitationSpec& spec, std::uint64_t seed);

/// Simulate plant under an excitation and record (u, y) pairs.
/// Measurement noise with std `noise_std` is drawn from `seed`.
Dataset collect(const Plant& plant, const ExcitationSpec& excitation, int length,
                double noise_std, std::uint64_t seed, const Vector& x0 = Vector(),
                const std::string& label = "train");

/// Convenience overload for the van der Pol benchmark.
Dataset collect(const VanDerPolParams& params, const ExcitationSpec& excitation, int length,
                double noise_std, std::uint64_t seed, const Vector& x0 = Vector(),
                const std::string& label = "train");

}  // namespace dpc
