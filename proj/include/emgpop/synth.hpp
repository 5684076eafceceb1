// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "data_io.hpp"
#include "errors.hpp"
#include "signal_core.hpp"
#include "util.hpp"

namespace emgpop {

using GainMatrix = std::array<std::array<double, kDoaChannels>, kEmgChannels>;

/// Synthetic subject with two sessions of repeated gestures. Muscle activity is
/// amplitude-modulated 5-500 Hz noise whose envelope is a fixed nonnegative
/// mix of the DoA activations.
struct SynthConfig {
    double duration_s = 54.0; // per session
    std::size_t gesture_count = 9;
    std::size_t repetitions = 2;
    double noise_level = 0.05;
    double amplitude_exponent = 1.0; // envelope = gain * activation^exponent
    std::optional<GainMatrix> activation_gain; // default: derived from seed
    std::uint64_t seed = 1;
    std::uint32_t subject_id = 1;
    double sample_rate_hz = 2000.0;

    void validate() const
    {
        if (!(duration_s > 0.0))
            throw ConfigError("SynthConfig: duration_s must be positive");
        if (!(amplitude_exponent > 0.0))
            throw ConfigError("SynthConfig: amplitude_exponent must be positive");
        if (!(noise_level >= 0.0))
            throw ConfigError("SynthConfig: noise_level must be nonnegative");
        if (gesture_count < 1 || gesture_count > kMaxGestureId)
            throw ConfigError("SynthConfig: gesture_count must be in 1..9");
        if (repetitions < 1)
            throw ConfigError("SynthConfig: repetitions must be >= 1");
        if (!(sample_rate_hz > 1000.0))
            throw ConfigError("SynthConfig: sample_rate_hz must exceed 1000 Hz for the 5-500 Hz carrier");
        if (activation_gain)
            for (const auto& row : *activation_gain)
                for (double g : row)
                    if (!(g >= 0.0))
                        throw ConfigError("SynthConfig: activation gains must be nonnegative");
        const auto slot = static_cast<std::size_t>(duration_s * sample_rate_hz) / (gesture_count * repetitions);
        if (slot < 4)
            throw ConfigError("SynthConfig: duration too short for the gesture schedule");
    }
};

/// Each channel loads mostly on one or two DoAs, with weak cross-talk to the rest.
inline GainMatrix default_activation_gain(std::uint64_t seed)
{
    std::mt19937_64 rng(derive_seed(seed, 0x6a41));
    std::uniform_real_distribution<double> weak(0.0, 0.25), strong(0.6, 1.0);
    GainMatrix g{};
    for (std::size_t c = 0; c < kEmgChannels; ++c) {
        for (auto& v : g[c])
            v = weak(rng);
        g[c][c % kDoaChannels] = strong(rng);
        g[c][(3 * c + 1) % kDoaChannels] = std::max(g[c][(3 * c + 1) % kDoaChannels], 0.5 * strong(rng));
    }
    return g;
}

namespace detail {

struct GestureTemplate {
    std::array<double, kDoaChannels> target_deg{};
};

// Raised-cosine repetition envelope over one slot: rest, rise, hold, fall, rest.
inline double slot_envelope(double u)
{
    constexpr double rise0 = 0.15, rise1 = 0.35, fall0 = 0.65, fall1 = 0.85;
    if (u < rise0 || u >= fall1)
        return 0.0;
    if (u < rise1)
        return 0.5 - 0.5 * std::cos(std::numbers::pi * (u - rise0) / (rise1 - rise0));
    if (u < fall0)
        return 1.0;
    return 0.5 + 0.5 * std::cos(std::numbers::pi * (u - fall0) / (fall1 - fall0));
}

} // namespace detail

inline SubjectRecording synth_generate(const SynthConfig& cfg)
{
    cfg.validate();
    const GainMatrix gain = cfg.activation_gain.value_or(default_activation_gain(cfg.seed));
    const double fs = cfg.sample_rate_hz;
    const std::size_t n_slots = cfg.gesture_count * cfg.repetitions;
    const auto session_len = static_cast<std::size_t>(std::llround(cfg.duration_s * fs));
    const auto slot_start = [&](std::size_t slot) { return slot * session_len / n_slots; };
    constexpr std::size_t n_sessions = 2;

    std::mt19937_64 tmpl_rng(derive_seed(cfg.seed, 0x7e41));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::array<double, kDoaChannels> rest{};
    for (auto& r : rest)
        r = 5.0 + 10.0 * unit(tmpl_rng);
    std::vector<detail::GestureTemplate> templates(cfg.gesture_count);
    for (std::size_t g = 0; g < cfg.gesture_count; ++g) {
        // Gestures flex one or more DoAs strongly and leave the others near rest.
        const std::size_t primary = g % kDoaChannels;
        for (std::size_t d = 0; d < kDoaChannels; ++d) {
            const bool active = d == primary || unit(tmpl_rng) < 0.35;
            templates[g].target_deg[d] = active ? 30.0 + 50.0 * unit(tmpl_rng) : rest[d] + 5.0 * unit(tmpl_rng);
        }
    }

    SubjectRecording rec;
    rec.subject_id = cfg.subject_id;
    const std::size_t total = session_len * n_sessions;
    rec.semg = TimeSeries(kEmgChannels, total, fs);
    rec.doa_angles = TimeSeries(kDoaChannels, total, fs);
    rec.session_id.resize(total);
    rec.gesture_id.resize(total);
    rec.repetition_id.resize(total);

    const auto carrier_filter = design_butterworth_bandpass(kButterworthOrder, 5.0, 500.0, fs);
    std::normal_distribution<double> gauss(0.0, 1.0);

    for (std::size_t s = 0; s < n_sessions; ++s) {
        const std::size_t off = s * session_len;

        // Slow tremor-like wobble, below 2 Hz, a few degrees per DoA.
        std::mt19937_64 wob_rng(derive_seed(cfg.seed, 0x3b0b, s));
        std::array<std::array<double, 3>, kDoaChannels> wf{}, wa{}, wp{};
        for (std::size_t d = 0; d < kDoaChannels; ++d)
            for (std::size_t k = 0; k < 3; ++k) {
                wf[d][k] = 0.2 + 1.6 * unit(wob_rng);
                wa[d][k] = 1.5 * unit(wob_rng);
                wp[d][k] = 2.0 * std::numbers::pi * unit(wob_rng);
            }

        std::vector<std::array<double, kDoaChannels>> activation(session_len);
        for (std::size_t slot = 0; slot < n_slots; ++slot) {
            const std::size_t g = slot / cfg.repetitions;
            const std::size_t rep = slot % cfg.repetitions;
            const std::size_t slot_len = slot_start(slot + 1) - slot_start(slot);
            for (std::size_t k = 0; k < slot_len; ++k) {
                const std::size_t i = slot_start(slot) + k;
                const double u = static_cast<double>(k) / static_cast<double>(slot_len);
                const double env = detail::slot_envelope(u);
                const double t = static_cast<double>(i) / fs;
                rec.session_id[off + i] = static_cast<std::uint16_t>(s + 1);
                rec.repetition_id[off + i] = static_cast<std::uint16_t>(rep + 1);
                rec.gesture_id[off + i] = env > 0.0 ? static_cast<std::uint16_t>(g + 1) : 0;
                for (std::size_t d = 0; d < kDoaChannels; ++d) {
                    double wobble = 0.0;
                    for (std::size_t m = 0; m < 3; ++m)
                        wobble += wa[d][m] * std::sin(2.0 * std::numbers::pi * wf[d][m] * t + wp[d][m]);
                    const double angle =
                        std::clamp(rest[d] + env * (templates[g].target_deg[d] - rest[d]) + wobble, 0.0, 90.0);
                    rec.doa_angles(d, off + i) = angle;
                    activation[i][d] = std::max(0.0, angle - rest[d]) / 90.0;
                }
            }
        }

        for (std::size_t c = 0; c < kEmgChannels; ++c) {
            std::mt19937_64 noise_rng(derive_seed(cfg.seed, 0x5e3a + s, c));
            std::vector<double> carrier(session_len);
            for (auto& v : carrier)
                v = gauss(noise_rng);
            carrier_filter.apply(carrier);
            for (std::size_t i = 0; i < session_len; ++i) {
                double amp = 0.0;
                for (std::size_t d = 0; d < kDoaChannels; ++d)
                    amp += gain[c][d] * std::pow(activation[i][d], cfg.amplitude_exponent);
                rec.semg(c, off + i) = amp * carrier[i] + cfg.noise_level * gauss(noise_rng);
            }
        }
    }
    rec.validate();
    return rec;
}

} // namespace emgpop
