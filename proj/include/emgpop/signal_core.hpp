// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"

namespace emgpop {

/// Uniformly sampled multichannel signal, stored channel-major.
class TimeSeries {
public:
    TimeSeries() = default;

    TimeSeries(std::size_t channels, std::size_t samples, double sample_rate_hz)
        : data_(channels * samples, 0.0), channels_(channels), samples_(samples), rate_(sample_rate_hz)
    {
        check();
    }

    TimeSeries(const std::vector<std::vector<double>>& rows, double sample_rate_hz)
        : channels_(rows.size()), samples_(rows.empty() ? 0 : rows.front().size()), rate_(sample_rate_hz)
    {
        check();
        data_.reserve(channels_ * samples_);
        for (const auto& r : rows) {
            if (r.size() != samples_)
                throw ConfigError("TimeSeries: channels have unequal lengths");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    std::size_t channel_count() const { return channels_; }
    std::size_t sample_count() const { return samples_; }
    double sample_rate_hz() const { return rate_; }

    double& operator()(std::size_t c, std::size_t t) { return data_[c * samples_ + t]; }
    double operator()(std::size_t c, std::size_t t) const { return data_[c * samples_ + t]; }

    std::span<double> channel(std::size_t c) { return {data_.data() + c * samples_, samples_}; }
    std::span<const double> channel(std::size_t c) const { return {data_.data() + c * samples_, samples_}; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    /// Copy of samples [begin, end) of every channel.
    TimeSeries slice(std::size_t begin, std::size_t end) const
    {
        if (begin > end || end > samples_)
            throw ConfigError("TimeSeries::slice: range out of bounds");
        TimeSeries out(channels_, end - begin, rate_);
        for (std::size_t c = 0; c < channels_; ++c)
            for (std::size_t t = begin; t < end; ++t)
                out(c, t - begin) = (*this)(c, t);
        return out;
    }

    bool operator==(const TimeSeries&) const = default;

private:
    void check() const
    {
        if (channels_ == 0)
            throw ConfigError("TimeSeries: channel_count must be positive");
        if (!(rate_ > 0.0) || !std::isfinite(rate_))
            throw ConfigError("TimeSeries: sample_rate_hz must be positive");
    }

    std::vector<double> data_;
    std::size_t channels_ = 0;
    std::size_t samples_ = 0;
    double rate_ = 1.0;
};

inline TimeSeries rectify(TimeSeries x)
{
    for (auto& v : x.values())
        v = std::abs(v);
    return x;
}

// -- band-pass filtering ----------------------------------------------------

/// One second-order section, a0 normalized to 1.
struct Biquad {
    double b0, b1, b2, a1, a2;
};

/// Cascade of second-order sections.
struct SosFilter {
    std::vector<Biquad> sections;
    double sample_rate_hz = 0.0;

    std::complex<double> response(double freq_hz) const
    {
        const auto z1 = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate_hz);
        const auto z2 = z1 * z1;
        std::complex<double> h{1.0, 0.0};
        for (const auto& s : sections)
            h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
        return h;
    }

    /// Causal filtering with zero initial conditions, transposed direct form II per section.
    void apply(std::span<double> x) const
    {
        for (const auto& s : sections) {
            double w1 = 0.0, w2 = 0.0;
            for (auto& v : x) {
                const double in = v;
                const double out = s.b0 * in + w1;
                w1 = s.b1 * in - s.a1 * out + w2;
                w2 = s.b2 * in - s.a2 * out;
                v = out;
            }
        }
    }
};

/// Prototype order of the band-pass; the digital filter has twice as many poles.
inline constexpr int kButterworthOrder = 4;

/// Digital Butterworth band-pass via the bilinear transform with pre-warped edges.
inline SosFilter design_butterworth_bandpass(int order, double lo_hz, double hi_hz, double fs)
{
    if (order < 1)
        throw ConfigError("bandpass: order must be >= 1");
    if (!(lo_hz > 0.0) || !(lo_hz < hi_hz) || !(hi_hz < fs / 2.0))
        throw ConfigError("bandpass: need 0 < lo_hz < hi_hz < fs/2, got lo=" + std::to_string(lo_hz) +
                          " hi=" + std::to_string(hi_hz) + " fs=" + std::to_string(fs));

    using cd = std::complex<double>;
    const double k2fs = 2.0 * fs;
    const double wl = k2fs * std::tan(std::numbers::pi * lo_hz / fs);
    const double wh = k2fs * std::tan(std::numbers::pi * hi_hz / fs);
    const double bw = wh - wl;
    const double w0sq = wl * wh;

    // Band-pass poles: each prototype pole p splits into the roots of s^2 - p*bw*s + w0^2.
    std::vector<cd> complex_poles, real_poles;
    for (int k = 0; k < order; ++k) {
        const cd p = std::polar(1.0, std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order));
        const cd disc = std::sqrt(p * p * bw * bw - 4.0 * w0sq);
        for (cd s : {(p * bw + disc) / 2.0, (p * bw - disc) / 2.0}) {
            if (std::abs(s.imag()) <= 1e-9 * std::abs(s))
                real_poles.push_back({s.real(), 0.0});
            else if (s.imag() > 0.0)
                complex_poles.push_back(s);
        }
    }
    if (complex_poles.size() * 2 + real_poles.size() != static_cast<std::size_t>(2 * order) ||
        real_poles.size() % 2 != 0)
        throw std::logic_error("bandpass: unexpected pole configuration");

    SosFilter f;
    f.sample_rate_hz = fs;
    double gain = std::pow(bw * k2fs, order);
    const auto to_z = [&](cd s) { return (k2fs + s) / (k2fs - s); };

    // Each section carries one zero at z = 1 (from s = 0) and one at z = -1 (from s = inf).
    for (const auto& s : complex_poles) {
        const cd z = to_z(s);
        f.sections.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
        gain /= std::norm(k2fs - s);
    }
    for (std::size_t i = 0; i < real_poles.size(); i += 2) {
        const double z1 = to_z(real_poles[i]).real(), z2 = to_z(real_poles[i + 1]).real();
        f.sections.push_back({1.0, 0.0, -1.0, -(z1 + z2), z1 * z2});
        gain /= (k2fs - real_poles[i].real()) * (k2fs - real_poles[i + 1].real());
    }
    f.sections.front().b0 *= gain;
    f.sections.front().b2 *= gain;
    return f;
}

inline TimeSeries bandpass(TimeSeries x, double lo_hz, double hi_hz)
{
    const auto filt = design_butterworth_bandpass(kButterworthOrder, lo_hz, hi_hz, x.sample_rate_hz());
    for (std::size_t c = 0; c < x.channel_count(); ++c)
        filt.apply(x.channel(c));
    return x;
}

// -- resampling and scaling ---------------------------------------------------

/// Window length in samples for a step of dt_s, or ConfigError if not integral.
inline std::size_t window_length(double sample_rate_hz, double dt_s)
{
    const double n = dt_s * sample_rate_hz;
    const double r = std::round(n);
    if (!(r >= 1.0) || std::abs(n - r) > 1e-9 * std::max(1.0, r))
        throw ConfigError("window_aggregate: dt_s * sample_rate_hz = " + std::to_string(n) +
                          " is not a positive integer");
    return static_cast<std::size_t>(r);
}

/// Non-overlapping window means; a trailing partial window is dropped.
inline TimeSeries window_aggregate(const TimeSeries& x, double dt_s)
{
    const auto w = window_length(x.sample_rate_hz(), dt_s);
    const auto n_out = x.sample_count() / w;
    TimeSeries out(x.channel_count(), n_out, 1.0 / dt_s);
    for (std::size_t c = 0; c < x.channel_count(); ++c) {
        const auto in = x.channel(c);
        for (std::size_t k = 0; k < n_out; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < w; ++j)
                acc += in[k * w + j];
            out(c, k) = acc / static_cast<double>(w);
        }
    }
    return out;
}

struct PerChannelMaxAbs {
    std::vector<double> scale;

    /// Per-channel max |value| of a calibration segment.
    static PerChannelMaxAbs calibrate(const TimeSeries& calibration)
    {
        PerChannelMaxAbs m;
        m.scale.resize(calibration.channel_count(), 0.0);
        for (std::size_t c = 0; c < calibration.channel_count(); ++c) {
            for (double v : calibration.channel(c))
                m.scale[c] = std::max(m.scale[c], std::abs(v));
            if (!(m.scale[c] > 0.0))
                throw DegenerateInputError("normalize: channel " + std::to_string(c) +
                                           " is all zero in the calibration segment");
        }
        return m;
    }
};

struct GlobalScalar {
    double s = 1.0;
};

using NormalizeMode = std::variant<PerChannelMaxAbs, GlobalScalar>;

inline TimeSeries normalize(TimeSeries x, const NormalizeMode& mode)
{
    if (const auto* g = std::get_if<GlobalScalar>(&mode)) {
        if (!(g->s > 0.0))
            throw ConfigError("normalize: global scale must be positive");
        for (auto& v : x.values())
            v /= g->s;
        return x;
    }
    const auto& m = std::get<PerChannelMaxAbs>(mode);
    if (m.scale.size() != x.channel_count())
        throw ConfigError("normalize: calibration has " + std::to_string(m.scale.size()) +
                          " channels, signal has " + std::to_string(x.channel_count()));
    for (std::size_t c = 0; c < x.channel_count(); ++c) {
        if (!(m.scale[c] > 0.0))
            throw DegenerateInputError("normalize: channel " + std::to_string(c) + " has zero scale");
        for (auto& v : x.channel(c))
            v /= m.scale[c];
    }
    return x;
}

} // namespace emgpop
