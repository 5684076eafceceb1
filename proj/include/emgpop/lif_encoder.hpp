// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "binary_io.hpp"
#include "errors.hpp"
#include "signal_core.hpp"
#include "util.hpp"

namespace emgpop {

struct SynapseParams {
    double tau_syn_s = 0.010;
    double weight = 1.0;

    void validate() const
    {
        if (!(tau_syn_s > 0.0) || !(weight > 0.0))
            throw ConfigError("SynapseParams: tau_syn_s and weight must be positive");
    }
};

struct NeuronParams {
    double tau_m_s = 0.030;
    double threshold = 0.4;

    bool operator==(const NeuronParams&) const = default;
};

/// Distribution of a heterogeneous population. Parameters are drawn from
/// Normal(mean, (relative_spread * mean)^2), non-positive draws rejected.
struct PopulationSpec {
    std::size_t size = 16;
    double mean_tau_m_s = 0.030;
    double mean_threshold = 0.4;
    double relative_spread = 0.2;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (size < 1)
            throw ConfigError("PopulationSpec: size must be >= 1");
        if (!(mean_tau_m_s > 0.0) || !(mean_threshold > 0.0))
            throw ConfigError("PopulationSpec: means must be positive");
        if (!(relative_spread >= 0.0 && relative_spread < 1.0))
            throw ConfigError("PopulationSpec: relative_spread must lie in [0, 1)");
    }
};

struct EncoderState {
    double syn_current = 0.0;
    double membrane = 0.0;
};

struct NeuronLabel {
    std::uint32_t channel = 0;
    std::uint32_t neuron = 0;

    bool operator==(const NeuronLabel&) const = default;
};

/// Binary neuron x timestep matrix.
class SpikeRaster {
public:
    SpikeRaster() = default;
    SpikeRaster(std::vector<NeuronLabel> labels, std::size_t steps, double dt_s)
        : spikes_(labels.size() * steps, 0), labels_(std::move(labels)), steps_(steps), dt_(dt_s)
    {
        if (!(dt_s > 0.0))
            throw ConfigError("SpikeRaster: dt_s must be positive");
    }

    std::size_t neuron_count() const { return labels_.size(); }
    std::size_t step_count() const { return steps_; }
    double dt_s() const { return dt_; }
    const std::vector<NeuronLabel>& labels() const { return labels_; }

    std::uint8_t operator()(std::size_t n, std::size_t t) const { return spikes_[n * steps_ + t]; }
    std::uint8_t& operator()(std::size_t n, std::size_t t) { return spikes_[n * steps_ + t]; }

    std::span<const std::uint8_t> row(std::size_t n) const { return {spikes_.data() + n * steps_, steps_}; }
    std::span<std::uint8_t> row(std::size_t n) { return {spikes_.data() + n * steps_, steps_}; }

    std::size_t spike_count() const
    {
        std::size_t total = 0;
        for (auto s : spikes_)
            total += s;
        return total;
    }

    /// Appends the rows of another raster with the same length and dt.
    void append(const SpikeRaster& other)
    {
        if (labels_.empty() && spikes_.empty()) {
            *this = other;
            return;
        }
        if (other.steps_ != steps_ || other.dt_ != dt_)
            throw ConfigError("SpikeRaster::append: step count or dt mismatch");
        labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
        spikes_.insert(spikes_.end(), other.spikes_.begin(), other.spikes_.end());
    }

    bool operator==(const SpikeRaster&) const = default;

private:
    std::vector<std::uint8_t> spikes_;
    std::vector<NeuronLabel> labels_;
    std::size_t steps_ = 0;
    double dt_ = 1.0;
};

/// Draws the population. Neuron i uses its own stream seeded from
/// (spec.seed, stream, i), so results do not depend on the draw order.
inline std::vector<NeuronParams> sample_population(const PopulationSpec& spec, std::uint64_t stream = 0)
{
    spec.validate();
    std::vector<NeuronParams> out(spec.size);
    if (spec.relative_spread == 0.0) {
        for (auto& p : out)
            p = {spec.mean_tau_m_s, spec.mean_threshold};
        return out;
    }
    const auto positive_draw = [](std::mt19937_64& rng, double mean, double spread) {
        std::normal_distribution<double> dist(mean, spread * mean);
        double v;
        do {
            v = dist(rng);
        } while (!(v > 0.0));
        return v;
    };
    for (std::size_t i = 0; i < spec.size; ++i) {
        std::mt19937_64 rng(derive_seed(spec.seed, stream, i));
        out[i].tau_m_s = positive_draw(rng, spec.mean_tau_m_s, spec.relative_spread);
        out[i].threshold = positive_draw(rng, spec.mean_threshold, spec.relative_spread);
    }
    return out;
}

/// Precomputed decay factors for one neuron at a fixed step.
struct LifKernel {
    double alpha;
    double beta;
    double weight;
    double threshold;

    LifKernel(const SynapseParams& syn, const NeuronParams& p, double dt_s)
        : alpha(std::exp(-dt_s / syn.tau_syn_s)), beta(std::exp(-dt_s / p.tau_m_s)), weight(syn.weight),
          threshold(p.threshold)
    {
    }

    // Synapse decays and integrates first; the membrane then integrates the
    // updated current. Reset is by subtraction, no refractory period.
    bool step(EncoderState& s, double drive) const
    {
        s.syn_current = alpha * s.syn_current + weight * drive;
        s.membrane = beta * s.membrane + s.syn_current;
        if (s.membrane >= threshold) {
            s.membrane -= threshold;
            return true;
        }
        return false;
    }
};

inline std::pair<EncoderState, bool> lif_step(EncoderState state, double drive, const SynapseParams& syn,
                                              const NeuronParams& params, double dt_s)
{
    const bool spike = LifKernel(syn, params, dt_s).step(state, drive);
    return {state, spike};
}

namespace detail {

inline void check_drive_rate(const TimeSeries& drive, double dt_s)
{
    if (!(dt_s > 0.0))
        throw ConfigError("encode: dt_s must be positive");
    const double expected = 1.0 / dt_s;
    if (std::abs(drive.sample_rate_hz() - expected) > 1e-9 * expected)
        throw ConfigError("encode: drive sample rate " + std::to_string(drive.sample_rate_hz()) +
                          " Hz does not match 1/dt = " + std::to_string(expected) + " Hz");
}

inline SpikeRaster encode_samples(std::span<const double> drive, std::span<const NeuronParams> population,
                                  const SynapseParams& syn, double dt_s, std::uint32_t channel)
{
    std::vector<NeuronLabel> labels(population.size());
    for (std::size_t i = 0; i < population.size(); ++i)
        labels[i] = {channel, static_cast<std::uint32_t>(i)};
    SpikeRaster raster(std::move(labels), drive.size(), dt_s);
    for (std::size_t i = 0; i < population.size(); ++i) {
        const LifKernel k(syn, population[i], dt_s);
        EncoderState s;
        auto row = raster.row(i);
        for (std::size_t t = 0; t < drive.size(); ++t)
            row[t] = k.step(s, drive[t]) ? 1 : 0;
    }
    return raster;
}

} // namespace detail

/// Spike trains of one population driven by a single-channel drive sampled at 1/dt.
inline SpikeRaster encode_channel(const TimeSeries& drive, std::span<const NeuronParams> population,
                                  const SynapseParams& syn, double dt_s, std::uint32_t channel = 0)
{
    syn.validate();
    if (drive.channel_count() != 1)
        throw ConfigError("encode_channel: expected a single-channel drive");
    detail::check_drive_rate(drive, dt_s);
    for (double v : drive.channel(0))
        if (!(v >= 0.0))
            throw DataError("encode_channel: drive must be nonnegative and finite");
    return detail::encode_samples(drive.channel(0), population, syn, dt_s, channel);
}

/// Population of each channel, sampled on the stream of its channel index.
inline std::vector<std::vector<NeuronParams>> sample_populations(std::span<const PopulationSpec> specs)
{
    std::vector<std::vector<NeuronParams>> pops;
    pops.reserve(specs.size());
    for (std::size_t c = 0; c < specs.size(); ++c)
        pops.push_back(sample_population(specs[c], c));
    return pops;
}

/// Encodes every channel with its own population and stacks rows in channel
/// order. `jobs` > 1 encodes channels concurrently; output is identical.
inline SpikeRaster encode_all(const TimeSeries& drives, std::span<const PopulationSpec> specs,
                              const SynapseParams& syn, double dt_s, unsigned jobs = 1)
{
    syn.validate();
    if (specs.size() != drives.channel_count())
        throw ConfigError("encode_all: " + std::to_string(specs.size()) + " population specs for " +
                          std::to_string(drives.channel_count()) + " channels");
    detail::check_drive_rate(drives, dt_s);
    for (double v : drives.values())
        if (!(v >= 0.0))
            throw DataError("encode_all: drive must be nonnegative and finite");

    const auto pops = sample_populations(specs);
    const std::size_t n = drives.channel_count();
    std::vector<SpikeRaster> parts(n);
    const auto work = [&](std::size_t c) {
        parts[c] = detail::encode_samples(drives.channel(c), pops[c], syn, dt_s, static_cast<std::uint32_t>(c));
    };

    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    if (jobs == 1) {
        for (std::size_t c = 0; c < n; ++c)
            work(c);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned j = 0; j < jobs; ++j)
            pool.emplace_back([&, j] {
                for (std::size_t c = j; c < n; c += jobs)
                    work(c);
            });
    }

    SpikeRaster out;
    for (const auto& p : parts)
        out.append(p);
    return out;
}

// -- raster export ------------------------------------------------------------
//
// Layout (little-endian):
//   8 bytes  magic "EPRASTER"
//   u32      version (1)
//   f64      dt_s
//   u32      neuron count N
//   u64      step count T
//   N x (u32 channel, u32 neuron)   row labels
//   u64      event count E
//   E x u32  neuron row of each event    (column 1)
//   E x u64  timestep of each event      (column 2)
// Events are ordered by row, then timestep.

inline constexpr std::string_view kRasterMagic = "EPRASTER";
inline constexpr std::uint32_t kRasterVersion = 1;

inline void write_raster(const SpikeRaster& r, const std::filesystem::path& path)
{
    binio::Writer w;
    w.bytes(kRasterMagic);
    w.uint<std::uint32_t>(kRasterVersion);
    w.f64(r.dt_s());
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(r.neuron_count()));
    w.uint<std::uint64_t>(r.step_count());
    for (const auto& l : r.labels()) {
        w.uint<std::uint32_t>(l.channel);
        w.uint<std::uint32_t>(l.neuron);
    }
    std::vector<std::uint32_t> rows;
    std::vector<std::uint64_t> steps;
    for (std::size_t n = 0; n < r.neuron_count(); ++n)
        for (std::size_t t = 0; t < r.step_count(); ++t)
            if (r(n, t)) {
                rows.push_back(static_cast<std::uint32_t>(n));
                steps.push_back(t);
            }
    w.uint<std::uint64_t>(rows.size());
    for (auto v : rows)
        w.uint<std::uint32_t>(v);
    for (auto v : steps)
        w.uint<std::uint64_t>(v);
    w.save(path);
}

inline SpikeRaster read_raster(const std::filesystem::path& path)
{
    auto rd = binio::Reader::from_file(path);
    if (rd.bytes(kRasterMagic.size()) != kRasterMagic)
        throw DataError(rd.what() + ": not a spike raster file");
    if (const auto v = rd.uint<std::uint32_t>(); v != kRasterVersion)
        throw FormatVersionError(rd.what() + ": raster version " + std::to_string(v) + ", expected " +
                                 std::to_string(kRasterVersion));
    const double dt = rd.f64();
    const auto n = rd.uint<std::uint32_t>();
    const auto t = rd.uint<std::uint64_t>();
    rd.need(static_cast<std::size_t>(n) * 8);
    std::vector<NeuronLabel> labels(n);
    for (auto& l : labels) {
        l.channel = rd.uint<std::uint32_t>();
        l.neuron = rd.uint<std::uint32_t>();
    }
    const auto e = rd.uint<std::uint64_t>();
    rd.need(static_cast<std::size_t>(e) * 12);
    SpikeRaster r(std::move(labels), static_cast<std::size_t>(t), dt);
    std::vector<std::uint32_t> rows(e);
    for (auto& v : rows)
        v = rd.uint<std::uint32_t>();
    for (std::uint64_t i = 0; i < e; ++i) {
        const auto step = rd.uint<std::uint64_t>();
        if (rows[i] >= n || step >= t)
            throw DataError(rd.what() + ": event out of range");
        r(rows[i], static_cast<std::size_t>(step)) = 1;
    }
    rd.expect_end();
    return r;
}

} // namespace emgpop
