// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "data_io.hpp"
#include "errors.hpp"
#include "eval_metrics.hpp"
#include "lif_encoder.hpp"
#include "readout.hpp"
#include "signal_core.hpp"

namespace emgpop {

/// Settings shared by every run; defaults follow the reference setup
/// (5-500 Hz band, 10 ms step, 200 ms readout filter, 20% spread). The
/// synaptic weight keeps a max-abs normalized drive in the sparse firing
/// regime at this step size; at w = 1 most neurons fire on every step.
struct PipelineConfig {
    double band_lo_hz = 5.0;
    double band_hi_hz = 500.0;
    double dt_s = 0.010;
    double tau_filt_s = 0.200;
    double syn_weight = 0.1;
    double relative_spread = 0.2;
    double ridge_lambda = 0.0;
    bool drop_redundant_features = true;
};

/// One point of the encoding grid.
struct EncodingPoint {
    double tau_syn_s = 0.010;
    double tau_m_s = 0.040;
    double threshold = 0.4;
    std::size_t population_size = 16;

    bool operator==(const EncodingPoint&) const = default;
};

/// Which samples are used for fitting and which for evaluation.
struct SplitProtocol {
    enum class Kind { session, repetition };
    Kind kind = Kind::session;
    std::uint16_t fit_session = 1;
    std::uint16_t eval_session = 2;
    // Repetition split: both sets drawn from `repetition_session`.
    std::uint16_t repetition_session = 1;
    std::vector<std::uint16_t> fit_repetitions;
    std::vector<std::uint16_t> eval_repetitions;

    void validate() const
    {
        if (kind == Kind::session) {
            if (fit_session == eval_session)
                throw ConfigError("split: fit and evaluation sessions must differ");
            return;
        }
        if (fit_repetitions.empty() || eval_repetitions.empty())
            throw ConfigError("split: repetition split needs fit and evaluation repetitions");
        for (auto r : fit_repetitions)
            if (std::find(eval_repetitions.begin(), eval_repetitions.end(), r) != eval_repetitions.end())
                throw ConfigError("split: repetition " + std::to_string(r) + " is in both fit and eval sets");
    }
};

/// A subject after preprocessing: normalized drives at 1/dt and aligned targets.
struct PreparedSubject {
    std::uint32_t subject_id = 0;
    TimeSeries fit_drive;
    TimeSeries eval_drive;
    Eigen::MatrixXd fit_targets;  // steps x 5, degrees
    Eigen::MatrixXd eval_targets; // steps x 5, degrees
    PerChannelMaxAbs scale;
};

/// Re-throws a stage failure with the stage name prefixed, keeping its category.
template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("stage '") + stage + "': " + e.what());
    } catch (const DataError& e) {
        throw DataError(std::string("stage '") + stage + "': " + e.what());
    }
}

namespace detail {

using Runs = std::vector<std::pair<std::size_t, std::size_t>>;

inline Runs split_runs(const SubjectRecording& rec, const SplitProtocol& p, bool fit)
{
    if (p.kind == SplitProtocol::Kind::session)
        return session_runs(rec, fit ? p.fit_session : p.eval_session);
    const auto& reps = fit ? p.fit_repetitions : p.eval_repetitions;
    Runs runs;
    for (std::size_t i = 0; i < rec.sample_count();) {
        const auto in = [&](std::size_t k) {
            return rec.session_id[k] == p.repetition_session &&
                   std::find(reps.begin(), reps.end(), rec.repetition_id[k]) != reps.end();
        };
        if (!in(i)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < rec.sample_count() && in(j))
            ++j;
        runs.emplace_back(i, j);
        i = j;
    }
    return runs;
}

// Each contiguous run is filtered, rectified and aggregated on its own, then concatenated.
inline std::pair<TimeSeries, Eigen::MatrixXd> preprocess_runs(const SubjectRecording& rec, const Runs& runs,
                                                              const PipelineConfig& cfg)
{
    std::vector<TimeSeries> drives, angles;
    std::size_t steps = 0;
    for (auto [b, e] : runs) {
        auto drive = window_aggregate(rectify(bandpass(rec.semg.slice(b, e), cfg.band_lo_hz, cfg.band_hi_hz)),
                                      cfg.dt_s);
        auto angle = window_aggregate(rec.doa_angles.slice(b, e), cfg.dt_s);
        steps += drive.sample_count();
        drives.push_back(std::move(drive));
        angles.push_back(std::move(angle));
    }
    if (steps == 0)
        throw DataError("segment is empty (no complete " + format_double(cfg.dt_s) + " s windows)");
    TimeSeries drive(kEmgChannels, steps, 1.0 / cfg.dt_s);
    Eigen::MatrixXd targets(static_cast<Eigen::Index>(steps), kDoaCount);
    std::size_t at = 0;
    for (std::size_t r = 0; r < drives.size(); ++r) {
        for (std::size_t t = 0; t < drives[r].sample_count(); ++t, ++at) {
            for (std::size_t c = 0; c < kEmgChannels; ++c)
                drive(c, at) = drives[r](c, t);
            for (std::size_t d = 0; d < kDoaChannels; ++d)
                targets(static_cast<Eigen::Index>(at), static_cast<Eigen::Index>(d)) = angles[r](d, t);
        }
    }
    return {std::move(drive), std::move(targets)};
}

} // namespace detail

/// Filters, rectifies, aggregates and normalizes both segments. Scales come
/// from the fit segment only.
inline PreparedSubject prepare_subject(const SubjectRecording& rec, const PipelineConfig& cfg,
                                       const SplitProtocol& protocol)
{
    return run_stage("preprocess", [&] {
        rec.validate();
        protocol.validate();
        PreparedSubject p;
        p.subject_id = rec.subject_id;
        auto [fit_drive, fit_targets] = detail::preprocess_runs(rec, detail::split_runs(rec, protocol, true), cfg);
        auto [eval_drive, eval_targets] =
            detail::preprocess_runs(rec, detail::split_runs(rec, protocol, false), cfg);
        p.scale = PerChannelMaxAbs::calibrate(fit_drive);
        p.fit_drive = normalize(std::move(fit_drive), p.scale);
        p.eval_drive = normalize(std::move(eval_drive), p.scale);
        p.fit_targets = std::move(fit_targets);
        p.eval_targets = std::move(eval_targets);
        return p;
    });
}

struct PipelineResult {
    LinearModel model;
    Eigen::MatrixXd eval_predictions;
    MaeReport report;
    std::size_t fit_spikes = 0;
    std::size_t eval_spikes = 0;
};

inline std::vector<PopulationSpec> population_specs(const EncodingPoint& point, const PipelineConfig& cfg,
                                                    std::uint64_t seed)
{
    PopulationSpec spec;
    spec.size = point.population_size;
    spec.mean_tau_m_s = point.tau_m_s;
    spec.mean_threshold = point.threshold;
    spec.relative_spread = cfg.relative_spread;
    spec.seed = seed;
    return std::vector<PopulationSpec>(kEmgChannels, spec);
}

/// Raster rows that never change over the run: silent neurons and neurons
/// firing on every step. Their smoothed traces carry no input information.
inline std::vector<bool> constant_rows(const SpikeRaster& r)
{
    std::vector<bool> out(r.neuron_count(), false);
    for (std::size_t n = 0; n < r.neuron_count(); ++n) {
        const auto row = r.row(n);
        out[n] = std::adjacent_find(row.begin(), row.end(), std::not_equal_to<>{}) == row.end();
    }
    return out;
}

/// Encode, smooth, fit on the fit segment and score on the evaluation segment.
inline PipelineResult run_pipeline(const PreparedSubject& subject, const EncodingPoint& point,
                                   const PipelineConfig& cfg, std::uint64_t seed, unsigned encode_jobs = 1,
                                   SpikeRaster* eval_raster_out = nullptr)
{
    const auto specs = population_specs(point, cfg, seed);
    const SynapseParams syn{point.tau_syn_s, cfg.syn_weight};

    PipelineResult r;
    auto [fit_raster, eval_raster] = run_stage("encode", [&] {
        return std::pair{encode_all(subject.fit_drive, specs, syn, cfg.dt_s, encode_jobs),
                         encode_all(subject.eval_drive, specs, syn, cfg.dt_s, encode_jobs)};
    });
    r.fit_spikes = fit_raster.spike_count();
    r.eval_spikes = eval_raster.spike_count();

    const auto fit_features = run_stage("smooth", [&] { return smooth(fit_raster, cfg.tau_filt_s); });
    const auto eval_features = run_stage("smooth", [&] { return smooth(eval_raster, cfg.tau_filt_s); });
    if (eval_raster_out)
        *eval_raster_out = std::move(eval_raster);

    r.model = run_stage("fit", [&] {
        FitOptions opts;
        if (cfg.drop_redundant_features) {
            opts.rank_policy = RankPolicy::truncate;
            opts.excluded = constant_rows(fit_raster);
        }
        return fit_linear(fit_features, subject.fit_targets, cfg.ridge_lambda, opts);
    });
    r.eval_predictions = run_stage("predict", [&] { return predict(r.model, eval_features); });
    r.report = run_stage("evaluate", [&] { return mae(subject.eval_targets, r.eval_predictions); });
    return r;
}

/// MAE of predicting the fit-segment mean angle at every evaluation step.
inline MaeReport constant_baseline_mae(const PreparedSubject& subject)
{
    const Eigen::RowVectorXd mean = subject.fit_targets.colwise().mean();
    const Eigen::MatrixXd pred = mean.replicate(subject.eval_targets.rows(), 1);
    return mae(subject.eval_targets, pred);
}

} // namespace emgpop
