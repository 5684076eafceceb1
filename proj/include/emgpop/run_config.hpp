// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "pipeline.hpp"
#include "sweep.hpp"
#include "synth.hpp"
#include "util.hpp"

namespace emgpop {

/// Everything a command needs besides paths, as one JSON document.
struct RunConfig {
    PipelineConfig pipeline;
    EncodingPoint encoding;
    GridSpec grid;
    SplitProtocol split;
    SynthConfig synth;
    std::vector<std::uint32_t> selection_subjects;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
};

inline nlohmann::json to_json(const RunConfig& c)
{
    using nlohmann::json;
    const auto& p = c.pipeline;
    const auto& s = c.synth;
    json j;
    j["seed"] = c.seed;
    j["jobs"] = c.jobs;
    j["pipeline"] = {{"band_lo_hz", p.band_lo_hz},
                     {"band_hi_hz", p.band_hi_hz},
                     {"dt_s", p.dt_s},
                     {"tau_filt_s", p.tau_filt_s},
                     {"syn_weight", p.syn_weight},
                     {"relative_spread", p.relative_spread},
                     {"ridge_lambda", p.ridge_lambda},
                     {"drop_redundant_features", p.drop_redundant_features}};
    j["encoding"] = {{"tau_syn_s", c.encoding.tau_syn_s},
                     {"tau_m_s", c.encoding.tau_m_s},
                     {"threshold", c.encoding.threshold},
                     {"population_size", c.encoding.population_size}};
    j["grid"] = c.grid;
    j["split"] = {{"kind", c.split.kind == SplitProtocol::Kind::session ? "session" : "repetition"},
                  {"fit_session", c.split.fit_session},
                  {"eval_session", c.split.eval_session},
                  {"repetition_session", c.split.repetition_session},
                  {"fit_repetitions", c.split.fit_repetitions},
                  {"eval_repetitions", c.split.eval_repetitions}};
    j["synth"] = {{"duration_s", s.duration_s},
                  {"gesture_count", s.gesture_count},
                  {"repetitions", s.repetitions},
                  {"noise_level", s.noise_level},
                  {"amplitude_exponent", s.amplitude_exponent},
                  {"subject_id", s.subject_id},
                  {"sample_rate_hz", s.sample_rate_hz}};
    if (s.activation_gain)
        j["synth"]["activation_gain"] = *s.activation_gain;
    j["selection_subjects"] = c.selection_subjects;
    return j;
}

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& where)
{
    if (!j.is_object())
        throw ConfigError("config: '" + where + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known)
            ok = ok || key == k;
        if (!ok)
            throw ConfigError("config: unknown key '" + where + (where.empty() ? "" : ".") + key + "'");
    }
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out)
{
    if (j.contains(key))
        out = j.at(key).get<T>();
}

} // namespace detail

/// Missing keys keep their defaults; unknown keys are rejected.
inline RunConfig run_config_from_json(const nlohmann::json& j)
{
    RunConfig c;
    try {
        detail::reject_unknown(j, {"seed", "jobs", "pipeline", "encoding", "grid", "split", "synth", "selection_subjects"},
                               "");
        detail::read_opt(j, "seed", c.seed);
        detail::read_opt(j, "jobs", c.jobs);
        detail::read_opt(j, "selection_subjects", c.selection_subjects);
        if (j.contains("pipeline")) {
            const auto& p = j["pipeline"];
            detail::reject_unknown(p,
                                   {"band_lo_hz", "band_hi_hz", "dt_s", "tau_filt_s", "syn_weight", "relative_spread",
                                    "ridge_lambda", "drop_redundant_features"},
                                   "pipeline");
            detail::read_opt(p, "band_lo_hz", c.pipeline.band_lo_hz);
            detail::read_opt(p, "band_hi_hz", c.pipeline.band_hi_hz);
            detail::read_opt(p, "dt_s", c.pipeline.dt_s);
            detail::read_opt(p, "tau_filt_s", c.pipeline.tau_filt_s);
            detail::read_opt(p, "syn_weight", c.pipeline.syn_weight);
            detail::read_opt(p, "relative_spread", c.pipeline.relative_spread);
            detail::read_opt(p, "ridge_lambda", c.pipeline.ridge_lambda);
            detail::read_opt(p, "drop_redundant_features", c.pipeline.drop_redundant_features);
        }
        if (j.contains("encoding")) {
            const auto& e = j["encoding"];
            detail::reject_unknown(e, {"tau_syn_s", "tau_m_s", "threshold", "population_size"}, "encoding");
            detail::read_opt(e, "tau_syn_s", c.encoding.tau_syn_s);
            detail::read_opt(e, "tau_m_s", c.encoding.tau_m_s);
            detail::read_opt(e, "threshold", c.encoding.threshold);
            detail::read_opt(e, "population_size", c.encoding.population_size);
        }
        if (j.contains("grid")) {
            detail::reject_unknown(j["grid"],
                                   {"tau_syn_s", "tau_m_s", "threshold", "population_size", "tau_filt_s", "seeds"},
                                   "grid");
            c.grid = j["grid"].get<GridSpec>();
        }
        if (j.contains("split")) {
            const auto& s = j["split"];
            detail::reject_unknown(s,
                                   {"kind", "fit_session", "eval_session", "repetition_session", "fit_repetitions",
                                    "eval_repetitions"},
                                   "split");
            if (s.contains("kind")) {
                const auto kind = s["kind"].get<std::string>();
                if (kind == "session")
                    c.split.kind = SplitProtocol::Kind::session;
                else if (kind == "repetition")
                    c.split.kind = SplitProtocol::Kind::repetition;
                else
                    throw ConfigError("config: split.kind must be 'session' or 'repetition'");
            }
            detail::read_opt(s, "fit_session", c.split.fit_session);
            detail::read_opt(s, "eval_session", c.split.eval_session);
            detail::read_opt(s, "repetition_session", c.split.repetition_session);
            detail::read_opt(s, "fit_repetitions", c.split.fit_repetitions);
            detail::read_opt(s, "eval_repetitions", c.split.eval_repetitions);
        }
        if (j.contains("synth")) {
            const auto& s = j["synth"];
            detail::reject_unknown(s,
                                   {"duration_s", "gesture_count", "repetitions", "noise_level", "amplitude_exponent",
                                    "subject_id", "sample_rate_hz", "activation_gain"},
                                   "synth");
            detail::read_opt(s, "duration_s", c.synth.duration_s);
            detail::read_opt(s, "gesture_count", c.synth.gesture_count);
            detail::read_opt(s, "repetitions", c.synth.repetitions);
            detail::read_opt(s, "noise_level", c.synth.noise_level);
            detail::read_opt(s, "amplitude_exponent", c.synth.amplitude_exponent);
            detail::read_opt(s, "subject_id", c.synth.subject_id);
            detail::read_opt(s, "sample_rate_hz", c.synth.sample_rate_hz);
            if (s.contains("activation_gain"))
                c.synth.activation_gain = s["activation_gain"].get<GainMatrix>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
    return run_config_from_json(j);
}

/// Hash of the canonical JSON form without `jobs`; identical configs hash
/// identically regardless of key order or formatting in the source file.
inline std::string config_hash(const RunConfig& c)
{
    auto j = to_json(c);
    j.erase("jobs");
    Fnv1a h;
    h.update(j.dump());
    return h.hex();
}

} // namespace emgpop
