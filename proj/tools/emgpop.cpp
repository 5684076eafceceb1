// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "emgpop/data_io.hpp"
#include "emgpop/errors.hpp"
#include "emgpop/eval_metrics.hpp"
#include "emgpop/lif_encoder.hpp"
#include "emgpop/pipeline.hpp"
#include "emgpop/readout.hpp"
#include "emgpop/run_config.hpp"
#include "emgpop/sweep.hpp"
#include "emgpop/synth.hpp"
#include "emgpop/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace emgpop;

namespace {

enum ExitCode : int { kOk = 0, kConfig = 2, kData = 3, kInternal = 4, kIncomplete = 5 };

struct Universal {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    bool resume = false;
};

void add_universal(CLI::App* cmd, Universal& u)
{
    cmd->add_option("--config", u.config, "JSON run config; missing keys take defaults");
    cmd->add_option("--seed", u.seed, "base seed (default 1)");
    cmd->add_option("--jobs", u.jobs, "worker threads (default 1); results do not depend on it");
    cmd->add_flag("--resume", u.resume, "continue an interrupted sweep from its journal");
}

RunConfig effective_config(const Universal& u)
{
    RunConfig c = u.config ? load_run_config(*u.config) : RunConfig{};
    if (u.seed)
        c.seed = *u.seed;
    if (u.jobs)
        c.jobs = *u.jobs;
    return c;
}

json provenance(const RunConfig& c, const std::string& dataset_hash = {})
{
    json p{{"version", std::string(kVersion)}, {"config_hash", config_hash(c)}, {"seed", c.seed}};
    if (!dataset_hash.empty())
        p["dataset_hash"] = dataset_hash;
    return p;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ConfigError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out)
        throw ConfigError("write failed for '" + path.string() + "'");
}

void require_dir(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw ConfigError("output directory '" + dir.string() + "' does not exist");
}

std::string file_hash(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Fnv1a h;
    h.update(bytes);
    return h.hex();
}

// -- synth ---------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    std::optional<std::uint32_t> subject_id;
    std::optional<double> duration_s;
    std::optional<double> noise_level;
};

int cmd_synth(const Universal& u, const SynthArgs& a)
{
    auto c = effective_config(u);
    if (a.subject_id)
        c.synth.subject_id = *a.subject_id;
    if (a.duration_s)
        c.synth.duration_s = *a.duration_s;
    if (a.noise_level)
        c.synth.noise_level = *a.noise_level;
    c.synth.seed = c.seed;

    const fs::path out(a.out);
    const auto parent = out.has_parent_path() ? out.parent_path() : fs::path(".");
    require_dir(parent);
    const auto rec = synth_generate(c.synth);
    write_recording(rec, out);
    std::ofstream side(sidecar_path(out), std::ios::app);
    side << "generator: emgpop synth\n"
         << "generator_version: " << kVersion << "\n"
         << "generator_seed: " << c.seed << "\n"
         << "config_hash: " << config_hash(c) << "\n";
    std::cout << "wrote " << out.string() << " (subject " << rec.subject_id << ", " << rec.sample_count()
              << " samples, hash " << recording_hash(rec) << ")\n";
    return kOk;
}

// -- validate ------------------------------------------------------------------

int cmd_validate(const std::vector<std::string>& paths)
{
    json out = json::array();
    for (const auto& p : paths) {
        const auto rec = load_recording(p);
        std::vector<std::uint16_t> sessions(rec.session_id.begin(), rec.session_id.end());
        std::sort(sessions.begin(), sessions.end());
        sessions.erase(std::unique(sessions.begin(), sessions.end()), sessions.end());
        out.push_back({{"path", p},
                       {"subject_id", rec.subject_id},
                       {"samples", rec.sample_count()},
                       {"sample_rate_hz", rec.sample_rate_hz()},
                       {"sessions", sessions},
                       {"content_hash", recording_hash(rec)},
                       {"valid", true}});
    }
    std::cout << out.dump(2) << "\n";
    return kOk;
}

// -- fit-eval ------------------------------------------------------------------

struct FitEvalArgs {
    std::string recording;
    std::string out_dir;
    std::optional<double> tau_syn_s;
    std::optional<double> tau_m_s;
    std::optional<double> threshold;
    std::optional<std::size_t> population_size;
    bool raster = false;
};

int cmd_fit_eval(const Universal& u, const FitEvalArgs& a)
{
    auto c = effective_config(u);
    if (a.tau_syn_s)
        c.encoding.tau_syn_s = *a.tau_syn_s;
    if (a.tau_m_s)
        c.encoding.tau_m_s = *a.tau_m_s;
    if (a.threshold)
        c.encoding.threshold = *a.threshold;
    if (a.population_size)
        c.encoding.population_size = *a.population_size;

    const fs::path dir(a.out_dir);
    require_dir(dir);
    try {
        const auto rec = load_recording(a.recording);
        const auto subject = prepare_subject(rec, c.pipeline, c.split);
        SpikeRaster eval_raster;
        const auto r = run_pipeline(subject, c.encoding, c.pipeline, c.seed, c.jobs, a.raster ? &eval_raster : nullptr);
        const auto baseline = constant_baseline_mae(subject);

        const auto prov = provenance(c, recording_hash(rec));
        write_model(r.model, dir / "model.bin");

        std::string csv = "# emgpop fit-eval predictions (degrees)\n";
        for (const auto& [k, v] : prov.items())
            csv += "# " + k + "=" + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
        csv += "step,target_doa1,target_doa2,target_doa3,target_doa4,target_doa5,"
               "pred_doa1,pred_doa2,pred_doa3,pred_doa4,pred_doa5\n";
        for (Eigen::Index t = 0; t < subject.eval_targets.rows(); ++t) {
            csv += std::to_string(t);
            for (Eigen::Index d = 0; d < kDoaCount; ++d)
                csv += "," + format_double(subject.eval_targets(t, d));
            for (Eigen::Index d = 0; d < kDoaCount; ++d)
                csv += "," + format_double(r.eval_predictions(t, d));
            csv += "\n";
        }
        write_text(dir / "predictions.csv", csv);
        if (a.raster)
            write_raster(eval_raster, dir / "eval_raster.bin");

        json report;
        report["subject_id"] = rec.subject_id;
        report["mae"] = r.report;
        report["baseline_mae"] = baseline;
        report["fit_steps"] = subject.fit_targets.rows();
        report["eval_steps"] = subject.eval_targets.rows();
        report["fit_spikes"] = r.fit_spikes;
        report["eval_spikes"] = r.eval_spikes;
        report["encoding"] = to_json(c)["encoding"];
        report["model_hash"] = file_hash(dir / "model.bin");
        report["provenance"] = prov;
        report["config"] = to_json(c);
        write_text(dir / "report.json", report.dump(2) + "\n");
        std::cout << "MAE " << format_double(r.report.overall_deg) << " deg over " << r.report.n_infer
                  << " inferences (baseline " << format_double(baseline.overall_deg) << ")\n";
    } catch (const ConfigError&) {
        std::cerr << "config: " << to_json(c).dump() << "\n";
        throw;
    } catch (const DataError&) {
        std::cerr << "config: " << to_json(c).dump() << "\n";
        throw;
    }
    return kOk;
}

// -- sweep ---------------------------------------------------------------------

struct SweepArgs {
    std::vector<std::string> recordings;
    std::string out_dir;
    std::optional<std::size_t> stop_after;
};

std::string slice_name(double threshold, std::size_t size)
{
    return "contour_threshold_" + format_double(threshold) + "_size_" + std::to_string(size) + ".csv";
}

int cmd_sweep(const Universal& u, const SweepArgs& a)
{
    const auto c = effective_config(u);
    const fs::path dir(a.out_dir);
    require_dir(dir);

    std::vector<SubjectRecording> dataset;
    for (const auto& p : a.recordings)
        dataset.push_back(load_recording(p));

    // Grid seeds are offsets from the base seed.
    GridSpec grid = c.grid;
    for (auto& s : grid.seeds)
        s += c.seed;

    SweepOptions opts;
    opts.jobs = c.jobs;
    opts.journal = dir / "results.journal";
    opts.resume = u.resume;
    opts.stop_after = a.stop_after;
    opts.base_seed = c.seed;
    const auto result = run_sweep(dataset, grid, c.split, c.pipeline, opts);

    {
        std::string timings = "# wall-clock seconds per row; varies between runs\n"
                              "tau_syn_s,tau_m_s,threshold,population_size,seed,subject_id,wall_time_s\n";
        for (const auto& r : result.rows)
            timings += format_double(r.point.tau_syn_s) + "," + format_double(r.point.tau_m_s) + "," +
                       format_double(r.point.threshold) + "," + std::to_string(r.point.population_size) + "," +
                       std::to_string(r.seed) + "," + std::to_string(r.subject_id) + "," +
                       format_double(r.wall_time_s) + "\n";
        write_text(dir / "timings.csv", timings);
    }

    if (!result.complete) {
        write_sweep_csv(result, dir / "results.partial.csv");
        std::cerr << "sweep stopped after " << result.rows.size() << " of " << result.expected_rows()
                  << " rows; rerun with --resume to finish\n";
        return kIncomplete;
    }
    fs::remove(dir / "results.partial.csv");
    write_sweep_csv(result, dir / "results.csv");

    const auto failed =
        std::count_if(result.rows.begin(), result.rows.end(), [](const SweepRow& r) { return !r.ok(); });
    if (failed > 0) {
        std::cerr << failed << " of " << result.rows.size() << " rows failed; see the status column of "
                  << (dir / "results.csv").string() << "\n";
        return kData;
    }

    auto summary = sweep_summary(result, c.selection_subjects);
    summary["provenance"]["run_config_hash"] = config_hash(c);
    summary["provenance"]["seed"] = c.seed;
    write_text(dir / "summary.json", summary.dump(2) + "\n");

    for (double th : result.grid.threshold)
        for (auto n : result.grid.population_size) {
            std::ofstream out(dir / slice_name(th, n), std::ios::binary | std::ios::trunc);
            write_contour_csv(export_contours(result, th, n), out, result.provenance);
        }
    std::cout << "sweep complete: " << result.rows.size() << " rows; best " << summary["best"].dump() << "\n";
    return kOk;
}

// -- export-contours -------------------------------------------------------------

struct ContourArgs {
    std::string results;
    double threshold = 0.4;
    std::size_t population_size = 16;
    std::vector<std::uint32_t> subjects;
    std::string out;
};

int cmd_export_contours(const ContourArgs& a)
{
    const auto result = read_sweep_csv(a.results);
    const auto table = export_contours(result, a.threshold, a.population_size, a.subjects);
    if (a.out.empty() || a.out == "-") {
        write_contour_csv(table, std::cout, result.provenance);
        return kOk;
    }
    std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ConfigError("cannot open '" + a.out + "' for writing");
    write_contour_csv(table, out, result.provenance);
    return kOk;
}

// -- import-csv ------------------------------------------------------------------

struct ImportArgs {
    std::string csv;
    std::uint32_t subject_id = 1;
    double sample_rate_hz = 2000.0;
    std::string out;
};

int cmd_import_csv(const ImportArgs& a)
{
    const auto rec = import_csv(a.csv, a.subject_id, a.sample_rate_hz);
    write_recording(rec, a.out);
    std::cout << "wrote " << a.out << " (" << rec.sample_count() << " samples)\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"emgpop: spiking population encoding of sEMG for hand kinematics regression"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    Universal u;

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "generate a synthetic two-session recording");
    add_universal(c_synth, u);
    c_synth->add_option("--out", synth.out, "output recording path")->required();
    c_synth->add_option("--subject-id", synth.subject_id, "subject id (default 1)");
    c_synth->add_option("--duration", synth.duration_s, "seconds per session (default 54)");
    c_synth->add_option("--noise", synth.noise_level, "additive noise level (default 0.05)");

    std::vector<std::string> validate_paths;
    auto* c_validate = app.add_subcommand("validate", "load recordings and check every invariant");
    add_universal(c_validate, u);
    c_validate->add_option("recordings", validate_paths, "recording files")->required();

    FitEvalArgs fe;
    auto* c_fit = app.add_subcommand("fit-eval", "fit the readout on one session and score the other");
    add_universal(c_fit, u);
    c_fit->add_option("--recording", fe.recording, "recording file")->required();
    c_fit->add_option("--out-dir", fe.out_dir, "directory for report.json, model.bin, predictions.csv")->required();
    c_fit->add_option("--tau-syn", fe.tau_syn_s, "synaptic time constant, s (default 0.010)");
    c_fit->add_option("--tau-m", fe.tau_m_s, "membrane time constant, s (default 0.040)");
    c_fit->add_option("--threshold", fe.threshold, "firing threshold (default 0.4)");
    c_fit->add_option("--population-size", fe.population_size, "neurons per channel (default 16)");
    c_fit->add_flag("--raster", fe.raster, "also write the evaluation spike raster");

    SweepArgs sw;
    auto* c_sweep = app.add_subcommand("sweep", "evaluate the encoding grid on every recording");
    add_universal(c_sweep, u);
    c_sweep->add_option("--recording", sw.recordings, "recording files, one per subject")->required();
    c_sweep->add_option("--out-dir", sw.out_dir, "output directory")->required();
    c_sweep->add_option("--stop-after", sw.stop_after, "stop after this many new rows")->group("");

    ContourArgs ca;
    auto* c_contour = app.add_subcommand("export-contours", "tau_syn x tau_m table of mean MAE from a results CSV");
    add_universal(c_contour, u);
    c_contour->add_option("--results", ca.results, "results.csv from a sweep")->required();
    c_contour->add_option("--threshold", ca.threshold, "fixed threshold")->capture_default_str();
    c_contour->add_option("--population-size", ca.population_size, "fixed population size")->capture_default_str();
    c_contour->add_option("--subjects", ca.subjects, "average over these subjects (default all)");
    c_contour->add_option("--out", ca.out, "output CSV (default stdout)");

    ImportArgs im;
    auto* c_import = app.add_subcommand("import-csv", "convert a per-sample CSV export into a recording file");
    add_universal(c_import, u);
    c_import->add_option("--csv", im.csv, "input CSV")->required();
    c_import->add_option("--subject-id", im.subject_id, "subject id")->capture_default_str();
    c_import->add_option("--sample-rate", im.sample_rate_hz, "sample rate, Hz")->capture_default_str();
    c_import->add_option("--out", im.out, "output recording path")->required();

    auto* c_defaults = app.add_subcommand("default-config", "print the effective run config as JSON");
    add_universal(c_defaults, u);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (c_synth->parsed())
            return cmd_synth(u, synth);
        if (c_validate->parsed())
            return cmd_validate(validate_paths);
        if (c_fit->parsed())
            return cmd_fit_eval(u, fe);
        if (c_sweep->parsed())
            return cmd_sweep(u, sw);
        if (c_contour->parsed())
            return cmd_export_contours(ca);
        if (c_import->parsed())
            return cmd_import_csv(im);
        if (c_defaults->parsed()) {
            std::cout << to_json(effective_config(u)).dump(2) << "\n";
            return kOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kInternal;
}
