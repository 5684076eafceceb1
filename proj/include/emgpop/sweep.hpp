// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "data_io.hpp"
#include "errors.hpp"
#include "eval_metrics.hpp"
#include "pipeline.hpp"
#include "util.hpp"

namespace emgpop {

/// Cartesian grid over encoding parameters; defaults are the full reference sweep.
struct GridSpec {
    std::vector<double> tau_syn_s{0.002, 0.006, 0.008, 0.010};
    std::vector<double> tau_m_s{0.010, 0.020, 0.030, 0.040};
    std::vector<double> threshold{0.4, 0.5, 0.6};
    std::vector<std::size_t> population_size{1, 8, 16, 32, 64};
    double tau_filt_s = 0.200;
    std::vector<std::uint64_t> seeds{0, 1, 2};

    void validate() const
    {
        if (tau_syn_s.empty() || tau_m_s.empty() || threshold.empty() || population_size.empty() || seeds.empty())
            throw ConfigError("grid: every parameter list must be non-empty");
        for (const auto* list : {&tau_syn_s, &tau_m_s, &threshold})
            for (double v : *list)
                if (!(v > 0.0))
                    throw ConfigError("grid: parameter values must be positive");
        for (auto n : population_size)
            if (n < 1)
                throw ConfigError("grid: population sizes must be >= 1");
        if (!(tau_filt_s > 0.0))
            throw ConfigError("grid: tau_filt_s must be positive");
    }

    /// Grid points, tau_syn outermost and population size innermost.
    std::vector<EncodingPoint> points() const
    {
        std::vector<EncodingPoint> out;
        for (double ts : tau_syn_s)
            for (double tm : tau_m_s)
                for (double th : threshold)
                    for (auto n : population_size)
                        out.push_back({ts, tm, th, n});
        return out;
    }

    std::size_t point_count() const
    {
        return tau_syn_s.size() * tau_m_s.size() * threshold.size() * population_size.size();
    }
};

inline void to_json(nlohmann::json& j, const GridSpec& g)
{
    j = nlohmann::json{{"tau_syn_s", g.tau_syn_s},   {"tau_m_s", g.tau_m_s},
                       {"threshold", g.threshold},   {"population_size", g.population_size},
                       {"tau_filt_s", g.tau_filt_s}, {"seeds", g.seeds}};
}

inline void from_json(const nlohmann::json& j, GridSpec& g)
{
    GridSpec d;
    g.tau_syn_s = j.value("tau_syn_s", d.tau_syn_s);
    g.tau_m_s = j.value("tau_m_s", d.tau_m_s);
    g.threshold = j.value("threshold", d.threshold);
    g.population_size = j.value("population_size", d.population_size);
    g.tau_filt_s = j.value("tau_filt_s", d.tau_filt_s);
    g.seeds = j.value("seeds", d.seeds);
}

inline std::string describe(const PipelineConfig& c)
{
    return "band=" + format_double(c.band_lo_hz) + "-" + format_double(c.band_hi_hz) +
           ";dt=" + format_double(c.dt_s) + ";tau_filt=" + format_double(c.tau_filt_s) +
           ";w=" + format_double(c.syn_weight) + ";spread=" + format_double(c.relative_spread) +
           ";lambda=" + format_double(c.ridge_lambda) + ";drop_redundant=" + (c.drop_redundant_features ? "1" : "0");
}

inline std::string describe(const SplitProtocol& p)
{
    if (p.kind == SplitProtocol::Kind::session)
        return "session:" + std::to_string(p.fit_session) + "->" + std::to_string(p.eval_session);
    std::string s = "repetition:" + std::to_string(p.repetition_session) + ":";
    for (auto r : p.fit_repetitions)
        s += std::to_string(r) + " ";
    s += "->";
    for (auto r : p.eval_repetitions)
        s += " " + std::to_string(r);
    return s;
}

struct SweepRow {
    EncodingPoint point;
    std::uint64_t seed = 0;
    std::uint32_t subject_id = 0;
    MaeReport report;
    std::string status = "ok"; // "ok" or the failure message
    double wall_time_s = 0.0;  // not part of the deterministic result file

    bool ok() const { return status == "ok"; }
};

struct SweepProvenance {
    std::string version{kVersion};
    std::string dataset_hash;
    std::string config_hash;
    std::uint64_t base_seed = 0;
};

struct SweepResult {
    GridSpec grid;
    std::vector<std::uint32_t> subjects;
    SweepProvenance provenance;
    std::vector<SweepRow> rows;
    bool complete = false;

    std::size_t expected_rows() const { return grid.point_count() * grid.seeds.size() * subjects.size(); }
};

struct SweepOptions {
    unsigned jobs = 1;
    /// Append-only journal of finished rows; enables resuming.
    std::optional<std::filesystem::path> journal;
    bool resume = false;
    /// Stop after this many newly computed rows (simulates an interruption).
    std::optional<std::size_t> stop_after;
    std::uint64_t base_seed = 0;
};

// -- CSV row format -----------------------------------------------------------

inline std::string sweep_csv_header()
{
    return "tau_syn_s,tau_m_s,threshold,population_size,seed,subject_id,overall_deg,"
           "doa1_deg,doa2_deg,doa3_deg,doa4_deg,doa5_deg,n_infer,status";
}

inline std::string to_csv_row(const SweepRow& r)
{
    std::string s = format_double(r.point.tau_syn_s) + "," + format_double(r.point.tau_m_s) + "," +
                    format_double(r.point.threshold) + "," + std::to_string(r.point.population_size) + "," +
                    std::to_string(r.seed) + "," + std::to_string(r.subject_id) + "," +
                    format_double(r.report.overall_deg);
    for (double v : r.report.per_doa_deg)
        s += "," + format_double(v);
    s += "," + std::to_string(r.report.n_infer) + "," + csv_quote(r.status);
    return s;
}

inline SweepRow parse_csv_row(const std::vector<std::string>& c)
{
    if (c.size() != 14)
        throw DataError("sweep row: expected 14 columns, found " + std::to_string(c.size()));
    SweepRow r;
    r.point = {parse_double(c[0]), parse_double(c[1]), parse_double(c[2]), parse_int<std::size_t>(c[3])};
    r.seed = parse_int<std::uint64_t>(c[4]);
    r.subject_id = parse_int<std::uint32_t>(c[5]);
    r.report.overall_deg = parse_double(c[6]);
    for (std::size_t d = 0; d < 5; ++d)
        r.report.per_doa_deg[d] = parse_double(c[7 + d]);
    r.report.n_infer = parse_int<std::size_t>(c[12]);
    r.status = c[13];
    return r;
}

/// Stable identity of a row within a sweep.
inline std::string row_key(const EncodingPoint& p, std::uint64_t seed, std::uint32_t subject)
{
    return format_double(p.tau_syn_s) + "|" + format_double(p.tau_m_s) + "|" + format_double(p.threshold) + "|" +
           std::to_string(p.population_size) + "|" + std::to_string(seed) + "|" + std::to_string(subject);
}

inline void write_sweep_csv(const SweepResult& r, std::ostream& out)
{
    out << "# emgpop sweep results\n"
        << "# version=" << r.provenance.version << "\n"
        << "# dataset_hash=" << r.provenance.dataset_hash << "\n"
        << "# config_hash=" << r.provenance.config_hash << "\n"
        << "# base_seed=" << r.provenance.base_seed << "\n"
        << sweep_csv_header() << "\n";
    for (const auto& row : r.rows)
        out << to_csv_row(row) << "\n";
}

inline void write_sweep_csv(const SweepResult& r, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw ConfigError("cannot open '" + path.string() + "' for writing");
    write_sweep_csv(r, out);
}

/// Reads rows and provenance back from a results file. Grid and subject lists
/// are reconstructed from the distinct values present.
inline SweepResult read_sweep_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open '" + path.string() + "' for reading");
    SweepResult r;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        if (line.front() == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                continue;
            const auto key = line.substr(2, eq - 2), val = line.substr(eq + 1);
            if (key == "version")
                r.provenance.version = val;
            else if (key == "dataset_hash")
                r.provenance.dataset_hash = val;
            else if (key == "config_hash")
                r.provenance.config_hash = val;
            else if (key == "base_seed")
                r.provenance.base_seed = parse_int<std::uint64_t>(val);
            continue;
        }
        if (!header) {
            if (line != sweep_csv_header())
                throw DataError(path.string() + ": unexpected sweep CSV header");
            header = true;
            continue;
        }
        r.rows.push_back(parse_csv_row(split_csv_line(line)));
    }
    if (!header)
        throw DataError(path.string() + ": missing sweep CSV header");

    const auto uniq = [](auto v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    std::vector<double> ts, tm, th;
    std::vector<std::size_t> sizes;
    std::vector<std::uint64_t> seeds;
    for (const auto& row : r.rows) {
        ts.push_back(row.point.tau_syn_s);
        tm.push_back(row.point.tau_m_s);
        th.push_back(row.point.threshold);
        sizes.push_back(row.point.population_size);
        seeds.push_back(row.seed);
        r.subjects.push_back(row.subject_id);
    }
    r.grid.tau_syn_s = uniq(ts);
    r.grid.tau_m_s = uniq(tm);
    r.grid.threshold = uniq(th);
    r.grid.population_size = uniq(sizes);
    r.grid.seeds = uniq(seeds);
    r.subjects = uniq(r.subjects);
    r.complete = r.rows.size() == r.expected_rows();
    return r;
}

// -- running ---------------------------------------------------------------------

namespace detail {

struct WorkItem {
    std::size_t point;
    std::size_t seed;
    std::size_t subject;
};

inline std::map<std::string, SweepRow> read_journal(const std::filesystem::path& path, const std::string& fingerprint)
{
    std::map<std::string, SweepRow> done;
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return done;
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    bool first = true;
    while (pos < content.size()) {
        const auto nl = content.find('\n', pos);
        if (nl == std::string::npos)
            break; // torn final line from an interrupted write
        const std::string line = content.substr(pos, nl - pos);
        pos = nl + 1;
        if (first) {
            if (line != "# journal " + fingerprint)
                throw ConfigError("journal '" + path.string() +
                                  "' belongs to a different sweep (grid, data or settings changed)");
            first = false;
            continue;
        }
        auto cells = split_csv_line(line);
        if (cells.size() != 15)
            throw DataError("journal '" + path.string() + "': malformed line");
        const double wall = parse_double(cells.back());
        cells.pop_back();
        auto row = parse_csv_row(cells);
        row.wall_time_s = wall;
        done[row_key(row.point, row.seed, row.subject_id)] = std::move(row);
    }
    return done;
}

// Rewrites the journal without a torn tail so appends start on a fresh line.
inline void rewrite_journal(const std::filesystem::path& path, const std::string& fingerprint,
                            const std::map<std::string, SweepRow>& done)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw ConfigError("cannot open journal '" + path.string() + "' for writing");
    out << "# journal " << fingerprint << "\n";
    for (const auto& [key, row] : done)
        out << to_csv_row(row) << "," << format_double(row.wall_time_s) << "\n";
}

} // namespace detail

/// Evaluates every (grid point, seed, subject). Rows come back in grid order
/// whatever the schedule; failures are recorded per row.
inline SweepResult run_sweep(std::span<const SubjectRecording> dataset, const GridSpec& grid,
                             const SplitProtocol& protocol, PipelineConfig cfg, const SweepOptions& opts = {})
{
    if (dataset.empty())
        throw ConfigError("run_sweep: dataset is empty");
    grid.validate();
    protocol.validate();
    cfg.tau_filt_s = grid.tau_filt_s;

    SweepResult result;
    result.grid = grid;
    result.provenance.base_seed = opts.base_seed;
    Fnv1a data_hash;
    for (const auto& rec : dataset) {
        result.subjects.push_back(rec.subject_id);
        data_hash.update(recording_hash(rec));
    }
    {
        auto sorted = result.subjects;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ConfigError("run_sweep: duplicate subject ids in dataset");
    }
    result.provenance.dataset_hash = data_hash.hex();
    Fnv1a cfg_hash;
    cfg_hash.update(nlohmann::json(grid).dump());
    cfg_hash.update(describe(cfg));
    cfg_hash.update(describe(protocol));
    result.provenance.config_hash = cfg_hash.hex();
    const std::string fingerprint = result.provenance.dataset_hash + " " + result.provenance.config_hash;

    std::vector<PreparedSubject> prepared;
    std::vector<std::string> prepare_error(dataset.size());
    prepared.reserve(dataset.size());
    for (std::size_t s = 0; s < dataset.size(); ++s) {
        try {
            prepared.push_back(prepare_subject(dataset[s], cfg, protocol));
        } catch (const std::exception& e) {
            prepared.emplace_back();
            prepare_error[s] = e.what();
        }
    }

    const auto points = grid.points();
    std::vector<detail::WorkItem> items;
    for (std::size_t p = 0; p < points.size(); ++p)
        for (std::size_t k = 0; k < grid.seeds.size(); ++k)
            for (std::size_t s = 0; s < dataset.size(); ++s)
                items.push_back({p, k, s});

    std::map<std::string, SweepRow> done;
    std::ofstream journal;
    if (opts.journal) {
        if (opts.resume)
            done = detail::read_journal(*opts.journal, fingerprint);
        detail::rewrite_journal(*opts.journal, fingerprint, done);
        journal.open(*opts.journal, std::ios::binary | std::ios::app);
        if (!journal)
            throw ConfigError("cannot open journal '" + opts.journal->string() + "'");
    }

    std::vector<std::optional<SweepRow>> rows(items.size());
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& it = items[i];
        const auto key = row_key(points[it.point], grid.seeds[it.seed], result.subjects[it.subject]);
        if (auto f = done.find(key); f != done.end())
            rows[i] = f->second;
        else
            todo.push_back(i);
    }

    std::mutex journal_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> started{0};
    const std::size_t budget = opts.stop_after.value_or(std::numeric_limits<std::size_t>::max());

    const auto worker = [&] {
        for (;;) {
            const auto t = next.fetch_add(1);
            if (t >= todo.size())
                return;
            if (started.fetch_add(1) >= budget)
                return;
            const auto i = todo[t];
            const auto& it = items[i];
            SweepRow row;
            row.point = points[it.point];
            row.seed = grid.seeds[it.seed];
            row.subject_id = result.subjects[it.subject];
            const auto t0 = std::chrono::steady_clock::now();
            try {
                if (!prepare_error[it.subject].empty())
                    throw DataError(prepare_error[it.subject]);
                row.report = run_pipeline(prepared[it.subject], row.point, cfg, row.seed).report;
            } catch (const std::exception& e) {
                row.report = MaeReport{};
                row.report.overall_deg = std::numeric_limits<double>::quiet_NaN();
                row.report.per_doa_deg.fill(std::numeric_limits<double>::quiet_NaN());
                row.status = std::string("error: ") + e.what();
            }
            row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            {
                std::lock_guard lock(journal_mutex);
                if (journal.is_open()) {
                    journal << to_csv_row(row) << "," << format_double(row.wall_time_s) << "\n";
                    journal.flush();
                }
                rows[i] = std::move(row);
            }
        }
    };

    const unsigned jobs = std::max(1u, opts.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned j = 0; j < jobs; ++j)
            pool.emplace_back(worker);
    }

    for (auto& r : rows)
        if (r)
            result.rows.push_back(std::move(*r));
    result.complete = result.rows.size() == items.size();
    return result;
}

// -- selection and export -----------------------------------------------------

namespace detail {

// Mean MAE per grid point over the chosen subjects and all seeds, summed in
// canonical (seed, subject) order so results do not depend on row order.
inline std::vector<std::optional<double>> point_means(const SweepResult& r, std::span<const std::uint32_t> subjects,
                                                      std::string* gaps)
{
    std::map<std::string, const SweepRow*> by_key;
    for (const auto& row : r.rows)
        by_key[row_key(row.point, row.seed, row.subject_id)] = &row;
    const auto points = r.grid.points();
    std::vector<std::optional<double>> means(points.size());
    std::size_t missing = 0;
    for (std::size_t p = 0; p < points.size(); ++p) {
        double sum = 0.0;
        std::size_t n = 0;
        bool full = true;
        for (auto seed : r.grid.seeds)
            for (auto subj : subjects) {
                const auto f = by_key.find(row_key(points[p], seed, subj));
                if (f == by_key.end() || !f->second->ok()) {
                    full = false;
                    if (gaps && ++missing <= 20)
                        *gaps += "\n  " + row_key(points[p], seed, subj) +
                                 (f == by_key.end() ? " (missing)" : " (" + f->second->status + ")");
                    continue;
                }
                sum += f->second->report.overall_deg;
                ++n;
            }
        if (full && n > 0)
            means[p] = sum / static_cast<double>(n);
    }
    if (gaps && missing > 20)
        *gaps += "\n  ... " + std::to_string(missing - 20) + " more";
    return means;
}

inline std::vector<std::uint32_t> resolve_subjects(const SweepResult& r, std::span<const std::uint32_t> subjects)
{
    if (subjects.empty())
        return r.subjects;
    for (auto s : subjects)
        if (std::find(r.subjects.begin(), r.subjects.end(), s) == r.subjects.end())
            throw ConfigError("subject " + std::to_string(s) + " is not part of the sweep");
    return {subjects.begin(), subjects.end()};
}

} // namespace detail

/// Grid point with the lowest mean MAE over `subjects` (all if empty) and all
/// seeds. Ties go to the smaller population, then larger threshold, smaller
/// tau_m, smaller tau_syn.
inline EncodingPoint select_best(const SweepResult& r, std::span<const std::uint32_t> subjects = {})
{
    const auto subs = detail::resolve_subjects(r, subjects);
    std::string gaps;
    const auto means = detail::point_means(r, subs, &gaps);
    if (!gaps.empty())
        throw IncompleteSweepError("select_best: sweep is incomplete for the chosen subjects:" + gaps);
    const auto points = r.grid.points();
    std::size_t best = 0;
    const auto rank = [&](std::size_t p) {
        return std::make_tuple(*means[p], points[p].population_size, -points[p].threshold, points[p].tau_m_s,
                               points[p].tau_syn_s);
    };
    for (std::size_t p = 1; p < points.size(); ++p)
        if (rank(p) < rank(best))
            best = p;
    return points[best];
}

/// Mean MAE for each (tau_syn, tau_m) at fixed threshold and population size.
struct ContourTable {
    double threshold = 0.0;
    std::size_t population_size = 0;
    std::vector<double> tau_syn_s; // rows
    std::vector<double> tau_m_s;   // columns
    std::vector<std::vector<double>> mean_mae_deg;
};

inline ContourTable export_contours(const SweepResult& r, double threshold, std::size_t population_size,
                                    std::span<const std::uint32_t> subjects = {})
{
    const auto& g = r.grid;
    if (std::find(g.threshold.begin(), g.threshold.end(), threshold) == g.threshold.end() ||
        std::find(g.population_size.begin(), g.population_size.end(), population_size) == g.population_size.end())
        throw ConfigError("export_contours: threshold " + format_double(threshold) + " / population size " +
                          std::to_string(population_size) + " is not on the grid");
    const auto subs = detail::resolve_subjects(r, subjects);

    // Only the requested slice has to be complete.
    SweepResult slice;
    slice.grid = g;
    slice.grid.threshold = {threshold};
    slice.grid.population_size = {population_size};
    slice.subjects = r.subjects;
    slice.rows = r.rows;
    std::string gaps;
    const auto means = detail::point_means(slice, subs, &gaps);
    if (!gaps.empty())
        throw IncompleteSweepError("export_contours: slice is incomplete:" + gaps);

    ContourTable t;
    t.threshold = threshold;
    t.population_size = population_size;
    t.tau_syn_s = g.tau_syn_s;
    t.tau_m_s = g.tau_m_s;
    t.mean_mae_deg.assign(g.tau_syn_s.size(), std::vector<double>(g.tau_m_s.size()));
    std::size_t p = 0;
    for (std::size_t i = 0; i < g.tau_syn_s.size(); ++i)
        for (std::size_t j = 0; j < g.tau_m_s.size(); ++j)
            t.mean_mae_deg[i][j] = *means[p++];
    return t;
}

inline void write_contour_csv(const ContourTable& t, std::ostream& out, const SweepProvenance& prov)
{
    out << "# emgpop contour: mean MAE (deg), rows tau_syn_s, columns tau_m_s\n"
        << "# threshold=" << format_double(t.threshold) << "\n"
        << "# population_size=" << t.population_size << "\n"
        << "# version=" << prov.version << "\n"
        << "# dataset_hash=" << prov.dataset_hash << "\n"
        << "# config_hash=" << prov.config_hash << "\n"
        << "tau_syn_s\\tau_m_s";
    for (double v : t.tau_m_s)
        out << "," << format_double(v);
    out << "\n";
    for (std::size_t i = 0; i < t.tau_syn_s.size(); ++i) {
        out << format_double(t.tau_syn_s[i]);
        for (double v : t.mean_mae_deg[i])
            out << "," << format_double(v);
        out << "\n";
    }
}

/// Summary: best configuration, its per-subject aggregate, and the MAE trend
/// over population size at the best (tau_syn, tau_m, threshold).
inline nlohmann::json sweep_summary(const SweepResult& r, std::span<const std::uint32_t> selection_subjects = {})
{
    const auto best = select_best(r, selection_subjects);
    std::map<std::string, const SweepRow*> by_key;
    for (const auto& row : r.rows)
        by_key[row_key(row.point, row.seed, row.subject_id)] = &row;

    const auto per_subject = [&](const EncodingPoint& p) -> std::optional<std::vector<MaeReport>> {
        std::vector<MaeReport> reports;
        for (auto subj : r.subjects) {
            double sum = 0.0;
            for (auto seed : r.grid.seeds) {
                const auto f = by_key.find(row_key(p, seed, subj));
                if (f == by_key.end() || !f->second->ok())
                    return std::nullopt;
                sum += f->second->report.overall_deg;
            }
            MaeReport m;
            m.overall_deg = sum / static_cast<double>(r.grid.seeds.size());
            reports.push_back(m);
        }
        return reports;
    };

    nlohmann::json trend = nlohmann::json::array();
    for (auto n : r.grid.population_size) {
        EncodingPoint p = best;
        p.population_size = n;
        nlohmann::json e{{"population_size", n}};
        if (auto reps = per_subject(p)) {
            const auto agg = aggregate_subjects(*reps);
            e["mean_mae_deg"] = agg.mean_deg;
            e["std_mae_deg"] = agg.std_deg;
        } else {
            e["mean_mae_deg"] = nullptr;
            e["std_mae_deg"] = nullptr;
        }
        trend.push_back(e);
    }

    const auto sel = detail::resolve_subjects(r, selection_subjects);
    nlohmann::json out;
    out["best"] = {{"tau_syn_s", best.tau_syn_s},
                   {"tau_m_s", best.tau_m_s},
                   {"threshold", best.threshold},
                   {"population_size", best.population_size}};
    out["selection_subjects"] = sel;
    if (auto reps = per_subject(best)) {
        const auto agg = aggregate_subjects(*reps);
        out["best_mean_mae_deg"] = agg.mean_deg;
        out["best_std_mae_deg"] = agg.std_deg;
    }
    out["population_trend"] = trend;
    out["rows"] = r.rows.size();
    out["failed_rows"] = std::count_if(r.rows.begin(), r.rows.end(), [](const auto& x) { return !x.ok(); });
    out["provenance"] = {{"version", r.provenance.version},
                         {"dataset_hash", r.provenance.dataset_hash},
                         {"config_hash", r.provenance.config_hash},
                         {"base_seed", r.provenance.base_seed}};
    return out;
}

} // namespace emgpop
