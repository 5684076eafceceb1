// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "emgpop/eval_metrics.hpp"
#include "emgpop/lif_encoder.hpp"
#include "emgpop/pipeline.hpp"
#include "emgpop/readout.hpp"
#include "emgpop/sweep.hpp"
#include "emgpop/synth.hpp"
#include "oracles.hpp"

using namespace emgpop;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(s < limit_s, "runtime " + format_double(s) + " s exceeds " + format_double(limit_s) + " s");
    if (!o.pass)
        ++failures;
    std::printf("%s criterion %d: %s [%.2f s / %.0f s]%s%s\n", o.pass ? "PASS" : "FAIL", id, name, s, limit_s,
                o.detail.empty() ? "" : " -- ", o.detail.c_str());
    std::fflush(stdout);
}

Eigen::MatrixXd uniform_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double lo, double hi)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j)
            m(i, j) = u(rng);
    return m;
}

std::string csv_text(const SweepResult& r)
{
    std::ostringstream out;
    write_sweep_csv(r, out);
    return out.str();
}

std::vector<SubjectRecording> synth_subjects(std::uint32_t count, std::uint64_t first_seed)
{
    std::vector<SubjectRecording> out;
    for (std::uint32_t s = 0; s < count; ++s) {
        SynthConfig cfg;
        cfg.seed = first_seed + s;
        cfg.subject_id = s + 1;
        out.push_back(synth_generate(cfg));
    }
    return out;
}

// -- 1 -------------------------------------------------------------------------
Outcome lif_oracle_equivalence()
{
    Outcome o;
    std::mt19937_64 rng(20240101);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double dt = 0.010;
    std::size_t spikes = 0;
    for (int k = 0; k < 50; ++k) {
        const double tau_syn = 0.002 + 0.048 * u01(rng);
        const double tau_m = 0.005 + 0.095 * u01(rng);
        const double threshold = 0.1 + 0.9 * u01(rng);
        const double weight = 0.05 + 1.95 * u01(rng);
        const double scale = 0.05 + 0.95 * u01(rng);
        std::vector<double> drive(500);
        for (auto& v : drive)
            v = scale * u01(rng);
        const std::vector<NeuronParams> pop{{tau_m, threshold}};
        const auto raster = encode_channel(TimeSeries({drive}, 1.0 / dt), pop, {tau_syn, weight}, dt);
        const auto expect = oracle::lif_simulate(drive, tau_syn, tau_m, threshold, weight, dt);
        o.require(std::ranges::equal(raster.row(0), expect), "case " + std::to_string(k) + " differs");
        spikes += raster.spike_count();
    }
    o.require(spikes > 0, "no spikes in any case");
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("50 cases bitwise equal, ") + std::to_string(spikes) +
                " spikes";
    return o;
}

// -- 2 -------------------------------------------------------------------------
Outcome sampler_statistics()
{
    Outcome o;
    PopulationSpec spec{.size = 10000, .mean_tau_m_s = 0.030, .mean_threshold = 0.5, .relative_spread = 0.2, .seed = 7};
    const auto pop = sample_population(spec);
    const auto cv = [&](auto get) {
        double s = 0.0;
        for (const auto& p : pop)
            s += get(p);
        const double mean = s / static_cast<double>(pop.size());
        double ss = 0.0;
        for (const auto& p : pop)
            ss += (get(p) - mean) * (get(p) - mean);
        return std::sqrt(ss / static_cast<double>(pop.size() - 1)) / mean;
    };
    const double cv_tau = cv([](const NeuronParams& p) { return p.tau_m_s; });
    const double cv_th = cv([](const NeuronParams& p) { return p.threshold; });
    o.require(cv_tau >= 0.185 && cv_tau <= 0.215, "tau_m cv " + format_double(cv_tau));
    o.require(cv_th >= 0.185 && cv_th <= 0.215, "threshold cv " + format_double(cv_th));

    spec.relative_spread = 0.0;
    const auto point = sample_population(spec);
    const bool exact = std::all_of(point.begin(), point.end(), [&](const NeuronParams& p) {
        return p.tau_m_s == spec.mean_tau_m_s && p.threshold == spec.mean_threshold;
    });
    o.require(exact, "spread 0 is not a point mass");
    if (o.pass)
        o.detail = "cv tau_m " + format_double(cv_tau) + ", cv threshold " + format_double(cv_th);
    return o;
}

// -- 3 -------------------------------------------------------------------------
Outcome regression_recovery()
{
    Outcome o;
    std::mt19937_64 rng(3);
    const FeatureMatrix X{uniform_matrix(2000, 100, rng, -1.0, 1.0), 0.010};
    const Eigen::MatrixXd W = uniform_matrix(100, 5, rng, -5.0, 5.0);
    const Eigen::VectorXd b = uniform_matrix(5, 1, rng, 0.0, 90.0);
    Eigen::MatrixXd Y = X.values * W;
    Y.rowwise() += b.transpose();
    const auto m = fit_linear(X, Y, 0.0);
    const double err_w = (m.weights - W).cwiseAbs().maxCoeff();
    const double err_b = (m.intercept - b).cwiseAbs().maxCoeff();
    o.require(err_w <= 1e-6, "weight error " + format_double(err_w));
    o.require(err_b <= 1e-6, "intercept error " + format_double(err_b));

    const auto g = oracle::fd_gradient(X.values, Y, m.weights, m.intercept, 0.0, 1e-4);
    const auto g0 = oracle::fd_gradient(X.values, Y, Eigen::MatrixXd::Zero(100, 5), m.intercept, 0.0, 1e-4);
    const double rel = g.norm() / g0.norm();
    o.require(rel < 1e-5, "relative gradient " + format_double(rel));
    if (o.pass)
        o.detail = "max |dW| " + format_double(err_w) + ", max |db| " + format_double(err_b) + ", rel grad " +
                   format_double(rel);
    return o;
}

// -- 4 -------------------------------------------------------------------------
Outcome smoothing_impulse()
{
    Outcome o;
    SpikeRaster r({{0, 0}}, 100, 0.010);
    r(0, 0) = 1;
    const auto f = smooth(r, 0.200);
    const double gamma = std::exp(-0.010 / 0.200);
    double worst = 0.0;
    for (Eigen::Index t = 0; t < 100; ++t)
        worst = std::max(worst, std::abs(f.values(t, 0) - std::pow(gamma, static_cast<double>(t))));
    o.require(worst <= 1e-12, "max deviation " + format_double(worst));
    if (o.pass)
        o.detail = "max deviation " + format_double(worst);
    return o;
}

// -- 5 -------------------------------------------------------------------------
Outcome mae_correctness()
{
    Outcome o;
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 200);
        const auto y = uniform_matrix(n, 5, rng, 0.0, 90.0);
        const auto yh = uniform_matrix(n, 5, rng, -10.0, 100.0);
        const double got = mae(y, yh).overall_deg;
        worst = std::max(worst, std::abs(got - oracle::mae_double_loop(y, yh)));

        o.require(mae(yh, y).overall_deg == got, "symmetry fails in case " + std::to_string(k));
        const double c = -3.0 + 6.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        o.require(std::abs(mae(c * y, c * yh).overall_deg - std::abs(c) * got) <= 1e-12 * std::max(1.0, got),
                  "scale equivariance fails in case " + std::to_string(k));

        const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 50);
        const auto y2 = uniform_matrix(m, 5, rng, 0.0, 90.0);
        const auto yh2 = uniform_matrix(m, 5, rng, 0.0, 90.0);
        Eigen::MatrixXd yc(n + m, 5), yhc(n + m, 5);
        yc << y, y2;
        yhc << yh, yh2;
        const double weighted =
            (static_cast<double>(n) * got + static_cast<double>(m) * mae(y2, yh2).overall_deg) /
            static_cast<double>(n + m);
        o.require(std::abs(mae(yc, yhc).overall_deg - weighted) <= 1e-12,
                  "concatenation fails in case " + std::to_string(k));
    }
    o.require(worst <= 1e-12, "oracle deviation " + format_double(worst));
    if (o.pass)
        o.detail = "max oracle deviation " + format_double(worst);
    return o;
}

// -- 6 -------------------------------------------------------------------------
Outcome population_trend()
{
    Outcome o;
    const PipelineConfig cfg;
    const EncodingPoint one{0.010, 0.040, 0.4, 1}, sixteen{0.010, 0.040, 0.4, 16};
    int wins = 0;
    double sum1 = 0.0, sum16 = 0.0, sum_base = 0.0;
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
        const auto data = synth_subjects(2, 1000 + 2 * rep);
        double m1 = 0.0, m16 = 0.0, mb = 0.0;
        bool beat = true;
        for (const auto& rec : data) {
            const auto subject = prepare_subject(rec, cfg, {});
            const double a = run_pipeline(subject, one, cfg, rep).report.overall_deg;
            const double b = run_pipeline(subject, sixteen, cfg, rep).report.overall_deg;
            const double base = constant_baseline_mae(subject).overall_deg;
            beat = beat && a < base && b < base;
            m1 += a / 2.0;
            m16 += b / 2.0;
            mb += base / 2.0;
        }
        o.require(beat, "replicate " + std::to_string(rep) + " does not beat the baseline");
        wins += m16 <= m1 ? 1 : 0;
        sum1 += m1 / 10.0;
        sum16 += m16 / 10.0;
        sum_base += mb / 10.0;
    }
    o.require(wins >= 8, "size 16 <= size 1 in only " + std::to_string(wins) + "/10 replicates");
    o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(wins) + "/10 replicates, mean MAE size1 " +
                format_double(std::round(sum1 * 100) / 100) + ", size16 " +
                format_double(std::round(sum16 * 100) / 100) + ", baseline " +
                format_double(std::round(sum_base * 100) / 100) + " deg";
    return o;
}

// -- 7 -------------------------------------------------------------------------
Outcome threshold_monotonicity()
{
    Outcome o;
    const PipelineConfig cfg;
    const double dt = cfg.dt_s;
    std::size_t checked = 0;
    for (unsigned k = 0; k < 20; ++k) {
        std::mt19937_64 rng(700 + k);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        TimeSeries drive(kEmgChannels, 1000, 1.0 / dt);
        const double level = 0.2 + 0.8 * u(rng);
        for (auto& v : drive.values())
            v = level * u(rng);
        const SynapseParams syn{0.002 + 0.008 * u(rng), cfg.syn_weight};
        const double tau_m = 0.010 + 0.030 * u(rng);
        std::size_t prev = std::numeric_limits<std::size_t>::max();
        for (double th : {0.4, 0.5, 0.6}) {
            const EncodingPoint p{syn.tau_syn_s, tau_m, th, 16};
            const auto count = encode_all(drive, population_specs(p, cfg, k), syn, dt).spike_count();
            o.require(count <= prev, "drive " + std::to_string(k) + ": count rises at threshold " +
                                         format_double(th) + " (" + std::to_string(prev) + " -> " +
                                         std::to_string(count) + ")");
            prev = count;
            ++checked;
        }
    }
    if (o.pass)
        o.detail = std::to_string(checked / 3) + " drives non-increasing over {0.4, 0.5, 0.6}";
    return o;
}

// -- 8 -------------------------------------------------------------------------
Outcome determinism_and_resume()
{
    Outcome o;
    const auto data = synth_subjects(2, 2000);
    GridSpec g;
    g.tau_syn_s = {0.006, 0.010};
    g.tau_m_s = {0.020, 0.040};
    g.threshold = {0.4, 0.6};
    g.population_size = {1, 16};
    const SplitProtocol split;
    const PipelineConfig cfg;

    const auto serial = csv_text(run_sweep(data, g, split, cfg, {.jobs = 1}));
    const auto parallel = csv_text(run_sweep(data, g, split, cfg, {.jobs = 8}));
    o.require(serial == parallel, "serial and 8-job CSVs differ");

    const auto journal = std::filesystem::temp_directory_path() / "emgpop_acceptance_journal.txt";
    std::filesystem::remove(journal);
    const auto partial = run_sweep(data, g, split, cfg, {.jobs = 8, .journal = journal, .stop_after = 37});
    o.require(!partial.complete && partial.rows.size() == 37, "interruption did not stop after 37 rows");
    {
        std::ofstream torn(journal, std::ios::binary | std::ios::app);
        torn << "0.01,0.04,0.4,16,2,";
    }
    const auto resumed = run_sweep(data, g, split, cfg, {.jobs = 8, .journal = journal, .resume = true});
    o.require(resumed.complete, "resumed sweep incomplete");
    o.require(csv_text(resumed) == serial, "resumed CSV differs from uninterrupted run");
    std::filesystem::remove(journal);
    if (o.pass)
        o.detail = std::to_string(resumed.rows.size()) + " rows, serial == 8 jobs == interrupted+resumed";
    return o;
}

// -- 9 -------------------------------------------------------------------------
Outcome sweep_bookkeeping()
{
    Outcome o;
    const auto data = synth_subjects(4, 3000);
    GridSpec g;
    g.seeds = {0};
    const auto r = run_sweep(data, g, {}, {}, {.jobs = 1});
    o.require(r.rows.size() == 960, "row count " + std::to_string(r.rows.size()));
    o.require(std::all_of(r.rows.begin(), r.rows.end(), [](const SweepRow& x) { return x.ok(); }), "failed rows");

    // Independent group-by over raw rows, in file order.
    std::vector<std::pair<std::tuple<double, std::size_t, double, double>, double>> raw;
    for (const auto& row : r.rows)
        raw.push_back({{row.point.threshold, row.point.population_size, row.point.tau_syn_s, row.point.tau_m_s},
                       row.report.overall_deg});
    const auto means = oracle::group_mean(raw);
    std::size_t slices = 0, cells = 0;
    for (double th : g.threshold)
        for (auto n : g.population_size) {
            const auto table = export_contours(r, th, n);
            ++slices;
            for (std::size_t i = 0; i < g.tau_syn_s.size(); ++i)
                for (std::size_t j = 0; j < g.tau_m_s.size(); ++j, ++cells) {
                    const double expect = means.at({th, n, g.tau_syn_s[i], g.tau_m_s[j]});
                    o.require(table.mean_mae_deg[i][j] == expect,
                              "slice (" + format_double(th) + ", " + std::to_string(n) + ") cell differs");
                }
        }
    if (o.pass) {
        const auto best = select_best(r);
        o.detail = "960 rows, " + std::to_string(slices) + " slices / " + std::to_string(cells) +
                   " cells equal to group-by; best tau_syn " + format_double(best.tau_syn_s) + " tau_m " +
                   format_double(best.tau_m_s) + " threshold " + format_double(best.threshold) + " size " +
                   std::to_string(best.population_size);
    }
    return o;
}

} // namespace

int main()
{
    criterion(1, "LIF oracle equivalence (50 cases x 500 steps, bitwise)", 5, lif_oracle_equivalence);
    criterion(2, "sampler statistics (n=10000, spread 0.2; spread 0 point mass)", 1, sampler_statistics);
    criterion(3, "regression recovery (2000x100, 1e-6; FD gradient < 1e-5 relative)", 5, regression_recovery);
    criterion(4, "smoothing impulse response (tau_filt 200 ms, dt 10 ms, 1e-12)", 1, smoothing_impulse);
    criterion(5, "MAE correctness (100 pairs vs double loop, 1e-12; properties)", 2, mae_correctness);
    criterion(6, "population-size trend on synthetic data (size 16 <= size 1 in >= 8/10)", 180, population_trend);
    criterion(7, "threshold monotonicity of spike count (20 drives)", 10, threshold_monotonicity);
    criterion(8, "determinism, schedule independence and resume (2x2x2x2 grid)", 300, determinism_and_resume);
    criterion(9, "sweep bookkeeping (default grid, 4 subjects, 1 seed; contours vs group-by)", 600,
              sweep_bookkeeping);
    std::printf("%s: %d of 9 criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
    return failures == 0 ? 0 : 1;
}
