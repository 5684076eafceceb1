// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "emgpop/lif_encoder.hpp"
#include "oracles.hpp"

using namespace emgpop;

namespace {

TimeSeries drive_of(const std::vector<double>& v, double dt) { return TimeSeries({v}, 1.0 / dt); }

std::vector<double> random_drive(std::size_t n, unsigned seed, double hi = 1.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, hi);
    std::vector<double> v(n);
    for (auto& x : v)
        x = u(rng);
    return v;
}

std::filesystem::path temp_file(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("emgpop_lif_" + name);
}

} // namespace

TEST(SamplePopulation, ZeroSpreadIsPointMass)
{
    PopulationSpec spec{.size = 1, .mean_tau_m_s = 0.03, .mean_threshold = 0.5, .relative_spread = 0.0, .seed = 7};
    const auto p = sample_population(spec);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p[0].tau_m_s, 0.03);
    EXPECT_EQ(p[0].threshold, 0.5);
    spec.size = 50;
    for (const auto& n : sample_population(spec))
        EXPECT_EQ(n, (NeuronParams{0.03, 0.5}));
}

TEST(SamplePopulation, DeterministicPerSeed)
{
    PopulationSpec spec{.size = 64, .seed = 42};
    EXPECT_EQ(sample_population(spec), sample_population(spec));
    auto other = spec;
    other.seed = 43;
    EXPECT_NE(sample_population(spec), sample_population(other));
    EXPECT_NE(sample_population(spec, 0), sample_population(spec, 1));
}

TEST(SamplePopulation, PrefixStableAcrossSizes)
{
    PopulationSpec small{.size = 8, .seed = 5};
    auto big = small;
    big.size = 32;
    const auto a = sample_population(small), b = sample_population(big);
    EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
}

TEST(SamplePopulation, Statistics)
{
    PopulationSpec spec{.size = 10000, .mean_tau_m_s = 0.030, .mean_threshold = 0.5, .relative_spread = 0.2, .seed = 1};
    const auto p = sample_population(spec);
    const auto cv = [&](auto get, double& mean) {
        double s = 0.0, s2 = 0.0;
        for (const auto& n : p)
            s += get(n);
        mean = s / static_cast<double>(p.size());
        for (const auto& n : p)
            s2 += (get(n) - mean) * (get(n) - mean);
        return std::sqrt(s2 / static_cast<double>(p.size() - 1)) / mean;
    };
    double m_tau = 0.0, m_th = 0.0;
    const double cv_tau = cv([](const NeuronParams& n) { return n.tau_m_s; }, m_tau);
    const double cv_th = cv([](const NeuronParams& n) { return n.threshold; }, m_th);
    EXPECT_GE(cv_tau, 0.185);
    EXPECT_LE(cv_tau, 0.215);
    EXPECT_GE(cv_th, 0.185);
    EXPECT_LE(cv_th, 0.215);
    EXPECT_NEAR(m_tau, 0.030, 0.015 * 0.030);
    for (const auto& n : p) {
        EXPECT_GT(n.tau_m_s, 0.0);
        EXPECT_GT(n.threshold, 0.0);
    }
}

TEST(SamplePopulation, InvalidSpec)
{
    EXPECT_THROW(sample_population({.size = 0}), ConfigError);
    EXPECT_THROW(sample_population({.mean_tau_m_s = 0.0}), ConfigError);
    EXPECT_THROW(sample_population({.relative_spread = 1.0}), ConfigError);
    EXPECT_THROW(sample_population({.relative_spread = -0.1}), ConfigError);
}

TEST(LifStep, ZeroDriveStaysAtRest)
{
    EncoderState s;
    for (int k = 0; k < 100; ++k) {
        auto [next, spike] = lif_step(s, 0.0, {0.002, 1.0}, {0.01, 0.4}, 0.010);
        EXPECT_FALSE(spike);
        EXPECT_EQ(next.syn_current, 0.0);
        EXPECT_EQ(next.membrane, 0.0);
        s = next;
    }
}

TEST(LifStep, DecayFactorMatchesExponential)
{
    const LifKernel k({0.010, 1.0}, {0.010, 0.4}, 0.010);
    const double e_inv = 0.36787944117144232159552377016146086744581113103176;
    EXPECT_NEAR(k.beta, e_inv, 1e-12 * e_inv);
    EXPECT_NEAR(k.alpha, e_inv, 1e-12 * e_inv);
}

TEST(LifStep, ConstantDriveMatchesReference)
{
    const std::vector<double> drive(200, 0.5);
    const auto expect = oracle::lif_simulate(drive, 0.010, 0.030, 0.4, 1.0, 0.010);
    EncoderState s;
    std::vector<std::uint8_t> got;
    for (double x : drive) {
        auto [next, spike] = lif_step(s, x, {0.010, 1.0}, {0.030, 0.4}, 0.010);
        s = next;
        got.push_back(spike ? 1 : 0);
    }
    EXPECT_EQ(got, expect);
    EXPECT_GT(std::count(got.begin(), got.end(), 1), 0);
}

TEST(LifStep, StepOrderingSynapseBeforeMembrane)
{
    // A single pulse reaches the membrane on the same step.
    auto [s, spike] = lif_step({}, 1.0, {0.010, 1.0}, {0.030, 0.5}, 0.010);
    EXPECT_TRUE(spike);
    EXPECT_DOUBLE_EQ(s.syn_current, 1.0);
    EXPECT_DOUBLE_EQ(s.membrane, 0.5);
}

TEST(LifStep, SubtractiveResetChargeBalance)
{
    const double dt = 0.010, tau_syn = 0.008, tau_m = 0.020, th = 0.45, w = 0.7;
    const auto drive = random_drive(400, 21);
    const LifKernel k({tau_syn, w}, {tau_m, th}, dt);
    EncoderState s;
    double integrated = 0.0; // leaky sum of synaptic current without resets
    double spikes_term = 0.0;
    for (double x : drive) {
        const bool spike = k.step(s, x);
        integrated = k.beta * integrated + s.syn_current;
        spikes_term = k.beta * spikes_term + (spike ? th : 0.0);
        ASSERT_TRUE(std::isfinite(s.membrane) && std::isfinite(s.syn_current));
    }
    EXPECT_NEAR(s.membrane, integrated - spikes_term, 1e-9);
}

TEST(EncodeChannel, SingleNeuronEqualsLifStepIteration)
{
    const double dt = 0.010;
    const auto d = random_drive(300, 4, 0.3);
    const std::vector<NeuronParams> pop{{0.02, 0.4}};
    const auto r = encode_channel(drive_of(d, dt), pop, {0.006, 1.0}, dt);
    EncoderState s;
    for (std::size_t t = 0; t < d.size(); ++t) {
        auto [next, spike] = lif_step(s, d[t], {0.006, 1.0}, pop[0], dt);
        s = next;
        ASSERT_EQ(r(0, t), spike ? 1 : 0);
    }
}

TEST(EncodeChannel, IdenticalParametersGiveIdenticalRows)
{
    const double dt = 0.010;
    const std::vector<NeuronParams> pop{{0.02, 0.4}, {0.02, 0.4}};
    const auto r = encode_channel(drive_of(random_drive(300, 5, 0.4), dt), pop, {0.01, 1.0}, dt);
    EXPECT_TRUE(std::ranges::equal(r.row(0), r.row(1)));
}

TEST(EncodeChannel, HeterogeneousRowsDifferAndMatchOracle)
{
    const double dt = 0.010;
    std::vector<double> d(400); // 4 s
    for (std::size_t t = 0; t < d.size(); ++t)
        d[t] = 0.25 + 0.2 * std::sin(0.05 * static_cast<double>(t)) + 0.05 * std::sin(0.31 * static_cast<double>(t));
    const auto pop = sample_population({.size = 16, .mean_tau_m_s = 0.03, .mean_threshold = 0.4, .seed = 3});
    const auto r = encode_channel(drive_of(d, dt), pop, {0.01, 1.0}, dt);
    ASSERT_EQ(r.neuron_count(), 16u);
    for (std::size_t n = 0; n < 16; ++n) {
        const auto expect = oracle::lif_simulate(d, 0.01, pop[n].tau_m_s, pop[n].threshold, 1.0, dt);
        EXPECT_TRUE(std::ranges::equal(r.row(n), expect)) << "neuron " << n;
    }
    std::size_t differ = 0, pairs = 0;
    for (std::size_t a = 0; a < 16; ++a)
        for (std::size_t b = a + 1; b < 16; ++b, ++pairs)
            differ += std::ranges::equal(r.row(a), r.row(b)) ? 0 : 1;
    EXPECT_GE(static_cast<double>(differ), 0.9 * static_cast<double>(pairs));
}

TEST(EncodeChannel, ZeroDriveIsSilent)
{
    const double dt = 0.010;
    const auto pop = sample_population({.size = 8, .seed = 1});
    const auto r = encode_channel(drive_of(std::vector<double>(500, 0.0), dt), pop, {0.002, 1.0}, dt);
    EXPECT_EQ(r.spike_count(), 0u);
}

TEST(EncodeChannel, ZeroSpreadRowsIdentical)
{
    const double dt = 0.010;
    const auto pop = sample_population({.size = 6, .relative_spread = 0.0, .seed = 9});
    const auto r = encode_channel(drive_of(random_drive(300, 8, 0.5), dt), pop, {0.01, 1.0}, dt);
    for (std::size_t n = 1; n < 6; ++n)
        EXPECT_TRUE(std::ranges::equal(r.row(0), r.row(n)));
    EXPECT_GT(r.spike_count(), 0u);
}

TEST(EncodeChannel, ThresholdMonotonicity)
{
    const double dt = 0.010;
    for (unsigned seed = 0; seed < 20; ++seed) {
        const auto d = drive_of(random_drive(500, 100 + seed, 0.6), dt);
        std::size_t prev = std::numeric_limits<std::size_t>::max();
        for (double th : {0.4, 0.5, 0.6}) {
            const auto pop = sample_population({.size = 16, .mean_threshold = th, .seed = seed});
            const auto count = encode_channel(d, pop, {0.01, 1.0}, dt).spike_count();
            EXPECT_LE(count, prev) << "seed " << seed << " threshold " << th;
            prev = count;
        }
    }
}

TEST(EncodeChannel, Errors)
{
    const std::vector<NeuronParams> pop{{0.02, 0.4}};
    EXPECT_THROW(encode_channel(TimeSeries(2, 10, 100.0), pop, {}, 0.010), ConfigError);
    EXPECT_THROW(encode_channel(TimeSeries(1, 10, 2000.0), pop, {}, 0.010), ConfigError);
    EXPECT_THROW(encode_channel(drive_of({0.1, -0.2}, 0.010), pop, {}, 0.010), DataError);
    EXPECT_THROW(encode_channel(drive_of({0.1, std::nan("")}, 0.010), pop, {}, 0.010), DataError);
    EXPECT_THROW(encode_channel(drive_of({0.1}, 0.010), pop, {0.0, 1.0}, 0.010), ConfigError);
    EXPECT_THROW(encode_channel(drive_of({0.1}, 0.010), pop, {0.01, 0.0}, 0.010), ConfigError);
}

TEST(EncodeAll, SingleChannelEqualsEncodeChannel)
{
    const double dt = 0.010;
    const auto d = drive_of(random_drive(200, 30, 0.5), dt);
    const std::vector<PopulationSpec> specs{{.size = 5, .seed = 2}};
    const auto all = encode_all(d, specs, {0.01, 1.0}, dt);
    const auto pop = sample_population(specs[0], 0);
    EXPECT_EQ(all, encode_channel(d, pop, {0.01, 1.0}, dt));
}

TEST(EncodeAll, ShapeLabelsAndScheduleIndependence)
{
    const double dt = 0.010;
    TimeSeries d(16, 300, 1.0 / dt);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 0.7);
    for (auto& v : d.values())
        v = u(rng);
    const std::vector<PopulationSpec> specs(16, PopulationSpec{.size = 16, .seed = 11});
    const auto serial = encode_all(d, specs, {0.008, 1.0}, dt, 1);
    ASSERT_EQ(serial.neuron_count(), 256u);
    EXPECT_EQ(serial.labels()[17], (NeuronLabel{1, 1}));
    for (unsigned jobs : {2u, 3u, 8u, 32u})
        EXPECT_EQ(encode_all(d, specs, {0.008, 1.0}, dt, jobs), serial) << jobs << " jobs";
}

TEST(EncodeAll, SpecCountMismatch)
{
    const std::vector<PopulationSpec> specs(2);
    EXPECT_THROW(encode_all(TimeSeries(3, 10, 100.0), specs, {}, 0.010), ConfigError);
}

TEST(RasterFile, RoundTrip)
{
    const double dt = 0.010;
    TimeSeries d(3, 250, 1.0 / dt);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 0.8);
    for (auto& v : d.values())
        v = u(rng);
    const std::vector<PopulationSpec> specs(3, PopulationSpec{.size = 4, .seed = 1});
    const auto r = encode_all(d, specs, {0.01, 1.0}, dt);
    const auto path = temp_file("raster.bin");
    write_raster(r, path);
    EXPECT_EQ(read_raster(path), r);

    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
    EXPECT_THROW(read_raster(path), TruncationError);
    std::filesystem::remove(path);
}
