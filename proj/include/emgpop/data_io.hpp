// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "binary_io.hpp"
#include "errors.hpp"
#include "signal_core.hpp"
#include "util.hpp"

namespace emgpop {

inline constexpr std::size_t kEmgChannels = 16;
inline constexpr std::size_t kDoaChannels = 5;
inline constexpr std::uint16_t kMaxGestureId = 9;

/// One subject: synchronized sEMG and DoA angles plus per-sample labels.
struct SubjectRecording {
    std::uint32_t subject_id = 0;
    TimeSeries semg;       // 16 x T, a.u.
    TimeSeries doa_angles; // 5 x T, degrees
    std::vector<std::uint16_t> session_id;
    std::vector<std::uint16_t> gesture_id; // 0 = rest
    std::vector<std::uint16_t> repetition_id;

    std::size_t sample_count() const { return semg.sample_count(); }
    double sample_rate_hz() const { return semg.sample_rate_hz(); }

    void validate() const
    {
        if (semg.channel_count() != kEmgChannels)
            throw DimensionError("recording: expected 16 sEMG channels, found " +
                                 std::to_string(semg.channel_count()));
        if (doa_angles.channel_count() != kDoaChannels)
            throw DimensionError("recording: expected 5 DoA channels, found " +
                                 std::to_string(doa_angles.channel_count()));
        const auto t = semg.sample_count();
        if (doa_angles.sample_count() != t || session_id.size() != t || gesture_id.size() != t ||
            repetition_id.size() != t)
            throw DimensionError("recording: sEMG, angles and labels differ in length");
        if (doa_angles.sample_rate_hz() != semg.sample_rate_hz())
            throw DataError("recording: sEMG and angles have different sample rates");
        for (double v : semg.values())
            if (!std::isfinite(v))
                throw DataError("recording: non-finite sEMG sample");
        for (double v : doa_angles.values())
            if (!std::isfinite(v))
                throw DataError("recording: non-finite angle sample");
        for (auto g : gesture_id)
            if (g > kMaxGestureId)
                throw DataError("recording: gesture id " + std::to_string(g) + " outside 0-9");
    }

    bool operator==(const SubjectRecording&) const = default;
};

/// Half-open sample ranges where `session_id` equals `session`.
inline std::vector<std::pair<std::size_t, std::size_t>> session_runs(const SubjectRecording& rec,
                                                                     std::uint16_t session)
{
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    const auto& s = rec.session_id;
    for (std::size_t i = 0; i < s.size();) {
        if (s[i] != session) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < s.size() && s[j] == session)
            ++j;
        runs.emplace_back(i, j);
        i = j;
    }
    return runs;
}

// -- binary recording file ----------------------------------------------------
//
// Layout (little-endian), version 1:
//   8 bytes   magic "EPRECORD"
//   u32       version
//   u32       subject_id
//   f64       sample_rate_hz
//   u32       sEMG channel count (must be 16)
//   u32       DoA count (must be 5)
//   u64       sample count T
//   16*T f64  sEMG, channel-major
//   5*T f64   DoA angles in degrees, channel-major
//   T u16     session_id
//   T u16     gesture_id
//   T u16     repetition_id

inline constexpr std::string_view kRecordingMagic = "EPRECORD";
inline constexpr std::uint32_t kRecordingVersion = 1;

inline binio::Writer serialize_recording(const SubjectRecording& rec)
{
    binio::Writer w;
    w.bytes(kRecordingMagic);
    w.uint<std::uint32_t>(kRecordingVersion);
    w.uint<std::uint32_t>(rec.subject_id);
    w.f64(rec.sample_rate_hz());
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(rec.semg.channel_count()));
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(rec.doa_angles.channel_count()));
    w.uint<std::uint64_t>(rec.sample_count());
    for (double v : rec.semg.values())
        w.f64(v);
    for (double v : rec.doa_angles.values())
        w.f64(v);
    for (const auto* labels : {&rec.session_id, &rec.gesture_id, &rec.repetition_id})
        for (auto v : *labels)
            w.uint<std::uint16_t>(v);
    return w;
}

/// Fingerprint of the recording's canonical serialization.
inline std::string recording_hash(const SubjectRecording& rec)
{
    const auto w = serialize_recording(rec);
    Fnv1a h;
    h.update(std::string_view(w.buffer().data(), w.buffer().size()));
    return h.hex();
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& path)
{
    auto p = path;
    p += ".txt";
    return p;
}

/// Writes the binary file plus a plain-text descriptor next to it (`<path>.txt`).
inline void write_recording(const SubjectRecording& rec, const std::filesystem::path& path)
{
    rec.validate();
    serialize_recording(rec).save(path);

    std::ofstream side(sidecar_path(path), std::ios::trunc);
    if (!side)
        throw ConfigError("cannot open '" + sidecar_path(path).string() + "' for writing");
    side << "format: emgpop recording\n"
         << "version: " << kRecordingVersion << "\n"
         << "byte_order: little-endian\n"
         << "subject_id: " << rec.subject_id << "\n"
         << "sample_rate_hz: " << format_double(rec.sample_rate_hz()) << "\n"
         << "semg_channels: " << rec.semg.channel_count() << "\n"
         << "doa_count: " << rec.doa_angles.channel_count() << "\n"
         << "samples: " << rec.sample_count() << "\n"
         << "fields: semg f64[16][T], doa_angles_deg f64[5][T], session_id u16[T], gesture_id u16[T], "
            "repetition_id u16[T]\n"
         << "content_hash_fnv1a64: " << recording_hash(rec) << "\n";
}

inline SubjectRecording load_recording(const std::filesystem::path& path)
{
    auto rd = binio::Reader::from_file(path);
    rd.need(kRecordingMagic.size());
    if (rd.bytes(kRecordingMagic.size()) != kRecordingMagic)
        throw DataError(rd.what() + ": not a recording file (bad magic)");
    if (const auto v = rd.uint<std::uint32_t>(); v != kRecordingVersion)
        throw FormatVersionError(rd.what() + ": recording format version " + std::to_string(v) +
                                 " is not supported (expected " + std::to_string(kRecordingVersion) + ")");
    SubjectRecording rec;
    rec.subject_id = rd.uint<std::uint32_t>();
    const double fs = rd.f64();
    const auto n_emg = rd.uint<std::uint32_t>();
    const auto n_doa = rd.uint<std::uint32_t>();
    const auto t = rd.uint<std::uint64_t>();
    if (n_emg != kEmgChannels)
        throw DimensionError(rd.what() + ": expected 16 sEMG channels, found " + std::to_string(n_emg));
    if (n_doa != kDoaChannels)
        throw DimensionError(rd.what() + ": expected 5 DoA channels, found " + std::to_string(n_doa));
    if (!(fs > 0.0) || !std::isfinite(fs))
        throw DataError(rd.what() + ": invalid sample rate");
    const auto samples = static_cast<std::size_t>(t);
    if (samples > rd.remaining())
        throw TruncationError(rd.what() + ": truncated payload (header declares " + std::to_string(t) +
                              " samples)");
    rd.need(samples * ((kEmgChannels + kDoaChannels) * 8 + 3 * 2));

    rec.semg = TimeSeries(kEmgChannels, samples, fs);
    rec.doa_angles = TimeSeries(kDoaChannels, samples, fs);
    for (auto& v : rec.semg.values())
        v = rd.f64();
    for (auto& v : rec.doa_angles.values())
        v = rd.f64();
    for (auto* labels : {&rec.session_id, &rec.gesture_id, &rec.repetition_id}) {
        labels->resize(samples);
        for (auto& v : *labels)
            v = rd.uint<std::uint16_t>();
    }
    rd.expect_end();
    rec.validate();
    return rec;
}

// -- CSV import ----------------------------------------------------------------
//
// One row per sample, header required:
//   session,gesture,repetition,emg_1,...,emg_16,doa_1,...,doa_5
// Angles in degrees, already mapped to the 5 DoAs; samples uniformly spaced at
// the rate passed to import_csv.

inline std::string csv_header()
{
    std::string h = "session,gesture,repetition";
    for (std::size_t c = 1; c <= kEmgChannels; ++c)
        h += ",emg_" + std::to_string(c);
    for (std::size_t d = 1; d <= kDoaChannels; ++d)
        h += ",doa_" + std::to_string(d);
    return h;
}

inline SubjectRecording import_csv(const std::filesystem::path& path, std::uint32_t subject_id,
                                   double sample_rate_hz = 2000.0)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open '" + path.string() + "' for reading");
    std::string line;
    if (!std::getline(in, line))
        throw DataError(path.string() + ": empty CSV");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != csv_header())
        throw DimensionError(path.string() + ": CSV header must be '" + csv_header() + "'");

    std::vector<std::vector<double>> emg(kEmgChannels), doa(kDoaChannels);
    SubjectRecording rec;
    rec.subject_id = subject_id;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::vector<std::string_view> cells;
        std::string_view rest = line;
        for (;;) {
            const auto comma = rest.find(',');
            cells.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos)
                break;
            rest.remove_prefix(comma + 1);
        }
        if (cells.size() != 3 + kEmgChannels + kDoaChannels)
            throw DimensionError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(3 + kEmgChannels + kDoaChannels) + " columns, found " +
                                 std::to_string(cells.size()));
        rec.session_id.push_back(parse_int<std::uint16_t>(cells[0]));
        rec.gesture_id.push_back(parse_int<std::uint16_t>(cells[1]));
        rec.repetition_id.push_back(parse_int<std::uint16_t>(cells[2]));
        for (std::size_t c = 0; c < kEmgChannels; ++c)
            emg[c].push_back(parse_double(cells[3 + c]));
        for (std::size_t d = 0; d < kDoaChannels; ++d)
            doa[d].push_back(parse_double(cells[3 + kEmgChannels + d]));
    }
    rec.semg = TimeSeries(emg, sample_rate_hz);
    rec.doa_angles = TimeSeries(doa, sample_rate_hz);
    rec.validate();
    return rec;
}

} // namespace emgpop
