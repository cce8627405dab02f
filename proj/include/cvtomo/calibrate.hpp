// Copyright 2026 The cvtomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CVTOMO_CALIBRATE_HPP_
#define CVTOMO_CALIBRATE_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvtomo/measurement.hpp"

namespace cvtomo {

/// Two-channel voltage record. `sync_edges` are sample indices where a
/// sync marker (phase ramp start) begins.
struct RawTrace {
    double sample_rate = 2.5e9;
    std::array<std::vector<double>, 2> channels;
    std::vector<int64_t> sync_edges;
    int64_t delay_mismatch = 0;  // channel 2 lags channel 1 by this many samples
    std::optional<double> lo_power_mw;

    int64_t size() const { return static_cast<int64_t>(channels[0].size()); }
    void validate() const;
};

/// Rising edges of a square-wave marker: indices i with m[i-1] < level <= m[i].
std::vector<int64_t> sync_edges_from_square_wave(const std::vector<double>& marker, double level);

struct BlockGeometry {
    int64_t spacing = 250;
    int64_t group = 4;
    /// Complete blocks discarded at each end of the record.
    int64_t guard_blocks = 1;

    void check() const;
};

struct BlockAverages {
    std::array<std::vector<double>, 2> values;
    /// Channel-1 start sample of each retained block.
    std::vector<int64_t> start_sample;

    size_t size() const { return start_sample.size(); }
};

/// Averages `group` adjacent samples every `spacing` samples, starting at the
/// first sync edge (channel 2 shifted by the delay mismatch). Blocks that do
/// not fit in both channels are dropped, then `guard_blocks` from each end.
BlockAverages block_average(const RawTrace& trace, const BlockGeometry& geometry = {});

struct ChannelStats {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
};

/// Sample mean and unbiased variance of the block-averaged points.
std::array<ChannelStats, 2> shot_noise_stats(const RawTrace& vacuum_trace, const BlockGeometry& geometry = {});

struct ShotNoiseFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    bool nonlinear = false;  // r_squared below kLinearityThreshold
};

inline constexpr double kLinearityThreshold = 0.995;

/// Ordinary least squares of variance against LO power.
ShotNoiseFit fit_shot_noise(const std::vector<double>& lo_power_mw, const std::vector<double>& variance);

struct ChannelCalibration {
    double sn_mean = 0.0;
    double sn_var = 0.0;
    std::optional<double> electronics_var;
};

struct CalibrationRecord {
    std::array<ChannelCalibration, 2> channels;
    std::optional<double> lo_power_mw;
    std::optional<std::array<ShotNoiseFit, 2>> fit;

    void validate() const;
    nlohmann::json to_json() const;
    static CalibrationRecord from_json(const nlohmann::json& j);
};

/// x = (V - SN_m) sqrt((1/2) / SN_var)
std::vector<double> normalize_quadratures(const std::vector<double>& averaged, const ChannelCalibration& cal);
/// Inverse of normalize_quadratures.
std::vector<double> denormalize_quadratures(const std::vector<double>& quadratures, const ChannelCalibration& cal);

struct PhaseAssignment {
    /// One entry per input point; nullopt where the point lies outside a
    /// complete ramp.
    std::vector<std::optional<double>> theta;
    int64_t sweeps = 0;
    int64_t dropped = 0;
};

/// Linear phase from 0 to 2 pi across each ramp. A ramp runs from one marker
/// to the next; the last one ends `ramp_period` after its marker (median
/// marker spacing when not given) and counts only if it ends by `record_end`.
/// Times, markers and period share one unit (samples, or point indices).
PhaseAssignment assign_phases(const std::vector<int64_t>& point_times, const std::vector<int64_t>& markers,
                              int64_t record_end, std::optional<double> ramp_period = std::nullopt);

/// SN_var / electronics_var for each channel.
std::array<double, 2> noise_ratio(const CalibrationRecord& calibration);

struct IngestOptions {
    Scheme scheme = Scheme::Heterodyne;
    BlockGeometry geometry;
    /// Phase ramp frequency; the period falls back to the marker spacing.
    std::optional<double> ramp_hz;
};

struct IngestResult {
    QuadratureDataset dataset;
    int64_t block_points = 0;
    int64_t dropped_points = 0;
    int64_t sweeps = 0;
};

/// Block average, normalize and phase-assign a signal trace. Homodyne output
/// keeps channel 1 only.
IngestResult ingest_trace(const RawTrace& trace, const CalibrationRecord& calibration, const IngestOptions& options = {});

/// Calibration from a vacuum trace and an optional electronics-noise trace.
CalibrationRecord calibrate_from_traces(const RawTrace& vacuum, const RawTrace* electronics,
                                        const BlockGeometry& geometry = {});

/// Header JSON next to a little-endian float32 file holding channel 1 then
/// channel 2.
void write_trace(const std::string& header_path, const RawTrace& trace);
RawTrace read_trace(const std::string& header_path);

}  // namespace cvtomo

#endif  // CVTOMO_CALIBRATE_HPP_
