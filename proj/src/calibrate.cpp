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

#include "cvtomo/calibrate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "cvtomo/error.hpp"
#include "cvtomo/io.hpp"

namespace cvtomo {

void RawTrace::validate() const {
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
        throw ConfigError("trace: sample_rate must be > 0");
    }
    if (channels[0].size() != channels[1].size()) {
        throw ConfigError("trace: channel lengths differ");
    }
    if (!std::is_sorted(sync_edges.begin(), sync_edges.end())) {
        throw ConfigError("trace: sync edges must be ascending");
    }
    for (int64_t e : sync_edges) {
        if (e < 0 || e >= size()) {
            throw ConfigError("trace: sync edge outside the record");
        }
    }
}

std::vector<int64_t> sync_edges_from_square_wave(const std::vector<double>& marker, double level) {
    std::vector<int64_t> edges;
    for (size_t i = 1; i < marker.size(); ++i) {
        if (marker[i - 1] < level && marker[i] >= level) {
            edges.push_back(static_cast<int64_t>(i));
        }
    }
    return edges;
}

void BlockGeometry::check() const {
    if (spacing < 1 || group < 1 || group > spacing || guard_blocks < 0) {
        throw ConfigError("block geometry: need 1 <= group <= spacing and guard_blocks >= 0");
    }
}

BlockAverages block_average(const RawTrace& trace, const BlockGeometry& geometry) {
    trace.validate();
    geometry.check();
    if (trace.sync_edges.empty()) {
        throw ConfigError("trace has no sync edges");
    }
    const int64_t n = trace.size();
    const int64_t origin = trace.sync_edges.front();
    const int64_t delay = trace.delay_mismatch;
    // Block k covers [origin + k*spacing, +group) on channel 1 and the same
    // window shifted by `delay` on channel 2.
    int64_t k_lo = 0;
    if (origin + delay < 0) {
        k_lo = (-(origin + delay) + geometry.spacing - 1) / geometry.spacing;
    }
    int64_t last_start = n - geometry.group - std::max<int64_t>(delay, 0) - origin;
    if (last_start < 0) {
        throw Error("trace too short for one block");
    }
    int64_t k_hi = last_start / geometry.spacing;
    k_lo += geometry.guard_blocks;
    k_hi -= geometry.guard_blocks;
    if (k_hi < k_lo) {
        throw Error("trace too short for one block");
    }
    BlockAverages out;
    const size_t count = static_cast<size_t>(k_hi - k_lo + 1);
    out.values[0].reserve(count);
    out.values[1].reserve(count);
    out.start_sample.reserve(count);
    const double inv = 1.0 / static_cast<double>(geometry.group);
    for (int64_t k = k_lo; k <= k_hi; ++k) {
        int64_t s1 = origin + k * geometry.spacing;
        int64_t s2 = s1 + delay;
        double a = 0.0;
        double b = 0.0;
        for (int64_t g = 0; g < geometry.group; ++g) {
            a += trace.channels[0][static_cast<size_t>(s1 + g)];
            b += trace.channels[1][static_cast<size_t>(s2 + g)];
        }
        out.values[0].push_back(a * inv);
        out.values[1].push_back(b * inv);
        out.start_sample.push_back(s1);
    }
    return out;
}

namespace {

ChannelStats stats_of(const std::vector<double>& v) {
    ChannelStats s;
    const double n = static_cast<double>(v.size());
    for (double x : v) {
        s.mean += x;
    }
    s.mean /= n;
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) {
            ss += (x - s.mean) * (x - s.mean);
        }
        s.variance = ss / (n - 1.0);
    }
    return s;
}

nlohmann::json fit_to_json(const ShotNoiseFit& f) {
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}, {"nonlinear", f.nonlinear}};
}

ShotNoiseFit fit_from_json(const nlohmann::json& j) {
    ShotNoiseFit f;
    f.slope = j.at("slope").get<double>();
    f.intercept = j.at("intercept").get<double>();
    f.r_squared = j.at("r_squared").get<double>();
    f.nonlinear = j.value("nonlinear", f.r_squared < kLinearityThreshold);
    return f;
}

}  // namespace

std::array<ChannelStats, 2> shot_noise_stats(const RawTrace& vacuum_trace, const BlockGeometry& geometry) {
    BlockAverages avg = block_average(vacuum_trace, geometry);
    return {stats_of(avg.values[0]), stats_of(avg.values[1])};
}

ShotNoiseFit fit_shot_noise(const std::vector<double>& lo_power_mw, const std::vector<double>& variance) {
    if (lo_power_mw.size() != variance.size() || lo_power_mw.size() < 2) {
        throw ConfigError("fit_shot_noise: need matching power/variance lists with at least 2 entries");
    }
    const double n = static_cast<double>(lo_power_mw.size());
    double mx = 0.0;
    double my = 0.0;
    for (size_t i = 0; i < lo_power_mw.size(); ++i) {
        mx += lo_power_mw[i];
        my += variance[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (size_t i = 0; i < lo_power_mw.size(); ++i) {
        double dx = lo_power_mw[i] - mx;
        double dy = variance[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) {
        throw ConfigError("fit_shot_noise: all LO powers are equal");
    }
    ShotNoiseFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (size_t i = 0; i < lo_power_mw.size(); ++i) {
        double r = variance[i] - (f.slope * lo_power_mw[i] + f.intercept);
        ss_res += r * r;
    }
    f.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    f.nonlinear = f.r_squared < kLinearityThreshold;
    return f;
}

void CalibrationRecord::validate() const {
    for (const auto& c : channels) {
        if (!(c.sn_var > 0.0)) {
            throw Error("calibration: shot-noise variance must be > 0");
        }
        if (c.electronics_var && *c.electronics_var < 0.0) {
            throw Error("calibration: electronics variance must be >= 0");
        }
    }
    if (fit) {
        for (const auto& f : *fit) {
            if (f.r_squared < 0.0 || f.r_squared > 1.0) {
                throw Error("calibration: R^2 outside [0, 1]");
            }
        }
    }
}

nlohmann::json CalibrationRecord::to_json() const {
    nlohmann::json j;
    j["format"] = "cvtomo-calibration";
    j["version"] = 1;
    j["lo_power_mw"] = lo_power_mw ? nlohmann::json(*lo_power_mw) : nlohmann::json();
    nlohmann::json ch = nlohmann::json::array();
    for (const auto& c : channels) {
        ch.push_back({{"sn_mean", c.sn_mean},
                      {"sn_var", c.sn_var},
                      {"electronics_var", c.electronics_var ? nlohmann::json(*c.electronics_var) : nlohmann::json()}});
    }
    j["channels"] = ch;
    if (fit) {
        j["fit"] = {fit_to_json((*fit)[0]), fit_to_json((*fit)[1])};
    }
    if (channels[0].electronics_var && channels[1].electronics_var && *channels[0].electronics_var > 0.0 &&
        *channels[1].electronics_var > 0.0) {
        auto r = noise_ratio(*this);
        j["noise_ratio"] = {r[0], r[1]};
    }
    return j;
}

CalibrationRecord CalibrationRecord::from_json(const nlohmann::json& j) {
    CalibrationRecord rec;
    const auto& ch = j.at("channels");
    if (!ch.is_array() || ch.size() != 2) {
        throw Error("calibration JSON: expected two channels");
    }
    for (size_t i = 0; i < 2; ++i) {
        rec.channels[i].sn_mean = ch[i].at("sn_mean").get<double>();
        rec.channels[i].sn_var = ch[i].at("sn_var").get<double>();
        if (ch[i].contains("electronics_var") && ch[i].at("electronics_var").is_number()) {
            rec.channels[i].electronics_var = ch[i].at("electronics_var").get<double>();
        }
    }
    if (j.contains("lo_power_mw") && j.at("lo_power_mw").is_number()) {
        rec.lo_power_mw = j.at("lo_power_mw").get<double>();
    }
    if (j.contains("fit")) {
        rec.fit = std::array<ShotNoiseFit, 2>{fit_from_json(j.at("fit")[0]), fit_from_json(j.at("fit")[1])};
    }
    rec.validate();
    return rec;
}

std::vector<double> normalize_quadratures(const std::vector<double>& averaged, const ChannelCalibration& cal) {
    if (!(cal.sn_var > 0.0)) {
        throw Error("normalize_quadratures: shot-noise variance must be > 0");
    }
    const double scale = std::sqrt(0.5 / cal.sn_var);
    std::vector<double> out(averaged.size());
    for (size_t k = 0; k < averaged.size(); ++k) {
        out[k] = (averaged[k] - cal.sn_mean) * scale;
    }
    return out;
}

std::vector<double> denormalize_quadratures(const std::vector<double>& quadratures, const ChannelCalibration& cal) {
    if (!(cal.sn_var > 0.0)) {
        throw Error("denormalize_quadratures: shot-noise variance must be > 0");
    }
    const double scale = std::sqrt(cal.sn_var / 0.5);
    std::vector<double> out(quadratures.size());
    for (size_t k = 0; k < quadratures.size(); ++k) {
        out[k] = quadratures[k] * scale + cal.sn_mean;
    }
    return out;
}

PhaseAssignment assign_phases(const std::vector<int64_t>& point_times, const std::vector<int64_t>& markers,
                              int64_t record_end, std::optional<double> ramp_period) {
    if (markers.empty()) {
        throw ConfigError("assign_phases: no sync markers");
    }
    if (!std::is_sorted(markers.begin(), markers.end()) ||
        std::adjacent_find(markers.begin(), markers.end()) != markers.end()) {
        throw ConfigError("assign_phases: markers must be strictly ascending");
    }
    double period;
    if (ramp_period) {
        period = *ramp_period;
    } else if (markers.size() >= 2) {
        std::vector<int64_t> gaps;
        for (size_t i = 1; i < markers.size(); ++i) {
            gaps.push_back(markers[i] - markers[i - 1]);
        }
        std::nth_element(gaps.begin(), gaps.begin() + static_cast<long>(gaps.size() / 2), gaps.end());
        period = static_cast<double>(gaps[gaps.size() / 2]);
    } else {
        throw ConfigError("assign_phases: one marker and no ramp period");
    }
    if (!(period > 0.0)) {
        throw ConfigError("assign_phases: ramp period must be > 0");
    }
    const double last_end = static_cast<double>(markers.back()) + period;
    const bool last_complete = last_end <= static_cast<double>(record_end);

    PhaseAssignment out;
    out.sweeps = static_cast<int64_t>(markers.size()) - 1 + (last_complete ? 1 : 0);
    if (out.sweeps < 1) {
        throw Error("assign_phases: no complete phase ramp in the record");
    }
    out.theta.resize(point_times.size());
    const double two_pi = 2.0 * std::numbers::pi;
    for (size_t i = 0; i < point_times.size(); ++i) {
        int64_t t = point_times[i];
        auto it = std::upper_bound(markers.begin(), markers.end(), t);
        if (it == markers.begin()) {
            ++out.dropped;
            continue;
        }
        size_t j = static_cast<size_t>(it - markers.begin()) - 1;
        double start = static_cast<double>(markers[j]);
        double end;
        if (j + 1 < markers.size()) {
            end = static_cast<double>(markers[j + 1]);
        } else {
            if (!last_complete || static_cast<double>(t) >= last_end) {
                ++out.dropped;
                continue;
            }
            end = last_end;
        }
        out.theta[i] = two_pi * (static_cast<double>(t) - start) / (end - start);
    }
    return out;
}

std::array<double, 2> noise_ratio(const CalibrationRecord& calibration) {
    std::array<double, 2> out{};
    for (size_t c = 0; c < 2; ++c) {
        const auto& ch = calibration.channels[c];
        if (!ch.electronics_var || !(*ch.electronics_var > 0.0)) {
            throw Error("noise_ratio: electronics variance must be > 0");
        }
        out[c] = ch.sn_var / *ch.electronics_var;
    }
    return out;
}

IngestResult ingest_trace(const RawTrace& trace, const CalibrationRecord& calibration, const IngestOptions& options) {
    calibration.validate();
    BlockAverages avg = block_average(trace, options.geometry);
    std::optional<double> period;
    if (options.ramp_hz) {
        if (!(*options.ramp_hz > 0.0)) {
            throw ConfigError("ramp frequency must be > 0");
        }
        period = trace.sample_rate / *options.ramp_hz;
    }
    PhaseAssignment phases = assign_phases(avg.start_sample, trace.sync_edges, trace.size(), period);
    std::vector<double> x = normalize_quadratures(avg.values[0], calibration.channels[0]);
    std::vector<double> p = normalize_quadratures(avg.values[1], calibration.channels[1]);

    IngestResult out;
    out.block_points = static_cast<int64_t>(avg.size());
    out.dropped_points = phases.dropped;
    out.sweeps = phases.sweeps;
    out.dataset.scheme = options.scheme;
    out.dataset.records.reserve(avg.size());
    for (size_t k = 0; k < avg.size(); ++k) {
        if (!phases.theta[k]) {
            continue;
        }
        QuadratureRecord r{*phases.theta[k], x[k], std::nullopt};
        if (options.scheme == Scheme::Heterodyne) {
            r.p = p[k];
        }
        out.dataset.records.push_back(r);
    }
    out.dataset.metadata.source = "calibrated trace";
    out.dataset.metadata.lo_power_mw = trace.lo_power_mw ? trace.lo_power_mw : calibration.lo_power_mw;
    out.dataset.metadata.provenance = {{"calibration", calibration.to_json()},
                                       {"block_spacing", options.geometry.spacing},
                                       {"block_group", options.geometry.group},
                                       {"guard_blocks", options.geometry.guard_blocks},
                                       {"block_points", out.block_points},
                                       {"dropped_points", out.dropped_points},
                                       {"sweeps", out.sweeps}};
    out.dataset.validate();
    return out;
}

CalibrationRecord calibrate_from_traces(const RawTrace& vacuum, const RawTrace* electronics,
                                        const BlockGeometry& geometry) {
    CalibrationRecord rec;
    auto sn = shot_noise_stats(vacuum, geometry);
    std::optional<std::array<ChannelStats, 2>> el;
    if (electronics) {
        el = shot_noise_stats(*electronics, geometry);
    }
    for (size_t c = 0; c < 2; ++c) {
        rec.channels[c].sn_mean = sn[c].mean;
        rec.channels[c].sn_var = sn[c].variance;
        if (el) {
            rec.channels[c].electronics_var = (*el)[c].variance;
        }
    }
    rec.lo_power_mw = vacuum.lo_power_mw;
    rec.validate();
    return rec;
}

namespace {

static_assert(sizeof(float) == 4);

uint32_t byteswap32(uint32_t v) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

std::string data_path_for(const std::string& header_path) {
    std::filesystem::path p(header_path);
    p.replace_extension(".bin");
    return p.string();
}

}  // namespace

void write_trace(const std::string& header_path, const RawTrace& trace) {
    trace.validate();
    std::string bin = data_path_for(header_path);
    std::ofstream out(bin, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + bin);
    }
    for (const auto& ch : trace.channels) {
        for (double v : ch) {
            uint32_t bits = std::bit_cast<uint32_t>(static_cast<float>(v));
            if constexpr (std::endian::native == std::endian::big) {
                bits = byteswap32(bits);
            }
            out.write(reinterpret_cast<const char*>(&bits), 4);
        }
    }
    if (!out) {
        throw Error("write failed for " + bin);
    }
    nlohmann::json h;
    h["format"] = "cvtomo-trace";
    h["version"] = 1;
    h["sample_rate"] = trace.sample_rate;
    h["n_samples"] = trace.size();
    h["delay_mismatch"] = trace.delay_mismatch;
    h["sync_edges"] = trace.sync_edges;
    h["lo_power_mw"] = trace.lo_power_mw ? nlohmann::json(*trace.lo_power_mw) : nlohmann::json();
    h["data_file"] = std::filesystem::path(bin).filename().string();
    h["encoding"] = "float32-le, channel 1 then channel 2";
    write_json_file(header_path, h);
}

RawTrace read_trace(const std::string& header_path) {
    nlohmann::json h = read_json_file(header_path);
    if (h.value("format", "") != "cvtomo-trace") {
        throw ConfigError(header_path + ": not a cvtomo trace header");
    }
    RawTrace t;
    t.sample_rate = h.at("sample_rate").get<double>();
    t.delay_mismatch = h.value("delay_mismatch", int64_t{0});
    if (h.contains("sync_edges")) {
        t.sync_edges = h.at("sync_edges").get<std::vector<int64_t>>();
    }
    if (h.contains("lo_power_mw") && h.at("lo_power_mw").is_number()) {
        t.lo_power_mw = h.at("lo_power_mw").get<double>();
    }
    const int64_t n = h.at("n_samples").get<int64_t>();
    if (n < 0) {
        throw ConfigError(header_path + ": negative sample count");
    }
    std::filesystem::path bin = std::filesystem::path(header_path).parent_path() / h.at("data_file").get<std::string>();
    std::ifstream in(bin, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + bin.string());
    }
    for (auto& ch : t.channels) {
        ch.resize(static_cast<size_t>(n));
        for (int64_t i = 0; i < n; ++i) {
            uint32_t bits = 0;
            in.read(reinterpret_cast<char*>(&bits), 4);
            if (!in) {
                throw Error(bin.string() + ": truncated trace data");
            }
            if constexpr (std::endian::native == std::endian::big) {
                bits = byteswap32(bits);
            }
            ch[static_cast<size_t>(i)] = static_cast<double>(std::bit_cast<float>(bits));
        }
    }
    t.validate();
    return t;
}

}  // namespace cvtomo
