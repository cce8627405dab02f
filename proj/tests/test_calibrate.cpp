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

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "cvtomo/error.hpp"
#include "test_util.hpp"

namespace cvtomo {
namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

RawTrace constant_trace(int64_t n, double v) {
    RawTrace t;
    t.channels[0].assign(static_cast<size_t>(n), v);
    t.channels[1].assign(static_cast<size_t>(n), v);
    t.sync_edges = {0};
    return t;
}

// Trace whose block averages equal `values` exactly (each block repeats its
// value over the group); other samples hold unrelated noise.
RawTrace trace_from_blocks(const std::array<std::vector<double>, 2>& values, int64_t n, int64_t delay,
                           const BlockGeometry& g, uint64_t seed) {
    RawTrace t;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    t.channels[0].resize(static_cast<size_t>(n));
    t.channels[1].resize(static_cast<size_t>(n));
    for (auto& ch : t.channels) {
        for (auto& v : ch) v = noise(rng);
    }
    t.sync_edges = {0};
    t.delay_mismatch = delay;
    for (size_t k = 0; k < values[0].size(); ++k) {
        int64_t s1 = (static_cast<int64_t>(k) + g.guard_blocks) * g.spacing;
        for (int64_t j = 0; j < g.group; ++j) {
            t.channels[0][static_cast<size_t>(s1 + j)] = values[0][k];
            t.channels[1][static_cast<size_t>(s1 + delay + j)] = values[1][k];
        }
    }
    return t;
}

TEST(BlockAverage, ConstantChannel) {
    BlockAverages avg = block_average(constant_trace(10000, 0.5));
    ASSERT_GT(avg.size(), 0u);
    for (double v : avg.values[0]) EXPECT_EQ(v, 0.5);
    for (double v : avg.values[1]) EXPECT_EQ(v, 0.5);
}

TEST(BlockAverage, TwoMillionSamplesGive7998Points) {
    EXPECT_EQ(block_average(constant_trace(2000000, 0.0)).size(), 7998u);
}

TEST(BlockAverage, ToyRampAlignment) {
    // 16 samples 0..15, first sync edge at sample 2, blocks of 4 every 4.
    RawTrace t;
    for (int i = 0; i < 16; ++i) {
        t.channels[0].push_back(i);
        t.channels[1].push_back(100 + i);
    }
    t.sync_edges = {2};
    t.delay_mismatch = 1;
    BlockGeometry g{4, 4, 0};
    BlockAverages avg = block_average(t, g);
    ASSERT_EQ(avg.size(), 3u);  // starts 2, 6, 10; 14 would overrun
    EXPECT_DOUBLE_EQ(avg.values[0][0], (2 + 3 + 4 + 5) / 4.0);
    EXPECT_DOUBLE_EQ(avg.values[1][0], 100 + (3 + 4 + 5 + 6) / 4.0);
    EXPECT_EQ(avg.start_sample[2], 10);
}

TEST(BlockAverage, Errors) {
    RawTrace t = constant_trace(100, 1.0);
    EXPECT_THROW(block_average(t), Error);
    t.sync_edges.clear();
    EXPECT_THROW(block_average(t), ConfigError);
    RawTrace u = constant_trace(3000, 1.0);
    u.channels[1].pop_back();
    EXPECT_THROW(block_average(u), ConfigError);
}

TEST(BlockAverage, PointCountIsDeterministic) {
    for (int64_t n : {5000, 123457, 2000000}) {
        EXPECT_EQ(block_average(constant_trace(n, 0.0)).size(), block_average(constant_trace(n, 1.0)).size());
    }
}

TEST(ShotNoise, GaussianVoltages) {
    const size_t k = 7998;
    std::mt19937_64 rng(12);
    std::normal_distribution<double> v(0.01, std::sqrt(4e-6));
    std::array<std::vector<double>, 2> vals;
    for (auto& ch : vals) {
        for (size_t i = 0; i < k; ++i) ch.push_back(v(rng));
    }
    RawTrace t = trace_from_blocks(vals, 2000000, 0, {}, 3);
    auto st = shot_noise_stats(t);
    for (int c = 0; c < 2; ++c) {
        EXPECT_NEAR(st[c].mean, 0.01, 3 * std::sqrt(4e-6) / std::sqrt(7998.0));
        EXPECT_NEAR(st[c].variance / 4e-6, 1.0, 0.05);
    }
    EXPECT_NEAR(shot_noise_stats(constant_trace(20000, 0.3))[0].variance, 0.0, 1e-25);
    RawTrace same = t;
    same.channels[1] = same.channels[0];
    auto s2 = shot_noise_stats(same);
    EXPECT_EQ(s2[0].mean, s2[1].mean);
    EXPECT_EQ(s2[0].variance, s2[1].variance);
}

TEST(ShotNoise, LinearFit) {
    ShotNoiseFit f = fit_shot_noise({1, 5, 10}, {3, 11, 21});
    EXPECT_NEAR(f.slope, 2.0, 1e-12);
    EXPECT_NEAR(f.intercept, 1.0, 1e-12);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
    EXPECT_FALSE(f.nonlinear);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> p;
    std::vector<double> y;
    for (int i = 1; i <= 15; ++i) {
        p.push_back(i);
        y.push_back((2.0 * i + 1.0) * (1.0 + 0.001 * n(rng)));
    }
    EXPECT_GT(fit_shot_noise(p, y).r_squared, 0.999);

    std::vector<double> sat;
    for (double x : p) sat.push_back(15.0 * (1.0 - std::exp(-x / 5.0)));
    EXPECT_TRUE(fit_shot_noise(p, sat).nonlinear);

    EXPECT_THROW(fit_shot_noise({2, 2, 2}, {1, 2, 3}), ConfigError);
    EXPECT_THROW(fit_shot_noise({1}, {1}), ConfigError);
}

TEST(Normalize, IdentitiesAndInverse) {
    ChannelCalibration cal{0.02, 3e-6, std::nullopt};
    std::vector<double> at_mean(5, 0.02);
    for (double x : normalize_quadratures(at_mean, cal)) EXPECT_EQ(x, 0.0);
    std::vector<double> x{-1.3, 0.0, 0.4, 2.2};
    auto back = normalize_quadratures(denormalize_quadratures(x, cal), cal);
    for (size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-12);
    EXPECT_THROW(normalize_quadratures(x, ChannelCalibration{0.0, 0.0, std::nullopt}), Error);
}

TEST(Normalize, VacuumEndToEndHasVarianceHalf) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> v(-0.003, 0.002);
    RawTrace vac;
    for (auto& ch : vac.channels) {
        for (int i = 0; i < 2000000; ++i) ch.push_back(v(rng));
    }
    vac.sync_edges = {0};
    CalibrationRecord cal = calibrate_from_traces(vac, nullptr);
    IngestOptions opt;
    opt.ramp_hz = 5000;
    vac.sample_rate = 2.5e9;
    vac.sync_edges = {0, 500000, 1000000, 1500000};
    // A second, independent vacuum record processed with that calibration.
    RawTrace vac2 = vac;
    for (auto& ch : vac2.channels) {
        for (auto& s : ch) s = v(rng);
    }
    IngestResult res = ingest_trace(vac2, cal, opt);
    double m2x = 0.0;
    double m2p = 0.0;
    for (const auto& r : res.dataset.records) {
        m2x += r.x * r.x;
        m2p += *r.p * *r.p;
    }
    EXPECT_NEAR(m2x / res.dataset.size() / 0.5, 1.0, 0.04);
    EXPECT_NEAR(m2p / res.dataset.size() / 0.5, 1.0, 0.04);
}

TEST(Phases, SingleRampIsLinear) {
    const int n = 50;
    std::vector<int64_t> t(n);
    for (int k = 0; k < n; ++k) t[static_cast<size_t>(k)] = k;
    PhaseAssignment a = assign_phases(t, {0}, n, n);
    EXPECT_EQ(a.sweeps, 1);
    EXPECT_EQ(a.dropped, 0);
    for (int k = 0; k < n; ++k) {
        EXPECT_NEAR(*a.theta[static_cast<size_t>(k)], kTwoPi * k / n, 1e-15);
    }
}

TEST(Phases, FourSweepsPerRecord) {
    // 0.8 ms at 2.5 GS/s with a 5 kHz ramp.
    std::vector<int64_t> t;
    for (int64_t s = 0; s < 2000000; s += 250) t.push_back(s);
    PhaseAssignment a = assign_phases(t, {0, 500000, 1000000, 1500000}, 2000000, 2.5e9 / 5000.0);
    EXPECT_EQ(a.sweeps, 4);
    EXPECT_EQ(a.dropped, 0);
}

TEST(Phases, PartialRampsAreDroppedAndReported) {
    std::vector<int64_t> t;
    for (int64_t s = 0; s < 1000; ++s) t.push_back(s);
    // Period from the median marker spacing (300); the last ramp ends at 1000.
    PhaseAssignment a = assign_phases(t, {100, 400, 700}, 1000, std::nullopt);
    EXPECT_EQ(a.sweeps, 3);
    EXPECT_EQ(a.dropped, 100);
    EXPECT_FALSE(a.theta[50].has_value());
    EXPECT_NEAR(*a.theta[250], kTwoPi * 150 / 300, 1e-12);
    // A record ending mid-ramp loses that ramp.
    std::vector<int64_t> u(t.begin(), t.begin() + 950);
    PhaseAssignment b = assign_phases(u, {100, 400, 700}, 950, std::nullopt);
    EXPECT_EQ(b.sweeps, 2);
    EXPECT_EQ(b.dropped, 100 + 250);
    EXPECT_FALSE(b.theta[800].has_value());
}

TEST(Phases, MarkerJitterBound) {
    const int n = 100;
    const int ramps = 6;
    std::vector<int64_t> t;
    for (int k = 0; k < n * ramps; ++k) t.push_back(k);
    std::vector<int64_t> clean;
    for (int r = 0; r < ramps; ++r) clean.push_back(r * n);
    PhaseAssignment ref = assign_phases(t, clean, n * ramps, n);
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> jitter(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int64_t> noisy = clean;
        for (size_t i = 1; i < noisy.size(); ++i) noisy[i] += jitter(rng);
        PhaseAssignment a = assign_phases(t, noisy, n * ramps, n);
        for (size_t k = 0; k < t.size(); ++k) {
            if (a.theta[k] && ref.theta[k]) {
                double d = std::abs(*a.theta[k] - *ref.theta[k]);
                d = std::min(d, kTwoPi - d);
                EXPECT_LE(d, kTwoPi / n + 1e-12);
            }
        }
    }
}

TEST(Phases, Errors) {
    EXPECT_THROW(assign_phases({0, 1}, {}, 10, 5.0), ConfigError);
    EXPECT_THROW(assign_phases({0, 1}, {0}, 10, std::nullopt), ConfigError);
    EXPECT_THROW(assign_phases({0, 1}, {5, 3}, 10, 2.0), ConfigError);
    EXPECT_THROW(assign_phases({0, 1}, {0}, 10, 20.0), Error);
}

TEST(NoiseRatio, Values) {
    CalibrationRecord rec;
    rec.channels[0] = {0.0, 2.0, 2.0};
    rec.channels[1] = {0.0, 17.0, 1.0};
    auto r = noise_ratio(rec);
    EXPECT_EQ(r[0], 1.0);
    EXPECT_EQ(r[1], 17.0);
    rec.channels[1].sn_var = 20.0;
    EXPECT_GT(noise_ratio(rec)[1], r[1]);
    rec.channels[0].electronics_var = 0.0;
    EXPECT_THROW(noise_ratio(rec), Error);
}

TEST(Ingest, SyntheticRoundTripWithin1e9) {
    BlockGeometry g;
    const int64_t n = 2000000;
    const int64_t delay = 7;
    const size_t points = 7998;
    CalibrationRecord cal;
    cal.channels[0] = {0.013, 4.2e-6, 2.5e-7};
    cal.channels[1] = {-0.008, 3.7e-6, 2.2e-7};
    std::mt19937_64 rng(21);
    std::normal_distribution<double> q(0.0, 1.1);
    std::vector<double> x(points);
    std::vector<double> p(points);
    for (size_t k = 0; k < points; ++k) {
        x[k] = q(rng);
        p[k] = q(rng);
    }
    std::array<std::vector<double>, 2> volts{denormalize_quadratures(x, cal.channels[0]),
                                             denormalize_quadratures(p, cal.channels[1])};
    RawTrace t = trace_from_blocks(volts, n, delay, g, 8);
    t.sync_edges = {0, 500000, 1000000, 1500000};
    IngestOptions opt;
    opt.ramp_hz = 5000;
    IngestResult res = ingest_trace(t, cal, opt);
    EXPECT_EQ(res.sweeps, 4);
    EXPECT_EQ(res.block_points, 7998);
    EXPECT_EQ(res.dropped_points, 0);
    ASSERT_EQ(res.dataset.size(), points);
    for (size_t k = 0; k < points; ++k) {
        int64_t start = (static_cast<int64_t>(k) + 1) * 250;
        double theta = kTwoPi * static_cast<double>(start % 500000) / 500000.0;
        EXPECT_NEAR(res.dataset.records[k].theta, theta, 1e-9);
        EXPECT_NEAR(res.dataset.records[k].x, x[k], 1e-9);
        EXPECT_NEAR(*res.dataset.records[k].p, p[k], 1e-9);
    }
    opt.scheme = Scheme::Homodyne;
    IngestResult hom = ingest_trace(t, cal, opt);
    EXPECT_FALSE(hom.dataset.records[0].p.has_value());
}

TEST(TraceFile, RoundTripIsBitExactForFloat32Values) {
    auto dir = testing::scratch_dir("trace_file");
    RawTrace t;
    t.sample_rate = 2.5e9;
    t.delay_mismatch = 3;
    t.lo_power_mw = 12.0;
    std::mt19937_64 rng(2);
    std::normal_distribution<float> v(0.0f, 0.01f);
    for (auto& ch : t.channels) {
        for (int i = 0; i < 1000; ++i) ch.push_back(static_cast<double>(v(rng)));
    }
    t.sync_edges = {0, 400};
    std::string path = (dir / "t.json").string();
    write_trace(path, t);
    RawTrace back = read_trace(path);
    EXPECT_EQ(back.channels[0], t.channels[0]);
    EXPECT_EQ(back.channels[1], t.channels[1]);
    EXPECT_EQ(back.sync_edges, t.sync_edges);
    EXPECT_EQ(back.delay_mismatch, 3);
    EXPECT_EQ(*back.lo_power_mw, 12.0);
    EXPECT_TRUE(std::filesystem::exists(dir / "t.bin"));
    EXPECT_EQ(std::filesystem::file_size(dir / "t.bin"), 8000u);
}

TEST(CalibrationJson, RoundTrip) {
    CalibrationRecord rec;
    rec.channels[0] = {0.01, 4e-6, 2e-7};
    rec.channels[1] = {0.02, 5e-6, std::nullopt};
    rec.lo_power_mw = 12;
    rec.fit = std::array<ShotNoiseFit, 2>{ShotNoiseFit{1, 2, 0.9998, false}, ShotNoiseFit{1, 2, 0.99, true}};
    CalibrationRecord back = CalibrationRecord::from_json(rec.to_json());
    EXPECT_EQ(back.channels[0].sn_var, 4e-6);
    EXPECT_FALSE(back.channels[1].electronics_var.has_value());
    EXPECT_TRUE((*back.fit)[1].nonlinear);
    EXPECT_EQ(*back.lo_power_mw, 12);
}

TEST(SquareWave, RisingEdges) {
    std::vector<double> m{0, 0, 1, 1, 0, 1, 1, 1, 0};
    EXPECT_EQ(sync_edges_from_square_wave(m, 0.5), (std::vector<int64_t>{2, 5}));
}

}  // namespace
}  // namespace cvtomo
