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

// End-to-end acceptance checks. Each invocation runs one criterion (or one
// part of it) and prints a single PASS/FAIL verdict line, followed by
// informational lines prefixed with "  ".

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cvtomo/analysis.hpp"
#include "cvtomo/bures.hpp"
#include "cvtomo/calibrate.hpp"
#include "cvtomo/cli.hpp"
#include "cvtomo/error.hpp"
#include "cvtomo/fock.hpp"
#include "cvtomo/io.hpp"
#include "cvtomo/measurement.hpp"
#include "cvtomo/pcn.hpp"
#include "cvtomo/simulator.hpp"

namespace {

using namespace cvtomo;
namespace fs = std::filesystem;

struct Verdict {
    bool pass = false;
    std::string summary;
    std::vector<std::string> info;
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

class Timer {
   public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

   private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Simulation and sampler settings for one inference run.
struct RunSpec {
    int cutoff = 10;
    int samples = 1024;
    int thinning = 1 << 11;
    uint64_t seed = 1;
};

PosteriorEnsemble infer(const QuadratureDataset& data, double eta, const RunSpec& run) {
    MeasurementConfig m{eta, run.cutoff};
    SamplerConfig s;
    s.samples = run.samples;
    s.thinning = run.thinning;
    s.seed = run.seed;
    return run_chain(data, m, s);
}

QuadratureDataset simulate(const StateSpec& spec, Scheme scheme, int64_t k, double eta, uint64_t seed) {
    SimConfig c;
    c.spec = spec;
    c.scheme = scheme;
    c.records = k;
    c.eta = eta;
    c.seed = seed;
    return simulate_dataset(c);
}

FunctionalEstimate sample_fidelity(const PosteriorEnsemble& ens, const DensityMatrix& truth) {
    FidelityReference ref(truth);
    return estimate_functional(ens, [&](const DensityMatrix& r) { return ref(r); });
}

// 1. Outcome densities integrate to one.
Verdict criterion1() {
    Timer t;
    double worst1 = 0.0;
    double worst2 = 0.0;
    for (uint64_t s = 0; s < 20; ++s) {
        Rng rng(1000 + s);
        LossyDensityMatrix lr{build_density(sample_prior(rng, 11)), 1.0};
        for (double theta : {0.0, 1.1}) {
            // Trapezoid rule; the integrands are smooth and decay like
            // Gaussians, so the error is far below the tolerance.
            const double h1 = 0.01;
            double i1 = 0.0;
            for (int i = -1400; i <= 1400; ++i) i1 += homodyne_pdf(i * h1, theta, lr);
            i1 *= h1;
            const double h2 = 0.05;
            double i2 = 0.0;
            for (int i = -240; i <= 240; ++i) {
                for (int j = -240; j <= 240; ++j) i2 += heterodyne_pdf(i * h2, j * h2, theta, lr);
            }
            i2 *= h2 * h2;
            worst1 = std::max(worst1, std::abs(i1 - 1.0));
            worst2 = std::max(worst2, std::abs(i2 - 1.0));
        }
    }
    double secs = t.seconds();
    Verdict v;
    v.pass = worst1 <= 1e-6 && worst2 <= 1e-3 && secs < 60;
    v.summary = "max |int f1 - 1| = " + fmt(worst1) + " (tol 1e-6), max |int f2 - 1| = " + fmt(worst2) +
                " (tol 1e-3), " + fmt(secs) + " s (limit 60 s)";
    return v;
}

// 2. Loss channel against the coherent-state oracle and trace preservation.
Verdict criterion2() {
    Timer t;
    DensityMatrix in = DensityMatrix::pure(coherent_ket(1.0, 20));
    DensityMatrix expect = DensityMatrix::pure(coherent_ket(0.5, 20));
    double err = (apply_loss(in, 0.25).state.matrix() - expect.matrix()).cwiseAbs().maxCoeff();
    double worst_trace = 0.0;
    Rng rng(7);
    std::uniform_real_distribution<double> ueta(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        DensityMatrix r = build_density(sample_prior(rng, 11));
        double eta = ueta(rng);
        LossChannel ch(eta, 10);
        worst_trace = std::max(worst_trace, std::abs(ch.apply(r.matrix()).trace().real() - 1.0));
    }
    double secs = t.seconds();
    Verdict v;
    v.pass = err <= 1e-6 && worst_trace <= 1e-12 && secs < 10;
    v.summary = "max elementwise error = " + fmt(err) + " (tol 1e-6), max trace error = " + fmt(worst_trace) +
                " (tol 1e-12), " + fmt(secs) + " s (limit 10 s)";
    return v;
}

// 3. Flat likelihood reproduces the prior mean.
Verdict criterion3() {
    Timer t;
    const int d = 3;
    SamplerConfig cfg;
    cfg.samples = 100000;
    cfg.thinning = 1;
    cfg.burn_in = 0;
    cfg.seed = 3;
    PosteriorEnsemble ens = run_chain([](const BuresParams&) { return 0.0; }, d, cfg);
    CMatrix target = CMatrix::Identity(d, d) / 3.0;
    double chain_err = (bayesian_mean(ens).matrix() - target).cwiseAbs().maxCoeff();
    Rng rng(4);
    CMatrix acc = CMatrix::Zero(d, d);
    const int n = 100000;
    for (int i = 0; i < n; ++i) acc += build_density(sample_prior(rng, d)).matrix();
    double direct_err = (acc / n - target).cwiseAbs().maxCoeff();
    double secs = t.seconds();
    Verdict v;
    v.pass = chain_err <= 0.02 && direct_err <= 0.02 && secs < 120;
    v.summary = "pCN max |mean - I/3| = " + fmt(chain_err) + ", direct = " + fmt(direct_err) + " (tol 0.02), " +
                fmt(secs) + " s (limit 120 s)";
    return v;
}

// 4. Coherent-state heterodyne fidelity at K = 7998 and K = 1600.
Verdict criterion4(const std::string& part, bool full) {
    Timer t;
    const int64_t k = part == "K1600" ? 1600 : 7998;
    const double paper = k == 7998 ? 0.958 : 0.86;
    const double tol = full ? (k == 7998 ? 0.05 : 0.07) : 0.08;
    RunSpec run;
    run.cutoff = full ? 20 : 10;
    run.thinning = full ? 1 << 14 : 1 << 11;
    StateSpec spec{Coherent{Complex(std::sqrt(7.97), 0.0)}, run.cutoff};
    // Nested prefix of one 7998-record dataset.
    QuadratureDataset data = simulate(spec, Scheme::Heterodyne, 7998, 1.0, 41).prefix(static_cast<size_t>(k));
    DensityMatrix truth = make_state(spec);
    PosteriorEnsemble ens = infer(data, 1.0, run);
    FunctionalEstimate f = sample_fidelity(ens, truth);
    double fb = fidelity(truth, bayesian_mean(ens));
    double secs = t.seconds();
    const double limit = full ? 1e9 : 1800;
    Verdict v;
    v.pass = std::abs(f.mean - paper) <= tol && secs < limit;
    v.summary = "K=" + std::to_string(k) + " mean sample fidelity = " + fmt(f.mean) + " +/- " + fmt(f.std) +
                " (target " + fmt(paper) + " +/- " + fmt(tol) + "), " + fmt(secs) + " s" +
                (full ? "" : " (limit 1800 s)");
    v.info.push_back("profile " + std::string(full ? "full" : "reduced") + ": n_c=" + std::to_string(run.cutoff) +
                     " T=" + std::to_string(run.thinning) + " R=" + std::to_string(run.samples));
    v.info.push_back("fidelity of the Bayesian mean = " + fmt(fb) + ", acceptance = " + fmt(ens.acceptance_rate) +
                     ", beta = " + fmt(ens.beta));
    v.info.push_back("truncation error of the untruncated state at n_c=" + std::to_string(run.cutoff) + ": " +
                     fmt(truncation_error(spec, run.cutoff)));
    return v;
}

// 5. Scaling properties for one state family.
struct FamilyRun {
    std::map<Scheme, std::vector<ScalingRow>> rows;  // averaged over seeds
};

std::vector<ScalingRow> scaling_rows(const ScalingState& state, Scheme scheme, const std::vector<int64_t>& ks,
                                     int seeds, const RunSpec& run) {
    std::vector<ScalingRow> avg;
    for (int s = 0; s < seeds; ++s) {
        ScalingConfig cfg;
        cfg.states = {state};
        cfg.subset_sizes = ks;
        cfg.scheme = scheme;
        cfg.sampler.samples = run.samples;
        cfg.sampler.thinning = run.thinning;
        cfg.seed = 500 + static_cast<uint64_t>(s);
        auto rows = scaling_experiment(cfg);
        if (avg.empty()) {
            avg = rows;
            for (auto& r : avg) {
                r.fid_mean = 0.0;
                r.fid_std = 0.0;
            }
        }
        for (size_t i = 0; i < rows.size(); ++i) {
            avg[i].fid_mean += rows[i].fid_mean / seeds;
            avg[i].fid_std += rows[i].fid_std / seeds;
        }
    }
    return avg;
}

ScalingState family_state(const std::string& family, int cutoff) {
    if (family == "coherent") return {"coherent", state_with_mean_photons(StateFamily::Coherent, 1.5, cutoff)};
    if (family == "thermal") return {"thermal", state_with_mean_photons(StateFamily::Thermal, 1.5, cutoff)};
    if (family == "squeezed") return {"squeezed", state_with_mean_photons(StateFamily::Squeezed, 1.5, cutoff)};
    if (family == "fock") return {"fock", state_with_mean_photons(StateFamily::Fock, 2.0, cutoff)};
    throw ConfigError("unknown family " + family);
}

Verdict criterion5(const std::string& family, bool full) {
    Timer t;
    RunSpec run;
    const std::vector<int64_t> ks = full ? std::vector<int64_t>{1, 400, 800, 1600, 3200, 6400, 8000}
                                         : std::vector<int64_t>{400, 800, 1600};
    const int seeds = full ? 3 : 1;
    const int64_t k_top = ks.back();
    ScalingState state = family_state(family, run.cutoff);
    Verdict v;
    v.pass = true;
    std::map<Scheme, std::vector<ScalingRow>> rows;
    for (Scheme scheme : {Scheme::Homodyne, Scheme::Heterodyne}) {
        rows[scheme] = scaling_rows(state, scheme, ks, seeds, run);
        const auto& r = rows[scheme];
        std::string line = to_string(scheme) + ":";
        for (size_t i = 0; i < r.size(); ++i) {
            line += " K=" + std::to_string(r[i].records) + " F=" + fmt(r[i].fid_mean) + "+/-" + fmt(r[i].fid_std);
            if (i > 0) {
                double slack = std::max(r[i].fid_std, r[i - 1].fid_std);
                if (r[i].fid_mean + slack < r[i - 1].fid_mean) {
                    v.pass = false;
                    line += " (decrease beyond one std)";
                }
            }
        }
        v.info.push_back(line);
    }
    std::string extra;
    if (family == "thermal") {
        auto coh = scaling_rows(family_state("coherent", run.cutoff), Scheme::Heterodyne, {k_top}, seeds, run);
        double ft = rows[Scheme::Heterodyne].back().fid_mean;
        double fc = coh.back().fid_mean;
        bool ok = ft < fc;
        v.pass = v.pass && ok;
        extra = "; thermal F=" + fmt(ft) + " < coherent F=" + fmt(fc) + " at K=" + std::to_string(k_top) +
                (ok ? " holds" : " FAILS");
    } else if (family == "fock") {
        double fh = rows[Scheme::Homodyne].back().fid_mean;
        double fe = rows[Scheme::Heterodyne].back().fid_mean;
        bool ok = fh > fe;
        v.pass = v.pass && ok;
        extra = "; homodyne F=" + fmt(fh) + " > heterodyne F=" + fmt(fe) + " at K=" + std::to_string(k_top) +
                (ok ? " holds" : " FAILS");
    }
    double secs = t.seconds();
    const double limit = full ? 1e9 : 3600;
    v.pass = v.pass && secs < limit;
    v.summary = family + " <n>=" + fmt(mean_photon(make_state(state.spec))) + ": fidelity non-decreasing in K " +
                "within one std for both schemes" + extra + ", " + fmt(secs) + " s" +
                (full ? "" : " (limit 3600 s)");
    v.info.insert(v.info.begin(), "profile " + std::string(full ? "full" : "smoke") + ": K up to " +
                                      std::to_string(k_top) + ", seeds x" + std::to_string(seeds));
    return v;
}

// 6. x-only projection with eta = 0.5 against full heterodyne data.
Verdict criterion6(bool full) {
    Timer t;
    RunSpec run;
    if (full) run.thinning = 1 << 14;
    StateSpec spec = state_with_mean_photons(StateFamily::Coherent, 1.5, run.cutoff);
    DensityMatrix truth = make_state(spec);
    QuadratureDataset het = simulate(spec, Scheme::Heterodyne, 8000, 1.0, 61);
    PosteriorEnsemble e_het = infer(het, 1.0, run);
    PosteriorEnsemble e_hom = infer(het.x_only(), 0.5, run);
    double f_het = fidelity(truth, bayesian_mean(e_het));
    double f_hom = fidelity(truth, bayesian_mean(e_hom));
    FunctionalEstimate s_het = sample_fidelity(e_het, truth);
    FunctionalEstimate s_hom = sample_fidelity(e_hom, truth);
    double slack = std::max(s_het.std, s_hom.std);
    double secs = t.seconds();
    Verdict v;
    v.pass = f_het >= 0.85 && f_hom >= 0.85 && f_hom <= f_het + slack && secs < 7200;
    v.summary = "F(rho_B) heterodyne eta=1: " + fmt(f_het) + ", x-only eta=0.5: " + fmt(f_hom) +
                " (each >= 0.85; x-only <= heterodyne + " + fmt(slack) + "), " + fmt(secs) + " s (limit 7200 s)";
    v.info.push_back("sample fidelity heterodyne " + fmt(s_het.mean) + " +/- " + fmt(s_het.std) + ", x-only " +
                     fmt(s_hom.mean) + " +/- " + fmt(s_hom.std));
    return v;
}

// 7. Odd cat through loss, homodyne, nearest-cat analysis.
Verdict criterion7() {
    Timer t;
    const double eta = 0.853;
    RunSpec run;
    run.thinning = 1 << 13;
    StateSpec spec = parse_state_spec("cat:1.64,odd", run.cutoff);
    QuadratureDataset data = simulate(spec, Scheme::Homodyne, 1100, eta, 71);
    PosteriorEnsemble ens = infer(data, eta, run);
    CatFit fit = cat_report(ens, Parity::Odd);
    DensityMatrix truth = make_state(spec);
    DensityMatrix lossy = apply_loss(truth, eta).state;
    DensityMatrix rho_b = bayesian_mean(ens);
    // The likelihood models the loss, so rho_B estimates the pre-loss state;
    // pushing it through the same channel compares it with the lossy truth.
    double f_lossy = fidelity(lossy, apply_loss(rho_b, eta).state);
    double secs = t.seconds();
    bool ordered = fit.alpha_abs.lower <= fit.alpha_abs.upper && fit.fidelity.lower <= fit.fidelity.upper;
    Verdict v;
    v.pass = std::abs(fit.alpha_abs.mean - 1.64) <= 0.2 && f_lossy >= 0.8 && ordered && secs < 3600;
    v.summary = "|alpha| = " + fmt(fit.alpha_abs.mean) + " [" + fmt(fit.alpha_abs.lower) + ", " +
                fmt(fit.alpha_abs.upper) + "] (target 1.64 +/- 0.2), F(lossy truth) = " + fmt(f_lossy) +
                " (>= 0.8), percentile bounds " + (ordered ? "ordered" : "NOT ordered") + ", " + fmt(secs) +
                " s (limit 3600 s)";
    v.info.push_back("nearest odd cat F = " + fmt(fit.fidelity.mean) + " [" + fmt(fit.fidelity.lower) + ", " +
                     fmt(fit.fidelity.upper) + "], F(rho_B, pre-loss truth) = " + fmt(fidelity(truth, rho_b)));
    v.info.push_back("acceptance = " + fmt(ens.acceptance_rate) + ", beta = " + fmt(ens.beta));
    return v;
}

// 8. Calibration round trip and trace geometry.
Verdict criterion8() {
    Timer t;
    BlockGeometry g;
    const int64_t n = 2000000;  // 0.8 ms at 2.5 GS/s
    const int64_t delay = 5;
    const size_t points = 7998;
    CalibrationRecord cal;
    cal.channels[0] = {0.011, 4.1e-6, 2.4e-7};
    cal.channels[1] = {-0.007, 3.6e-6, 2.1e-7};
    std::mt19937_64 rng(8);
    std::normal_distribution<double> q(0.0, 1.0);
    std::vector<double> x(points);
    std::vector<double> p(points);
    for (size_t k = 0; k < points; ++k) {
        x[k] = q(rng);
        p[k] = q(rng);
    }
    auto vx = denormalize_quadratures(x, cal.channels[0]);
    auto vp = denormalize_quadratures(p, cal.channels[1]);
    RawTrace trace;
    trace.channels[0].assign(static_cast<size_t>(n), 0.0);
    trace.channels[1].assign(static_cast<size_t>(n), 0.0);
    trace.delay_mismatch = delay;
    trace.sync_edges = {0, 500000, 1000000, 1500000};  // 5 kHz ramp
    for (size_t k = 0; k < points; ++k) {
        int64_t s = (static_cast<int64_t>(k) + g.guard_blocks) * g.spacing;
        for (int64_t j = 0; j < g.group; ++j) {
            trace.channels[0][static_cast<size_t>(s + j)] = vx[k];
            trace.channels[1][static_cast<size_t>(s + delay + j)] = vp[k];
        }
    }
    IngestOptions opt;
    opt.ramp_hz = 5000;
    IngestResult res = ingest_trace(trace, cal, opt);
    double worst = 0.0;
    bool sizes = res.dataset.size() == points;
    for (size_t k = 0; sizes && k < points; ++k) {
        worst = std::max({worst, std::abs(res.dataset.records[k].x - x[k]),
                          std::abs(*res.dataset.records[k].p - p[k])});
    }
    double secs = t.seconds();
    Verdict v;
    v.pass = sizes && worst <= 1e-9 && res.sweeps == 4 && res.block_points == 7998 && secs < 10;
    v.summary = "points = " + std::to_string(res.block_points) + " (7998), sweeps = " + std::to_string(res.sweeps) +
                " (4), max round-trip error = " + fmt(worst) + " (tol 1e-9), " + fmt(secs) + " s (limit 10 s)";
    return v;
}

// 9. Byte-identical reruns of the infer command.
Verdict criterion9() {
    Timer t;
    fs::path dir = fs::temp_directory_path() / "cvtomo_acceptance_9";
    fs::remove_all(dir);
    std::ostringstream log;
    nlohmann::json sim = cli::resolve_config(
        "simulate", nlohmann::json::object(),
        {{"state", "coherent:0.7,0.2"}, {"nc", 4}, {"K", 300}, {"seed", 9}, {"out", (dir / "sim").string()}});
    cli::cmd_simulate(sim, log);
    nlohmann::json inf = cli::resolve_config("infer", nlohmann::json::object(),
                                             {{"data", (dir / "sim" / "data.csv").string()},
                                              {"nc", 4},
                                              {"R", 64},
                                              {"T", 16},
                                              {"seed", 11},
                                              {"out", (dir / "run").string()}});
    cli::cmd_infer(inf, log);
    std::string first = read_text_file((dir / "run" / "ensemble.jsonl").string());
    cli::cmd_infer(inf, log);
    std::string second = read_text_file((dir / "run" / "ensemble.jsonl").string());
    fs::remove_all(dir);
    double secs = t.seconds();
    Verdict v;
    v.pass = !first.empty() && first == second && secs < 60;
    v.summary = std::string("ensemble files ") + (first == second ? "byte-identical" : "DIFFER") + " (" +
                std::to_string(first.size()) + " bytes), " + fmt(secs) + " s (limit 60 s)";
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cvtomo acceptance checks"};
    int criterion = 0;
    std::string part;
    std::string profile = "reduced";
    app.add_option("--criterion", criterion, "criterion number (1-9)")->required()->check(CLI::Range(1, 9));
    app.add_option("--part", part, "sub-part: K7998|K1600 for 4, a family for 5");
    app.add_option("--profile", profile, "reduced (default) or full")->check(CLI::IsMember({"reduced", "full"}));
    CLI11_PARSE(app, argc, argv);
    const bool full = profile == "full";

    std::string label = "criterion " + std::to_string(criterion) + (part.empty() ? "" : " [" + part + "]");
    Verdict v;
    try {
        switch (criterion) {
            case 1: v = criterion1(); break;
            case 2: v = criterion2(); break;
            case 3: v = criterion3(); break;
            case 4: v = criterion4(part.empty() ? "K7998" : part, full); break;
            case 5: v = criterion5(part.empty() ? "coherent" : part, full); break;
            case 6: v = criterion6(full); break;
            case 7: v = criterion7(); break;
            case 8: v = criterion8(); break;
            case 9: v = criterion9(); break;
        }
    } catch (const std::exception& e) {
        std::cout << "FAIL " << label << ": exception: " << e.what() << std::endl;
        return 1;
    }
    std::cout << (v.pass ? "PASS " : "FAIL ") << label << ": " << v.summary << '\n';
    for (const auto& line : v.info) std::cout << "  " << line << '\n';
    return v.pass ? 0 : 1;
}
