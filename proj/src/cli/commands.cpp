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

#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "cvtomo/analysis.hpp"
#include "cvtomo/calibrate.hpp"
#include "cvtomo/cli.hpp"
#include "cvtomo/dataset_io.hpp"
#include "cvtomo/error.hpp"
#include "cvtomo/io.hpp"
#include "cvtomo/simulator.hpp"

namespace cvtomo::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string require_string(const json& cfg, const char* key) {
    if (!cfg.contains(key) || !cfg.at(key).is_string() || cfg.at(key).get<std::string>().empty()) {
        throw ConfigError(std::string("missing required setting '") + key + "'");
    }
    return cfg.at(key).get<std::string>();
}

std::optional<std::string> optional_string(const json& cfg, const char* key) {
    if (!cfg.contains(key) || cfg.at(key).is_null()) {
        return std::nullopt;
    }
    return cfg.at(key).get<std::string>();
}

int64_t require_int(const json& cfg, const char* key, int64_t min_value) {
    if (!cfg.at(key).is_number_integer()) {
        throw ConfigError(std::string("setting '") + key + "' must be an integer");
    }
    int64_t v = cfg.at(key).get<int64_t>();
    if (v < min_value) {
        throw ConfigError(std::string("setting '") + key + "' must be >= " + std::to_string(min_value));
    }
    return v;
}

std::optional<int64_t> optional_int(const json& cfg, const char* key, int64_t min_value) {
    if (cfg.at(key).is_null()) {
        return std::nullopt;
    }
    return require_int(cfg, key, min_value);
}

fs::path output_dir(const json& cfg) {
    fs::path dir = require_string(cfg, "out");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    return dir;
}

// Inputs that fail to load are configuration problems, not runtime failures.
template <typename F>
auto load_input(const std::string& what, const std::string& path, F&& f) {
    if (!fs::exists(path)) {
        throw ConfigError(what + " not found: " + path);
    }
    return f(path);
}

json density_file(const json& cfg, const DensityMatrix& rho) {
    return {{"format", "cvtomo-density"}, {"version", 1}, {"config", cfg}, {"rho", density_to_json(rho)}};
}

void write_csv_with_sidecar(const fs::path& path, const std::string& csv, const json& cfg) {
    write_text_file(path.string(), csv);
    write_json_file(sidecar_path(path.string()),
                    {{"format", "cvtomo-table"}, {"version", 1}, {"csv", path.filename().string()}, {"config", cfg}});
}

json estimate_json(const FunctionalEstimate& e) {
    return {{"mean", e.mean}, {"std", e.std}, {"p16", e.p16}, {"p84", e.p84}};
}

SamplerConfig sampler_from(const json& cfg) {
    SamplerConfig s;
    s.samples = static_cast<int>(require_int(cfg, "R", 1));
    s.thinning = static_cast<int>(require_int(cfg, "T", 1));
    s.burn_in = optional_int(cfg, "burn_in", 0);
    const json& beta = cfg.at("beta");
    if (beta.is_string()) {
        if (beta != "adaptive") {
            throw ConfigError("beta must be a number or 'adaptive'");
        }
        s.adaptive = true;
    } else {
        s.adaptive = false;
        s.beta = beta.get<double>();
    }
    s.seed = static_cast<uint64_t>(require_int(cfg, "seed", 0));
    s.check();
    return s;
}

}  // namespace

void cmd_simulate(const json& cfg, std::ostream& log) {
    SimConfig sim;
    const int nc = static_cast<int>(require_int(cfg, "nc", 0));
    sim.spec = parse_state_spec(require_string(cfg, "state"), nc);
    sim.scheme = parse_scheme(require_string(cfg, "scheme"));
    sim.records = require_int(cfg, "K", 1);
    sim.eta = cfg.at("eta").get<double>();
    sim.seed = static_cast<uint64_t>(require_int(cfg, "seed", 0));
    sim.grid_resolution = cfg.at("grid_resolution").get<double>();
    if (!cfg.at("grid_halfwidth").is_null()) {
        sim.grid_halfwidth = cfg.at("grid_halfwidth").get<double>();
    }
    sim.check();
    fs::path dir = output_dir(cfg);

    QuadratureDataset data = simulate_dataset(sim);
    data.metadata.provenance = {{"config", cfg}, {"simulator", data.metadata.provenance}};
    fs::path csv = dir / "data.csv";
    write_dataset(csv.string(), data);
    write_json_file((dir / "truth.json").string(), density_file(cfg, make_state(sim.spec)));
    log << "wrote " << data.size() << " " << to_string(sim.scheme) << " records to " << csv.string() << '\n';
}

void cmd_infer(const json& cfg, std::ostream& log) {
    const std::string data_path = require_string(cfg, "data");
    QuadratureDataset data = load_input("dataset", data_path, [](const std::string& p) { return read_dataset(p); });
    if (auto scheme = optional_string(cfg, "scheme")) {
        if (parse_scheme(*scheme) != data.scheme) {
            throw ConfigError("configured scheme " + *scheme + " does not match dataset scheme " +
                              to_string(data.scheme));
        }
    }
    if (auto k = optional_int(cfg, "K", 1)) {
        if (static_cast<size_t>(*k) > data.size()) {
            throw ConfigError("K = " + std::to_string(*k) + " exceeds the dataset size " + std::to_string(data.size()));
        }
        data = data.prefix(static_cast<size_t>(*k));
    }
    MeasurementConfig mcfg{cfg.at("eta").get<double>(), static_cast<int>(require_int(cfg, "nc", 0))};
    mcfg.check();
    SamplerConfig base = sampler_from(cfg);
    const int64_t chains = require_int(cfg, "chains", 1);
    std::optional<DensityMatrix> truth;
    if (auto t = optional_string(cfg, "truth")) {
        truth = make_state(parse_state_spec(*t, mcfg.cutoff));
    }
    fs::path dir = output_dir(cfg);

    const int dim = mcfg.cutoff + 1;
    const LikelihoodModel model(data, mcfg);
    LogLikelihoodFn ll = [&model, dim](const BuresParams& p) { return model(build_density_matrix(p.z(), dim)); };

    json echo = cfg;
    echo["records"] = data.size();
    std::vector<PosteriorEnsemble> results(static_cast<size_t>(chains));
    std::vector<std::exception_ptr> failures(static_cast<size_t>(chains));
    auto run_one = [&](int64_t c) {
        try {
            SamplerConfig sc = base;
            if (chains > 1) {
                sc.seed = derive_seed(base.seed, {static_cast<uint64_t>(c)});
            }
            ChainOptions opt;
            if (cfg.at("checkpoint").get<bool>()) {
                std::string name = chains > 1 ? "checkpoint_" + std::to_string(c) + ".json" : "checkpoint.json";
                opt.checkpoint_path = (dir / name).string();
            }
            opt.checkpoint_every = require_int(cfg, "checkpoint_every", 1);
            opt.resume = cfg.at("resume").get<bool>();
            opt.stop_after = optional_int(cfg, "stop_after", 0);
            opt.config_echo = echo;
            results[static_cast<size_t>(c)] = run_chain(ll, dim, sc, opt);
        } catch (...) {
            failures[static_cast<size_t>(c)] = std::current_exception();
        }
    };
    if (chains == 1) {
        run_one(0);
    } else {
        std::vector<std::thread> threads;
        for (int64_t c = 0; c < chains; ++c) {
            threads.emplace_back(run_one, c);
        }
        for (auto& t : threads) {
            t.join();
        }
    }
    for (auto& f : failures) {
        if (f) {
            std::rethrow_exception(f);
        }
    }
    for (const auto& r : results) {
        if (r.size() < static_cast<size_t>(base.samples)) {
            log << "stopped before completion; rerun with --resume to continue from the checkpoint\n";
            return;
        }
    }

    PosteriorEnsemble ens = chains > 1 ? merge_ensembles(results) : std::move(results.front());
    write_ensemble_jsonl((dir / "ensemble.jsonl").string(), ens);

    DensityMatrix rho_b = bayesian_mean(ens);
    json out = density_file(cfg, rho_b);
    out["records"] = data.size();
    out["samples"] = ens.size();
    out["acceptance_rate"] = ens.acceptance_rate;
    out["beta"] = ens.beta;
    out["burn_in"] = ens.burn_in;

    std::optional<FidelityReference> ref;
    if (truth) {
        ref.emplace(*truth);
    }
    std::vector<double> purities;
    std::vector<double> fids;
    bool moved = false;
    for (size_t i = 0; i < ens.size(); ++i) {
        const auto& s = ens.samples[i];
        if (i > 0 && s.params.z() != ens.samples[i - 1].params.z()) {
            moved = true;
        }
        purities.push_back(purity(s.rho));
        if (ref) {
            fids.push_back((*ref)(s.rho));
        }
    }
    // Running statistics track the fidelity when a truth is given, else the purity.
    const std::vector<double>& tracked = ref ? fids : purities;
    ConvergenceReport conv = convergence_report(tracked, moved);

    std::ostringstream diag;
    diag << "step,acceptance,ll,running_mean,running_std,purity" << (ref ? ",fidelity" : "") << '\n';
    for (size_t i = 0; i < ens.size(); ++i) {
        const auto& s = ens.samples[i];
        diag << s.step << ',' << format_double(s.running_acceptance) << ',' << format_double(s.log_likelihood) << ','
             << format_double(conv.running_mean[i]) << ',' << format_double(conv.running_std[i]) << ','
             << format_double(purities[i]);
        if (ref) {
            diag << ',' << format_double(fids[i]);
        }
        diag << '\n';
    }
    write_csv_with_sidecar(dir / "diagnostics.csv", diag.str(), cfg);
    out["convergence"] = {{"functional", ref ? "fidelity" : "purity"},
                          {"first_half_mean", conv.first_half_mean},
                          {"second_half_mean", conv.second_half_mean},
                          {"first_half_std", conv.first_half_std},
                          {"second_half_std", conv.second_half_std},
                          {"moved", conv.moved},
                          {"converged", conv.converged}};
    if (ref) {
        out["fidelity"] = estimate_json(summarize(fids));
        out["fidelity_of_mean"] = (*ref)(rho_b);
    }
    write_json_file((dir / "rho_bayes.json").string(), out);

    log << "K=" << data.size() << " samples=" << ens.size() << " acceptance=" << format_double(ens.acceptance_rate)
        << " beta=" << format_double(ens.beta) << (conv.converged ? "" : " (not converged)") << '\n';
    if (ref) {
        log << "fidelity of Bayesian mean: " << format_double((*ref)(rho_b)) << '\n';
    }
}

void cmd_analyze(const json& cfg, std::ostream& log) {
    std::optional<PosteriorEnsemble> ens;
    if (auto p = optional_string(cfg, "ensemble")) {
        ens = load_input("ensemble", *p, [](const std::string& s) { return read_ensemble_jsonl(s); });
    }
    std::optional<DensityMatrix> rho;
    if (auto p = optional_string(cfg, "rho")) {
        rho = load_input("density file", *p, [](const std::string& s) {
            json j = read_json_file(s);
            return density_from_json(j.contains("rho") ? j.at("rho") : j);
        });
    } else if (ens) {
        rho = bayesian_mean(*ens);
    }
    std::optional<int> nc;
    if (auto v = optional_int(cfg, "nc", 0)) {
        nc = static_cast<int>(*v);
    } else if (rho) {
        nc = rho->cutoff();
    }
    std::optional<DensityMatrix> truth;
    if (auto t = optional_string(cfg, "truth")) {
        if (!nc) {
            throw ConfigError("--truth needs --nc when no ensemble or density is given");
        }
        truth = make_state(parse_state_spec(*t, *nc));
    }
    const bool want_wigner = cfg.at("wigner").get<bool>();
    const auto curve = cfg.at("fidelity_curve").get<std::vector<std::string>>();
    const auto cat = optional_string(cfg, "cat");
    const auto data_path = optional_string(cfg, "data");
    if (!want_wigner && curve.empty() && !cat && !data_path && !(truth && rho)) {
        throw ConfigError("nothing to analyze: give --wigner, --fidelity-curve, --cat, --data or --truth with inputs");
    }
    fs::path dir = output_dir(cfg);

    if (truth && rho) {
        FidelityReference ref(*truth);
        json s = {{"format", "cvtomo-summary"}, {"version", 1}, {"config", cfg}};
        s["fidelity_of_mean"] = ref(*rho);
        s["purity_of_mean"] = purity(*rho);
        s["mean_photon_of_mean"] = mean_photon(*rho);
        if (ens) {
            s["fidelity"] = estimate_json(estimate_functional(*ens, [&ref](const DensityMatrix& r) { return ref(r); }));
        }
        write_json_file((dir / "summary.json").string(), s);
        log << "fidelity of Bayesian mean: " << format_double(ref(*rho)) << '\n';
    }
    if (want_wigner) {
        if (!rho) {
            throw ConfigError("--wigner needs --rho or --ensemble");
        }
        const double ext = cfg.at("wigner_extent").get<double>();
        const int n = static_cast<int>(require_int(cfg, "wigner_points", 2));
        WignerGridSpec grid{-ext, ext, -ext, ext, n, n};
        grid.check();
        WignerGrid w = wigner(*rho, grid);
        write_wigner_csv((dir / "wigner.csv").string(), w);
        write_json_file((dir / "wigner.json").string(),
                        {{"format", "cvtomo-table"}, {"version", 1}, {"csv", "wigner.csv"}, {"config", cfg}});
        log << "wrote " << n << "x" << n << " Wigner grid\n";
    }
    if (!curve.empty()) {
        std::vector<PosteriorEnsemble> loaded;
        loaded.reserve(curve.size());
        for (const auto& p : curve) {
            loaded.push_back(load_input("ensemble", p, [](const std::string& s) { return read_ensemble_jsonl(s); }));
        }
        std::optional<DensityMatrix> ref_state = truth;
        if (!ref_state) {
            throw ConfigError("--fidelity-curve needs --truth");
        }
        std::vector<CurvePoint> points;
        for (const auto& e : loaded) {
            if (!e.config.contains("records")) {
                throw ConfigError("ensemble lacks a record count; was it written by 'cvtomo infer'?");
            }
            points.push_back({e.config.at("records").get<int64_t>(), &e});
        }
        if (loaded.front().dim != ref_state->dim()) {
            ref_state = make_state(parse_state_spec(*optional_string(cfg, "truth"), loaded.front().dim - 1));
        }
        auto rows = fidelity_curve(points, *ref_state);
        write_csv_with_sidecar(dir / "fidelity_curve.csv", fidelity_curve_csv(rows), cfg);
        log << "wrote " << rows.size() << " fidelity curve rows\n";
    }
    if (cat) {
        if (!ens) {
            throw ConfigError("--cat needs --ensemble");
        }
        CatSearch search;
        search.alpha_max = cfg.at("cat_alpha_max").get<double>();
        CatFit fit = cat_report(*ens, parse_parity(*cat), search);
        json j = {{"format", "cvtomo-catfit"}, {"version", 1}, {"config", cfg}, {"fit", fit.to_json()}};
        write_json_file((dir / "cat.json").string(), j);
        log << "nearest " << *cat << " cat: |alpha| = " << format_double(fit.alpha_abs.mean) << " ["
            << format_double(fit.alpha_abs.lower) << ", " << format_double(fit.alpha_abs.upper)
            << "], F = " << format_double(fit.fidelity.mean) << " [" << format_double(fit.fidelity.lower) << ", "
            << format_double(fit.fidelity.upper) << "]\n";
    }
    if (data_path) {
        QuadratureDataset data = load_input("dataset", *data_path, [](const std::string& p) { return read_dataset(p); });
        if (data.scheme != Scheme::Heterodyne) {
            throw ConfigError("the coherent/thermal estimators need heterodyne data");
        }
        Complex a = expected_coherent_alpha(data);
        double mu = expected_thermal_mu(data);
        json j = {{"format", "cvtomo-estimators"},
                  {"version", 1},
                  {"config", cfg},
                  {"K", data.size()},
                  {"alpha0", {{"re", a.real()}, {"im", a.imag()}}},
                  {"mu0", mu}};
        write_json_file((dir / "estimators.json").string(), j);
        log << "alpha0 = " << format_double(a.real()) << (a.imag() < 0 ? " - " : " + ")
            << format_double(std::abs(a.imag())) << "i, mu0 = " << format_double(mu) << '\n';
    }
}

void cmd_calibrate(const json& cfg, std::ostream& log) {
    auto load = [](const std::string& p) { return load_input("trace", p, [](const std::string& s) { return read_trace(s); }); };
    BlockGeometry geo;
    geo.spacing = require_int(cfg, "block_spacing", 1);
    geo.group = require_int(cfg, "block_group", 1);
    geo.guard_blocks = require_int(cfg, "guard_blocks", 0);
    geo.check();
    RawTrace vacuum = load(require_string(cfg, "vacuum"));
    std::optional<RawTrace> electronics;
    if (auto p = optional_string(cfg, "electronics")) {
        electronics = load(*p);
    }
    std::optional<RawTrace> signal;
    if (auto p = optional_string(cfg, "trace")) {
        signal = load(*p);
    }
    const auto series = cfg.at("lo_series").get<std::vector<std::string>>();
    const Scheme scheme = parse_scheme(require_string(cfg, "scheme"));
    fs::path dir = output_dir(cfg);

    CalibrationRecord cal = calibrate_from_traces(vacuum, electronics ? &*electronics : nullptr, geo);
    if (!series.empty()) {
        std::vector<double> powers;
        std::array<std::vector<double>, 2> vars;
        for (const auto& p : series) {
            RawTrace t = load(p);
            if (!t.lo_power_mw) {
                throw ConfigError("trace " + p + " has no lo_power_mw");
            }
            auto st = shot_noise_stats(t, geo);
            powers.push_back(*t.lo_power_mw);
            vars[0].push_back(st[0].variance);
            vars[1].push_back(st[1].variance);
        }
        cal.fit = std::array<ShotNoiseFit, 2>{fit_shot_noise(powers, vars[0]), fit_shot_noise(powers, vars[1])};
        for (int c = 0; c < 2; ++c) {
            const auto& f = (*cal.fit)[static_cast<size_t>(c)];
            log << "channel " << c + 1 << ": SN_var = " << format_double(f.slope) << " * P + "
                << format_double(f.intercept) << ", R^2 = " << format_double(f.r_squared)
                << (f.nonlinear ? " (outside the linear range)" : "") << '\n';
        }
    }
    json cj = cal.to_json();
    cj["config"] = cfg;
    write_json_file((dir / "calibration.json").string(), cj);
    log << "SN_var = " << format_double(cal.channels[0].sn_var) << ", " << format_double(cal.channels[1].sn_var) << '\n';
    if (cj.contains("noise_ratio")) {
        log << "shot-noise / electronics ratio = " << format_double(cj["noise_ratio"][0].get<double>()) << ", "
            << format_double(cj["noise_ratio"][1].get<double>()) << '\n';
    }

    if (signal) {
        IngestOptions opt;
        opt.scheme = scheme;
        opt.geometry = geo;
        opt.ramp_hz = cfg.at("ramp_hz").get<double>();
        IngestResult res = ingest_trace(*signal, cal, opt);
        res.dataset.metadata.provenance["config"] = cfg;
        write_dataset((dir / "data.csv").string(), res.dataset);
        log << "ingested " << res.dataset.size() << " points from " << res.sweeps << " phase sweeps ("
            << res.dropped_points << " outside complete ramps dropped)\n";
    }
}

}  // namespace cvtomo::cli
