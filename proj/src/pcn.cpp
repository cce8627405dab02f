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

#include "cvtomo/pcn.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "cvtomo/error.hpp"
#include "cvtomo/io.hpp"

namespace cvtomo {

namespace {

constexpr int64_t kAdaptWindow = 100;
constexpr double kAdaptGain = 1.0;
constexpr double kMinBeta = 1e-5;

struct ChainState {
    BuresParams current;
    double current_ll = 0.0;
    double beta = 0.0;
    int64_t step = 0;
    int64_t accepted = 0;  // post-burn-in
    int64_t window_accepted = 0;
    std::vector<PosteriorSample> retained;
};

void write_checkpoint(const std::string& path, const ChainState& st, const ChainRng& rng, const SamplerConfig& cfg) {
    nlohmann::json j;
    j["format"] = "cvtomo-checkpoint";
    j["version"] = 1;
    j["sampler"] = cfg.to_json();
    j["dim"] = st.current.dim();
    j["step"] = st.step;
    j["beta"] = st.beta;
    j["accepted"] = st.accepted;
    j["window_accepted"] = st.window_accepted;
    j["current"] = params_to_json(st.current);
    j["current_ll"] = double_to_json(st.current_ll);
    j["rng"] = rng.save();
    nlohmann::json retained = nlohmann::json::array();
    for (const auto& s : st.retained) {
        retained.push_back(sample_to_json(s));
    }
    j["retained"] = std::move(retained);
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            throw Error("cannot write checkpoint " + tmp);
        }
        out << j.dump();
    }
    std::filesystem::rename(tmp, path);
}

ChainState read_checkpoint(const std::string& path, ChainRng& rng, const SamplerConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read checkpoint " + path);
    }
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("format", "") != "cvtomo-checkpoint") {
        throw Error("not a checkpoint file: " + path);
    }
    if (j.at("sampler") != cfg.to_json()) {
        throw ConfigError("checkpoint was written with a different sampler configuration");
    }
    ChainState st;
    st.current = params_from_json(j.at("current"));
    st.current_ll = double_from_json(j.at("current_ll"));
    st.beta = j.at("beta").get<double>();
    st.step = j.at("step").get<int64_t>();
    st.accepted = j.at("accepted").get<int64_t>();
    st.window_accepted = j.at("window_accepted").get<int64_t>();
    rng.load(j.at("rng").get<std::string>());
    for (const auto& s : j.at("retained")) {
        st.retained.push_back(sample_from_json(s));
    }
    return st;
}

}  // namespace

int64_t SamplerConfig::effective_burn_in() const {
    return burn_in.value_or(static_cast<int64_t>(samples) * thinning / 8);
}

int64_t SamplerConfig::total_steps() const {
    return effective_burn_in() + static_cast<int64_t>(samples) * thinning;
}

void SamplerConfig::check() const {
    if (samples < 1) {
        throw ConfigError("sampler: R must be >= 1");
    }
    if (thinning < 1) {
        throw ConfigError("sampler: T must be >= 1");
    }
    if (burn_in && *burn_in < 0) {
        throw ConfigError("sampler: burn-in must be >= 0");
    }
    if (!(beta > 0.0 && beta <= 1.0)) {
        throw ConfigError("sampler: beta must lie in (0, 1]");
    }
    if (adaptive && !(target_acceptance > 0.0 && target_acceptance < 1.0)) {
        throw ConfigError("sampler: target acceptance must lie in (0, 1)");
    }
}

nlohmann::json SamplerConfig::to_json() const {
    nlohmann::json j;
    j["R"] = samples;
    j["T"] = thinning;
    j["burn_in"] = effective_burn_in();
    j["beta"] = beta;
    j["adaptive"] = adaptive;
    j["target_acceptance"] = target_acceptance;
    j["seed"] = seed;
    j["thinning_convention"] = "retain the state after every T-th step following burn-in";
    return j;
}

std::string ChainRng::save() const {
    std::ostringstream os;
    os << engine << ' ' << normal.distribution() << ' ' << uniform;
    return os.str();
}

void ChainRng::load(const std::string& state) {
    std::istringstream is(state);
    is >> engine >> normal.distribution() >> uniform;
    if (!is) {
        throw Error("corrupt RNG state in checkpoint");
    }
}

StepResult pcn_step(const BuresParams& current, double current_ll, double beta, ChainRng& rng,
                    const LogLikelihoodFn& ll_fn) {
    if (!(beta > 0.0 && beta <= 1.0)) {
        throw Error("pcn_step: beta must lie in (0, 1]");
    }
    const double keep = std::sqrt(1.0 - beta * beta);
    CVector z = current.z();
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z(i) = keep * z(i) + beta * rng.normal(rng.engine);
    }
    BuresParams proposal(std::move(z), current.dim());
    double ll = ll_fn(proposal);
    if (std::isnan(ll)) {
        throw Error("pcn_step: log-likelihood returned NaN");
    }
    double u = rng.uniform(rng.engine);
    bool accept;
    if (current_ll == -std::numeric_limits<double>::infinity()) {
        accept = true;
    } else {
        accept = std::log(u) < ll - current_ll;
    }
    if (accept) {
        return {std::move(proposal), ll, true};
    }
    return {current, current_ll, false};
}

PosteriorEnsemble run_chain(const LogLikelihoodFn& ll_fn, int dim, const SamplerConfig& cfg,
                            const ChainOptions& options) {
    cfg.check();
    const int64_t burn_in = cfg.effective_burn_in();
    const int64_t total = cfg.total_steps();

    ChainRng rng(cfg.seed);
    ChainState st;
    bool resumed = false;
    if (options.resume && !options.checkpoint_path.empty() && std::filesystem::exists(options.checkpoint_path)) {
        st = read_checkpoint(options.checkpoint_path, rng, cfg);
        if (st.current.dim() != dim) {
            throw ConfigError("checkpoint dimension does not match the configured cutoff");
        }
        resumed = true;
    }
    if (!resumed) {
        st.current = sample_prior(rng.engine, dim, rng.normal);
        st.current_ll = ll_fn(st.current);
        if (std::isnan(st.current_ll)) {
            throw Error("run_chain: log-likelihood returned NaN");
        }
        st.beta = cfg.beta;
        st.retained.reserve(static_cast<size_t>(cfg.samples));
    }

    while (st.step < total) {
        if (options.stop_after && st.step >= *options.stop_after) {
            break;
        }
        StepResult res = pcn_step(st.current, st.current_ll, st.beta, rng, ll_fn);
        ++st.step;
        st.current = std::move(res.params);
        st.current_ll = res.log_likelihood;

        if (st.step <= burn_in) {
            if (cfg.adaptive) {
                st.window_accepted += res.accepted ? 1 : 0;
                if (st.step % kAdaptWindow == 0) {
                    double rate = static_cast<double>(st.window_accepted) / static_cast<double>(kAdaptWindow);
                    st.beta = std::clamp(st.beta * std::exp(kAdaptGain * (rate - cfg.target_acceptance)), kMinBeta,
                                         1.0);
                    st.window_accepted = 0;
                }
            }
        } else {
            st.accepted += res.accepted ? 1 : 0;
            int64_t post = st.step - burn_in;
            if (post % cfg.thinning == 0) {
                PosteriorSample s{st.current, DensityMatrix(build_density_matrix(st.current.z(), dim)),
                                  st.current_ll, st.step,
                                  static_cast<double>(st.accepted) / static_cast<double>(post)};
                st.retained.push_back(std::move(s));
            }
        }
        if (!options.checkpoint_path.empty() && options.checkpoint_every > 0 &&
            st.step % options.checkpoint_every == 0 && st.step < total) {
            write_checkpoint(options.checkpoint_path, st, rng, cfg);
        }
    }

    PosteriorEnsemble ens;
    ens.samples = std::move(st.retained);
    int64_t post = std::max<int64_t>(st.step - burn_in, 0);
    ens.acceptance_rate = post > 0 ? static_cast<double>(st.accepted) / static_cast<double>(post) : 0.0;
    ens.beta = st.beta;
    ens.burn_in = burn_in;
    ens.dim = dim;
    ens.config = options.config_echo;
    ens.config["sampler"] = cfg.to_json();
    return ens;
}

PosteriorEnsemble run_chain(const QuadratureDataset& data, const MeasurementConfig& mcfg, const SamplerConfig& cfg,
                            const ChainOptions& options) {
    LikelihoodModel model(data, mcfg);
    const int dim = mcfg.cutoff + 1;
    LogLikelihoodFn ll = [&model, dim](const BuresParams& p) { return model(build_density_matrix(p.z(), dim)); };
    return run_chain(ll, dim, cfg, options);
}

PosteriorEnsemble merge_ensembles(const std::vector<PosteriorEnsemble>& chains) {
    if (chains.empty()) {
        throw Error("merge_ensembles: no chains");
    }
    PosteriorEnsemble out;
    out.dim = chains.front().dim;
    out.burn_in = chains.front().burn_in;
    out.config = chains.front().config;
    out.config["chains"] = chains.size();
    double acc_weighted = 0.0;
    double beta_sum = 0.0;
    for (const auto& c : chains) {
        if (c.dim != out.dim) {
            throw Error("merge_ensembles: dimension mismatch");
        }
        out.samples.insert(out.samples.end(), c.samples.begin(), c.samples.end());
        acc_weighted += c.acceptance_rate;
        beta_sum += c.beta;
    }
    out.acceptance_rate = acc_weighted / static_cast<double>(chains.size());
    out.beta = beta_sum / static_cast<double>(chains.size());
    return out;
}

DensityMatrix bayesian_mean(const PosteriorEnsemble& ens) {
    if (ens.samples.empty()) {
        throw Error("bayesian_mean: empty ensemble");
    }
    CMatrix acc = CMatrix::Zero(ens.samples.front().rho.dim(), ens.samples.front().rho.dim());
    for (const auto& s : ens.samples) {
        acc += s.rho.matrix();
    }
    acc /= static_cast<double>(ens.samples.size());
    return DensityMatrix(std::move(acc));
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw Error("percentile: no values");
    }
    std::sort(values.begin(), values.end());
    double h = q * static_cast<double>(values.size() - 1);
    auto lo = static_cast<size_t>(std::floor(h));
    size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

FunctionalEstimate summarize(std::vector<double> values) {
    if (values.empty()) {
        throw Error("summarize: no values");
    }
    FunctionalEstimate est;
    double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= n;
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    est.mean = mean;
    est.std = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    est.p16 = percentile(values, 0.16);
    est.p84 = percentile(values, 0.84);
    est.values = std::move(values);
    return est;
}

FunctionalEstimate estimate_functional(const PosteriorEnsemble& ens, const Functional& f) {
    std::vector<double> values;
    values.reserve(ens.samples.size());
    for (const auto& s : ens.samples) {
        values.push_back(f(s.rho));
    }
    return summarize(std::move(values));
}

ConvergenceReport convergence_report(const std::vector<double>& values, bool moved) {
    ConvergenceReport rep;
    rep.moved = moved;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (size_t i = 0; i < values.size(); ++i) {
        sum += values[i];
        sum_sq += values[i] * values[i];
        double n = static_cast<double>(i + 1);
        double mean = sum / n;
        double var = i > 0 ? std::max(sum_sq - n * mean * mean, 0.0) / (n - 1.0) : 0.0;
        rep.running_mean.push_back(mean);
        rep.running_std.push_back(std::sqrt(var));
    }
    if (values.size() < 2) {
        return rep;
    }
    size_t half = values.size() / 2;
    auto first = summarize({values.begin(), values.begin() + static_cast<std::ptrdiff_t>(half)});
    auto second = summarize({values.end() - static_cast<std::ptrdiff_t>(half), values.end()});
    rep.first_half_mean = first.mean;
    rep.second_half_mean = second.mean;
    rep.first_half_std = first.std;
    rep.second_half_std = second.std;
    rep.converged = moved && std::abs(first.mean - second.mean) < kConvergenceTolerance;
    return rep;
}

ConvergenceReport convergence_report(const PosteriorEnsemble& ens, const Functional& f) {
    std::vector<double> values;
    values.reserve(ens.samples.size());
    bool moved = false;
    for (size_t i = 0; i < ens.samples.size(); ++i) {
        values.push_back(f(ens.samples[i].rho));
        if (i > 0 && ens.samples[i].params.z() != ens.samples[i - 1].params.z()) {
            moved = true;
        }
    }
    return convergence_report(values, moved);
}

}  // namespace cvtomo
