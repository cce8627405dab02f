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

#ifndef CVTOMO_PCN_HPP_
#define CVTOMO_PCN_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvtomo/bures.hpp"
#include "cvtomo/measurement.hpp"

namespace cvtomo {

struct SamplerConfig {
    int samples = 1024;  // R
    int thinning = 1;    // T
    /// Defaults to samples * thinning / 8 when unset.
    std::optional<int64_t> burn_in;
    /// Fixed step parameter, or the starting value when adaptive.
    double beta = 0.1;
    /// Adapt beta during burn-in towards `target_acceptance`, then freeze it.
    bool adaptive = true;
    double target_acceptance = 0.25;
    uint64_t seed = 1;

    int64_t effective_burn_in() const;
    int64_t total_steps() const;
    void check() const;
    nlohmann::json to_json() const;
};

using LogLikelihoodFn = std::function<double(const BuresParams&)>;

struct StepResult {
    BuresParams params;
    double log_likelihood = 0.0;
    bool accepted = false;
};

/// Draws the sampler's Gaussian innovations; owns the normal distribution
/// state so a chain can be checkpointed and resumed exactly.
struct ChainRng {
    Rng engine;
    ComplexNormal normal;
    std::uniform_real_distribution<double> uniform{0.0, 1.0};

    explicit ChainRng(uint64_t seed) : engine(seed) {}
    std::string save() const;
    void load(const std::string& state);
};

/// One pCN move: z' = sqrt(1 - beta^2) z + beta xi with xi drawn from the
/// prior, accepted with probability min(1, exp(LL(z') - LL(z))).
///
/// A current state with LL = -inf accepts every proposal.
StepResult pcn_step(const BuresParams& current, double current_ll, double beta, ChainRng& rng,
                    const LogLikelihoodFn& ll_fn);

struct PosteriorSample {
    BuresParams params;
    DensityMatrix rho;
    double log_likelihood = 0.0;
    int64_t step = 0;                 // chain step (1-based, burn-in included) at retention
    double running_acceptance = 0.0;  // post-burn-in acceptance up to this sample
};

struct PosteriorEnsemble {
    std::vector<PosteriorSample> samples;
    double acceptance_rate = 0.0;
    double beta = 0.0;  // frozen step parameter used after burn-in
    int64_t burn_in = 0;
    int dim = 0;
    nlohmann::json config = nlohmann::json::object();

    size_t size() const { return samples.size(); }
};

struct ChainOptions {
    /// Checkpoint file; empty disables checkpointing.
    std::string checkpoint_path;
    int64_t checkpoint_every = int64_t{1} << 16;
    /// Continue from `checkpoint_path` when it exists.
    bool resume = false;
    /// Stop (returning an incomplete ensemble) after this many total steps.
    /// Used to emulate interrupted runs.
    std::optional<int64_t> stop_after;
    nlohmann::json config_echo = nlohmann::json::object();
};

/// Burn-in followed by samples * thinning steps, retaining every
/// thinning-th state. Deterministic given the configuration seed.
PosteriorEnsemble run_chain(const LogLikelihoodFn& ll_fn, int dim, const SamplerConfig& cfg,
                            const ChainOptions& options = {});
PosteriorEnsemble run_chain(const QuadratureDataset& data, const MeasurementConfig& mcfg, const SamplerConfig& cfg,
                            const ChainOptions& options = {});

/// Concatenates per-chain ensembles in the given (chain index) order.
PosteriorEnsemble merge_ensembles(const std::vector<PosteriorEnsemble>& chains);

DensityMatrix bayesian_mean(const PosteriorEnsemble& ens);

using Functional = std::function<double(const DensityMatrix&)>;

struct FunctionalEstimate {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n - 1); 0 when n < 2
    double p16 = 0.0;
    double p84 = 0.0;
    std::vector<double> values;
};

/// Linear interpolation between order statistics at rank q (n - 1), q in [0, 1].
double percentile(std::vector<double> values, double q);
FunctionalEstimate summarize(std::vector<double> values);
FunctionalEstimate estimate_functional(const PosteriorEnsemble& ens, const Functional& f);

struct ConvergenceReport {
    std::vector<double> running_mean;
    std::vector<double> running_std;
    double first_half_mean = 0.0;
    double second_half_mean = 0.0;
    double first_half_std = 0.0;
    double second_half_std = 0.0;
    /// True when at least one retained sample differs from its predecessor.
    bool moved = false;
    bool converged = false;
};

inline constexpr double kConvergenceTolerance = 0.01;

/// Running statistics of `values`; converged when the two half-chain means
/// differ by less than 0.01 and the chain was not frozen in one state.
ConvergenceReport convergence_report(const std::vector<double>& values, bool moved);
ConvergenceReport convergence_report(const PosteriorEnsemble& ens, const Functional& f);

}  // namespace cvtomo

#endif  // CVTOMO_PCN_HPP_
