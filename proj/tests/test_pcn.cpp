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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "cvtomo/error.hpp"
#include "test_util.hpp"

namespace cvtomo {
namespace {

const LogLikelihoodFn kFlat = [](const BuresParams&) { return 0.0; };

// Narrow Gaussian in z around the origin; forces small steps.
const LogLikelihoodFn kNarrow = [](const BuresParams& p) { return -50.0 * p.z().squaredNorm(); };

TEST(Step, FlatLikelihoodAcceptsEverything) {
    ChainRng rng(1);
    Rng r(2);
    BuresParams cur = sample_prior(r, 2);
    for (int i = 0; i < 100; ++i) {
        StepResult s = pcn_step(cur, 0.0, 0.3, rng, kFlat);
        EXPECT_TRUE(s.accepted);
        cur = s.params;
    }
}

TEST(Step, ProposalIsCrankNicolsonMove) {
    ChainRng rng(5);
    ChainRng shadow(5);
    Rng r(6);
    BuresParams cur = sample_prior(r, 2);
    StepResult s = pcn_step(cur, 0.0, 0.6, rng, kFlat);
    for (Eigen::Index i = 0; i < cur.z().size(); ++i) {
        Complex xi = shadow.normal(shadow.engine);
        EXPECT_NEAR(std::abs(s.params.z()(i) - (0.8 * cur.z()(i) + 0.6 * xi)), 0.0, 1e-15);
    }
}

TEST(Step, MinusInfinityCurrentAcceptsAnyProposal) {
    ChainRng rng(1);
    Rng r(2);
    BuresParams cur = sample_prior(r, 2);
    LogLikelihoodFn very_low = [](const BuresParams&) { return -1e300; };
    StepResult s = pcn_step(cur, -std::numeric_limits<double>::infinity(), 0.1, rng, very_low);
    EXPECT_TRUE(s.accepted);
    LogLikelihoodFn minus_inf = [](const BuresParams&) { return -std::numeric_limits<double>::infinity(); };
    EXPECT_FALSE(pcn_step(cur, 0.0, 0.1, rng, minus_inf).accepted);
}

TEST(Step, NanLikelihoodIsAnError) {
    ChainRng rng(1);
    Rng r(2);
    BuresParams cur = sample_prior(r, 2);
    LogLikelihoodFn nan = [](const BuresParams&) { return std::nan(""); };
    EXPECT_THROW(pcn_step(cur, 0.0, 0.1, rng, nan), Error);
}

TEST(ChainRngState, SaveLoadContinuesStream) {
    ChainRng a(42);
    for (int i = 0; i < 7; ++i) {
        a.normal(a.engine);
    }
    std::string saved = a.save();
    ChainRng b(0);
    b.load(saved);
    for (int i = 0; i < 20; ++i) {
        EXPECT_EQ(a.normal(a.engine), b.normal(b.engine));
        EXPECT_EQ(a.uniform(a.engine), b.uniform(b.engine));
    }
    EXPECT_THROW(b.load("garbage"), Error);
}

TEST(Chain, RetainsEveryThinnedState) {
    SamplerConfig cfg;
    cfg.samples = 10;
    cfg.thinning = 3;
    cfg.burn_in = 5;
    PosteriorEnsemble ens = run_chain(kFlat, 2, cfg);
    ASSERT_EQ(ens.size(), 10u);
    for (size_t r = 0; r < ens.size(); ++r) {
        EXPECT_EQ(ens.samples[r].step, 5 + 3 * static_cast<int64_t>(r + 1));
    }
    EXPECT_EQ(ens.acceptance_rate, 1.0);
    EXPECT_EQ(cfg.total_steps(), 35);
}

TEST(Chain, DefaultBurnInIsAnEighth) {
    SamplerConfig cfg;
    cfg.samples = 64;
    cfg.thinning = 4;
    EXPECT_EQ(cfg.effective_burn_in(), 32);
}

TEST(Chain, Deterministic) {
    SamplerConfig cfg;
    cfg.samples = 20;
    cfg.thinning = 5;
    cfg.seed = 9;
    PosteriorEnsemble a = run_chain(kNarrow, 3, cfg);
    PosteriorEnsemble b = run_chain(kNarrow, 3, cfg);
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.samples[i].params.z(), b.samples[i].params.z());
        EXPECT_EQ(a.samples[i].log_likelihood, b.samples[i].log_likelihood);
    }
    cfg.seed = 10;
    PosteriorEnsemble c = run_chain(kNarrow, 3, cfg);
    EXPECT_NE(a.samples.back().params.z(), c.samples.back().params.z());
}

TEST(Chain, AdaptiveBetaReachesTargetAcceptance) {
    SamplerConfig cfg;
    cfg.samples = 2000;
    cfg.thinning = 2;
    cfg.burn_in = 6000;
    cfg.beta = 0.9;
    PosteriorEnsemble ens = run_chain(kNarrow, 2, cfg);
    EXPECT_NEAR(ens.acceptance_rate, 0.25, 0.08);
    EXPECT_LT(ens.beta, 0.9);
    EXPECT_GE(ens.beta, 1e-5);
}

TEST(Chain, FixedBetaIsKept) {
    SamplerConfig cfg;
    cfg.samples = 10;
    cfg.thinning = 2;
    cfg.beta = 0.37;
    cfg.adaptive = false;
    EXPECT_EQ(run_chain(kNarrow, 2, cfg).beta, 0.37);
}

TEST(Chain, CheckpointResumeMatchesUninterruptedRun) {
    auto dir = testing::scratch_dir("pcn_resume");
    SamplerConfig cfg;
    cfg.samples = 30;
    cfg.thinning = 7;
    cfg.seed = 3;
    PosteriorEnsemble full = run_chain(kNarrow, 3, cfg);

    ChainOptions opt;
    opt.checkpoint_path = (dir / "ck.json").string();
    opt.checkpoint_every = 16;
    opt.stop_after = 100;
    PosteriorEnsemble partial = run_chain(kNarrow, 3, cfg, opt);
    EXPECT_LT(partial.size(), full.size());
    opt.stop_after.reset();
    opt.resume = true;
    PosteriorEnsemble resumed = run_chain(kNarrow, 3, cfg, opt);
    ASSERT_EQ(resumed.size(), full.size());
    for (size_t i = 0; i < full.size(); ++i) {
        EXPECT_EQ(resumed.samples[i].params.z(), full.samples[i].params.z());
        EXPECT_EQ(resumed.samples[i].log_likelihood, full.samples[i].log_likelihood);
        EXPECT_EQ(resumed.samples[i].step, full.samples[i].step);
    }
    EXPECT_EQ(resumed.beta, full.beta);
    EXPECT_EQ(resumed.acceptance_rate, full.acceptance_rate);

    SamplerConfig other = cfg;
    other.seed = 4;
    EXPECT_THROW(run_chain(kNarrow, 3, other, opt), ConfigError);
}

TEST(Chain, ConfigChecks) {
    SamplerConfig cfg;
    cfg.samples = 0;
    EXPECT_THROW(cfg.check(), ConfigError);
    cfg = SamplerConfig{};
    cfg.beta = 1.5;
    EXPECT_THROW(cfg.check(), ConfigError);
    cfg = SamplerConfig{};
    cfg.burn_in = -1;
    EXPECT_THROW(cfg.check(), ConfigError);
}

TEST(Ensemble, MergeKeepsChainOrder) {
    SamplerConfig cfg;
    cfg.samples = 4;
    cfg.thinning = 2;
    cfg.seed = 1;
    PosteriorEnsemble a = run_chain(kNarrow, 2, cfg);
    cfg.seed = 2;
    PosteriorEnsemble b = run_chain(kNarrow, 2, cfg);
    PosteriorEnsemble m = merge_ensembles({a, b});
    ASSERT_EQ(m.size(), 8u);
    EXPECT_EQ(m.samples[0].params.z(), a.samples[0].params.z());
    EXPECT_EQ(m.samples[4].params.z(), b.samples[0].params.z());
    EXPECT_THROW(merge_ensembles({}), Error);
}

TEST(Ensemble, BayesianMeanIsAverage) {
    PosteriorEnsemble ens;
    ens.dim = 2;
    Rng r(1);
    for (int i = 0; i < 2; ++i) {
        BuresParams p = sample_prior(r, 2);
        ens.samples.push_back({p, build_density(p), 0.0, i, 1.0});
    }
    CMatrix expect = (ens.samples[0].rho.matrix() + ens.samples[1].rho.matrix()) / 2.0;
    EXPECT_LT((bayesian_mean(ens).matrix() - expect).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(bayesian_mean(PosteriorEnsemble{}), Error);
}

TEST(Statistics, PercentileAndSummary) {
    std::vector<double> v{5, 1, 4, 2, 3};
    EXPECT_DOUBLE_EQ(percentile(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(percentile(v, 1.0), 5.0);
    EXPECT_DOUBLE_EQ(percentile(v, 0.5), 3.0);
    EXPECT_DOUBLE_EQ(percentile(v, 0.16), 1.64);
    auto s = summarize(v);
    EXPECT_DOUBLE_EQ(s.mean, 3.0);
    EXPECT_DOUBLE_EQ(s.std, std::sqrt(2.5));
    EXPECT_LE(s.p16, s.mean);
    EXPECT_LE(s.mean, s.p84);
    EXPECT_EQ(summarize({7.0}).std, 0.0);
    EXPECT_THROW(summarize({}), Error);
}

TEST(Convergence, FrozenChainIsNotConverged) {
    std::vector<double> flat(100, 0.5);
    EXPECT_FALSE(convergence_report(flat, false).converged);
    EXPECT_TRUE(convergence_report(flat, true).converged);
}

TEST(Convergence, DriftIsDetected) {
    std::vector<double> drift;
    for (int i = 0; i < 100; ++i) drift.push_back(0.01 * i);
    auto rep = convergence_report(drift, true);
    EXPECT_FALSE(rep.converged);
    EXPECT_NEAR(rep.running_mean.back(), 0.495, 1e-12);
    EXPECT_EQ(rep.running_std.size(), 100u);
}

}  // namespace
}  // namespace cvtomo
