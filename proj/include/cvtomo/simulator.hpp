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

#ifndef CVTOMO_SIMULATOR_HPP_
#define CVTOMO_SIMULATOR_HPP_

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "cvtomo/bures.hpp"
#include "cvtomo/measurement.hpp"
#include "cvtomo/pcn.hpp"

namespace cvtomo {

inline constexpr double kDefaultGridResolution = 0.07;
inline constexpr double kGridMassTolerance = 1e-6;

struct SimConfig {
    StateSpec spec;
    Scheme scheme = Scheme::Homodyne;
    int64_t records = 8000;  // K
    double eta = 1.0;
    double grid_resolution = kDefaultGridResolution;
    /// Defaults to 6 + 3 sqrt(2 <n>) quadrature units.
    std::optional<double> grid_halfwidth;
    uint64_t seed = 1;

    void check() const;
    nlohmann::json to_json() const;
};

double default_grid_halfwidth(double mean_photons);

/// Mixes `base` with `tags` into an independent 64-bit seed.
uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> tags);

/// Draws K records from the state after loss: theta uniform on [0, 2 pi),
/// outcome drawn from the outcome density discretized on a grid of cells
/// and reported at the cell center. Throws "grid too narrow" when the grid
/// holds less than 1 - 1e-6 of the probability mass.
QuadratureDataset simulate_dataset(const SimConfig& cfg);
QuadratureDataset simulate_from_state(const DensityMatrix& rho, Scheme scheme, int64_t records, double grid_resolution,
                                      double grid_halfwidth, Rng& rng);

struct ScalingState {
    std::string label;
    StateSpec spec;
};

struct ScalingRow {
    std::string state;
    double mean_photon = 0.0;
    Scheme scheme = Scheme::Homodyne;
    int64_t records = 0;
    double fid_mean = 0.0;
    double fid_std = 0.0;
    double bayes_mean_fidelity = 0.0;
};

struct ScalingConfig {
    std::vector<ScalingState> states;
    std::vector<int64_t> subset_sizes;
    Scheme scheme = Scheme::Homodyne;
    double eta = 1.0;
    SamplerConfig sampler;
    uint64_t seed = 1;
};

/// One simulated dataset per state, inferred on nested prefixes of it.
/// Rows come out ordered by state, then by subset size.
std::vector<ScalingRow> scaling_experiment(const ScalingConfig& cfg);

/// CSV "state,mean_photon,scheme,K,fid_mean,fid_std".
std::string scaling_csv(const std::vector<ScalingRow>& rows);

}  // namespace cvtomo

#endif  // CVTOMO_SIMULATOR_HPP_
