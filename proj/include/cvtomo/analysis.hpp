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

#ifndef CVTOMO_ANALYSIS_HPP_
#define CVTOMO_ANALYSIS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvtomo/fock.hpp"
#include "cvtomo/measurement.hpp"
#include "cvtomo/pcn.hpp"

namespace cvtomo {

/// <x cos t - p sin t> + i <x sin t + p cos t> over heterodyne records.
Complex expected_coherent_alpha(const QuadratureDataset& data);

/// <x^2 + p^2> - 1 over heterodyne records.
double expected_thermal_mu(const QuadratureDataset& data);

struct CatSearch {
    double alpha_max = 4.0;
    int n_angles = 64;
    int n_radii = 32;
    double tolerance = 1e-4;
};

struct NearestCat {
    Complex alpha;
    double fidelity = 0.0;
};

/// Maximizes <C(alpha)|rho|C(alpha)> over |alpha| <= alpha_max: polar grid
/// search, then compass refinement until the step drops below `tolerance`.
NearestCat nearest_cat(const DensityMatrix& rho, Parity parity, const CatSearch& search = {});

/// Bayesian mean B with 16th (L) and 84th (U) percentiles.
struct Bounds {
    double mean = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct CatFit {
    Parity parity = Parity::Even;
    Bounds alpha_abs;
    Bounds fidelity;
    std::vector<Complex> alphas;
    std::vector<double> fidelities;

    nlohmann::json to_json() const;
};

CatFit cat_report(const PosteriorEnsemble& ens, Parity parity, const CatSearch& search = {});

struct CurveRow {
    int64_t records = 0;  // K
    double fid_mean = 0.0;
    double fid_std = 0.0;
};

struct CurvePoint {
    int64_t records = 0;
    const PosteriorEnsemble* ensemble = nullptr;
};

/// Sample-fidelity mean and std per K, sorted by ascending K.
std::vector<CurveRow> fidelity_curve(const std::vector<CurvePoint>& points, const DensityMatrix& truth);

/// CSV "K,fid_mean,fid_std".
std::string fidelity_curve_csv(const std::vector<CurveRow>& rows);

}  // namespace cvtomo

#endif  // CVTOMO_ANALYSIS_HPP_
