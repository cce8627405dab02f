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

#ifndef CVTOMO_MEASUREMENT_HPP_
#define CVTOMO_MEASUREMENT_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "cvtomo/fock.hpp"

namespace cvtomo {

enum class Scheme { Homodyne, Heterodyne };

std::string to_string(Scheme scheme);
/// Accepts "hom", "homodyne", "het", "heterodyne".
Scheme parse_scheme(const std::string& text);

/// One measurement: LO phase theta (radians, stored as given) and quadrature
/// values in units where the vacuum variance is 1/2. `p` is present iff the
/// record comes from heterodyne detection.
struct QuadratureRecord {
    double theta = 0.0;
    double x = 0.0;
    std::optional<double> p;
};

struct DatasetMetadata {
    std::string source;
    std::optional<double> lo_power_mw;
    std::string notes;
    /// Free-form provenance (e.g. the resolved run configuration).
    nlohmann::json provenance = nlohmann::json::object();
};

struct QuadratureDataset {
    Scheme scheme = Scheme::Homodyne;
    std::vector<QuadratureRecord> records;
    DatasetMetadata metadata;

    size_t size() const { return records.size(); }
    /// Throws unless every record is finite and carries p iff heterodyne.
    void validate() const;
    /// First `count` records (nested measurement subsets).
    QuadratureDataset prefix(size_t count) const;
    /// Homodyne dataset made of the x outputs of a heterodyne dataset.
    QuadratureDataset x_only() const;
};

QuadratureDataset concatenate(const QuadratureDataset& a, const QuadratureDataset& b);

struct MeasurementConfig {
    double eta = 1.0;
    int cutoff = 10;

    void check() const;
};

/// h_n(x) = H_n(x) exp(-x^2/2) / sqrt(2^n n! sqrt(pi)).
double hermite_weighted(int n, double x);

/// Vector u with f = u^dagger rho_tilde u for a single record:
/// homodyne u_n = h_n(x) e^{i n theta};
/// heterodyne u_n = (x + ip)^n e^{-(x^2+p^2)/2} e^{i n theta} / sqrt(pi n!).
CVector outcome_vector(Scheme scheme, const QuadratureRecord& record, int cutoff);

double homodyne_pdf(double x, double theta, const LossyDensityMatrix& rho_tilde);
double heterodyne_pdf(double x, double p, double theta, const LossyDensityMatrix& rho_tilde);

/// Sum with a fixed pairwise tree over the index range. The result depends
/// only on the values and their order, never on how work is partitioned.
double pairwise_sum(std::span<const double> values);

/// Reference log-likelihood: evaluates every record density directly.
/// Returns -infinity if any record density is exactly zero.
double log_likelihood(const QuadratureDataset& data, const DensityMatrix& rho, const MeasurementConfig& cfg);

/// Log-likelihood with the per-record outcome vectors folded into a real
/// design matrix, so one evaluation is a single matrix-vector product.
class LikelihoodModel {
   public:
    LikelihoodModel(const QuadratureDataset& data, const MeasurementConfig& cfg);

    const MeasurementConfig& config() const { return cfg_; }
    Scheme scheme() const { return scheme_; }
    size_t size() const { return static_cast<size_t>(design_.rows()); }

    /// Log-likelihood of the pre-loss state `rho` (loss applied internally).
    double operator()(const CMatrix& rho) const;
    double operator()(const DensityMatrix& rho) const { return (*this)(rho.matrix()); }

    /// Log-likelihood of an already lossy state.
    double of_lossy(const CMatrix& rho_tilde) const;

   private:
    MeasurementConfig cfg_;
    Scheme scheme_;
    LossChannel loss_;
    Eigen::MatrixXd design_;
};

}  // namespace cvtomo

#endif  // CVTOMO_MEASUREMENT_HPP_
