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

#include "cvtomo/measurement.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "cvtomo/error.hpp"
#include "cvtomo/special.hpp"

namespace cvtomo {

namespace {

constexpr double kResidueTol = 1e-9;
constexpr double kDensityFloor = 1e-300;

double checked_density(Complex v) {
    if (std::abs(v.imag()) > kResidueTol || v.real() < -kResidueTol || !std::isfinite(v.real())) {
        throw Error("invalid density");
    }
    return std::max(v.real(), 0.0);
}

Complex quadratic_form(const CVector& u, const CMatrix& rho) { return u.dot(rho * u); }

double log_density(double f) {
    if (f < -kResidueTol || std::isnan(f)) {
        throw Error("invalid density");
    }
    if (f <= 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    return std::log(std::max(f, kDensityFloor));
}

}  // namespace

std::string to_string(Scheme scheme) { return scheme == Scheme::Homodyne ? "homodyne" : "heterodyne"; }

Scheme parse_scheme(const std::string& text) {
    if (text == "hom" || text == "homodyne") {
        return Scheme::Homodyne;
    }
    if (text == "het" || text == "heterodyne") {
        return Scheme::Heterodyne;
    }
    throw ConfigError("unknown scheme '" + text + "' (expected hom|het)");
}

void QuadratureDataset::validate() const {
    bool het = scheme == Scheme::Heterodyne;
    for (size_t k = 0; k < records.size(); ++k) {
        const auto& r = records[k];
        if (r.p.has_value() != het) {
            throw Error("dataset: record " + std::to_string(k) + " does not match scheme " + to_string(scheme));
        }
        if (!std::isfinite(r.theta) || !std::isfinite(r.x) || (het && !std::isfinite(*r.p))) {
            throw Error("dataset: record " + std::to_string(k) + " is not finite");
        }
    }
}

QuadratureDataset QuadratureDataset::prefix(size_t count) const {
    if (count > records.size()) {
        throw Error("dataset: prefix longer than dataset");
    }
    QuadratureDataset out{scheme, {records.begin(), records.begin() + static_cast<std::ptrdiff_t>(count)}, metadata};
    return out;
}

QuadratureDataset QuadratureDataset::x_only() const {
    if (scheme != Scheme::Heterodyne) {
        throw Error("dataset: x_only needs heterodyne data");
    }
    QuadratureDataset out{Scheme::Homodyne, {}, metadata};
    out.records.reserve(records.size());
    for (const auto& r : records) {
        out.records.push_back({r.theta, r.x, std::nullopt});
    }
    out.metadata.notes += (out.metadata.notes.empty() ? "" : "; ") + std::string("x-quadrature projection");
    return out;
}

QuadratureDataset concatenate(const QuadratureDataset& a, const QuadratureDataset& b) {
    if (a.scheme != b.scheme) {
        throw Error("concatenate: scheme mismatch");
    }
    QuadratureDataset out = a;
    out.records.insert(out.records.end(), b.records.begin(), b.records.end());
    return out;
}

void MeasurementConfig::check() const {
    if (!(eta > 0.0 && eta <= 1.0)) {
        throw ConfigError("measurement config: eta must lie in (0, 1]");
    }
    if (cutoff < 0) {
        throw ConfigError("measurement config: cutoff must be >= 0");
    }
}

double hermite_weighted(int n, double x) {
    if (n < 0) {
        throw Error("hermite_weighted: n must be >= 0");
    }
    return hermite_functions(x, n)[static_cast<size_t>(n)];
}

CVector outcome_vector(Scheme scheme, const QuadratureRecord& record, int cutoff) {
    const int d = cutoff + 1;
    CVector u(d);
    const Complex step = std::polar(1.0, record.theta);
    Complex phase(1.0, 0.0);
    if (scheme == Scheme::Homodyne) {
        std::vector<double> h(static_cast<size_t>(d));
        hermite_functions(record.x, h);
        for (int n = 0; n < d; ++n) {
            u(n) = h[static_cast<size_t>(n)] * phase;
            phase *= step;
        }
        return u;
    }
    if (!record.p) {
        throw Error("outcome_vector: heterodyne record without p");
    }
    // g_n = (x + ip)^n e^{-(x^2+p^2)/2} / sqrt(n!), via g_n = g_{n-1} (x + ip) / sqrt(n).
    const Complex beta(record.x, *record.p);
    Complex g = std::exp(-0.5 * std::norm(beta)) / std::sqrt(std::numbers::pi);
    for (int n = 0; n < d; ++n) {
        if (n > 0) {
            g *= beta / std::sqrt(static_cast<double>(n));
        }
        u(n) = g * phase;
        phase *= step;
    }
    return u;
}

double homodyne_pdf(double x, double theta, const LossyDensityMatrix& rho_tilde) {
    const auto& rho = rho_tilde.state;
    CVector u = outcome_vector(Scheme::Homodyne, {theta, x, std::nullopt}, rho.cutoff());
    return checked_density(quadratic_form(u, rho.matrix()));
}

double heterodyne_pdf(double x, double p, double theta, const LossyDensityMatrix& rho_tilde) {
    const auto& rho = rho_tilde.state;
    CVector u = outcome_vector(Scheme::Heterodyne, {theta, x, p}, rho.cutoff());
    return checked_density(quadratic_form(u, rho.matrix()));
}

double pairwise_sum(std::span<const double> values) {
    constexpr size_t kLeaf = 8;
    if (values.size() <= kLeaf) {
        double acc = 0.0;
        for (double v : values) {
            acc += v;
        }
        return acc;
    }
    size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double log_likelihood(const QuadratureDataset& data, const DensityMatrix& rho, const MeasurementConfig& cfg) {
    cfg.check();
    if (rho.cutoff() != cfg.cutoff) {
        throw Error("log_likelihood: state cutoff does not match configuration");
    }
    data.validate();
    LossyDensityMatrix lossy = apply_loss(rho, cfg.eta);
    std::vector<double> logs;
    logs.reserve(data.size());
    for (const auto& r : data.records) {
        double f = data.scheme == Scheme::Homodyne ? homodyne_pdf(r.x, r.theta, lossy)
                                                   : heterodyne_pdf(r.x, *r.p, r.theta, lossy);
        double lf = log_density(f);
        if (std::isinf(lf)) {
            return lf;
        }
        logs.push_back(lf);
    }
    return pairwise_sum(logs);
}

LikelihoodModel::LikelihoodModel(const QuadratureDataset& data, const MeasurementConfig& cfg)
    : cfg_(cfg), scheme_(data.scheme), loss_(cfg.eta, cfg.cutoff) {
    cfg.check();
    data.validate();
    const int d = cfg.cutoff + 1;
    const Eigen::Index k_count = static_cast<Eigen::Index>(data.size());
    design_.resize(k_count, static_cast<Eigen::Index>(d) * d);
    for (Eigen::Index k = 0; k < k_count; ++k) {
        CVector u = outcome_vector(scheme_, data.records[static_cast<size_t>(k)], cfg.cutoff);
        Eigen::Index col = 0;
        for (int m = 0; m < d; ++m) {
            design_(k, col++) = std::norm(u(m));
        }
        for (int m = 0; m < d; ++m) {
            for (int n = m + 1; n < d; ++n) {
                Complex w = std::conj(u(m)) * u(n);
                design_(k, col++) = 2.0 * w.real();
                design_(k, col++) = -2.0 * w.imag();
            }
        }
    }
}

double LikelihoodModel::operator()(const CMatrix& rho) const { return of_lossy(loss_.apply(rho)); }

double LikelihoodModel::of_lossy(const CMatrix& rho_tilde) const {
    const int d = cfg_.cutoff + 1;
    if (rho_tilde.rows() != d || rho_tilde.cols() != d) {
        throw Error("log_likelihood: state cutoff does not match configuration");
    }
    Eigen::VectorXd params(static_cast<Eigen::Index>(d) * d);
    Eigen::Index col = 0;
    for (int m = 0; m < d; ++m) {
        params(col++) = rho_tilde(m, m).real();
    }
    for (int m = 0; m < d; ++m) {
        for (int n = m + 1; n < d; ++n) {
            params(col++) = rho_tilde(m, n).real();
            params(col++) = rho_tilde(m, n).imag();
        }
    }
    Eigen::VectorXd f = design_ * params;
    for (Eigen::Index k = 0; k < f.size(); ++k) {
        double v = f(k);
        if (!(v > 0.0)) {
            if (v < -kResidueTol || std::isnan(v)) {
                throw Error("invalid density");
            }
            return -std::numeric_limits<double>::infinity();
        }
    }
    Eigen::VectorXd logs = f.array().max(kDensityFloor).log();
    return pairwise_sum(std::span<const double>(logs.data(), static_cast<size_t>(logs.size())));
}

}  // namespace cvtomo
