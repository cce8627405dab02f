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

#include "cvtomo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "cvtomo/error.hpp"
#include "cvtomo/io.hpp"

namespace cvtomo {

namespace {

void require_heterodyne(const QuadratureDataset& data, const char* what) {
    if (data.scheme != Scheme::Heterodyne) {
        throw Error(std::string(what) + ": heterodyne data required");
    }
    if (data.size() == 0) {
        throw Error(std::string(what) + ": empty dataset");
    }
}

double overlap(const CMatrix& rho, Complex alpha, Parity parity, int cutoff) {
    if (alpha == Complex(0.0, 0.0) && parity == Parity::Odd) {
        return -std::numeric_limits<double>::infinity();
    }
    CVector c = cat_ket(alpha, parity, cutoff);
    return (c.adjoint() * rho * c)(0, 0).real();
}

Bounds bounds_of(const std::vector<double>& values) {
    FunctionalEstimate est = summarize(values);
    return {est.mean, est.p16, est.p84};
}

nlohmann::json bounds_json(const Bounds& b) { return {{"mean", b.mean}, {"p16", b.lower}, {"p84", b.upper}}; }

}  // namespace

Complex expected_coherent_alpha(const QuadratureDataset& data) {
    require_heterodyne(data, "expected_coherent_alpha");
    double re = 0.0;
    double im = 0.0;
    for (const auto& r : data.records) {
        double c = std::cos(r.theta);
        double s = std::sin(r.theta);
        re += r.x * c - *r.p * s;
        im += r.x * s + *r.p * c;
    }
    const double n = static_cast<double>(data.size());
    return {re / n, im / n};
}

double expected_thermal_mu(const QuadratureDataset& data) {
    require_heterodyne(data, "expected_thermal_mu");
    double acc = 0.0;
    for (const auto& r : data.records) {
        acc += r.x * r.x + *r.p * *r.p;
    }
    return acc / static_cast<double>(data.size()) - 1.0;
}

NearestCat nearest_cat(const DensityMatrix& rho, Parity parity, const CatSearch& search) {
    if (!(search.alpha_max > 0.0) || search.n_angles < 1 || search.n_radii < 1 || !(search.tolerance > 0.0)) {
        throw ConfigError("nearest_cat: invalid search settings");
    }
    const CMatrix& m = rho.matrix();
    const int cutoff = rho.cutoff();
    const double two_pi = 2.0 * std::numbers::pi;

    NearestCat best{Complex(0.0, 0.0), -std::numeric_limits<double>::infinity()};
    for (int a = 0; a < search.n_angles; ++a) {
        double phi = two_pi * a / search.n_angles;
        for (int i = 0; i < search.n_radii; ++i) {
            double r = search.alpha_max * (i + 0.5) / search.n_radii;
            Complex alpha = std::polar(r, phi);
            double f = overlap(m, alpha, parity, cutoff);
            if (f > best.fidelity) {
                best = {alpha, f};
            }
        }
    }

    // Compass search in (Re alpha, Im alpha), starting at the radial grid step.
    double step = search.alpha_max / search.n_radii;
    const Complex dirs[4] = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}};
    while (step >= search.tolerance) {
        bool improved = false;
        for (const Complex& d : dirs) {
            Complex trial = best.alpha + step * d;
            if (std::abs(trial) > search.alpha_max) {
                continue;
            }
            double f = overlap(m, trial, parity, cutoff);
            if (f > best.fidelity) {
                best = {trial, f};
                improved = true;
            }
        }
        if (!improved) {
            step *= 0.5;
        }
    }
    return best;
}

nlohmann::json CatFit::to_json() const {
    nlohmann::json j;
    j["parity"] = to_string(parity);
    j["alpha_abs"] = bounds_json(alpha_abs);
    j["fidelity"] = bounds_json(fidelity);
    nlohmann::json re = nlohmann::json::array();
    nlohmann::json im = nlohmann::json::array();
    for (const auto& a : alphas) {
        re.push_back(a.real());
        im.push_back(a.imag());
    }
    j["samples"] = {{"alpha_re", re}, {"alpha_im", im}, {"fidelity", fidelities}};
    return j;
}

CatFit cat_report(const PosteriorEnsemble& ens, Parity parity, const CatSearch& search) {
    if (ens.size() < 2) {
        throw Error("cat_report: need at least 2 samples");
    }
    CatFit fit;
    fit.parity = parity;
    std::vector<double> abs_alpha;
    for (const auto& s : ens.samples) {
        NearestCat nc = nearest_cat(s.rho, parity, search);
        fit.alphas.push_back(nc.alpha);
        fit.fidelities.push_back(nc.fidelity);
        abs_alpha.push_back(std::abs(nc.alpha));
    }
    fit.alpha_abs = bounds_of(abs_alpha);
    fit.fidelity = bounds_of(fit.fidelities);
    return fit;
}

std::vector<CurveRow> fidelity_curve(const std::vector<CurvePoint>& points, const DensityMatrix& truth) {
    FidelityReference ref(truth);
    std::vector<CurveRow> rows;
    for (const auto& pt : points) {
        if (pt.ensemble == nullptr) {
            throw Error("fidelity_curve: missing ensemble");
        }
        if (pt.ensemble->dim != truth.dim()) {
            throw Error("fidelity_curve: ensemble and truth cutoffs differ");
        }
        auto est = estimate_functional(*pt.ensemble, [&ref](const DensityMatrix& rho) { return ref(rho); });
        rows.push_back({pt.records, est.mean, est.std});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const CurveRow& a, const CurveRow& b) { return a.records < b.records; });
    return rows;
}

std::string fidelity_curve_csv(const std::vector<CurveRow>& rows) {
    std::ostringstream os;
    os << "K,fid_mean,fid_std\n";
    for (const auto& r : rows) {
        os << r.records << ',' << format_double(r.fid_mean) << ',' << format_double(r.fid_std) << '\n';
    }
    return os.str();
}

}  // namespace cvtomo
