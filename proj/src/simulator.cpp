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

#include "cvtomo/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cvtomo/error.hpp"
#include "cvtomo/io.hpp"
#include "cvtomo/special.hpp"

namespace cvtomo {

namespace {

struct Grid1D {
    int cells = 0;
    double step = 0.0;
    double halfwidth = 0.0;

    Grid1D(double resolution, double requested_halfwidth) : step(resolution) {
        cells = static_cast<int>(std::ceil(2.0 * requested_halfwidth / resolution));
        halfwidth = 0.5 * cells * resolution;
    }
    double center(int i) const { return -halfwidth + (i + 0.5) * step; }
};

// Draws an index with probability weights[i] / sum(weights).
int draw_index(const std::vector<double>& weights, double total, Rng& rng) {
    std::uniform_real_distribution<double> uni(0.0, total);
    double u = uni(rng);
    double acc = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) {
            return static_cast<int>(i);
        }
    }
    // Roundoff at the upper end: take the last cell with nonzero weight.
    for (size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) {
            return static_cast<int>(i);
        }
    }
    throw Error("draw_index: all weights are zero");
}

void check_mass(double mass) {
    if (std::abs(mass - 1.0) > kGridMassTolerance) {
        throw Error("grid too narrow (discretized mass " + format_double(mass) + ")");
    }
}

// Phase harmonics of the outcome density: f(theta) = Re F_0 + 2 Re sum_{d>0} e^{i d theta} F_d.
double density_at(const std::vector<Complex>& harmonics, const std::vector<Complex>& phases) {
    double f = harmonics[0].real();
    for (size_t d = 1; d < harmonics.size(); ++d) {
        f += 2.0 * (phases[d] * harmonics[d]).real();
    }
    return std::max(f, 0.0);
}

std::vector<Complex> phase_powers(double theta, int d) {
    std::vector<Complex> out(static_cast<size_t>(d));
    Complex step = std::polar(1.0, theta);
    Complex cur(1.0, 0.0);
    for (int k = 0; k < d; ++k) {
        out[static_cast<size_t>(k)] = cur;
        cur *= step;
    }
    return out;
}

}  // namespace

double default_grid_halfwidth(double mean_photons) { return 6.0 + 3.0 * std::sqrt(2.0 * std::max(mean_photons, 0.0)); }

uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> tags) {
    std::vector<uint32_t> words{static_cast<uint32_t>(base), static_cast<uint32_t>(base >> 32)};
    for (uint64_t t : tags) {
        words.push_back(static_cast<uint32_t>(t));
        words.push_back(static_cast<uint32_t>(t >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    std::array<uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<uint64_t>(out[0]) << 32) | out[1];
}

void SimConfig::check() const {
    if (records < 1) {
        throw ConfigError("simulator: K must be >= 1");
    }
    if (!(grid_resolution > 0.0)) {
        throw ConfigError("simulator: grid resolution must be > 0");
    }
    if (grid_halfwidth && !(*grid_halfwidth > 0.0)) {
        throw ConfigError("simulator: grid halfwidth must be > 0");
    }
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw ConfigError("simulator: eta must lie in [0, 1]");
    }
}

nlohmann::json SimConfig::to_json() const {
    nlohmann::json j;
    j["state"] = format_state_spec(spec);
    j["nc"] = spec.cutoff;
    j["scheme"] = to_string(scheme);
    j["K"] = records;
    j["eta"] = eta;
    j["grid_resolution"] = grid_resolution;
    j["grid_halfwidth"] = grid_halfwidth ? nlohmann::json(*grid_halfwidth) : nlohmann::json();
    j["seed"] = seed;
    return j;
}

QuadratureDataset simulate_from_state(const DensityMatrix& rho, Scheme scheme, int64_t records, double grid_resolution,
                                      double grid_halfwidth, Rng& rng) {
    const int d = rho.dim();
    const CMatrix& m = rho.matrix();
    Grid1D grid(grid_resolution, grid_halfwidth);
    const int cells = grid.cells;
    const double two_pi = 2.0 * std::numbers::pi;
    std::uniform_real_distribution<double> phase_dist(0.0, two_pi);

    QuadratureDataset data;
    data.scheme = scheme;
    data.records.reserve(static_cast<size_t>(records));

    if (scheme == Scheme::Homodyne) {
        // harmonics[i][k] = sum_m rho(m, m + k) h_m(x_i) h_{m+k}(x_i)
        std::vector<std::vector<Complex>> harmonics(static_cast<size_t>(cells));
        std::vector<double> h(static_cast<size_t>(d));
        for (int i = 0; i < cells; ++i) {
            hermite_functions(grid.center(i), h);
            auto& row = harmonics[static_cast<size_t>(i)];
            row.assign(static_cast<size_t>(d), Complex(0.0, 0.0));
            for (int k = 0; k < d; ++k) {
                for (int a = 0; a + k < d; ++a) {
                    row[static_cast<size_t>(k)] += m(a, a + k) * h[static_cast<size_t>(a)] * h[static_cast<size_t>(a + k)];
                }
            }
        }
        std::vector<double> weights(static_cast<size_t>(cells));
        for (int64_t r = 0; r < records; ++r) {
            double theta = phase_dist(rng);
            auto phases = phase_powers(theta, d);
            double total = 0.0;
            for (int i = 0; i < cells; ++i) {
                double w = density_at(harmonics[static_cast<size_t>(i)], phases) * grid.step;
                weights[static_cast<size_t>(i)] = w;
                total += w;
            }
            check_mass(total);
            int i = draw_index(weights, total, rng);
            data.records.push_back({theta, grid.center(i), std::nullopt});
        }
        return data;
    }

    // Heterodyne: harmonics on the 2D grid, drawn as x-marginal then p | x,
    // which is the same multinomial as a single draw over the flattened grid.
    const size_t n_cells = static_cast<size_t>(cells);
    std::vector<Complex> harm(n_cells * n_cells * static_cast<size_t>(d), Complex(0.0, 0.0));
    auto at = [&](int i, int j, int k) -> Complex& {
        return harm[(static_cast<size_t>(i) * n_cells + static_cast<size_t>(j)) * static_cast<size_t>(d) +
                    static_cast<size_t>(k)];
    };
    std::vector<Complex> marginal(n_cells * static_cast<size_t>(d), Complex(0.0, 0.0));
    std::vector<Complex> g(static_cast<size_t>(d));
    for (int i = 0; i < cells; ++i) {
        for (int j = 0; j < cells; ++j) {
            Complex beta(grid.center(i), grid.center(j));
            Complex gn = std::exp(-0.5 * std::norm(beta)) / std::sqrt(std::numbers::pi);
            for (int n = 0; n < d; ++n) {
                if (n > 0) {
                    gn *= beta / std::sqrt(static_cast<double>(n));
                }
                g[static_cast<size_t>(n)] = gn;
            }
            for (int k = 0; k < d; ++k) {
                Complex acc(0.0, 0.0);
                for (int a = 0; a + k < d; ++a) {
                    acc += m(a, a + k) * std::conj(g[static_cast<size_t>(a)]) * g[static_cast<size_t>(a + k)];
                }
                at(i, j, k) = acc;
                marginal[static_cast<size_t>(i) * static_cast<size_t>(d) + static_cast<size_t>(k)] += acc;
            }
        }
    }
    const double cell_area = grid.step * grid.step;
    std::vector<double> weights_x(n_cells);
    std::vector<double> weights_p(n_cells);
    std::vector<Complex> row(static_cast<size_t>(d));
    for (int64_t r = 0; r < records; ++r) {
        double theta = phase_dist(rng);
        auto phases = phase_powers(theta, d);
        double total = 0.0;
        for (int i = 0; i < cells; ++i) {
            for (int k = 0; k < d; ++k) {
                row[static_cast<size_t>(k)] = marginal[static_cast<size_t>(i) * static_cast<size_t>(d) + static_cast<size_t>(k)];
            }
            double w = density_at(row, phases) * cell_area;
            weights_x[static_cast<size_t>(i)] = w;
            total += w;
        }
        check_mass(total);
        int i = draw_index(weights_x, total, rng);
        double total_p = 0.0;
        for (int j = 0; j < cells; ++j) {
            for (int k = 0; k < d; ++k) {
                row[static_cast<size_t>(k)] = at(i, j, k);
            }
            double w = density_at(row, phases);
            weights_p[static_cast<size_t>(j)] = w;
            total_p += w;
        }
        int j = draw_index(weights_p, total_p, rng);
        data.records.push_back({theta, grid.center(i), grid.center(j)});
    }
    return data;
}

QuadratureDataset simulate_dataset(const SimConfig& cfg) {
    cfg.check();
    DensityMatrix truth = make_state(cfg.spec);
    DensityMatrix lossy = cfg.eta < 1.0 ? apply_loss(truth, cfg.eta).state : truth;
    double hw = cfg.grid_halfwidth.value_or(default_grid_halfwidth(mean_photon(truth)));
    Rng rng(cfg.seed);
    QuadratureDataset data = simulate_from_state(lossy, cfg.scheme, cfg.records, cfg.grid_resolution, hw, rng);
    data.metadata.source = "simulated";
    data.metadata.notes = "ground truth " + format_state_spec(cfg.spec);
    data.metadata.provenance = cfg.to_json();
    data.metadata.provenance["grid_halfwidth_used"] = hw;
    return data;
}

std::vector<ScalingRow> scaling_experiment(const ScalingConfig& cfg) {
    if (cfg.subset_sizes.empty()) {
        throw ConfigError("scaling_experiment: no subset sizes");
    }
    if (!std::is_sorted(cfg.subset_sizes.begin(), cfg.subset_sizes.end())) {
        throw ConfigError("scaling_experiment: subset sizes must be ascending");
    }
    std::vector<ScalingRow> rows;
    for (size_t s = 0; s < cfg.states.size(); ++s) {
        const auto& st = cfg.states[s];
        SimConfig sim;
        sim.spec = st.spec;
        sim.scheme = cfg.scheme;
        sim.records = cfg.subset_sizes.back();
        sim.eta = cfg.eta;
        sim.seed = derive_seed(cfg.seed, {s, 0});
        QuadratureDataset full = simulate_dataset(sim);
        DensityMatrix truth = make_state(st.spec);
        FidelityReference fid(truth);
        MeasurementConfig mcfg{cfg.eta, st.spec.cutoff};
        for (size_t k = 0; k < cfg.subset_sizes.size(); ++k) {
            SamplerConfig scfg = cfg.sampler;
            scfg.seed = derive_seed(cfg.seed, {s, k + 1});
            PosteriorEnsemble ens = run_chain(full.prefix(static_cast<size_t>(cfg.subset_sizes[k])), mcfg, scfg);
            auto est = estimate_functional(ens, [&fid](const DensityMatrix& rho) { return fid(rho); });
            rows.push_back({st.label, mean_photon(truth), cfg.scheme, cfg.subset_sizes[k], est.mean, est.std,
                            fid(bayesian_mean(ens))});
        }
    }
    return rows;
}

std::string scaling_csv(const std::vector<ScalingRow>& rows) {
    std::ostringstream os;
    os << "state,mean_photon,scheme,K,fid_mean,fid_std\n";
    for (const auto& r : rows) {
        os << r.state << ',' << format_double(r.mean_photon) << ',' << to_string(r.scheme) << ',' << r.records << ','
           << format_double(r.fid_mean) << ',' << format_double(r.fid_std) << '\n';
    }
    return os.str();
}

}  // namespace cvtomo
