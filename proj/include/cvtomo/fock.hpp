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

#ifndef CVTOMO_FOCK_HPP_
#define CVTOMO_FOCK_HPP_

#include <complex>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace cvtomo {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Density matrix on the Fock space truncated at photon number `cutoff()`.
///
/// Construction symmetrizes the input so that rho(m, n) == conj(rho(n, m))
/// holds bit-for-bit and rejects inputs whose trace is not one. Positivity
/// is not checked on construction (it costs an eigendecomposition); call
/// `validate()` where the input is untrusted.
class DensityMatrix {
   public:
    DensityMatrix() = default;
    explicit DensityMatrix(CMatrix m);

    static DensityMatrix pure(const CVector& ket);
    static DensityMatrix maximally_mixed(int dim);

    int dim() const { return static_cast<int>(m_.rows()); }
    int cutoff() const { return dim() - 1; }
    const CMatrix& matrix() const { return m_; }
    Complex operator()(int m, int n) const { return m_(m, n); }

    double min_eigenvalue() const;
    /// Throws unless Hermitian, trace one and PSD within `tol`.
    void validate(double tol = 1e-10) const;

   private:
    CMatrix m_;
};

/// State after the loss channel, tagged with the transmissivity used.
struct LossyDensityMatrix {
    DensityMatrix state;
    double eta = 1.0;
};

struct Coherent {
    Complex alpha;
};
struct Thermal {
    double mean_photons = 0.0;
};
struct SqueezedVacuum {
    double r = 0.0;
};
struct FockState {
    int n = 0;
};
enum class Parity { Even, Odd };
struct CatState {
    Complex alpha;
    Parity parity = Parity::Even;
};

using StateKind = std::variant<Coherent, Thermal, SqueezedVacuum, FockState, CatState>;

struct StateSpec {
    StateKind kind;
    int cutoff = 10;
};

enum class StateFamily { Coherent, Thermal, Squeezed, Fock };

/// Member of `family` whose untruncated mean photon number is `mean_photons`.
/// Fock requires an integer value.
StateSpec state_with_mean_photons(StateFamily family, double mean_photons, int cutoff);

/// Parses "vacuum", "coherent:RE[,IM]", "thermal:MU", "squeezed:R",
/// "fock:N", "cat:ABS_OR_RE[,IM],even|odd".
StateSpec parse_state_spec(const std::string& text, int cutoff);
std::string format_state_spec(const StateSpec& spec);
Parity parse_parity(const std::string& text);
std::string to_string(Parity parity);

/// Cat ket (|alpha> +/- |-alpha>) on the truncated space, renormalized.
CVector cat_ket(Complex alpha, Parity parity, int cutoff);
CVector coherent_ket(Complex alpha, int cutoff);

DensityMatrix make_state(const StateSpec& spec);

/// Photon loss with transmissivity eta, precomputed for one cutoff.
class LossChannel {
   public:
    LossChannel(double eta, int cutoff);

    double eta() const { return eta_; }
    int cutoff() const { return cutoff_; }
    /// rho_tilde(m, n) = sum_k B(m, k) B(n, k) rho(m + k, n + k).
    CMatrix apply(const CMatrix& rho) const;

   private:
    double eta_;
    int cutoff_;
    // bernoulli_(j, k) = sqrt(C(j + k, j) eta^j (1 - eta)^k), zero for j + k > cutoff.
    Eigen::MatrixXd bernoulli_;
};

LossyDensityMatrix apply_loss(const DensityMatrix& rho, double eta);

/// rho(m, n) -> rho(m, n) exp(i (n - m) delta).
DensityMatrix rotate_phase(const DensityMatrix& rho, double delta);

double fidelity(const DensityMatrix& reference, const DensityMatrix& rho);

/// Caches sqrt(reference) for repeated fidelity evaluations.
class FidelityReference {
   public:
    explicit FidelityReference(const DensityMatrix& reference);
    double operator()(const DensityMatrix& rho) const;
    const DensityMatrix& reference() const { return reference_; }

   private:
    DensityMatrix reference_;
    CMatrix sqrt_;
};

struct WignerGridSpec {
    double x_min = -5.0;
    double x_max = 5.0;
    double p_min = -5.0;
    double p_max = 5.0;
    int n_x = 101;
    int n_p = 101;

    double x_at(int i) const;
    double p_at(int j) const;
    void check() const;
};

struct WignerGrid {
    WignerGridSpec grid;
    /// values(i, j) = W(x_i, p_j).
    Eigen::MatrixXd values;
};

double wigner_point(const DensityMatrix& rho, double x, double p);
WignerGrid wigner(const DensityMatrix& rho, const WignerGridSpec& grid);

/// Probability mass of the untruncated state above `cutoff`, estimated at
/// the internal cutoff max(4 cutoff, cutoff + 40).
double truncation_error(const StateSpec& spec, int cutoff);

double mean_photon(const DensityMatrix& rho);
double purity(const DensityMatrix& rho);

}  // namespace cvtomo

#endif  // CVTOMO_FOCK_HPP_
