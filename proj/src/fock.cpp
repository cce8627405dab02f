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

#include "cvtomo/fock.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "cvtomo/error.hpp"
#include "cvtomo/special.hpp"

namespace cvtomo {

namespace {

constexpr double kTraceTol = 1e-10;
constexpr double kClampTol = 1e-6;

// Eigenvalues within rounding noise of zero; their square roots would
// otherwise contribute O(sqrt(eps)) to fidelities of low-rank states.
double eigen_floor(const Eigen::VectorXd& ev) {
    return 64 * std::numeric_limits<double>::epsilon() * std::max(ev.cwiseAbs().maxCoeff(), 1e-300) *
           static_cast<double>(ev.size());
}

// Unnormalized diagonal weights <n|rho|n> for n = 0..cutoff of the
// untruncated state. Pure states go through their (unnormalized) ket.
CVector unnormalized_ket(const StateKind& kind, int cutoff);

CVector coherent_amplitudes(Complex alpha, int cutoff) {
    CVector c(cutoff + 1);
    c(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n <= cutoff; ++n) {
        c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    }
    return c;
}

CVector squeezed_amplitudes(double r, int cutoff) {
    // c_{2n} = sqrt((2n)!) / (2^n n!) tanh(r)^n / sqrt(cosh r)
    CVector c = CVector::Zero(cutoff + 1);
    double t = std::tanh(r);
    double amp = 1.0 / std::sqrt(std::cosh(r));
    for (int n = 0; 2 * n <= cutoff; ++n) {
        if (n > 0) {
            // ratio c_{2n} / c_{2n-2} = t sqrt((2n)(2n-1)) / (2n)
            double dn = static_cast<double>(n);
            amp *= t * std::sqrt(2.0 * dn * (2.0 * dn - 1.0)) / (2.0 * dn);
        }
        c(2 * n) = amp;
    }
    return c;
}

CVector cat_amplitudes(Complex alpha, Parity parity, int cutoff) {
    CVector c = coherent_amplitudes(alpha, cutoff);
    for (int n = 0; n <= cutoff; ++n) {
        bool odd_n = (n % 2) == 1;
        double factor = parity == Parity::Even ? (odd_n ? 0.0 : 2.0) : (odd_n ? 2.0 : 0.0);
        c(n) *= factor;
    }
    return c;
}

CVector unnormalized_ket(const StateKind& kind, int cutoff) {
    return std::visit(
        [cutoff](const auto& s) -> CVector {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Coherent>) {
                return coherent_amplitudes(s.alpha, cutoff);
            } else if constexpr (std::is_same_v<T, SqueezedVacuum>) {
                return squeezed_amplitudes(s.r, cutoff);
            } else if constexpr (std::is_same_v<T, FockState>) {
                CVector c = CVector::Zero(cutoff + 1);
                if (s.n <= cutoff) {
                    c(s.n) = 1.0;
                }
                return c;
            } else if constexpr (std::is_same_v<T, CatState>) {
                return cat_amplitudes(s.alpha, s.parity, cutoff);
            } else {
                throw Error("unnormalized_ket: mixed state has no ket");
            }
        },
        kind);
}

Eigen::VectorXd diagonal_weights(const StateKind& kind, int cutoff) {
    if (const auto* th = std::get_if<Thermal>(&kind)) {
        Eigen::VectorXd w(cutoff + 1);
        double mu = th->mean_photons;
        double q = mu / (1.0 + mu);
        double v = 1.0 / (1.0 + mu);
        for (int n = 0; n <= cutoff; ++n) {
            w(n) = v;
            v *= q;
        }
        return w;
    }
    return unnormalized_ket(kind, cutoff).cwiseAbs2();
}

void check_spec(const StateSpec& spec) {
    if (spec.cutoff < 0) {
        throw Error("state spec: cutoff must be >= 0");
    }
    if (const auto* th = std::get_if<Thermal>(&spec.kind)) {
        if (!(th->mean_photons >= 0.0)) {
            throw Error("state spec: thermal mean photon number must be >= 0");
        }
    }
    if (const auto* f = std::get_if<FockState>(&spec.kind)) {
        if (f->n < 0 || f->n > spec.cutoff) {
            throw Error("state spec: Fock number must lie in [0, cutoff]");
        }
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw ConfigError("state spec: cannot parse number '" + s + "'");
    }
    return v;
}

std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

DensityMatrix::DensityMatrix(CMatrix m) {
    if (m.rows() == 0 || m.rows() != m.cols()) {
        throw Error("DensityMatrix: matrix must be square and non-empty");
    }
    if (!m.allFinite()) {
        throw Error("DensityMatrix: non-finite entries");
    }
    m_ = (m + m.adjoint()) * 0.5;
    double tr = m_.trace().real();
    if (std::abs(tr - 1.0) > kTraceTol) {
        throw Error("DensityMatrix: trace " + fmt_double(tr) + " differs from one");
    }
}

DensityMatrix DensityMatrix::pure(const CVector& ket) {
    double nrm = ket.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
        throw Error("degenerate state");
    }
    CVector v = ket / nrm;
    return DensityMatrix(v * v.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
    if (dim < 1) {
        throw Error("maximally_mixed: dim must be >= 1");
    }
    return DensityMatrix(CMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

double DensityMatrix::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

void DensityMatrix::validate(double tol) const {
    double herm = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > tol) {
        throw Error("DensityMatrix: not Hermitian");
    }
    if (std::abs(m_.trace().real() - 1.0) > tol) {
        throw Error("DensityMatrix: trace differs from one");
    }
    if (min_eigenvalue() < -tol) {
        throw Error("DensityMatrix: not positive semidefinite");
    }
}

StateSpec state_with_mean_photons(StateFamily family, double mean_photons, int cutoff) {
    if (!(mean_photons >= 0.0)) {
        throw Error("state_with_mean_photons: mean photon number must be >= 0");
    }
    switch (family) {
        case StateFamily::Coherent:
            return {Coherent{Complex(std::sqrt(mean_photons), 0.0)}, cutoff};
        case StateFamily::Thermal:
            return {Thermal{mean_photons}, cutoff};
        case StateFamily::Squeezed:
            return {SqueezedVacuum{std::asinh(std::sqrt(mean_photons))}, cutoff};
        case StateFamily::Fock: {
            double n = std::round(mean_photons);
            if (std::abs(n - mean_photons) > 1e-12) {
                throw Error("state_with_mean_photons: Fock family needs an integer photon number");
            }
            return {FockState{static_cast<int>(n)}, cutoff};
        }
    }
    throw Error("state_with_mean_photons: unknown family");
}

Parity parse_parity(const std::string& text) {
    if (text == "even" || text == "+") {
        return Parity::Even;
    }
    if (text == "odd" || text == "-") {
        return Parity::Odd;
    }
    throw ConfigError("unknown cat parity '" + text + "' (expected even|odd)");
}

std::string to_string(Parity parity) { return parity == Parity::Even ? "even" : "odd"; }

StateSpec parse_state_spec(const std::string& text, int cutoff) {
    auto colon = text.find(':');
    std::string kind = text.substr(0, colon);
    std::vector<std::string> args;
    if (colon != std::string::npos) {
        args = split(text.substr(colon + 1), ',');
    }
    auto need = [&](size_t lo, size_t hi) {
        if (args.size() < lo || args.size() > hi) {
            throw ConfigError("state spec '" + text + "': wrong number of arguments");
        }
    };
    StateSpec spec;
    spec.cutoff = cutoff;
    if (kind == "vacuum") {
        need(0, 0);
        spec.kind = Coherent{Complex(0.0, 0.0)};
    } else if (kind == "coherent") {
        need(1, 2);
        spec.kind = Coherent{Complex(parse_double(args[0]), args.size() > 1 ? parse_double(args[1]) : 0.0)};
    } else if (kind == "thermal") {
        need(1, 1);
        spec.kind = Thermal{parse_double(args[0])};
    } else if (kind == "squeezed") {
        need(1, 1);
        spec.kind = SqueezedVacuum{parse_double(args[0])};
    } else if (kind == "fock") {
        need(1, 1);
        double n = parse_double(args[0]);
        if (n != std::floor(n)) {
            throw ConfigError("state spec '" + text + "': Fock number must be an integer");
        }
        spec.kind = FockState{static_cast<int>(n)};
    } else if (kind == "cat") {
        need(2, 3);
        Parity parity = parse_parity(args.back());
        double re = parse_double(args[0]);
        double im = args.size() == 3 ? parse_double(args[1]) : 0.0;
        spec.kind = CatState{Complex(re, im), parity};
    } else {
        throw ConfigError("unknown state kind '" + kind + "'");
    }
    try {
        check_spec(spec);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

std::string format_state_spec(const StateSpec& spec) {
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Coherent>) {
                return "coherent:" + fmt_double(s.alpha.real()) + "," + fmt_double(s.alpha.imag());
            } else if constexpr (std::is_same_v<T, Thermal>) {
                return "thermal:" + fmt_double(s.mean_photons);
            } else if constexpr (std::is_same_v<T, SqueezedVacuum>) {
                return "squeezed:" + fmt_double(s.r);
            } else if constexpr (std::is_same_v<T, FockState>) {
                return "fock:" + std::to_string(s.n);
            } else {
                return "cat:" + fmt_double(s.alpha.real()) + "," + fmt_double(s.alpha.imag()) + "," +
                       to_string(s.parity);
            }
        },
        spec.kind);
}

CVector coherent_ket(Complex alpha, int cutoff) {
    CVector c = coherent_amplitudes(alpha, cutoff);
    return c / c.norm();
}

CVector cat_ket(Complex alpha, Parity parity, int cutoff) {
    CVector c = cat_amplitudes(alpha, parity, cutoff);
    double nrm = c.norm();
    if (!(nrm > 0.0)) {
        throw Error("degenerate state");
    }
    return c / nrm;
}

DensityMatrix make_state(const StateSpec& spec) {
    check_spec(spec);
    if (const auto* th = std::get_if<Thermal>(&spec.kind)) {
        Eigen::VectorXd w = diagonal_weights(spec.kind, spec.cutoff);
        w /= w.sum();
        CMatrix m = CMatrix::Zero(spec.cutoff + 1, spec.cutoff + 1);
        m.diagonal() = w.cast<Complex>();
        (void)th;
        return DensityMatrix(std::move(m));
    }
    return DensityMatrix::pure(unnormalized_ket(spec.kind, spec.cutoff));
}

LossChannel::LossChannel(double eta, int cutoff)
    : eta_(eta), cutoff_(cutoff), bernoulli_(Eigen::MatrixXd::Zero(cutoff + 1, cutoff + 1)) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw Error("apply_loss: eta must lie in [0, 1]");
    }
    if (cutoff < 0) {
        throw Error("apply_loss: cutoff must be >= 0");
    }
    double log_eta = std::log(eta);
    double log_loss = std::log1p(-eta);
    for (int j = 0; j <= cutoff; ++j) {
        for (int k = 0; j + k <= cutoff; ++k) {
            // 0 * log(0) is taken as 0 so that eta in {0, 1} gives exact 0/1 entries.
            double t_eta = j == 0 ? 0.0 : j * log_eta;
            double t_loss = k == 0 ? 0.0 : k * log_loss;
            double lg = log_binomial(j + k, j) + t_eta + t_loss;
            bernoulli_(j, k) = std::isinf(lg) ? 0.0 : std::exp(0.5 * lg);
        }
    }
}

CMatrix LossChannel::apply(const CMatrix& rho) const {
    const int d = cutoff_ + 1;
    if (rho.rows() != d || rho.cols() != d) {
        throw Error("apply_loss: dimension mismatch");
    }
    CMatrix out(d, d);
    for (int n = 0; n < d; ++n) {
        for (int m = 0; m < d; ++m) {
            Complex acc(0.0, 0.0);
            int kmax = std::min(cutoff_ - m, cutoff_ - n);
            for (int k = 0; k <= kmax; ++k) {
                acc += bernoulli_(m, k) * bernoulli_(n, k) * rho(m + k, n + k);
            }
            out(m, n) = acc;
        }
    }
    return out;
}

LossyDensityMatrix apply_loss(const DensityMatrix& rho, double eta) {
    LossChannel channel(eta, rho.cutoff());
    return {DensityMatrix(channel.apply(rho.matrix())), eta};
}

DensityMatrix rotate_phase(const DensityMatrix& rho, double delta) {
    CMatrix m = rho.matrix();
    for (int n = 0; n < rho.dim(); ++n) {
        for (int k = 0; k < rho.dim(); ++k) {
            m(k, n) *= std::polar(1.0, (n - k) * delta);
        }
    }
    return DensityMatrix(std::move(m));
}

namespace {

CMatrix psd_sqrt(const CMatrix& m) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
    Eigen::VectorXd ev = es.eigenvalues();
    const double floor = eigen_floor(ev);
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < -kClampTol) {
            throw Error("fidelity: input is not positive semidefinite");
        }
        ev(i) = ev(i) > floor ? std::sqrt(ev(i)) : 0.0;
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

double fidelity_from_sqrt(const CMatrix& sqrt_ref, const CMatrix& rho) {
    CMatrix inner = sqrt_ref * rho * sqrt_ref;
    inner = (inner + inner.adjoint()).eval() * 0.5;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(inner, Eigen::EigenvaluesOnly);
    double tr = 0.0;
    const double floor = eigen_floor(es.eigenvalues());
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        double ev = es.eigenvalues()(i);
        if (ev < -kClampTol) {
            throw Error("fidelity: input is not positive semidefinite");
        }
        tr += ev > floor ? std::sqrt(ev) : 0.0;
    }
    return std::clamp(tr * tr, 0.0, 1.0);
}

}  // namespace

FidelityReference::FidelityReference(const DensityMatrix& reference)
    : reference_(reference), sqrt_(psd_sqrt(reference.matrix())) {}

double FidelityReference::operator()(const DensityMatrix& rho) const {
    if (rho.dim() != reference_.dim()) {
        throw Error("fidelity: dimension mismatch");
    }
    return fidelity_from_sqrt(sqrt_, rho.matrix());
}

double fidelity(const DensityMatrix& reference, const DensityMatrix& rho) {
    if (rho.dim() != reference.dim()) {
        throw Error("fidelity: dimension mismatch");
    }
    return FidelityReference(reference)(rho);
}

double WignerGridSpec::x_at(int i) const {
    return n_x == 1 ? x_min : x_min + (x_max - x_min) * i / (n_x - 1);
}

double WignerGridSpec::p_at(int j) const {
    return n_p == 1 ? p_min : p_min + (p_max - p_min) * j / (n_p - 1);
}

void WignerGridSpec::check() const {
    if (n_x < 1 || n_p < 1 || !(x_max >= x_min) || !(p_max >= p_min) || !std::isfinite(x_min) ||
        !std::isfinite(x_max) || !std::isfinite(p_min) || !std::isfinite(p_max)) {
        throw Error("wigner: invalid grid");
    }
}

namespace {

// Terms with lo = min(m, n), k = |m - n|:
//   rho_mn (-1)^lo / pi * 2^{k/2} sqrt(lo!/hi!) r^k e^{-r^2} L_lo^{(k)}(2 r^2) * w^k,
// with w = -(x - ip)/r for m > n and its conjugate for m < n.
class WignerEvaluator {
   public:
    explicit WignerEvaluator(int cutoff)
        : d_(cutoff + 1), lf_(static_cast<size_t>(d_)), lag_(static_cast<size_t>(d_)) {
        for (int n = 0; n < d_; ++n) {
            lf_[static_cast<size_t>(n)] = log_factorial(n);
        }
    }

    Complex operator()(const CMatrix& rho, double x, double p) {
        const double r2 = x * x + p * p;
        const double y = 2.0 * r2;
        const double log_r = r2 > 0.0 ? 0.5 * std::log(r2) : -std::numeric_limits<double>::infinity();
        Complex w(0.0, 0.0);
        if (r2 > 0.0) {
            double r = std::sqrt(r2);
            w = Complex(x / r, -p / r);
        }
        Complex total(0.0, 0.0);
        for (int k = 0; k < d_; ++k) {
            if (k > 0 && r2 == 0.0) {
                break;
            }
            const int lo_max = d_ - 1 - k;
            laguerre_column(lo_max, k, y);
            Complex wk = k == 0 ? Complex(1.0, 0.0) : std::pow(w, k);
            for (int lo = 0; lo <= lo_max; ++lo) {
                double lag = lag_[static_cast<size_t>(lo)];
                if (lag == 0.0) {
                    continue;
                }
                int hi = lo + k;
                double log_mag = 0.5 * k * std::numbers::ln2 +
                                 0.5 * (lf_[static_cast<size_t>(lo)] - lf_[static_cast<size_t>(hi)]) - r2 +
                                 std::log(std::abs(lag));
                if (k > 0) {
                    log_mag += k * log_r;
                }
                double mag = std::exp(log_mag) / std::numbers::pi;
                double sign = ((lo % 2) == 0 ? 1.0 : -1.0) * (lag > 0 ? 1.0 : -1.0);
                if (k == 0) {
                    total += sign * mag * rho(lo, lo);
                } else {
                    // m = hi, n = lo uses w^k; m = lo, n = hi uses conj(w)^k.
                    total += sign * mag * (rho(hi, lo) * wk + rho(lo, hi) * std::conj(wk));
                }
            }
        }
        return total;
    }

   private:
    void laguerre_column(int n_max, int alpha, double y) {
        lag_[0] = 1.0;
        if (n_max >= 1) {
            lag_[1] = 1.0 + alpha - y;
        }
        for (int n = 1; n < n_max; ++n) {
            lag_[static_cast<size_t>(n + 1)] =
                ((2.0 * n + 1.0 + alpha - y) * lag_[static_cast<size_t>(n)] -
                 (n + alpha) * lag_[static_cast<size_t>(n - 1)]) /
                (n + 1.0);
        }
    }

    int d_;
    std::vector<double> lf_;
    std::vector<double> lag_;
};

double checked_real(Complex v) {
    if (std::abs(v.imag()) > 1e-6) {
        throw Error("wigner: imaginary residue indicates a non-Hermitian input");
    }
    return v.real();
}

}  // namespace

double wigner_point(const DensityMatrix& rho, double x, double p) {
    WignerEvaluator eval(rho.cutoff());
    return checked_real(eval(rho.matrix(), x, p));
}

WignerGrid wigner(const DensityMatrix& rho, const WignerGridSpec& grid) {
    grid.check();
    WignerGrid out{grid, Eigen::MatrixXd(grid.n_x, grid.n_p)};
    WignerEvaluator eval(rho.cutoff());
    for (int i = 0; i < grid.n_x; ++i) {
        for (int j = 0; j < grid.n_p; ++j) {
            out.values(i, j) = checked_real(eval(rho.matrix(), grid.x_at(i), grid.p_at(j)));
        }
    }
    return out;
}

double truncation_error(const StateSpec& spec, int cutoff) {
    if (cutoff < 0) {
        throw Error("truncation_error: cutoff must be >= 0");
    }
    // Extend the internal space until the neglected far tail is negligible.
    int internal = std::max(4 * cutoff, cutoff + 40);
    Eigen::VectorXd w = diagonal_weights(spec.kind, internal);
    double total = w.sum();
    if (!(total > 0.0)) {
        throw Error("degenerate state");
    }
    while (internal < 4096 && w.tail(8).sum() > 1e-20 * total) {
        internal *= 2;
        w = diagonal_weights(spec.kind, internal);
        total = w.sum();
    }
    double tail = w.tail(internal - cutoff).sum();
    return std::clamp(tail / total, 0.0, 1.0);
}

double mean_photon(const DensityMatrix& rho) {
    double acc = 0.0;
    for (int n = 0; n < rho.dim(); ++n) {
        acc += n * rho(n, n).real();
    }
    return acc;
}

double purity(const DensityMatrix& rho) { return (rho.matrix() * rho.matrix()).trace().real(); }

}  // namespace cvtomo
