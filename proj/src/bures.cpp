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

#include "cvtomo/bures.hpp"

#include <cmath>

#include <Eigen/QR>

#include "cvtomo/error.hpp"

namespace cvtomo {

namespace {

CMatrix row_major_block(const Eigen::Ref<const CVector>& z, int dim) {
    CMatrix m(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            m(i, j) = z(static_cast<Eigen::Index>(i) * dim + j);
        }
    }
    return m;
}

}  // namespace

BuresParams::BuresParams(CVector z, int dim) : z_(std::move(z)), dim_(dim) {
    if (dim < 1) {
        throw Error("BuresParams: dim must be >= 1");
    }
    if (z_.size() != size_for(dim)) {
        throw Error("BuresParams: expected 2 D^2 entries");
    }
    if (!z_.allFinite()) {
        throw Error("BuresParams: non-finite entries");
    }
}

BuresParams sample_prior(Rng& rng, int dim, ComplexNormal& normal) {
    if (dim < 1) {
        throw Error("sample_prior: dim must be >= 1");
    }
    CVector z(BuresParams::size_for(dim));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z(i) = normal(rng);
    }
    return BuresParams(std::move(z), dim);
}

BuresParams sample_prior(Rng& rng, int dim) {
    ComplexNormal normal;
    return sample_prior(rng, dim, normal);
}

CMatrix haar_unitary(const Eigen::Ref<const CVector>& z_half, int dim) {
    if (z_half.size() != static_cast<Eigen::Index>(dim) * dim) {
        throw Error("haar_unitary: expected D^2 entries");
    }
    CMatrix a = row_major_block(z_half, dim);
    Eigen::HouseholderQR<CMatrix> qr(a);
    CMatrix q = qr.householderQ();
    const CMatrix& r = qr.matrixQR();
    double scale = a.cwiseAbs().maxCoeff();
    for (int j = 0; j < dim; ++j) {
        Complex rjj = r(j, j);
        double mag = std::abs(rjj);
        if (!(mag > 1e-14 * scale) || scale == 0.0) {
            throw Error("haar_unitary: singular input matrix");
        }
        q.col(j) *= rjj / mag;
    }
    return q;
}

CMatrix build_density_matrix(const CVector& z, int dim) {
    const Eigen::Index half = static_cast<Eigen::Index>(dim) * dim;
    CMatrix g = row_major_block(z.head(half), dim);
    CMatrix u = haar_unitary(z.tail(half), dim);
    u.diagonal().array() += 1.0;
    CMatrix a = u * g;
    CMatrix rho = a * a.adjoint();
    double tr = rho.trace().real();
    if (!(tr >= 1e-14)) {
        throw Error("degenerate construction");
    }
    rho /= tr;
    return (rho + rho.adjoint()) * 0.5;
}

DensityMatrix build_density(const BuresParams& params) {
    return DensityMatrix(build_density_matrix(params.z(), params.dim()));
}

}  // namespace cvtomo
