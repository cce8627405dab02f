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

#ifndef CVTOMO_BURES_HPP_
#define CVTOMO_BURES_HPP_

#include <random>

#include "cvtomo/fock.hpp"

namespace cvtomo {

using Rng = std::mt19937_64;

/// Draws complex numbers whose real and imaginary parts are independent
/// standard normals (density proportional to exp(-|z|^2 / 2)).
class ComplexNormal {
   public:
    Complex operator()(Rng& rng) { return {normal_(rng), normal_(rng)}; }
    std::normal_distribution<double>& distribution() { return normal_; }
    const std::normal_distribution<double>& distribution() const { return normal_; }

   private:
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// 2 D^2 complex parameters. The first D^2 fill G (row-major), the second
/// D^2 fill the matrix that is turned into a Haar unitary.
class BuresParams {
   public:
    BuresParams() = default;
    BuresParams(CVector z, int dim);

    int dim() const { return dim_; }
    const CVector& z() const { return z_; }
    static Eigen::Index size_for(int dim) { return 2 * static_cast<Eigen::Index>(dim) * dim; }

   private:
    CVector z_;
    int dim_ = 0;
};

BuresParams sample_prior(Rng& rng, int dim, ComplexNormal& normal);
BuresParams sample_prior(Rng& rng, int dim);

/// QR of the D x D matrix filled row-major from `z_half`, with the columns of
/// Q rescaled by the phases of diag(R) so the result is Haar distributed.
CMatrix haar_unitary(const Eigen::Ref<const CVector>& z_half, int dim);

/// rho = (I + U) G G^dagger (I + U^dagger) / Tr[...] without validation.
CMatrix build_density_matrix(const CVector& z, int dim);
DensityMatrix build_density(const BuresParams& params);

}  // namespace cvtomo

#endif  // CVTOMO_BURES_HPP_
