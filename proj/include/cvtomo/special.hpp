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

#ifndef CVTOMO_SPECIAL_HPP_
#define CVTOMO_SPECIAL_HPP_

#include <span>
#include <vector>

namespace cvtomo {

/// A real number stored as sign * exp(log_abs). Zero has sign 0.
struct SignedLog {
    int sign = 0;
    double log_abs = 0.0;

    double value() const;
    static SignedLog from(double v);
};

double log_factorial(int n);

/// log of the binomial coefficient C(n, k); requires 0 <= k <= n.
double log_binomial(int n, int k);

/// Orthonormal Hermite functions h_0(x) .. h_{n_max}(x), where
/// h_n(x) = H_n(x) exp(-x^2/2) / sqrt(2^n n! sqrt(pi)).
/// Evaluated by the normalized three-term recurrence.
void hermite_functions(double x, std::span<double> out);
std::vector<double> hermite_functions(double x, int n_max);

/// Generalized Laguerre polynomial L_n^{(alpha)}(y) for alpha >= 0,
/// returned in sign/log form.
SignedLog laguerre(int n, int alpha, double y);

}  // namespace cvtomo

#endif  // CVTOMO_SPECIAL_HPP_
