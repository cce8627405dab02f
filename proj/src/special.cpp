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

#include "cvtomo/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "cvtomo/error.hpp"

namespace cvtomo {

double SignedLog::value() const {
    if (sign == 0) {
        return 0.0;
    }
    return sign * std::exp(log_abs);
}

SignedLog SignedLog::from(double v) {
    if (v == 0.0) {
        return {0, -std::numeric_limits<double>::infinity()};
    }
    return {v > 0 ? 1 : -1, std::log(std::abs(v))};
}

double log_factorial(int n) {
    if (n < 0) {
        throw Error("log_factorial: negative argument");
    }
    return std::lgamma(static_cast<double>(n) + 1.0);
}

double log_binomial(int n, int k) {
    if (k < 0 || k > n) {
        throw Error("log_binomial: k out of range");
    }
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

void hermite_functions(double x, std::span<double> out) {
    if (out.empty()) {
        return;
    }
    out[0] = std::exp(-0.5 * x * x) / std::sqrt(std::sqrt(std::numbers::pi));
    if (out.size() == 1) {
        return;
    }
    out[1] = std::numbers::sqrt2 * x * out[0];
    for (size_t n = 1; n + 1 < out.size(); ++n) {
        double dn = static_cast<double>(n);
        out[n + 1] = std::sqrt(2.0 / (dn + 1.0)) * x * out[n] - std::sqrt(dn / (dn + 1.0)) * out[n - 1];
    }
}

std::vector<double> hermite_functions(double x, int n_max) {
    std::vector<double> out(static_cast<size_t>(n_max + 1));
    hermite_functions(x, out);
    return out;
}

SignedLog laguerre(int n, int alpha, double y) {
    if (n < 0 || alpha < 0) {
        throw Error("laguerre: negative order");
    }
    // Forward recurrence with periodic rescaling; the scale is carried in log form.
    double prev = 1.0;
    double log_scale = 0.0;
    if (n == 0) {
        return {1, 0.0};
    }
    double cur = 1.0 + alpha - y;
    for (int k = 1; k < n; ++k) {
        double next = ((2.0 * k + 1.0 + alpha - y) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
        double mag = std::abs(cur);
        if (mag > 1e150) {
            prev /= mag;
            cur /= mag;
            log_scale += std::log(mag);
        }
    }
    SignedLog r = SignedLog::from(cur);
    r.log_abs += log_scale;
    return r;
}

}  // namespace cvtomo
