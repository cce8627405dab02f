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

#ifndef CVTOMO_TESTS_TEST_UTIL_HPP_
#define CVTOMO_TESTS_TEST_UTIL_HPP_

#include <filesystem>
#include <random>
#include <string>

#include "cvtomo/bures.hpp"

namespace cvtomo::testing {

inline DensityMatrix random_state(uint64_t seed, int dim) {
    Rng rng(seed);
    return build_density(sample_prior(rng, dim));
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("cvtomo_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace cvtomo::testing

#endif  // CVTOMO_TESTS_TEST_UTIL_HPP_
