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

#ifndef CVTOMO_IO_HPP_
#define CVTOMO_IO_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "cvtomo/fock.hpp"
#include "cvtomo/pcn.hpp"

namespace cvtomo {

/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// JSON has no infinities; they are written as the strings "inf"/"-inf".
nlohmann::json double_to_json(double v);
double double_from_json(const nlohmann::json& j);

/// {"dim": D, "re": [row-major], "im": [row-major]}
nlohmann::json density_to_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const nlohmann::json& j);

nlohmann::json params_to_json(const BuresParams& params);
BuresParams params_from_json(const nlohmann::json& j);

nlohmann::json sample_to_json(const PosteriorSample& s);
PosteriorSample sample_from_json(const nlohmann::json& j);

/// JSON-lines: a header line {"type": "header", ...} followed by one
/// {"type": "sample", ...} line per retained sample.
void write_ensemble_jsonl(const std::string& path, const PosteriorEnsemble& ens);
PosteriorEnsemble read_ensemble_jsonl(const std::string& path);

/// CSV "x,p,w", one row per grid point, x-major.
void write_wigner_csv(const std::string& path, const WignerGrid& grid);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);
nlohmann::json read_json_file(const std::string& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace cvtomo

#endif  // CVTOMO_IO_HPP_
