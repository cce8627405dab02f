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

#ifndef CVTOMO_DATASET_IO_HPP_
#define CVTOMO_DATASET_IO_HPP_

#include <string>

#include "cvtomo/measurement.hpp"

namespace cvtomo {

/// data.csv -> data.json
std::string sidecar_path(const std::string& csv_path);

/// Writes the CSV ("theta,x" or "theta,x,p") and its JSON sidecar
/// (scheme, record count and metadata).
void write_dataset(const std::string& csv_path, const QuadratureDataset& data);

/// Reads a dataset CSV. The scheme comes from the sidecar when present and
/// must agree with the CSV header; otherwise the header decides.
QuadratureDataset read_dataset(const std::string& csv_path);

std::string dataset_csv(const QuadratureDataset& data);
QuadratureDataset parse_dataset_csv(const std::string& text);

}  // namespace cvtomo

#endif  // CVTOMO_DATASET_IO_HPP_
