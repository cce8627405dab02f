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

#include "cvtomo/dataset_io.hpp"

#include <charconv>
#include <filesystem>
#include <sstream>

#include "cvtomo/error.hpp"
#include "cvtomo/io.hpp"

namespace cvtomo {

namespace {

double parse_field(std::string_view s, size_t line_no) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) {
        s.remove_suffix(1);
    }
    while (!s.empty() && s.front() == ' ') {
        s.remove_prefix(1);
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error("dataset CSV line " + std::to_string(line_no) + ": cannot parse '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

std::string sidecar_path(const std::string& csv_path) {
    std::filesystem::path p(csv_path);
    p.replace_extension(".json");
    return p.string();
}

std::string dataset_csv(const QuadratureDataset& data) {
    data.validate();
    bool het = data.scheme == Scheme::Heterodyne;
    std::ostringstream os;
    os << (het ? "theta,x,p\n" : "theta,x\n");
    for (const auto& r : data.records) {
        os << format_double(r.theta) << ',' << format_double(r.x);
        if (het) {
            os << ',' << format_double(*r.p);
        }
        os << '\n';
    }
    return os.str();
}

QuadratureDataset parse_dataset_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw Error("dataset CSV: missing header");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    QuadratureDataset data;
    size_t fields;
    if (line == "theta,x") {
        data.scheme = Scheme::Homodyne;
        fields = 2;
    } else if (line == "theta,x,p") {
        data.scheme = Scheme::Heterodyne;
        fields = 3;
    } else {
        throw Error("dataset CSV: header must be 'theta,x' or 'theta,x,p'");
    }
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        std::vector<std::string_view> parts;
        std::string_view sv(line);
        size_t start = 0;
        while (true) {
            size_t comma = sv.find(',', start);
            parts.push_back(sv.substr(start, comma == std::string_view::npos ? sv.npos : comma - start));
            if (comma == std::string_view::npos) {
                break;
            }
            start = comma + 1;
        }
        if (parts.size() != fields) {
            throw Error("dataset CSV line " + std::to_string(line_no) + ": expected " + std::to_string(fields) +
                        " fields");
        }
        QuadratureRecord r;
        r.theta = parse_field(parts[0], line_no);
        r.x = parse_field(parts[1], line_no);
        if (fields == 3) {
            r.p = parse_field(parts[2], line_no);
        }
        data.records.push_back(r);
    }
    data.validate();
    return data;
}

void write_dataset(const std::string& csv_path, const QuadratureDataset& data) {
    write_text_file(csv_path, dataset_csv(data));
    nlohmann::json side;
    side["format"] = "cvtomo-dataset";
    side["version"] = 1;
    side["scheme"] = to_string(data.scheme);
    side["K"] = data.size();
    side["csv"] = std::filesystem::path(csv_path).filename().string();
    side["source"] = data.metadata.source;
    side["lo_power_mw"] = data.metadata.lo_power_mw ? nlohmann::json(*data.metadata.lo_power_mw) : nlohmann::json();
    side["notes"] = data.metadata.notes;
    side["provenance"] = data.metadata.provenance;
    write_json_file(sidecar_path(csv_path), side);
}

QuadratureDataset read_dataset(const std::string& csv_path) {
    QuadratureDataset data = parse_dataset_csv(read_text_file(csv_path));
    std::string side_path = sidecar_path(csv_path);
    if (std::filesystem::exists(side_path)) {
        nlohmann::json side = read_json_file(side_path);
        Scheme declared = parse_scheme(side.at("scheme").get<std::string>());
        if (declared != data.scheme) {
            throw Error("dataset " + csv_path + ": sidecar scheme disagrees with CSV header");
        }
        if (side.contains("K") && side.at("K").get<size_t>() != data.size()) {
            throw Error("dataset " + csv_path + ": sidecar record count disagrees with CSV");
        }
        data.metadata.source = side.value("source", "");
        data.metadata.notes = side.value("notes", "");
        if (side.contains("lo_power_mw") && side.at("lo_power_mw").is_number()) {
            data.metadata.lo_power_mw = side.at("lo_power_mw").get<double>();
        }
        if (side.contains("provenance")) {
            data.metadata.provenance = side.at("provenance");
        }
    }
    return data;
}

}  // namespace cvtomo
