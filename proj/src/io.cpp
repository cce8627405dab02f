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

#include "cvtomo/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "cvtomo/error.hpp"

namespace cvtomo {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) {
        throw Error("format_double: conversion failed");
    }
    return std::string(buf, ptr);
}

nlohmann::json double_to_json(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    if (std::isnan(v)) {
        return "nan";
    }
    return v;
}

double double_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        if (s == "-inf") {
            return -std::numeric_limits<double>::infinity();
        }
        if (s == "nan") {
            return std::numeric_limits<double>::quiet_NaN();
        }
        throw Error("expected a number, got '" + s + "'");
    }
    return j.get<double>();
}

nlohmann::json density_to_json(const DensityMatrix& rho) {
    nlohmann::json re = nlohmann::json::array();
    nlohmann::json im = nlohmann::json::array();
    for (int m = 0; m < rho.dim(); ++m) {
        for (int n = 0; n < rho.dim(); ++n) {
            re.push_back(rho(m, n).real());
            im.push_back(rho(m, n).imag());
        }
    }
    return {{"dim", rho.dim()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

DensityMatrix density_from_json(const nlohmann::json& j) {
    int d = j.at("dim").get<int>();
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    if (d < 1 || re.size() != static_cast<size_t>(d * d) || im.size() != static_cast<size_t>(d * d)) {
        throw Error("density matrix JSON: inconsistent sizes");
    }
    CMatrix m(d, d);
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            size_t idx = static_cast<size_t>(a * d + b);
            m(a, b) = Complex(re[idx].get<double>(), im[idx].get<double>());
        }
    }
    return DensityMatrix(std::move(m));
}

nlohmann::json params_to_json(const BuresParams& params) {
    nlohmann::json re = nlohmann::json::array();
    nlohmann::json im = nlohmann::json::array();
    for (Eigen::Index i = 0; i < params.z().size(); ++i) {
        re.push_back(params.z()(i).real());
        im.push_back(params.z()(i).imag());
    }
    return {{"dim", params.dim()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

BuresParams params_from_json(const nlohmann::json& j) {
    int d = j.at("dim").get<int>();
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    if (re.size() != im.size()) {
        throw Error("parameter JSON: re/im length mismatch");
    }
    CVector z(static_cast<Eigen::Index>(re.size()));
    for (size_t i = 0; i < re.size(); ++i) {
        z(static_cast<Eigen::Index>(i)) = Complex(re[i].get<double>(), im[i].get<double>());
    }
    return BuresParams(std::move(z), d);
}

nlohmann::json sample_to_json(const PosteriorSample& s) {
    nlohmann::json j;
    j["step"] = s.step;
    j["ll"] = double_to_json(s.log_likelihood);
    j["acceptance"] = s.running_acceptance;
    j["params"] = params_to_json(s.params);
    return j;
}

PosteriorSample sample_from_json(const nlohmann::json& j) {
    PosteriorSample s;
    s.params = params_from_json(j.at("params"));
    s.rho = DensityMatrix(build_density_matrix(s.params.z(), s.params.dim()));
    s.log_likelihood = double_from_json(j.at("ll"));
    s.step = j.at("step").get<int64_t>();
    s.running_acceptance = j.at("acceptance").get<double>();
    return s;
}

void write_ensemble_jsonl(const std::string& path, const PosteriorEnsemble& ens) {
    std::ostringstream os;
    nlohmann::json header;
    header["type"] = "header";
    header["format"] = "cvtomo-ensemble";
    header["version"] = 1;
    header["dim"] = ens.dim;
    header["samples"] = ens.samples.size();
    header["acceptance_rate"] = ens.acceptance_rate;
    header["beta"] = ens.beta;
    header["burn_in"] = ens.burn_in;
    header["config"] = ens.config;
    os << header.dump() << '\n';
    for (size_t r = 0; r < ens.samples.size(); ++r) {
        nlohmann::json line = sample_to_json(ens.samples[r]);
        line["type"] = "sample";
        line["index"] = r;
        os << line.dump() << '\n';
    }
    write_text_file(path, os.str());
}

PosteriorEnsemble read_ensemble_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open ensemble file " + path);
    }
    PosteriorEnsemble ens;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        nlohmann::json j = nlohmann::json::parse(line);
        std::string type = j.value("type", "");
        if (type == "header") {
            ens.dim = j.at("dim").get<int>();
            ens.acceptance_rate = j.at("acceptance_rate").get<double>();
            ens.beta = j.at("beta").get<double>();
            ens.burn_in = j.at("burn_in").get<int64_t>();
            ens.config = j.at("config");
            have_header = true;
        } else if (type == "sample") {
            ens.samples.push_back(sample_from_json(j));
        } else {
            throw Error("ensemble file " + path + ": unknown record type");
        }
    }
    if (!have_header) {
        throw Error("ensemble file " + path + ": missing header");
    }
    return ens;
}

void write_wigner_csv(const std::string& path, const WignerGrid& grid) {
    std::ostringstream os;
    os << "x,p,w\n";
    for (int i = 0; i < grid.grid.n_x; ++i) {
        for (int j = 0; j < grid.grid.n_p; ++j) {
            os << format_double(grid.grid.x_at(i)) << ',' << format_double(grid.grid.p_at(j)) << ','
               << format_double(grid.values(i, j)) << '\n';
        }
    }
    write_text_file(path, os.str());
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out << contents;
    if (!out) {
        throw Error("write failed for " + path);
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json_file(const std::string& path) {
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error("invalid JSON in " + path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const nlohmann::json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace cvtomo
