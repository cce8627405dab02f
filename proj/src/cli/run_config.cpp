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

#include <charconv>
#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "cvtomo/cli.hpp"
#include "cvtomo/error.hpp"
#include "cvtomo/io.hpp"

namespace cvtomo::cli {

namespace {

using nlohmann::json;

enum class Kind { Int, Float, Str, Bool, StrList, Beta };

struct FlagSpec {
    const char* flag;
    const char* key;
    Kind kind;
    const char* help;
};

const std::map<std::string, std::vector<FlagSpec>>& flag_table() {
    static const std::map<std::string, std::vector<FlagSpec>> table = {
        {"simulate",
         {
             {"--state", "state", Kind::Str, "vacuum | coherent:re[,im] | thermal:mu | squeezed:r | fock:n | cat:re[,im],even|odd"},
             {"--nc", "nc", Kind::Int, "Fock cutoff n_c"},
             {"--scheme", "scheme", Kind::Str, "hom or het"},
             {"--K", "K", Kind::Int, "number of records"},
             {"--eta", "eta", Kind::Float, "detection efficiency applied before measurement"},
             {"--seed", "seed", Kind::Int, "random seed"},
             {"--grid-resolution", "grid_resolution", Kind::Float, "outcome grid cell width"},
             {"--grid-halfwidth", "grid_halfwidth", Kind::Float, "outcome grid half extent"},
             {"--out", "out", Kind::Str, "output directory"},
         }},
        {"infer",
         {
             {"--data", "data", Kind::Str, "dataset CSV"},
             {"--scheme", "scheme", Kind::Str, "expected scheme (hom or het)"},
             {"--eta", "eta", Kind::Float, "detection efficiency in the likelihood"},
             {"--nc", "nc", Kind::Int, "Fock cutoff n_c"},
             {"--K", "K", Kind::Int, "use the first K records"},
             {"--R", "R", Kind::Int, "retained samples per chain"},
             {"--T", "T", Kind::Int, "thinning"},
             {"--beta", "beta", Kind::Beta, "pCN step: FLOAT or 'adaptive'"},
             {"--burn-in", "burn_in", Kind::Int, "burn-in steps (default R*T/8)"},
             {"--seed", "seed", Kind::Int, "random seed"},
             {"--chains", "chains", Kind::Int, "independent chains, pooled by index"},
             {"--truth", "truth", Kind::Str, "state spec for the fidelity diagnostics column"},
             {"--checkpoint", "checkpoint", Kind::Bool, "write periodic checkpoints"},
             {"--checkpoint-every", "checkpoint_every", Kind::Int, "steps between checkpoints"},
             {"--resume", "resume", Kind::Bool, "continue from existing checkpoints"},
             {"--stop-after", "stop_after", Kind::Int, "stop after this many steps (checkpoint testing)"},
             {"--out", "out", Kind::Str, "output directory"},
         }},
        {"analyze",
         {
             {"--ensemble", "ensemble", Kind::Str, "ensemble JSONL"},
             {"--rho", "rho", Kind::Str, "density matrix JSON"},
             {"--data", "data", Kind::Str, "heterodyne dataset CSV for the coherent/thermal estimators"},
             {"--truth", "truth", Kind::Str, "reference state spec"},
             {"--nc", "nc", Kind::Int, "cutoff for --truth (defaults to the ensemble's)"},
             {"--wigner", "wigner", Kind::Bool, "write a Wigner grid of the Bayesian mean"},
             {"--wigner-extent", "wigner_extent", Kind::Float, "grid half extent in x and p"},
             {"--wigner-points", "wigner_points", Kind::Int, "grid points per axis"},
             {"--fidelity-curve", "fidelity_curve", Kind::StrList, "ensembles at several K"},
             {"--cat", "cat", Kind::Str, "nearest cat report: even or odd"},
             {"--cat-alpha-max", "cat_alpha_max", Kind::Float, "cat search radius"},
             {"--out", "out", Kind::Str, "output directory"},
         }},
        {"calibrate",
         {
             {"--vacuum", "vacuum", Kind::Str, "vacuum (signal blocked) trace header"},
             {"--electronics", "electronics", Kind::Str, "electronics-noise (LO off) trace header"},
             {"--trace", "trace", Kind::Str, "signal trace header"},
             {"--lo-series", "lo_series", Kind::StrList, "vacuum trace headers at several LO powers"},
             {"--scheme", "scheme", Kind::Str, "output scheme (hom keeps channel 1)"},
             {"--ramp-hz", "ramp_hz", Kind::Float, "phase ramp frequency"},
             {"--block-spacing", "block_spacing", Kind::Int, "samples between block starts"},
             {"--block-group", "block_group", Kind::Int, "samples averaged per block"},
             {"--guard-blocks", "guard_blocks", Kind::Int, "blocks dropped at each record end"},
             {"--out", "out", Kind::Str, "output directory"},
         }},
    };
    return table;
}

json convert(const FlagSpec& spec, const std::string& text) {
    auto bad = [&]() { return ConfigError(std::string(spec.flag) + ": cannot parse '" + text + "'"); };
    switch (spec.kind) {
        case Kind::Int: {
            int64_t v = 0;
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc() || ptr != text.data() + text.size()) {
                throw bad();
            }
            return v;
        }
        case Kind::Float:
        case Kind::Beta: {
            if (spec.kind == Kind::Beta && text == "adaptive") {
                return text;
            }
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc() || ptr != text.data() + text.size()) {
                throw bad();
            }
            return v;
        }
        default:
            return text;
    }
}

bool compatible(const json& def, const json& v, const std::string& key) {
    if (v.is_null() || def.is_null()) {
        return true;
    }
    if (key == "beta") {
        return v.is_number() || v == "adaptive";
    }
    if (def.is_number()) {
        return v.is_number() && (!def.is_number_integer() || v.is_number_integer());
    }
    return (def.is_string() && v.is_string()) || (def.is_boolean() && v.is_boolean()) ||
           (def.is_array() && v.is_array());
}

void layer(json& cfg, const std::string& command, const json& source, const char* origin) {
    if (!source.is_object()) {
        throw ConfigError(std::string(origin) + ": expected a JSON object");
    }
    for (auto it = source.begin(); it != source.end(); ++it) {
        if (it.key() == "command") {
            if (it.value() != command) {
                throw ConfigError(std::string(origin) + ": config is for command " + it.value().dump());
            }
            continue;
        }
        if (!cfg.contains(it.key())) {
            throw ConfigError(std::string(origin) + ": unknown key '" + it.key() + "' for " + command);
        }
        if (!compatible(cfg.at(it.key()), it.value(), it.key())) {
            throw ConfigError(std::string(origin) + ": wrong type for '" + it.key() + "'");
        }
        cfg[it.key()] = it.value();
    }
}

}  // namespace

json default_config(const std::string& command) {
    json c;
    if (command == "simulate") {
        c = {{"state", nullptr},
             {"nc", 10},
             {"scheme", "het"},
             {"K", 8000},
             {"eta", 1.0},
             {"seed", 1},
             {"grid_resolution", 0.07},
             {"grid_halfwidth", nullptr},
             {"out", nullptr}};
    } else if (command == "infer") {
        c = {{"data", nullptr},   {"scheme", nullptr},      {"eta", 1.0},      {"nc", 10},
             {"K", nullptr},      {"R", 1024},              {"T", 1},          {"beta", "adaptive"},
             {"burn_in", nullptr}, {"seed", 1},             {"chains", 1},     {"truth", nullptr},
             {"checkpoint", true}, {"checkpoint_every", 65536}, {"resume", false}, {"stop_after", nullptr},
             {"out", nullptr}};
    } else if (command == "analyze") {
        c = {{"ensemble", nullptr},
             {"rho", nullptr},
             {"data", nullptr},
             {"truth", nullptr},
             {"nc", nullptr},
             {"wigner", false},
             {"wigner_extent", 5.0},
             {"wigner_points", 101},
             {"fidelity_curve", json::array()},
             {"cat", nullptr},
             {"cat_alpha_max", 4.0},
             {"out", nullptr}};
    } else if (command == "calibrate") {
        c = {{"vacuum", nullptr},     {"electronics", nullptr}, {"trace", nullptr},    {"lo_series", json::array()},
             {"scheme", "het"},       {"ramp_hz", 5000.0},      {"block_spacing", 250}, {"block_group", 4},
             {"guard_blocks", 1},     {"out", nullptr}};
    } else {
        throw ConfigError("unknown command '" + command + "'");
    }
    c["command"] = command;
    return c;
}

json resolve_config(const std::string& command, const json& file, const json& flags) {
    json cfg = default_config(command);
    if (!file.is_null()) {
        const json* src = &file;
        if (file.is_object() && file.contains("config") && file.at("config").is_object()) {
            src = &file.at("config");
        } else if (file.is_object() && file.contains("provenance") && file.at("provenance").is_object() &&
                   file.at("provenance").contains("config")) {
            src = &file.at("provenance").at("config");
        }
        layer(cfg, command, *src, "config file");
    }
    if (!flags.is_null()) {
        layer(cfg, command, flags, "command line");
    }
    return cfg;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bayesian continuous-variable state tomography"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    struct Bound {
        const FlagSpec* spec;
        CLI::Option* opt;
        std::string text;
        std::vector<std::string> list;
        bool flag = false;
    };
    std::map<std::string, std::vector<Bound>> bound;
    std::map<std::string, std::string> config_paths;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, specs] : flag_table()) {
        static const std::map<std::string, std::string> kAbout = {
            {"simulate", "draw a synthetic quadrature dataset from a known state"},
            {"infer", "sample the Bayesian posterior over density matrices"},
            {"analyze", "Wigner grids, fidelity curves, nearest-cat fits, raw-data estimators"},
            {"calibrate", "shot-noise calibration and raw-trace ingestion"},
        };
        CLI::App* sub = app.add_subcommand(name, kAbout.at(name));
        subs[name] = sub;
        sub->add_option("--config", config_paths[name], "JSON config file (flags override it)");
        auto& slots = bound[name];
        slots.reserve(specs.size());
        for (const auto& spec : specs) {
            slots.push_back(Bound{&spec, nullptr, {}, {}, false});
        }
        for (auto& b : slots) {
            if (b.spec->kind == Kind::Bool) {
                b.opt = sub->add_flag(std::string(b.spec->flag) + ",!" + std::string(b.spec->flag).replace(0, 2, "--no-"),
                                      b.flag, b.spec->help);
            } else if (b.spec->kind == Kind::StrList) {
                b.opt = sub->add_option(b.spec->flag, b.list, b.spec->help);
            } else {
                b.opt = sub->add_option(b.spec->flag, b.text, b.spec->help);
            }
        }
    }

    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    std::string command;
    for (const auto& [name, sub] : subs) {
        if (sub->parsed()) {
            command = name;
        }
    }
    try {
        json flags = json::object();
        for (auto& b : bound[command]) {
            if (b.opt->count() == 0) {
                continue;
            }
            if (b.spec->kind == Kind::Bool) {
                flags[b.spec->key] = b.flag;
            } else if (b.spec->kind == Kind::StrList) {
                flags[b.spec->key] = b.list;
            } else {
                flags[b.spec->key] = convert(*b.spec, b.text);
            }
        }
        json file;
        if (!config_paths[command].empty()) {
            try {
                file = read_json_file(config_paths[command]);
            } catch (const Error& e) {
                throw ConfigError(e.what());
            }
        }
        json cfg = resolve_config(command, file, flags);
        if (command == "simulate") {
            cmd_simulate(cfg, out);
        } else if (command == "infer") {
            cmd_infer(cfg, out);
        } else if (command == "analyze") {
            cmd_analyze(cfg, out);
        } else {
            cmd_calibrate(cfg, out);
        }
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace cvtomo::cli
