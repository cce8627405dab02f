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

#ifndef CVTOMO_CLI_HPP_
#define CVTOMO_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace cvtomo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Defaults for one subcommand ("simulate", "infer", "analyze",
/// "calibrate"). Every key a config file may set appears here; null marks a
/// value with no default.
nlohmann::json default_config(const std::string& command);

/// Layers `file` then `flags` over the defaults. `file` may be a plain config
/// object or any output file carrying its resolved config under "config" or
/// "provenance.config". Unknown keys are configuration errors.
nlohmann::json resolve_config(const std::string& command, const nlohmann::json& file, const nlohmann::json& flags);

/// Each command writes its outputs under config["out"], embedding the
/// resolved config. Errors surface as exceptions (ConfigError for bad
/// configuration).
void cmd_simulate(const nlohmann::json& config, std::ostream& log);
void cmd_infer(const nlohmann::json& config, std::ostream& log);
void cmd_analyze(const nlohmann::json& config, std::ostream& log);
void cmd_calibrate(const nlohmann::json& config, std::ostream& log);

/// Full command line (argv[0] is the program name). Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cvtomo::cli

#endif  // CVTOMO_CLI_HPP_
