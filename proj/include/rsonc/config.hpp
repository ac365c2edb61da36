#pragma once

#include <string>

#include <json.hpp>

#include "rsonc/model.hpp"

namespace rsonc {

/// Loads a declarative problem description (JSON key-value tree with
/// sections grid, control_box, scenarios[], measures, adjoint, malliavin).
/// Coefficient functions come from the polynomial-in-(x,u) term catalog;
/// adjoint closed forms and nabla_s may additionally use t. Malformed
/// documents raise ConfigError.
ProblemSpec load_problem(const nlohmann::json& doc);
ProblemSpec load_problem_file(const std::string& path);

/// Control descriptions: {"kind":"constant","value":[...]},
/// {"kind":"deterministic","components":[[t-poly terms]...]},
/// {"kind":"spike","base":{...},"value":[...],"tau":..,"alpha":..},
/// {"kind":"blend","a":{...},"b":{...},"eps":..}.
ControlProcess load_control(const nlohmann::json& doc, int m);

/// Shorthand parser for CLI flags: "zero", "ubar", "const:0.5" or
/// "const:0.5,0.25", or a path to a JSON control file.
ControlProcess parse_control_arg(const std::string& arg,
                                 const ProblemSpec& spec);

}  // namespace rsonc
