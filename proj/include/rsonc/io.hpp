#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "rsonc/adjoint.hpp"
#include "rsonc/conditions.hpp"
#include "rsonc/expansion.hpp"
#include "rsonc/forward.hpp"
#include "rsonc/robust.hpp"

namespace rsonc {

// Reports use ordered JSON so byte-identical re-runs produce byte-identical
// files.
using Json = nlohmann::ordered_json;

/// Provenance block embedded in every report: enough to reproduce the run
/// byte-exactly (toolkit version, seed, paths, grid, mode flags).
Json provenance(const ProblemSpec& spec, const PathBundle& bundle,
                const Json& mode_flags = Json::object());

/// Columnar CSV `scenario,path,step,field,value` (%.17g floats).
void write_panel_csv(std::ostream& os, int scenario, const VectorPanel& panel,
                     const std::string& field, bool header = true);
void write_panel_csv(std::ostream& os, int scenario, const MatrixPanel& panel,
                     const std::string& field, bool header = true);

/// Compact binary dump: magic "RSONCPAN", version, seed, grid, panel shape,
/// then little-endian 64-bit floats in (path, node, component) order.
void write_panel_binary(const std::string& path, std::uint64_t seed,
                        const TimeGrid& grid, const VectorPanel& panel);
void write_panel_binary(const std::string& path, std::uint64_t seed,
                        const TimeGrid& grid, const MatrixPanel& panel);

Json to_json(const CostTable& table);
Json to_json(const SingularReport& rep);
Json to_json(const IntegralSoncReport& rep);
Json to_json(const MonotonicityReport& rep);
Json to_json(const PointwiseSoncReport& rep);
Json to_json(const WindowScanReport& rep);
Json to_json(const ExpansionReport& rep);
Json to_json(const DualityReport& rep);
Json to_json(const RemainderReport& rep);
Json to_json(const ValidationReport& rep);
Json to_json(const ConsistencyReport& rep);

}  // namespace rsonc
