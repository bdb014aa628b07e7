#pragma once

#include "rpwg/abstract_toolkit.hpp"
#include "rpwg/core.hpp"
#include "rpwg/geometry.hpp"
#include "rpwg/identification.hpp"
#include "rpwg/kronig_penney.hpp"
#include "rpwg/sweep.hpp"

#include <string>

namespace rpwg {

// File plumbing. Both throw validation_error with the path on failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Config parsing. Every parser accepts a JSON object, fills only the fields
// present, and rejects unknown keys inside the sections it owns. Missing
// fields keep the compiled-in defaults, so a config file only needs to state
// what it changes. Schemas are documented in the README.
GeometryParams parse_geometry_config(const std::string& json_text);
MeshControl parse_mesh_config(const std::string& json_text);
SweepConfig parse_sweep_config(const std::string& json_text);
PeriodicSpec parse_periodic_config(const std::string& json_text);

// Report emission (JSON unless named otherwise).
std::string scales_json(const GeometryParams& p, const DerivedScales& s);
std::string mesh_summary_json(const Mesh2D& mesh);
std::string mesh_json(const Mesh2D& mesh);  // full node/element dump
std::string spectrum_json(const Spectrum& sp);
std::string report_json(const ConvergenceReport& rep);
std::string report_csv(const ConvergenceReport& rep);
std::string bands_csv(const std::vector<Band>& bands);
std::string gap_report_json(const GapEvidenceReport& rep);
std::string suite_json(const SuiteSummary& s);
std::string discrepancy_json(const DiscrepancyReport& rep);

/// Coordinate-format (1-based triplet) dump of a sparse matrix.
void write_matrix_market(const SpMat& A, const std::string& path);

}  // namespace rpwg
