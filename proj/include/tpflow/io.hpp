#pragma once

#include <string>
#include <vector>

#include "tpflow/config.hpp"
#include "tpflow/hydrograph.hpp"
#include "tpflow/terrain.hpp"

namespace tpflow::io {

// Parses the par_list run-configuration file: UTF-8 `key = value`
// lines, `#` comments. Missing, duplicate, unknown, and out-of-range
// keys are errors.
SimConfig parse_par_list(const std::string& path);
SimConfig parse_par_list_text(const std::string& text, const std::string& origin = "<memory>");

// Reads a Mode-I grid congruent with the DEM (ESRI ASCII, meters).
// Thickness grids reject negative values; velocity grids do not.
Field load_initial_thickness(const std::string& path, const ElevationGrid& dem,
                             bool allow_negative = false);

// Reads the Mode-II inflow file: `cell i j side` lines, then a sample
// table headed `t h phi_s speed`.
Hydrograph load_hydrograph(const std::string& path, const ElevationGrid& dem);
Hydrograph parse_hydrograph_text(const std::string& text, const ElevationGrid& dem,
                                 const std::string& origin = "<memory>");

// Compact time tag used in output filenames (181.82 -> "181.82").
std::string time_tag(double t_seconds);

// Writes the six output fields as ESRI ASCII grids
// (h, phis, vxs, vys, vxf, vyf)_t<time>.asc with the DEM header copied
// verbatim; returns the paths written.
std::vector<std::string> write_snapshot(const SimSnapshot& snap, const ElevationGrid& dem,
                                        const std::string& out_dir);

// Writes fields_t<time>.csv with one row per cell center.
std::string write_contour_csv(const SimSnapshot& snap, const ElevationGrid& dem,
                              const std::string& out_dir);

} // namespace tpflow::io
