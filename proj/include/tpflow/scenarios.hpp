#pragma once

#include <string>

#include "tpflow/hydrograph.hpp"
#include "tpflow/terrain.hpp"

// Synthetic inputs for validation scenarios and benchmarking.
namespace tpflow::scenarios {

// Flat horizontal terrain at a constant elevation.
ElevationGrid flat_dem(int ncols, int nrows, double cellsize, double z0 = 0.0);

// Plane descending in -X at the given slope angle (degrees).
ElevationGrid incline_dem(int ncols, int nrows, double cellsize, double slope_deg);

// Closed paraboloid basin z = depth * (r/R)^2 centered on the domain;
// transpose-symmetric for square grids.
ElevationGrid bowl_dem(int ncols, int nrows, double cellsize, double depth);

// Straight channel descending in -X with parabolic side walls.
ElevationGrid channel_dem(int ncols, int nrows, double cellsize, double slope_deg,
                          double wall_height);

// Gaussian release h = amplitude * exp(-r^2 / width^2) centered at
// (cx, cy) in cell units, plus an optional uniform base depth.
Field gaussian_release(int ncols, int nrows, double amplitude, double width,
                       double cx, double cy, double base = 0.0);

// Triangular inflow pulse: zero at t0, peak at (t0+t1)/2, zero at t1.
Hydrograph triangular_hydrograph(const ElevationGrid& dem, char side, int first_cell,
                                 int n_cells, double t0, double t1, double peak_h,
                                 double phi_s, double peak_speed);

} // namespace tpflow::scenarios
