#pragma once

#include <array>
#include <string>
#include <vector>

#include "tpflow/field.hpp"
#include "tpflow/params.hpp"

namespace tpflow {

// A DEM loaded from an ESRI ASCII grid. Elevation is stored
// south-to-north: z(i, j) with i east and j north, so z(0, 0) is the
// south-west corner even though the file lists the northern row first.
struct ElevationGrid {
    int ncols = 0;
    int nrows = 0;
    double xll = 0.0;       // m, lower-left corner
    double yll = 0.0;       // m
    double cellsize = 0.0;  // m, square cells
    double nodata = -9999.0;
    std::vector<std::string> header_lines; // the six header lines, verbatim
    Field z;                // m

    bool congruent(const ElevationGrid& o) const {
        return ncols == o.ncols && nrows == o.nrows && xll == o.xll &&
               yll == o.yll && cellsize == o.cellsize;
    }
};

// Parses an ESRI ASCII grid. Rejects malformed headers, value-count
// mismatches, interior NODATA, and non-positive cellsize.
ElevationGrid load_dem(const std::string& path);

// Same parser for in-memory text (tests, synthetic scenarios).
ElevationGrid parse_dem_text(const std::string& text, const std::string& origin = "<memory>");

// Extends a grid by `ghost` rings of linearly extrapolated elevation,
// keeping the basal slope continuous across the boundary.
ElevationGrid extend_grid(const ElevationGrid& grid, int ghost);

// Geometry of one cell, handed to the per-cell physics kernels.
struct GeomCell {
    double nX, nY, nZ;            // unit basal normal
    double c;                     // = nZ
    double jb;                    // Jacobian determinant of the basal transform
    double a11, a12, a21, a22;    // upper-left block of the inverse transform
    double dnX_dxi, dnY_dxi, dnZ_dxi;
    double dnX_deta, dnY_deta, dnZ_deta;
};

// Per-cell geometric fields of the terrain-fitted coordinate system,
// immutable after construction.
struct TerrainGeometry {
    int nx = 0;
    int ny = 0;
    double dxi = 0.0;   // scaled grid spacing (cellsize / L)
    double deta = 0.0;
    Field nX, nY, nZ;   // unit basal normal
    Field jb;           // det of the basal transformation matrix
    Field a11, a12, a21, a22;
    Field dnX_dxi, dnY_dxi, dnZ_dxi;
    Field dnX_deta, dnY_deta, dnZ_deta;

    double c(int i, int j) const { return nZ(i, j); }

    GeomCell cell(int i, int j) const {
        return GeomCell{nX(i, j), nY(i, j), nZ(i, j), nZ(i, j), jb(i, j),
                        a11(i, j), a12(i, j), a21(i, j), a22(i, j),
                        dnX_dxi(i, j), dnY_dxi(i, j), dnZ_dxi(i, j),
                        dnX_deta(i, j), dnY_deta(i, j), dnZ_deta(i, j)};
    }
};

// Builds the basal transformation matrix at one cell from the stored
// slope-dependent quantities; exposed so tests can check Omega * inv(Omega).
std::array<std::array<double, 3>, 3> basal_transform(double b_xi, double b_eta);

// Computes normals, Jacobian, inverse-transform block, and the
// normal-derivative fields from central differences (one-sided, second
// order, at grid edges).
TerrainGeometry compute_geometry(const ElevationGrid& grid, const ScalingConfig& scaling);

} // namespace tpflow
