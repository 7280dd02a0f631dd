#include "tpflow/terrain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tpflow/errors.hpp"

namespace tpflow {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

// Second-order derivative along one line of samples: central in the
// interior, one-sided three-point at the ends.
double deriv(double m1, double p1, double spacing) {
    return (p1 - m1) / (2.0 * spacing);
}
double deriv_low(double f0, double f1, double f2, double spacing) {
    return (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * spacing);
}
double deriv_high(double f0, double f1, double f2, double spacing) {
    return (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * spacing);
}

double diff_x(const Field& f, int i, int j, double d) {
    int nx = f.nx();
    if (i == 0) return deriv_low(f(0, j), f(1, j), f(2, j), d);
    if (i == nx - 1) return deriv_high(f(nx - 1, j), f(nx - 2, j), f(nx - 3, j), d);
    return deriv(f(i - 1, j), f(i + 1, j), d);
}

double diff_y(const Field& f, int i, int j, double d) {
    int ny = f.ny();
    if (j == 0) return deriv_low(f(i, 0), f(i, 1), f(i, 2), d);
    if (j == ny - 1) return deriv_high(f(i, ny - 1), f(i, ny - 2), f(i, ny - 3), d);
    return deriv(f(i, j - 1), f(i, j + 1), d);
}

} // namespace

ElevationGrid parse_dem_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    ElevationGrid g;

    const char* keys[6] = {"ncols", "nrows", "xllcorner", "yllcorner",
                           "cellsize", "nodata_value"};
    for (int k = 0; k < 6; ++k) {
        std::string line;
        if (!std::getline(in, line))
            throw IoError(origin + ": truncated header, expected key '" + keys[k] + "'");
        std::istringstream ls(line);
        std::string key;
        double value;
        if (!(ls >> key >> value) || lower(key) != keys[k])
            throw IoError(origin + ": malformed header line " + std::to_string(k + 1) +
                          ", expected '" + keys[k] + " <value>', got '" + line + "'");
        g.header_lines.push_back(line);
        switch (k) {
        case 0: g.ncols = static_cast<int>(value); break;
        case 1: g.nrows = static_cast<int>(value); break;
        case 2: g.xll = value; break;
        case 3: g.yll = value; break;
        case 4: g.cellsize = value; break;
        case 5: g.nodata = value; break;
        }
    }

    if (g.ncols < 2 || g.nrows < 2)
        throw IoError(origin + ": grid must be at least 2x2, got " +
                      std::to_string(g.ncols) + "x" + std::to_string(g.nrows));
    if (!(g.cellsize > 0.0))
        throw IoError(origin + ": cellsize must be positive");

    g.z = Field(g.ncols, g.nrows);
    std::size_t expected = g.z.size();
    std::size_t count = 0;
    double v;
    while (in >> v) {
        if (count >= expected)
            throw IoError(origin + ": value count mismatch, more than " +
                          std::to_string(expected) + " values");
        // File rows run north to south; flip to south-to-north storage.
        std::size_t i = count % g.ncols;
        std::size_t j = g.nrows - 1 - count / g.ncols;
        if (v == g.nodata)
            throw IoError(origin + ": NODATA inside domain at column " +
                          std::to_string(i) + ", row " + std::to_string(j));
        g.z(static_cast<int>(i), static_cast<int>(j)) = v;
        ++count;
    }
    if (count != expected)
        throw IoError(origin + ": value count mismatch, expected " +
                      std::to_string(expected) + " values, got " + std::to_string(count));
    return g;
}

ElevationGrid load_dem(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open DEM file '" + path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_dem_text(buf.str(), path);
}

ElevationGrid extend_grid(const ElevationGrid& grid, int ghost) {
    ElevationGrid out;
    out.ncols = grid.ncols + 2 * ghost;
    out.nrows = grid.nrows + 2 * ghost;
    out.cellsize = grid.cellsize;
    out.xll = grid.xll - ghost * grid.cellsize;
    out.yll = grid.yll - ghost * grid.cellsize;
    out.nodata = grid.nodata;
    out.z = Field(out.ncols, out.nrows);

    for (int j = 0; j < grid.nrows; ++j)
        for (int i = 0; i < grid.ncols; ++i)
            out.z(i + ghost, j + ghost) = grid.z(i, j);

    // Linear extrapolation west/east, then north/south (covers corners).
    for (int j = ghost; j < ghost + grid.nrows; ++j) {
        for (int g = 1; g <= ghost; ++g) {
            out.z(ghost - g, j) =
                out.z(ghost, j) + g * (out.z(ghost, j) - out.z(ghost + 1, j));
            int e = ghost + grid.ncols - 1;
            out.z(e + g, j) = out.z(e, j) + g * (out.z(e, j) - out.z(e - 1, j));
        }
    }
    for (int i = 0; i < out.ncols; ++i) {
        for (int g = 1; g <= ghost; ++g) {
            out.z(i, ghost - g) =
                out.z(i, ghost) + g * (out.z(i, ghost) - out.z(i, ghost + 1));
            int n = ghost + grid.nrows - 1;
            out.z(i, n + g) = out.z(i, n) + g * (out.z(i, n) - out.z(i, n - 1));
        }
    }
    return out;
}

std::array<std::array<double, 3>, 3> basal_transform(double b_xi, double b_eta) {
    double norm = std::sqrt(1.0 + (b_xi * b_xi + b_eta * b_eta));
    // Columns: the two tangent vectors (1, 0, b_xi), (0, 1, b_eta)
    // whose horizontal projections are the X/Y unit vectors, and the
    // unit basal normal.
    return {{{1.0, 0.0, -b_xi / norm},
             {0.0, 1.0, -b_eta / norm},
             {b_xi, b_eta, 1.0 / norm}}};
}

TerrainGeometry compute_geometry(const ElevationGrid& grid, const ScalingConfig& scaling) {
    TerrainGeometry geo;
    geo.nx = grid.ncols;
    geo.ny = grid.nrows;
    geo.dxi = grid.cellsize / scaling.L;
    geo.deta = grid.cellsize / scaling.L;

    int nx = geo.nx, ny = geo.ny;
    auto alloc = [&](Field& f) { f = Field(nx, ny); };
    alloc(geo.nX); alloc(geo.nY); alloc(geo.nZ); alloc(geo.jb);
    alloc(geo.a11); alloc(geo.a12); alloc(geo.a21); alloc(geo.a22);
    alloc(geo.dnX_dxi); alloc(geo.dnY_dxi); alloc(geo.dnZ_dxi);
    alloc(geo.dnX_deta); alloc(geo.dnY_deta); alloc(geo.dnZ_deta);

    // Scaled elevation; horizontal and vertical both scale with L so
    // that slopes keep their physical value.
    Field b(nx, ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            b(i, j) = grid.z(i, j) / scaling.L;

    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            double bx = diff_x(b, i, j, geo.dxi);
            double by = diff_y(b, i, j, geo.deta);
            double norm = std::sqrt(1.0 + (bx * bx + by * by));
            geo.nX(i, j) = -bx / norm;
            geo.nY(i, j) = -by / norm;
            geo.nZ(i, j) = 1.0 / norm;

            // det of the basal transform collapses to the slope norm for
            // this parameterization, hence jb * c == 1 identically; the
            // identity is cross-checked against the numeric determinant
            // in the tests.
            auto m = basal_transform(bx, by);
            double det = norm;
            geo.jb(i, j) = det;
            // Upper-left block of the inverse via cofactors.
            geo.a11(i, j) = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
            geo.a12(i, j) = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
            geo.a21(i, j) = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
            geo.a22(i, j) = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
        }
    }

    // Normal-derivative fields from the stored discrete normals, so the
    // curvature terms stay consistent with the discrete geometry.
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            geo.dnX_dxi(i, j) = diff_x(geo.nX, i, j, geo.dxi);
            geo.dnY_dxi(i, j) = diff_x(geo.nY, i, j, geo.dxi);
            geo.dnZ_dxi(i, j) = diff_x(geo.nZ, i, j, geo.dxi);
            geo.dnX_deta(i, j) = diff_y(geo.nX, i, j, geo.deta);
            geo.dnY_deta(i, j) = diff_y(geo.nY, i, j, geo.deta);
            geo.dnZ_deta(i, j) = diff_y(geo.nZ, i, j, geo.deta);
        }
    }
    return geo;
}

} // namespace tpflow
