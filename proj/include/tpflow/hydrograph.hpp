#pragma once

#include <string>
#include <vector>

#include "tpflow/errors.hpp"

namespace tpflow {

// Boundary inflow prescription for hydrograph mode: a set of boundary
// cells and a time series of thickness, solid fraction, and
// inward-normal speed (physical units).
struct Hydrograph {
    struct Cell {
        int i = 0;       // column index in the interior grid
        int j = 0;       // row index (south-to-north)
        char side = 'E'; // N, S, E, or W
    };
    struct Sample {
        double t = 0.0;      // s
        double h = 0.0;      // m, normal to bed
        double phi_s = 0.0;  // solid fraction
        double speed = 0.0;  // m/s, directed into the domain
    };

    std::vector<Cell> cells;
    std::vector<Sample> samples;

    // Linear interpolation in time; clamped to the first sample before
    // it and zero inflow after the last one.
    Sample at(double t) const {
        if (samples.empty() || t > samples.back().t) return Sample{t, 0.0, 0.0, 0.0};
        if (t <= samples.front().t) return samples.front();
        for (std::size_t k = 1; k < samples.size(); ++k) {
            if (t <= samples[k].t) {
                const Sample& a = samples[k - 1];
                const Sample& b = samples[k];
                double w = (t - a.t) / (b.t - a.t);
                return Sample{t, a.h + w * (b.h - a.h),
                              a.phi_s + w * (b.phi_s - a.phi_s),
                              a.speed + w * (b.speed - a.speed)};
            }
        }
        return samples.back();
    }

    // Checks monotone times, value ranges, and that every cell sits on
    // the boundary ring of its declared side.
    void validate(int ncols, int nrows) const {
        for (std::size_t k = 1; k < samples.size(); ++k)
            if (!(samples[k].t > samples[k - 1].t))
                throw ConfigError("hydrograph: sample times must be strictly increasing (t=" +
                                  std::to_string(samples[k].t) + " after t=" +
                                  std::to_string(samples[k - 1].t) + ")");
        for (const Sample& s : samples) {
            if (s.h < 0.0) throw ConfigError("hydrograph: negative thickness");
            if (s.speed < 0.0) throw ConfigError("hydrograph: negative speed");
            if (s.phi_s < 0.0 || s.phi_s > 1.0)
                throw ConfigError("hydrograph: phi_s out of [0, 1]");
        }
        for (const Cell& c : cells) {
            bool ok = false;
            switch (c.side) {
            case 'N': ok = c.j == nrows - 1; break;
            case 'S': ok = c.j == 0; break;
            case 'E': ok = c.i == ncols - 1; break;
            case 'W': ok = c.i == 0; break;
            default:
                throw ConfigError(std::string("hydrograph: unknown side '") + c.side + "'");
            }
            if (c.i < 0 || c.i >= ncols || c.j < 0 || c.j >= nrows) ok = false;
            if (!ok)
                throw ConfigError("hydrograph: cell (" + std::to_string(c.i) + ", " +
                                  std::to_string(c.j) + ") is not on the boundary ring of side " +
                                  std::string(1, c.side));
        }
    }
};

} // namespace tpflow
