#pragma once

#include <cmath>
#include <string>

#include "tpflow/field.hpp"
#include "tpflow/params.hpp"

namespace tpflow {

// Full run configuration, normally read from a par_list file.
struct SimConfig {
    enum class Mode { FiniteRelease, InflowHydrograph };

    ModelParams params;
    ScalingConfig scaling;
    Mode mode = Mode::FiniteRelease;
    double t_end = 0.0;    // s
    double dt_out = 0.0;   // s
    double cfl = 0.1;
    double h_dry = 1e-10;  // scaled dry threshold
    double eps_h = 1e-6;   // scaled desingularization thickness

    std::string dem_path;
    std::string init_path;        // Mode-I thickness grid
    std::string init_vx_path;     // optional Mode-I velocity grids
    std::string init_vy_path;
    std::string hydrograph_path;  // Mode-II
    std::string out_dir = ".";

    void validate() const {
        params.validate();
        scaling.validate();
        if (!(cfl > 0.0 && cfl <= 0.125))
            throw ConfigError("config: cfl must be in (0, 0.125], got " + std::to_string(cfl));
        if (!(t_end > 0.0)) throw ConfigError("config: t_end must be > 0");
        if (!(dt_out > 0.0)) throw ConfigError("config: dt_out must be > 0");
        if (!(h_dry > 0.0)) throw ConfigError("config: h_dry must be > 0");
        if (!(eps_h > 0.0)) throw ConfigError("config: eps_h must be > 0");
        if (dem_path.empty()) throw ConfigError("config: missing key 'dem'");
        if (mode == Mode::FiniteRelease && init_path.empty())
            throw ConfigError("config: missing key 'init' (required in release mode)");
        if (mode == Mode::InflowHydrograph && hydrograph_path.empty())
            throw ConfigError("config: missing key 'hydrograph' (required in inflow mode)");
    }
};

// Output fields at one output time, interior grid, physical units.
struct SimSnapshot {
    double t = 0.0;      // s
    long step_index = 0;
    Field h_total;       // m, normal to bed
    Field phi_s;
    Field vX_s, vY_s;    // m/s
    Field vX_f, vY_f;
};

// Mass bookkeeping for one phase, in scaled mass units
// (sum of jb*h*dxi*deta over interior cells).
struct MassAudit {
    double initial = 0.0;
    double final_mass = 0.0;
    double injected = 0.0;  // through boundary faces, inward
    double outflow = 0.0;   // through boundary faces, outward
    double clipped = 0.0;   // negative thickness clipped to zero

    // Residual of the balance final = initial + injected - outflow + clipped.
    double drift() const {
        return final_mass - (initial + injected - outflow + clipped);
    }
    double reference() const {
        double r = std::abs(initial) + injected;
        return r > 0.0 ? r : 1.0;
    }
};

struct RunReport {
    long steps = 0;
    double wall_seconds = 0.0;
    MassAudit solid;
    MassAudit fluid;
};

} // namespace tpflow
