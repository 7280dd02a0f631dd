#pragma once

#include <cmath>

#include "tpflow/errors.hpp"

namespace tpflow {

// Characteristic scales relating physical units to the internal
// dimensionless variables. Horizontal lengths scale with L, flow
// thickness with H, time with sqrt(L/g), velocity with sqrt(g*L).
struct ScalingConfig {
    double L = 1.0;       // m
    double H = 1.0;       // m
    double g = 9.80665;   // m/s^2

    double epsilon() const { return H / L; }
    double t_unit() const { return std::sqrt(L / g); }
    double v_unit() const { return std::sqrt(g * L); }

    void validate() const {
        if (!(L > 0.0)) throw ConfigError("scaling: L must be > 0");
        if (!(H > 0.0)) throw ConfigError("scaling: H must be > 0");
        if (!(g > 0.0)) throw ConfigError("scaling: g must be > 0");
    }
};

// Physical parameters of the two-phase mixture model.
struct ModelParams {
    double delta_b = 16.0;    // basal friction angle, degrees
    double C_d = 6.0;         // inter-phase drag coefficient
    double N_R = 268.0;       // viscosity number (Reynolds-like)
    double theta_b = 5.0;     // fluid friction coefficient
    double phi_s0 = 0.5;      // initial solid volume fraction
    double alpha_rho = 0.4;   // fluid/solid density ratio
    double chi = 1.0;         // curvature exponent in epsilon^chi

    double tan_delta_b() const { return std::tan(delta_b * M_PI / 180.0); }

    void validate() const {
        if (!(delta_b >= 0.0 && delta_b < 90.0))
            throw ConfigError("params: delta_b must be in [0, 90) degrees");
        if (!(C_d >= 0.0)) throw ConfigError("params: C_d must be >= 0");
        if (!(N_R > 0.0)) throw ConfigError("params: N_R must be > 0");
        if (!(theta_b >= 0.0)) throw ConfigError("params: theta_b must be >= 0");
        if (!(phi_s0 >= 0.0 && phi_s0 <= 1.0))
            throw ConfigError("params: phi_s0 must be in [0, 1]");
        if (!(alpha_rho > 0.0 && alpha_rho <= 1.0))
            throw ConfigError("params: alpha_rho must be in (0, 1]");
    }
};

} // namespace tpflow
