#pragma once

#include <functional>
#include <optional>

#include "tpflow/config.hpp"
#include "tpflow/hydrograph.hpp"
#include "tpflow/parallel.hpp"
#include "tpflow/state.hpp"
#include "tpflow/terrain.hpp"

namespace tpflow {

inline constexpr int kGhost = 3;

// Minmod limiter: sign-matched minimum magnitude, zero on sign change.
inline double limited_slope(double a, double b) {
    if (a > 0.0 && b > 0.0) return std::min(a, b);
    if (a < 0.0 && b < 0.0) return std::max(a, b);
    return 0.0;
}

// Time integrator for the coupled six-equation system: semi-discrete
// central fluxes with Minmod reconstruction, two-step modified Euler,
// CFL-controlled steps, open/inflow boundaries, wet-dry regularization.
class Simulator {
public:
    Simulator(SimConfig config, const ElevationGrid& dem, Backend& backend);

    // Mode-I: thickness in meters on the interior grid, split by phi_s0.
    void set_initial_thickness(const Field& h_meters);
    // Optional initial velocity grids (m/s), applied to both phases.
    void set_initial_velocity(const Field& vx, const Field& vy);
    // Mode-II inflow prescription (physical units).
    void set_hydrograph(Hydrograph hydrograph);

    // Runs the time loop, invoking `sink` for every output snapshot
    // (multiples of dt_out plus t=0 and t_end).
    RunReport run(const std::function<void(const SimSnapshot&)>& sink);

    // Pieces of the step, exposed for tests and diagnostics. Time
    // arguments are scaled.
    void apply_boundaries(MixtureState& s, double t_scaled);
    double compute_dt(double t_scaled, double t_next_scaled);
    void advance_step(double dt_scaled, double t_scaled);
    void regularize(MixtureState& s);
    SimSnapshot snapshot(double t_scaled, long step_index) const;

    MixtureState& state() { return u_; }
    const MixtureState& state() const { return u_; }
    const TerrainGeometry& geometry() const { return geo_; }
    const SimConfig& config() const { return cfg_; }
    MassAudit& solid_audit() { return solid_audit_; }
    MassAudit& fluid_audit() { return fluid_audit_; }

    // Scaled interior mass (sum of w * dxi * deta) per phase.
    double interior_mass_solid() const { return interior_mass(u_.ws); }
    double interior_mass_fluid() const { return interior_mass(u_.wf); }

    // Diagnostic scalar-advection mode used by the non-oscillation
    // property test: sources and pressure fluxes off.
    void set_advection_only(bool on) { advection_only_ = on; }

private:
    struct FaceFluxes {
        Field f[6];  // flux at face (i+1/2, j) stored at index i
        Field g[6];  // flux at face (i, j+1/2) stored at index j
    };

    void residual(const MixtureState& s, double flux_weight_dt);
    void compute_cell_fields(const MixtureState& s);
    void compute_face_fluxes(const MixtureState& s);
    void accumulate_boundary_fluxes(double weight_dt);
    void apply_coulomb_cap(MixtureState& s, double dt);
    double interior_mass(const Field& w) const;
    void check_finite(const MixtureState& s, const char* where) const;

    SimConfig cfg_;
    ElevationGrid dem_;       // interior DEM (for snapshot georeference)
    TerrainGeometry geo_;     // on the padded grid
    Backend& backend_;

    int nx_ = 0, ny_ = 0;     // padded dims
    double dxi_ = 0.0, deta_ = 0.0;
    double eps_ = 1.0;

    MixtureState u_, u0_;
    Field rhs_[6];
    FaceFluxes flux_;
    Field vxs_, vys_, vxf_, vyf_;   // desingularized cell velocities
    Field pjb_;                     // jb * h * p_bar_f
    Field bvx_, bvy_, bvxy_;        // viscous brackets
    Field lambda_;                  // per-cell wave-speed bound

    std::optional<Hydrograph> hydro_;
    MassAudit solid_audit_, fluid_audit_;
    bool advection_only_ = false;
};

// Loads all inputs named by the config and runs the simulation.
RunReport run_simulation(const SimConfig& config, Backend& backend,
                         const std::function<void(const SimSnapshot&)>& sink);

} // namespace tpflow
