#pragma once

#include <algorithm>
#include <cmath>

#include "tpflow/params.hpp"
#include "tpflow/terrain.hpp"

// Per-cell algebra of the depth-averaged two-phase model: pressures,
// fluxes, sources, curvature accelerations, and wave-speed bounds.
// Everything here is a pure function of its arguments.
namespace tpflow::physics {

inline constexpr double kVelocityRegularization = 1e-8;

// Pressure and curvature quantities entering fluxes and sources.
struct PhaseTerms {
    double N_bar_s;  // depth-averaged solid pressure
    double p_bar_f;  // mean fluid pressure
    double p_b_s;    // solid basal pressure (clamped >= 0)
    double p_b_f;    // fluid basal pressure (clamped >= 0)
    double kappa_s;  // solid centripetal acceleration
    double kappa_f;  // fluid centripetal acceleration
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// Velocity recovered from momentum with the wet/dry desingularization
// v = (q / jb) * 2 h / (h^2 + max(h, eps_h)^2).
inline double desingularized_velocity(double q, double jb, double h_phase, double eps_h) {
    double hm = std::max(h_phase, eps_h);
    double denom = h_phase * h_phase + hm * hm;
    return (q / jb) * (2.0 * h_phase / denom);
}

// Vertical velocity component from the tangency condition.
inline double tangent_vz(const GeomCell& g, double vx, double vy) {
    return -(g.nX * vx + g.nY * vy) / g.nZ;
}

// Centripetal acceleration kappa for one phase. With the
// projection-aligned axes, v_xi = v_X and v_eta = v_Y. Positive kappa
// reduces the basal pressure (convex terrain); a valley gives kappa < 0.
inline double curvature_accel(const GeomCell& g, double vx, double vy) {
    double vz = tangent_vz(g, vx, vy);
    double along_xi = (vx * g.dnX_dxi + vy * g.dnY_dxi) + vz * g.dnZ_dxi;
    double along_eta = (vx * g.dnX_deta + vy * g.dnY_deta) + vz * g.dnZ_deta;
    return along_xi * vx + along_eta * vy;
}

// The four hydrostatic pressure terms. Basal pressures are clamped at
// zero from below so convex curvature cannot reverse friction.
inline PhaseTerms hydrostatic_terms(double hs, double hf, const GeomCell& g,
                                    const ModelParams& p, double eps,
                                    double kappa_s, double kappa_f) {
    double h = hs + hf;
    double eps_chi = std::pow(eps, p.chi);
    PhaseTerms t;
    t.kappa_s = kappa_s;
    t.kappa_f = kappa_f;
    t.N_bar_s = g.c * (1.0 - p.alpha_rho) * hs / 2.0;
    t.p_bar_f = g.c * h / 2.0;
    t.p_b_s = std::max(0.0, hs * (g.c * (1.0 - p.alpha_rho) - eps_chi * kappa_s));
    t.p_b_f = std::max(0.0, hf * (g.c - eps_chi * kappa_f));
    return t;
}

// Directional flux of one phase at a point, written in (normal,
// transverse) components so the xi and eta variants share one
// expression: in xi the normal component is X (rows a11, a12 of the
// inverse transform), in eta it is Y (rows a22, a21).
//
//   f_n = q_n * v_n + eps * jb * h * a_nn * pressure
//   f_t = q_t * v_n + eps * jb * h * a_nt * pressure
struct DirectionalFlux {
    double mass;    // jb * h_phase * v_n
    double mom_n;
    double mom_t;
};

inline DirectionalFlux directional_flux(double w, double q_n, double q_t,
                                        double v_n, double h_total,
                                        double jb, double a_nn, double a_nt,
                                        double pressure, double eps) {
    DirectionalFlux f;
    f.mass = w * v_n;
    double pn = eps * jb * h_total * a_nn * pressure;
    double pt = eps * jb * h_total * a_nt * pressure;
    f.mom_n = q_n * v_n + pn;
    f.mom_t = q_t * v_n + pt;
    return f;
}

// Gravity-driving source along the basal normal projection.
inline Vec2 gravity_source(const GeomCell& g, double p_b) {
    return {g.jb * p_b * g.nX, g.jb * p_b * g.nY};
}

// Coulomb basal friction for the solid phase, direction regularized
// near stagnation. The per-step magnitude cap lives in the solver.
inline Vec2 coulomb_friction(const GeomCell& g, const ModelParams& p,
                             double p_b_s, double vsx, double vsy) {
    double speed = std::sqrt(vsx * vsx + vsy * vsy);
    double denom = std::max(speed, kVelocityRegularization);
    double mag = g.jb * p_b_s * p.tan_delta_b();
    return {-mag * vsx / denom, -mag * vsy / denom};
}

// Linear basal friction of the fluid phase.
inline Vec2 fluid_friction(const GeomCell& g, const ModelParams& p, double eps,
                           double hf, double vfx, double vfy) {
    double coeff = g.jb * hf * p.theta_b / (eps * p.N_R);
    return {-coeff * vfx, -coeff * vfy};
}

// Inter-phase drag, factored through one shared expression so the
// antisymmetry s_v^s + alpha_rho * s_v^f == 0 holds bitwise.
inline void drag_sources(const GeomCell& g, const ModelParams& p,
                         double hs, double hf, double h,
                         double vsx, double vsy, double vfx, double vfy,
                         Vec2& s_v_s, Vec2& s_v_f) {
    if (h <= 0.0) {
        s_v_s = {}; s_v_f = {};
        return;
    }
    double common = g.jb * p.C_d * (hs * hf / h);
    double cx = common * (vfx - vsx);
    double cy = common * (vfy - vsy);
    s_v_s = {p.alpha_rho * cx, p.alpha_rho * cy};
    s_v_f = {-cx, -cy};
}

// Fluid-pressure-gradient sources. grad = (d/dxi, d/deta) of
// jb * h * p_bar_f, supplied by the solver from neighbor differences.
// The solid phase feels -eps * alpha_rho * phi_s of it, the fluid
// +eps * phi_f, both routed through the inverse-transform block.
inline Vec2 pressure_gradient_vector(const GeomCell& g, const Vec2& grad) {
    return {g.a11 * grad.x + g.a21 * grad.y, g.a12 * grad.x + g.a22 * grad.y};
}

inline Vec2 solid_pressure_source(const GeomCell& g, double eps, double alpha_rho,
                                  double phi_s, const Vec2& grad) {
    Vec2 v = pressure_gradient_vector(g, grad);
    double f = -eps * alpha_rho * phi_s;
    return {f * v.x, f * v.y};
}

inline Vec2 fluid_pressure_source(const GeomCell& g, double eps, double phi_f,
                                  const Vec2& grad) {
    Vec2 v = pressure_gradient_vector(g, grad);
    return {eps * phi_f * v.x, eps * phi_f * v.y};
}

// Viscous stress brackets of the fluid phase. The solver evaluates
// these per cell from velocity gradients, then takes their divergence:
//   s_vis_x = 2 d/dxi [Bx] + d/deta [Bxy]
//   s_vis_y = 2 d/deta [By] + d/dxi [Bxy]
// gu = (d/dxi, d/deta) of v_xi^f, gw likewise of v_eta^f.
struct ViscousBrackets {
    double bx, by, bxy;
};

inline ViscousBrackets viscous_brackets(const GeomCell& g, double h_total,
                                        const Vec2& gu, const Vec2& gw) {
    double jh = g.jb * h_total;
    ViscousBrackets b;
    b.bx = jh * (g.a11 * gu.x + g.a21 * gu.y);
    b.by = jh * (g.a12 * gw.x + g.a22 * gw.y);
    b.bxy = jh * ((g.a12 * gu.x + g.a22 * gu.y) + (g.a11 * gw.x + g.a21 * gw.y));
    return b;
}

// Local wave-speed bound per direction: |v| + sqrt(eps * c * h), taken
// over both phases; conservative with respect to the pressure factors.
inline void wave_speed_bound(double h_total, double c, double eps,
                             double vsx, double vsy, double vfx, double vfy,
                             double h_dry, double& lambda_xi, double& lambda_eta) {
    if (h_total < h_dry) {
        lambda_xi = 0.0;
        lambda_eta = 0.0;
        return;
    }
    double cel = std::sqrt(eps * c * h_total);
    lambda_xi = std::max(std::abs(vsx), std::abs(vfx)) + cel;
    lambda_eta = std::max(std::abs(vsy), std::abs(vfy)) + cel;
}

} // namespace tpflow::physics
