#include "tpflow/solver.hpp"

#include <chrono>
#include <cmath>

#include "tpflow/io.hpp"
#include "tpflow/physics.hpp"

namespace tpflow {

using physics::Vec2;

Simulator::Simulator(SimConfig config, const ElevationGrid& dem, Backend& backend)
    : cfg_(std::move(config)), dem_(dem), backend_(backend) {
    cfg_.validate();
    geo_ = compute_geometry(extend_grid(dem_, kGhost), cfg_.scaling);
    nx_ = geo_.nx;
    ny_ = geo_.ny;
    dxi_ = geo_.dxi;
    deta_ = geo_.deta;
    eps_ = cfg_.scaling.epsilon();

    u_ = MixtureState(nx_, ny_);
    u0_ = MixtureState(nx_, ny_);
    for (auto& f : rhs_) f = Field(nx_, ny_);
    for (auto& f : flux_.f) f = Field(nx_, ny_);
    for (auto& f : flux_.g) f = Field(nx_, ny_);
    vxs_ = Field(nx_, ny_); vys_ = Field(nx_, ny_);
    vxf_ = Field(nx_, ny_); vyf_ = Field(nx_, ny_);
    pjb_ = Field(nx_, ny_);
    bvx_ = Field(nx_, ny_); bvy_ = Field(nx_, ny_); bvxy_ = Field(nx_, ny_);
    lambda_ = Field(nx_, ny_);
}

void Simulator::set_initial_thickness(const Field& h_meters) {
    if (h_meters.nx() != dem_.ncols || h_meters.ny() != dem_.nrows)
        throw ConfigError("initial state: dimension mismatch with DEM (" +
                          std::to_string(h_meters.nx()) + "x" + std::to_string(h_meters.ny()) +
                          " vs " + std::to_string(dem_.ncols) + "x" +
                          std::to_string(dem_.nrows) + ")");
    double phi = cfg_.params.phi_s0;
    for (int j = 0; j < dem_.nrows; ++j) {
        for (int i = 0; i < dem_.ncols; ++i) {
            double h = h_meters(i, j);
            if (h < 0.0)
                throw ConfigError("initial state: negative thickness at column " +
                                  std::to_string(i) + ", row " + std::to_string(j));
            double h_scaled = h / cfg_.scaling.H;
            int pi = i + kGhost, pj = j + kGhost;
            double jb = geo_.jb(pi, pj);
            u_.ws(pi, pj) = jb * h_scaled * phi;
            u_.wf(pi, pj) = jb * h_scaled * (1.0 - phi);
            u_.qsx(pi, pj) = 0.0; u_.qsy(pi, pj) = 0.0;
            u_.qfx(pi, pj) = 0.0; u_.qfy(pi, pj) = 0.0;
        }
    }
}

void Simulator::set_initial_velocity(const Field& vx, const Field& vy) {
    if (vx.nx() != dem_.ncols || vx.ny() != dem_.nrows || !vx.same_shape(vy))
        throw ConfigError("initial velocity: dimension mismatch with DEM");
    double vu = cfg_.scaling.v_unit();
    for (int j = 0; j < dem_.nrows; ++j) {
        for (int i = 0; i < dem_.ncols; ++i) {
            int pi = i + kGhost, pj = j + kGhost;
            double jb = geo_.jb(pi, pj);
            double hs = u_.ws(pi, pj) / jb;
            double hf = u_.wf(pi, pj) / jb;
            double ux = vx(i, j) / vu, uy = vy(i, j) / vu;
            u_.qsx(pi, pj) = jb * hs * ux;
            u_.qsy(pi, pj) = jb * hs * uy;
            u_.qfx(pi, pj) = jb * hf * ux;
            u_.qfy(pi, pj) = jb * hf * uy;
        }
    }
}

void Simulator::set_hydrograph(Hydrograph hydrograph) {
    hydrograph.validate(dem_.ncols, dem_.nrows);
    hydro_ = std::move(hydrograph);
}

void Simulator::apply_boundaries(MixtureState& s, double t_scaled) {
    auto fields = s.fields();
    // Zero-gradient copy of the outermost interior cells into all three
    // ghost layers; west/east over interior rows first, then
    // south/north over every column (covers corners).
    for (Field* fp : fields) {
        Field& f = *fp;
        for (int j = kGhost; j < ny_ - kGhost; ++j) {
            double w = f(kGhost, j);
            double e = f(nx_ - kGhost - 1, j);
            for (int g = 0; g < kGhost; ++g) {
                f(g, j) = w;
                f(nx_ - 1 - g, j) = e;
            }
        }
        for (int i = 0; i < nx_; ++i) {
            double so = f(i, kGhost);
            double no = f(i, ny_ - kGhost - 1);
            for (int g = 0; g < kGhost; ++g) {
                f(i, g) = so;
                f(i, ny_ - 1 - g) = no;
            }
        }
    }

    if (cfg_.mode == SimConfig::Mode::InflowHydrograph && hydro_) {
        double t_seconds = t_scaled * cfg_.scaling.t_unit();
        Hydrograph::Sample smp = hydro_->at(t_seconds);
        double h = smp.h / cfg_.scaling.H;
        double speed = smp.speed / cfg_.scaling.v_unit();
        double hs = h * smp.phi_s;
        double hf = h * (1.0 - smp.phi_s);
        for (const Hydrograph::Cell& c : hydro_->cells) {
            int pi = c.i + kGhost, pj = c.j + kGhost;
            double vx = 0.0, vy = 0.0;
            int di = 0, dj = 0;
            switch (c.side) {
            case 'E': vx = -speed; di = 1; break;
            case 'W': vx = speed; di = -1; break;
            case 'N': vy = -speed; dj = 1; break;
            case 'S': vy = speed; dj = -1; break;
            }
            for (int g = 1; g <= kGhost; ++g) {
                int gi = pi + di * g, gj = pj + dj * g;
                double jb = geo_.jb(gi, gj);
                s.ws(gi, gj) = jb * hs;
                s.wf(gi, gj) = jb * hf;
                s.qsx(gi, gj) = jb * hs * vx;
                s.qsy(gi, gj) = jb * hs * vy;
                s.qfx(gi, gj) = jb * hf * vx;
                s.qfy(gi, gj) = jb * hf * vy;
            }
        }
    }
}

void Simulator::regularize(MixtureState& s) {
    double cell_area = dxi_ * deta_;
    for (int j = kGhost; j < ny_ - kGhost; ++j) {
        for (int i = kGhost; i < nx_ - kGhost; ++i) {
            double jb = geo_.jb(i, j);
            auto fix_phase = [&](Field& w, Field& qx, Field& qy, MassAudit& audit,
                                 const char* name) {
                double hp = w(i, j) / jb;
                if (hp < 0.0) {
                    if (hp < -1e-12)
                        throw NumericsError(std::string("negative ") + name +
                                            " thickness " + std::to_string(hp) +
                                            " at cell (" + std::to_string(i - kGhost) + ", " +
                                            std::to_string(j - kGhost) + ")");
                    audit.clipped += -w(i, j) * cell_area;
                    w(i, j) = 0.0;
                    hp = 0.0;
                }
                if (hp < cfg_.h_dry) {
                    qx(i, j) = 0.0;
                    qy(i, j) = 0.0;
                }
            };
            fix_phase(s.ws, s.qsx, s.qsy, solid_audit_, "solid");
            fix_phase(s.wf, s.qfx, s.qfy, fluid_audit_, "fluid");
        }
    }
}

void Simulator::compute_cell_fields(const MixtureState& s) {
    std::size_t n = static_cast<std::size_t>(nx_) * ny_;
    double eps_h = cfg_.eps_h;
    double eps = eps_;
    backend_.parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            double jb = geo_.jb[k];
            double hs = s.ws[k] / jb;
            double hf = s.wf[k] / jb;
            double h = hs + hf;
            vxs_[k] = physics::desingularized_velocity(s.qsx[k], jb, hs, eps_h);
            vys_[k] = physics::desingularized_velocity(s.qsy[k], jb, hs, eps_h);
            vxf_[k] = physics::desingularized_velocity(s.qfx[k], jb, hf, eps_h);
            vyf_[k] = physics::desingularized_velocity(s.qfy[k], jb, hf, eps_h);
            pjb_[k] = jb * h * (geo_.nZ[k] * h / 2.0);
        }
    });

    if (advection_only_) return;

    // Viscous brackets on the first ghost ring inward; their divergence
    // is taken at interior cells.
    int bw = nx_ - 2;
    std::size_t nb = static_cast<std::size_t>(bw) * (ny_ - 2);
    backend_.parallel_for(nb, [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            int i = 1 + static_cast<int>(k % bw);
            int j = 1 + static_cast<int>(k / bw);
            GeomCell g = geo_.cell(i, j);
            double h = (s.ws(i, j) + s.wf(i, j)) / g.jb;
            Vec2 gu{(vxf_(i + 1, j) - vxf_(i - 1, j)) / (2.0 * dxi_),
                    (vxf_(i, j + 1) - vxf_(i, j - 1)) / (2.0 * deta_)};
            Vec2 gw{(vyf_(i + 1, j) - vyf_(i - 1, j)) / (2.0 * dxi_),
                    (vyf_(i, j + 1) - vyf_(i, j - 1)) / (2.0 * deta_)};
            auto br = physics::viscous_brackets(g, h, gu, gw);
            bvx_(i, j) = br.bx;
            bvy_(i, j) = br.by;
            bvxy_(i, j) = br.bxy;
        }
    });
}

namespace {

struct FaceSide {
    double w[2];   // phase thickness measure (solid, fluid)
    double qn[2];  // normal momentum
    double qt[2];  // transverse momentum
};

} // namespace

void Simulator::compute_face_fluxes(const MixtureState& s) {
    const double eps_h = cfg_.eps_h;
    const double h_dry = cfg_.h_dry;
    const double eps = eps_;
    const double alpha = cfg_.params.alpha_rho;
    const bool adv_only = advection_only_;

    // Reconstructed edge value of field f at cell (i, j) toward +dir
    // (sign +1) or -dir (sign -1); (di, dj) is the direction stencil.
    auto edge = [&](const Field& f, int i, int j, int di, int dj, double sign) {
        double um = f(i - di, j - dj);
        double uc = f(i, j);
        double up = f(i + di, j + dj);
        double slope = limited_slope(uc - um, up - uc);
        return uc + sign * 0.5 * slope;
    };

    // One directional numerical flux; writes the six components through
    // the index maps (mass_s, mass_f, mom_n_s, mom_t_s, mom_n_f, mom_t_f).
    auto face_flux = [&](int i, int j, int di, int dj, double a_nn_l, double a_nt_l,
                         double a_nn_r, double a_nt_r, Field* out[6], bool normal_is_x) {
        int ip = i + di, jp = j + dj;
        double jbf = 0.5 * (geo_.jb(i, j) + geo_.jb(ip, jp));
        double cf = 0.5 * (geo_.nZ(i, j) + geo_.nZ(ip, jp));
        double ann = 0.5 * (a_nn_l + a_nn_r);
        double ant = 0.5 * (a_nt_l + a_nt_r);

        const Field* wsrc[2] = {&s.ws, &s.wf};
        const Field* qxsrc[2] = {&s.qsx, &s.qfx};
        const Field* qysrc[2] = {&s.qsy, &s.qfy};

        FaceSide L, R;
        for (int p = 0; p < 2; ++p) {
            L.w[p] = edge(*wsrc[p], i, j, di, dj, +1.0);
            R.w[p] = edge(*wsrc[p], ip, jp, di, dj, -1.0);
            double qxl = edge(*qxsrc[p], i, j, di, dj, +1.0);
            double qxr = edge(*qxsrc[p], ip, jp, di, dj, -1.0);
            double qyl = edge(*qysrc[p], i, j, di, dj, +1.0);
            double qyr = edge(*qysrc[p], ip, jp, di, dj, -1.0);
            L.qn[p] = normal_is_x ? qxl : qyl;
            L.qt[p] = normal_is_x ? qyl : qxl;
            R.qn[p] = normal_is_x ? qxr : qyr;
            R.qt[p] = normal_is_x ? qyr : qxr;
        }

        double hL[2], hR[2];
        for (int p = 0; p < 2; ++p) {
            hL[p] = L.w[p] / jbf;
            hR[p] = R.w[p] / jbf;
        }
        double htL = hL[0] + hL[1];
        double htR = hR[0] + hR[1];
        if (htL < h_dry && htR < h_dry) {
            for (int k = 0; k < 6; ++k) (*out[k])(i, j) = 0.0;
            return;
        }

        double vnL[2], vnR[2];
        double a = 0.0;
        double celL = std::sqrt(eps * cf * std::max(htL, 0.0));
        double celR = std::sqrt(eps * cf * std::max(htR, 0.0));
        for (int p = 0; p < 2; ++p) {
            vnL[p] = physics::desingularized_velocity(L.qn[p], jbf, std::max(hL[p], 0.0), eps_h);
            vnR[p] = physics::desingularized_velocity(R.qn[p], jbf, std::max(hR[p], 0.0), eps_h);
            a = std::max(a, std::max(std::abs(vnL[p]) + celL, std::abs(vnR[p]) + celR));
        }

        // Pressures enter through the face geometry.
        double prL[2], prR[2];
        if (adv_only) {
            prL[0] = prL[1] = prR[0] = prR[1] = 0.0;
        } else {
            prL[0] = cf * (1.0 - alpha) * hL[0] / 2.0;
            prR[0] = cf * (1.0 - alpha) * hR[0] / 2.0;
            prL[1] = cf * htL / 2.0;
            prR[1] = cf * htR / 2.0;
        }

        for (int p = 0; p < 2; ++p) {
            auto fl = physics::directional_flux(L.w[p], L.qn[p], L.qt[p], vnL[p], htL,
                                                jbf, ann, ant, prL[p], eps);
            auto fr = physics::directional_flux(R.w[p], R.qn[p], R.qt[p], vnR[p], htR,
                                                jbf, ann, ant, prR[p], eps);
            double mass = 0.5 * (fl.mass + fr.mass) - 0.5 * a * (R.w[p] - L.w[p]);
            double momn = 0.5 * (fl.mom_n + fr.mom_n) - 0.5 * a * (R.qn[p] - L.qn[p]);
            double momt = 0.5 * (fl.mom_t + fr.mom_t) - 0.5 * a * (R.qt[p] - L.qt[p]);
            int km = p == 0 ? 0 : 1;
            (*out[km])(i, j) = mass;
            if (p == 0) {
                (*out[2])(i, j) = normal_is_x ? momn : momt;
                (*out[3])(i, j) = normal_is_x ? momt : momn;
            } else {
                (*out[4])(i, j) = normal_is_x ? momn : momt;
                (*out[5])(i, j) = normal_is_x ? momt : momn;
            }
        }
    };

    // xi faces: between (i, j) and (i+1, j) for i in [kGhost-1, nx-kGhost-1).
    {
        int fw = nx_ - 2 * kGhost + 1;
        int jh = ny_ - 2 * kGhost;
        Field* out[6];
        for (int k = 0; k < 6; ++k) out[k] = &flux_.f[k];
        std::size_t n = static_cast<std::size_t>(fw) * jh;
        backend_.parallel_for(n, [&](std::size_t b, std::size_t e) {
            for (std::size_t kk = b; kk < e; ++kk) {
                int i = kGhost - 1 + static_cast<int>(kk % fw);
                int j = kGhost + static_cast<int>(kk / fw);
                face_flux(i, j, 1, 0, geo_.a11(i, j), geo_.a12(i, j),
                          geo_.a11(i + 1, j), geo_.a12(i + 1, j), out, true);
            }
        });
    }
    // eta faces: between (i, j) and (i, j+1) for j in [kGhost-1, ny-kGhost-1).
    {
        int iw = nx_ - 2 * kGhost;
        int fh = ny_ - 2 * kGhost + 1;
        Field* out[6];
        for (int k = 0; k < 6; ++k) out[k] = &flux_.g[k];
        std::size_t n = static_cast<std::size_t>(iw) * fh;
        backend_.parallel_for(n, [&](std::size_t b, std::size_t e) {
            for (std::size_t kk = b; kk < e; ++kk) {
                int i = kGhost + static_cast<int>(kk % iw);
                int j = kGhost - 1 + static_cast<int>(kk / iw);
                face_flux(i, j, 0, 1, geo_.a22(i, j), geo_.a21(i, j),
                          geo_.a22(i, j + 1), geo_.a21(i, j + 1), out, false);
            }
        });
    }
}

void Simulator::accumulate_boundary_fluxes(double weight_dt) {
    // Signed mass transfer across the interior/ghost interface,
    // outward positive; split into injected and outflow per phase.
    auto tally = [&](MassAudit& audit, const Field& fx, const Field& fy) {
        double in = 0.0, out = 0.0;
        auto add = [&](double outward) {
            if (outward >= 0.0) out += outward;
            else in += -outward;
        };
        int iw = kGhost - 1, ie = nx_ - kGhost - 1;
        for (int j = kGhost; j < ny_ - kGhost; ++j) {
            add(-fx(iw, j) * deta_ * weight_dt);
            add(fx(ie, j) * deta_ * weight_dt);
        }
        int js = kGhost - 1, jn = ny_ - kGhost - 1;
        for (int i = kGhost; i < nx_ - kGhost; ++i) {
            add(-fy(i, js) * dxi_ * weight_dt);
            add(fy(i, jn) * dxi_ * weight_dt);
        }
        audit.injected += in;
        audit.outflow += out;
    };
    tally(solid_audit_, flux_.f[0], flux_.g[0]);
    tally(fluid_audit_, flux_.f[1], flux_.g[1]);
}

void Simulator::residual(const MixtureState& s, double flux_weight_dt) {
    compute_cell_fields(s);
    compute_face_fluxes(s);
    accumulate_boundary_fluxes(flux_weight_dt);

    const double eps = eps_;
    const ModelParams& par = cfg_.params;
    const double h_dry = cfg_.h_dry;
    const bool adv_only = advection_only_;

    int iw = nx_ - 2 * kGhost;
    std::size_t n = static_cast<std::size_t>(iw) * (ny_ - 2 * kGhost);
    backend_.parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t kk = b; kk < e; ++kk) {
            int i = kGhost + static_cast<int>(kk % iw);
            int j = kGhost + static_cast<int>(kk / iw);

            double div[6];
            for (int k = 0; k < 6; ++k) {
                div[k] = (-(flux_.f[k](i, j) - flux_.f[k](i - 1, j)) / dxi_) +
                         (-(flux_.g[k](i, j) - flux_.g[k](i, j - 1)) / deta_);
            }

            if (adv_only) {
                for (int k = 0; k < 6; ++k) rhs_[k](i, j) = div[k];
                continue;
            }

            GeomCell g = geo_.cell(i, j);
            double hs = s.ws(i, j) / g.jb;
            double hf = s.wf(i, j) / g.jb;
            double h = hs + hf;
            double phi_s = h < h_dry ? 0.0 : hs / h;
            double phi_f = h < h_dry ? 0.0 : hf / h;
            double vsx = vxs_(i, j), vsy = vys_(i, j);
            double vfx = vxf_(i, j), vfy = vyf_(i, j);

            double kappa_s = physics::curvature_accel(g, vsx, vsy);
            double kappa_f = physics::curvature_accel(g, vfx, vfy);
            auto terms = physics::hydrostatic_terms(hs, hf, g, par, eps, kappa_s, kappa_f);

            Vec2 gradP{(pjb_(i + 1, j) - pjb_(i - 1, j)) / (2.0 * dxi_),
                       (pjb_(i, j + 1) - pjb_(i, j - 1)) / (2.0 * deta_)};

            // Solid: gravity + fluid-pressure gradient + drag. Coulomb
            // friction is applied with the sign cap after the substep.
            Vec2 sn_s = physics::gravity_source(g, terms.p_b_s);
            Vec2 sf_s = physics::solid_pressure_source(g, eps, par.alpha_rho, phi_s, gradP);
            Vec2 sv_s, sv_f;
            physics::drag_sources(g, par, hs, hf, h, vsx, vsy, vfx, vfy, sv_s, sv_f);

            // Fluid: gravity + basal friction + pressure gradient + drag
            // + viscous stress divergence.
            Vec2 sn_f = physics::gravity_source(g, terms.p_b_f);
            Vec2 sd_f = physics::fluid_friction(g, par, eps, hf, vfx, vfy);
            Vec2 sf_f = physics::fluid_pressure_source(g, eps, phi_f, gradP);
            double visc = eps * phi_f / par.N_R;
            double svis_x = visc * (2.0 * (bvx_(i + 1, j) - bvx_(i - 1, j)) / (2.0 * dxi_) +
                                    (bvxy_(i, j + 1) - bvxy_(i, j - 1)) / (2.0 * deta_));
            double svis_y = visc * (2.0 * (bvy_(i, j + 1) - bvy_(i, j - 1)) / (2.0 * deta_) +
                                    (bvxy_(i + 1, j) - bvxy_(i - 1, j)) / (2.0 * dxi_));

            rhs_[0](i, j) = div[0];
            rhs_[1](i, j) = div[1];
            rhs_[2](i, j) = div[2] + (sn_s.x + sf_s.x + sv_s.x);
            rhs_[3](i, j) = div[3] + (sn_s.y + sf_s.y + sv_s.y);
            rhs_[4](i, j) = div[4] + (sn_f.x + sd_f.x + sf_f.x + sv_f.x + svis_x);
            rhs_[5](i, j) = div[5] + (sn_f.y + sd_f.y + sf_f.y + sv_f.y + svis_y);
        }
    });
}

void Simulator::apply_coulomb_cap(MixtureState& s, double dt) {
    const ModelParams& par = cfg_.params;
    const double eps = eps_;
    const double h_dry = cfg_.h_dry;
    if (advection_only_ || par.tan_delta_b() == 0.0) return;

    int iw = nx_ - 2 * kGhost;
    std::size_t n = static_cast<std::size_t>(iw) * (ny_ - 2 * kGhost);
    backend_.parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t kk = b; kk < e; ++kk) {
            int i = kGhost + static_cast<int>(kk % iw);
            int j = kGhost + static_cast<int>(kk / iw);
            double qx = s.qsx(i, j), qy = s.qsy(i, j);
            if (qx == 0.0 && qy == 0.0) continue;
            GeomCell g = geo_.cell(i, j);
            double hs = s.ws(i, j) / g.jb;
            if (hs < h_dry) continue;
            double vsx = physics::desingularized_velocity(qx, g.jb, hs, cfg_.eps_h);
            double vsy = physics::desingularized_velocity(qy, g.jb, hs, cfg_.eps_h);
            double kappa_s = physics::curvature_accel(g, vsx, vsy);
            double eps_chi = std::pow(eps, par.chi);
            double p_b_s = std::max(0.0, hs * (g.c * (1.0 - par.alpha_rho) - eps_chi * kappa_s));
            double rate = g.jb * p_b_s * par.tan_delta_b();
            double qnorm = std::sqrt(qx * qx + qy * qy);
            // Friction can stop the cell but never reverse it.
            double factor = std::max(0.0, 1.0 - dt * rate / qnorm);
            s.qsx(i, j) = qx * factor;
            s.qsy(i, j) = qy * factor;
        }
    });
}

void Simulator::check_finite(const MixtureState& s, const char* where) const {
    auto fields = s.fields();
    for (int k = 0; k < 6; ++k) {
        const Field& f = *fields[k];
        for (int j = kGhost; j < ny_ - kGhost; ++j)
            for (int i = kGhost; i < nx_ - kGhost; ++i)
                if (!std::isfinite(f(i, j)))
                    throw NumericsError(std::string("non-finite value in field '") +
                                        MixtureState::field_names[k] + "' at cell (" +
                                        std::to_string(i - kGhost) + ", " +
                                        std::to_string(j - kGhost) + ") during " + where);
    }
}

void Simulator::advance_step(double dt, double t_scaled) {
    u0_ = u_;

    int iw = nx_ - 2 * kGhost;
    std::size_t n = static_cast<std::size_t>(iw) * (ny_ - 2 * kGhost);
    auto for_interior = [&](auto&& cell_fn) {
        backend_.parallel_for(n, [&](std::size_t b, std::size_t e) {
            for (std::size_t kk = b; kk < e; ++kk) {
                int i = kGhost + static_cast<int>(kk % iw);
                int j = kGhost + static_cast<int>(kk / iw);
                cell_fn(i, j);
            }
        });
    };

    // Predictor.
    residual(u_, dt / 2.0);
    {
        auto uf = u_.fields();
        auto u0f = u0_.fields();
        for_interior([&](int i, int j) {
            for (int k = 0; k < 6; ++k)
                (*uf[k])(i, j) = (*u0f[k])(i, j) + dt * rhs_[k](i, j);
        });
    }
    apply_coulomb_cap(u_, dt);
    regularize(u_);
    apply_boundaries(u_, t_scaled + dt);

    // Corrector.
    residual(u_, dt / 2.0);
    {
        auto uf = u_.fields();
        for_interior([&](int i, int j) {
            for (int k = 0; k < 6; ++k)
                (*uf[k])(i, j) += dt * rhs_[k](i, j);
        });
    }
    apply_coulomb_cap(u_, dt);
    {
        auto uf = u_.fields();
        auto u0f = u0_.fields();
        for_interior([&](int i, int j) {
            for (int k = 0; k < 6; ++k)
                (*uf[k])(i, j) = 0.5 * ((*u0f[k])(i, j) + (*uf[k])(i, j));
        });
    }
    regularize(u_);
    check_finite(u_, "advance_step");
}

double Simulator::compute_dt(double t_scaled, double t_next_scaled) {
    const double eps_h = cfg_.eps_h;
    const double h_dry = cfg_.h_dry;
    const double eps = eps_;
    std::size_t ntot = static_cast<std::size_t>(nx_) * ny_;
    lambda_.fill(0.0);

    int iw = nx_ - 2 * kGhost;
    std::size_t n = static_cast<std::size_t>(iw) * (ny_ - 2 * kGhost);
    backend_.parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t kk = b; kk < e; ++kk) {
            int i = kGhost + static_cast<int>(kk % iw);
            int j = kGhost + static_cast<int>(kk / iw);
            double jb = geo_.jb(i, j);
            double hs = u_.ws(i, j) / jb;
            double hf = u_.wf(i, j) / jb;
            double h = hs + hf;
            double vsx = physics::desingularized_velocity(u_.qsx(i, j), jb, hs, eps_h);
            double vsy = physics::desingularized_velocity(u_.qsy(i, j), jb, hs, eps_h);
            double vfx = physics::desingularized_velocity(u_.qfx(i, j), jb, hf, eps_h);
            double vfy = physics::desingularized_velocity(u_.qfy(i, j), jb, hf, eps_h);
            double lx, ly;
            physics::wave_speed_bound(h, geo_.nZ(i, j), eps, vsx, vsy, vfx, vfy,
                                      h_dry, lx, ly);
            lambda_(i, j) = std::max(lx, ly);
        }
    });

    double lam_max = backend_.reduce_max(std::span<const double>(lambda_.data(), ntot));
    double remaining = t_next_scaled - t_scaled;
    if (lam_max <= 0.0) return remaining;
    double dt = cfg_.cfl * std::min(dxi_, deta_) / lam_max;
    return std::min(dt, remaining);
}

double Simulator::interior_mass(const Field& w) const {
    KahanSum sum;
    for (int j = kGhost; j < ny_ - kGhost; ++j)
        for (int i = kGhost; i < nx_ - kGhost; ++i)
            sum.add(w(i, j));
    return sum.value() * dxi_ * deta_;
}

SimSnapshot Simulator::snapshot(double t_scaled, long step_index) const {
    SimSnapshot snap;
    snap.t = t_scaled * cfg_.scaling.t_unit();
    snap.step_index = step_index;
    int nc = dem_.ncols, nr = dem_.nrows;
    snap.h_total = Field(nc, nr);
    snap.phi_s = Field(nc, nr);
    snap.vX_s = Field(nc, nr); snap.vY_s = Field(nc, nr);
    snap.vX_f = Field(nc, nr); snap.vY_f = Field(nc, nr);
    double vu = cfg_.scaling.v_unit();
    for (int j = 0; j < nr; ++j) {
        for (int i = 0; i < nc; ++i) {
            int pi = i + kGhost, pj = j + kGhost;
            double jb = geo_.jb(pi, pj);
            double hs = u_.ws(pi, pj) / jb;
            double hf = u_.wf(pi, pj) / jb;
            double h = hs + hf;
            snap.h_total(i, j) = h * cfg_.scaling.H;
            if (h < cfg_.h_dry) continue;  // all-zero outputs on dry cells
            snap.phi_s(i, j) = hs / h;
            snap.vX_s(i, j) = physics::desingularized_velocity(u_.qsx(pi, pj), jb, hs, cfg_.eps_h) * vu;
            snap.vY_s(i, j) = physics::desingularized_velocity(u_.qsy(pi, pj), jb, hs, cfg_.eps_h) * vu;
            snap.vX_f(i, j) = physics::desingularized_velocity(u_.qfx(pi, pj), jb, hf, cfg_.eps_h) * vu;
            snap.vY_f(i, j) = physics::desingularized_velocity(u_.qfy(pi, pj), jb, hf, cfg_.eps_h) * vu;
        }
    }
    return snap;
}

RunReport Simulator::run(const std::function<void(const SimSnapshot&)>& sink) {
    RunReport report;
    solid_audit_ = MassAudit{};
    fluid_audit_ = MassAudit{};
    regularize(u_);
    solid_audit_.initial = interior_mass_solid();
    fluid_audit_.initial = interior_mass_fluid();

    double t_unit = cfg_.scaling.t_unit();
    double t_end = cfg_.t_end / t_unit;
    double dt_out = cfg_.dt_out / t_unit;

    double t = 0.0;
    long steps = 0;
    if (sink) sink(snapshot(t, steps));
    double next_out = dt_out;

    auto t0 = std::chrono::steady_clock::now();
    while (t < t_end) {
        double t_next = std::min(next_out, t_end);
        apply_boundaries(u_, t);
        double dt = compute_dt(t, t_next);
        bool exact_hit = dt == t_next - t;
        advance_step(dt, t);
        ++steps;
        t = exact_hit ? t_next : t + dt;
        if (exact_hit) {
            if (sink) sink(snapshot(t, steps));
            if (t_next == next_out) next_out += dt_out;
        }
    }
    auto t1 = std::chrono::steady_clock::now();

    report.steps = steps;
    report.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    solid_audit_.final_mass = interior_mass_solid();
    fluid_audit_.final_mass = interior_mass_fluid();
    report.solid = solid_audit_;
    report.fluid = fluid_audit_;
    return report;
}

RunReport run_simulation(const SimConfig& config, Backend& backend,
                         const std::function<void(const SimSnapshot&)>& sink) {
    ElevationGrid dem = load_dem(config.dem_path);
    Simulator sim(config, dem, backend);
    if (config.mode == SimConfig::Mode::FiniteRelease) {
        sim.set_initial_thickness(io::load_initial_thickness(config.init_path, dem));
        if (!config.init_vx_path.empty() || !config.init_vy_path.empty()) {
            if (config.init_vx_path.empty() || config.init_vy_path.empty())
                throw ConfigError("init_vx and init_vy must be given together");
            sim.set_initial_velocity(io::load_initial_thickness(config.init_vx_path, dem, true),
                                     io::load_initial_thickness(config.init_vy_path, dem, true));
        }
    } else {
        sim.set_hydrograph(io::load_hydrograph(config.hydrograph_path, dem));
    }
    return sim.run(sink);
}

} // namespace tpflow
