#include "tpflow/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace tpflow::io {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open file '" + path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

double parse_number(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("par_list: value of '" + key + "' is not a number: '" + value + "'");
    }
}

} // namespace

SimConfig parse_par_list_text(const std::string& text, const std::string& origin) {
    static const std::set<std::string> known = {
        "mode", "dem", "init", "init_vx", "init_vy", "hydrograph", "out_dir",
        "t_end", "dt_out", "cfl", "h_dry", "eps_h",
        "delta_b", "C_d", "N_R", "theta_b", "phi_s0", "alpha_rho", "chi",
        "L", "H", "g"};
    static const std::set<std::string> required = {
        "mode", "dem", "out_dir", "t_end", "dt_out",
        "delta_b", "C_d", "N_R", "theta_b", "phi_s0"};

    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (!known.count(key))
            throw ConfigError(origin + ": unknown key '" + key + "'");
        if (kv.count(key))
            throw ConfigError(origin + ": duplicate key '" + key + "'");
        if (value.empty())
            throw ConfigError(origin + ": empty value for key '" + key + "'");
        kv[key] = value;
    }
    for (const auto& k : required)
        if (!kv.count(k)) throw ConfigError(origin + ": missing key '" + k + "'");

    SimConfig cfg;
    auto num = [&](const char* key, double dflt) {
        auto it = kv.find(key);
        return it == kv.end() ? dflt : parse_number(key, it->second);
    };
    auto str = [&](const char* key) {
        auto it = kv.find(key);
        return it == kv.end() ? std::string() : it->second;
    };

    std::string mode = kv["mode"];
    if (mode == "release") cfg.mode = SimConfig::Mode::FiniteRelease;
    else if (mode == "inflow") cfg.mode = SimConfig::Mode::InflowHydrograph;
    else throw ConfigError(origin + ": mode must be 'release' or 'inflow', got '" + mode + "'");

    cfg.params.delta_b = num("delta_b", 16.0);
    cfg.params.C_d = num("C_d", 6.0);
    cfg.params.N_R = num("N_R", 268.0);
    cfg.params.theta_b = num("theta_b", 5.0);
    cfg.params.phi_s0 = num("phi_s0", 0.5);
    cfg.params.alpha_rho = num("alpha_rho", 0.4);
    cfg.params.chi = num("chi", 1.0);
    cfg.scaling.L = num("L", 1.0);
    cfg.scaling.H = num("H", 1.0);
    cfg.scaling.g = num("g", 9.80665);
    cfg.t_end = num("t_end", 0.0);
    cfg.dt_out = num("dt_out", 0.0);
    cfg.cfl = num("cfl", 0.1);
    cfg.h_dry = num("h_dry", 1e-10);
    cfg.eps_h = num("eps_h", 1e-6);
    cfg.dem_path = str("dem");
    cfg.init_path = str("init");
    cfg.init_vx_path = str("init_vx");
    cfg.init_vy_path = str("init_vy");
    cfg.hydrograph_path = str("hydrograph");
    cfg.out_dir = str("out_dir");

    if (cfg.cfl > 0.125)
        throw ConfigError(origin + ": cfl exceeds 0.125 (got " + kv["cfl"] + ")");
    cfg.validate();
    return cfg;
}

SimConfig parse_par_list(const std::string& path) {
    return parse_par_list_text(read_file(path), path);
}

Field load_initial_thickness(const std::string& path, const ElevationGrid& dem,
                             bool allow_negative) {
    ElevationGrid g = load_dem(path);
    if (!g.congruent(dem))
        throw ConfigError("grid '" + path + "' does not match the DEM (dimensions or georeference)");
    if (!allow_negative)
        for (int j = 0; j < g.nrows; ++j)
            for (int i = 0; i < g.ncols; ++i)
                if (g.z(i, j) < 0.0)
                    throw ConfigError("grid '" + path + "': negative thickness at column " +
                                      std::to_string(i) + ", row " + std::to_string(j));
    return g.z;
}

Hydrograph parse_hydrograph_text(const std::string& text, const ElevationGrid& dem,
                                 const std::string& origin) {
    Hydrograph h;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool in_samples = false;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string first;
        ls >> first;
        if (!in_samples && first == "cell") {
            Hydrograph::Cell c;
            std::string side;
            if (!(ls >> c.i >> c.j >> side) || side.size() != 1)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected 'cell i j side'");
            c.side = side[0];
            h.cells.push_back(c);
        } else if (!in_samples && first == "t") {
            std::string c2, c3, c4;
            if (!(ls >> c2 >> c3 >> c4) || c2 != "h" || c3 != "phi_s" || c4 != "speed")
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected sample header 't h phi_s speed'");
            in_samples = true;
        } else if (in_samples) {
            Hydrograph::Sample s;
            std::istringstream vs(line);
            if (!(vs >> s.t >> s.h >> s.phi_s >> s.speed))
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected 4 numbers, got '" + line + "'");
            h.samples.push_back(s);
        } else {
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": unexpected line '" + line + "'");
        }
    }
    if (h.cells.empty()) throw ConfigError(origin + ": no inflow cells");
    if (h.samples.empty()) throw ConfigError(origin + ": no samples");
    h.validate(dem.ncols, dem.nrows);
    return h;
}

Hydrograph load_hydrograph(const std::string& path, const ElevationGrid& dem) {
    return parse_hydrograph_text(read_file(path), dem, path);
}

std::string time_tag(double t_seconds) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", t_seconds);
    return buf;
}

namespace {

void write_asc(const std::string& path, const ElevationGrid& dem, const Field& f) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (const auto& line : dem.header_lines) out << line << "\n";
    char buf[64];
    // First data line is the northernmost row.
    for (int j = dem.nrows - 1; j >= 0; --j) {
        for (int i = 0; i < dem.ncols; ++i) {
            std::snprintf(buf, sizeof(buf), "%.6f", f(i, j));
            out << buf << (i + 1 < dem.ncols ? " " : "");
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace

std::vector<std::string> write_snapshot(const SimSnapshot& snap, const ElevationGrid& dem,
                                        const std::string& out_dir) {
    std::string tag = time_tag(snap.t);
    struct Item { const char* name; const Field* f; };
    const Item items[6] = {{"h", &snap.h_total}, {"phis", &snap.phi_s},
                           {"vxs", &snap.vX_s}, {"vys", &snap.vY_s},
                           {"vxf", &snap.vX_f}, {"vyf", &snap.vY_f}};
    std::vector<std::string> paths;
    for (const auto& it : items) {
        std::string path = out_dir + "/" + it.name + "_t" + tag + ".asc";
        write_asc(path, dem, *it.f);
        paths.push_back(path);
    }
    return paths;
}

std::string write_contour_csv(const SimSnapshot& snap, const ElevationGrid& dem,
                              const std::string& out_dir) {
    std::string path = out_dir + "/fields_t" + time_tag(snap.t) + ".csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "X,Y,h,phi_s,vx_s,vy_s,vx_f,vy_f\n";
    char buf[256];
    for (int j = 0; j < dem.nrows; ++j) {
        for (int i = 0; i < dem.ncols; ++i) {
            double x = dem.xll + (i + 0.5) * dem.cellsize;
            double y = dem.yll + (j + 0.5) * dem.cellsize;
            std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                          x, y, snap.h_total(i, j), snap.phi_s(i, j),
                          snap.vX_s(i, j), snap.vY_s(i, j), snap.vX_f(i, j), snap.vY_f(i, j));
            out << buf;
        }
    }
    if (!out) throw IoError("write failed for '" + path + "'");
    return path;
}

} // namespace tpflow::io
