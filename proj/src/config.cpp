#include "fbx/config.hpp"

#include "fbx/io.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace fbx {

std::string to_string(Preset p) {
    switch (p) {
    case Preset::stokes: return "stokes";
    case Preset::strip: return "strip";
    default: return "custom";
    }
}

std::string to_string(BoundaryPreset b) {
    switch (b) {
    case BoundaryPreset::crest: return "crest";
    case BoundaryPreset::bump: return "bump";
    case BoundaryPreset::flat: return "flat";
    case BoundaryPreset::strip_bumps: return "strip_bumps";
    default: return "zero";
    }
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct Parser {
    ExperimentConfig c;
    std::vector<ConfigError> errors;
    bool gamma_set = false;
    bool boundary_set = false;
    bool nx_set = false, ny_set = false, h_set = false;
    bool x0_set = false, y0_set = false, line_set = false;

    void err(int line, const std::string& m) { errors.push_back({line, m}); }

    bool num(int line, const std::string& key, const std::string& v, double& out) {
        try {
            std::size_t pos = 0;
            out = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return true;
        } catch (const std::exception&) {
            err(line, key + ": expected a number, got '" + v + "'");
            return false;
        }
    }

    bool integer(int line, const std::string& key, const std::string& v, int& out) {
        double d;
        if (!num(line, key, v, d)) return false;
        if (d != std::floor(d)) {
            err(line, key + ": expected an integer, got '" + v + "'");
            return false;
        }
        out = (int)d;
        return true;
    }

    void triple(int line, const std::string& key, const std::string& v, double& a, double& b,
                double& cc) {
        std::istringstream ss(v);
        std::string part;
        std::vector<double> xs;
        while (std::getline(ss, part, ',')) {
            double d;
            if (!num(line, key, trim(part), d)) return;
            xs.push_back(d);
        }
        if (xs.size() != 3) {
            err(line, key + ": expected three comma-separated numbers");
            return;
        }
        a = xs[0];
        b = xs[1];
        cc = xs[2];
    }

    void handle(int line, const std::string& key, const std::string& v) {
        double d;
        int n;
        if (key == "preset") {
            if (v == "stokes")
                c.preset = Preset::stokes;
            else if (v == "strip")
                c.preset = Preset::strip;
            else if (v == "custom")
                c.preset = Preset::custom;
            else
                err(line, "preset: unknown value '" + v + "'");
        } else if (key == "grid.nx") {
            if (integer(line, key, v, n)) { c.nx = n; nx_set = true; }
        } else if (key == "grid.ny") {
            if (integer(line, key, v, n)) { c.ny = n; ny_set = true; }
        } else if (key == "grid.h") {
            if (num(line, key, v, d)) { c.h = d; h_set = true; }
        } else if (key == "grid.x0") {
            if (num(line, key, v, d)) { c.x0 = d; x0_set = true; }
        } else if (key == "grid.y0") {
            if (num(line, key, v, d)) { c.y0 = d; y0_set = true; }
        } else if (key == "gamma") {
            if (num(line, key, v, d)) { c.gamma = d; gamma_set = true; }
        } else if (key == "line_y") {
            if (num(line, key, v, d)) { c.line_y = d; line_set = true; }
        } else if (key == "boundary.preset") {
            boundary_set = true;
            if (v == "zero")
                c.boundary = BoundaryPreset::zero;
            else if (v == "crest")
                c.boundary = BoundaryPreset::crest;
            else if (v == "bump")
                c.boundary = BoundaryPreset::bump;
            else if (v == "flat")
                c.boundary = BoundaryPreset::flat;
            else if (v == "strip_bumps")
                c.boundary = BoundaryPreset::strip_bumps;
            else
                err(line, "boundary.preset: unknown value '" + v + "'");
        } else if (key == "boundary.amplitude") {
            if (num(line, key, v, d)) c.boundary_amplitude = d;
        } else if (key == "boundary.taper") {
            if (num(line, key, v, d)) c.boundary_taper = d;
        } else if (key == "boundary.core_radius") {
            if (num(line, key, v, d)) c.core_radius = d;
        } else if (key == "solver.cg_tol") {
            if (num(line, key, v, d)) c.cg_tol = d;
        } else if (key == "solver.max_outer") {
            if (integer(line, key, v, n)) c.max_outer = n;
        } else if (key == "solver.patch_radius") {
            if (integer(line, key, v, n)) c.patch_radius = n;
        } else if (key == "analysis.r_min") {
            if (num(line, key, v, d)) c.r_min = d;
        } else if (key == "analysis.r_max") {
            if (num(line, key, v, d)) c.r_max = d;
        } else if (key == "analysis.sigma_threshold") {
            if (num(line, key, v, d)) c.sigma_threshold = d;
        } else if (key == "analysis.weiss_defect_tol") {
            if (num(line, key, v, d)) c.weiss_defect_tol = d;
        } else if (key == "analysis.circle_samples") {
            if (integer(line, key, v, n)) c.circle_samples = n;
        } else if (key == "perturb.window") {
            triple(line, key, v, c.window_a, c.window_b, c.window_c);
        } else if (key == "perturb.epsilon") {
            if (num(line, key, v, d)) c.epsilon = d;
        } else if (key == "perturb.t_lo") {
            if (num(line, key, v, d)) c.t_lo = d;
        } else if (key == "perturb.t_hi") {
            if (num(line, key, v, d)) c.t_hi = d;
        } else if (key == "perturb.t_steps") {
            if (integer(line, key, v, n)) c.t_steps = n;
        } else if (key == "output.dir") {
            c.output_dir = v;
        } else if (key == "seed") {
            double sd;
            if (num(line, key, v, sd)) c.seed = (std::uint64_t)sd;
        } else {
            err(line, "unknown key '" + key + "'");
        }
    }
};

} // namespace

void apply_preset_defaults(ExperimentConfig& c) {
    if (c.preset == Preset::stokes) {
        // internal coordinates: Gamma at y = 0, crest domain is the
        // centered unit square, supp(u) kept in {y >= 0}
        c.ny = c.nx;
        c.h = 1.0 / (c.nx - 1);
        c.x0 = -0.5;
        c.y0 = -0.5;
        c.gamma = 0.5;
        c.line_y = 0.0;
        if (c.boundary == BoundaryPreset::zero) c.boundary = BoundaryPreset::crest;
        if (c.boundary == BoundaryPreset::crest) {
            if (c.core_radius == 0.0) c.core_radius = 0.28;
            if (c.boundary_taper == 0.0) c.boundary_taper = 0.6;
        }
        if (c.patch_radius == 0) c.patch_radius = 16;
    } else if (c.preset == Preset::strip) {
        c.h = 32.0 / (c.nx - 1);
        c.ny = (int)std::llround(3.0 / c.h) + 1;
        c.x0 = 0.0;
        c.y0 = 0.0;
        c.gamma = 0.5;
        c.line_y = 0.0;
        if (c.boundary == BoundaryPreset::zero) c.boundary = BoundaryPreset::strip_bumps;
        if (c.window_b == 0.0) {
            c.window_a = 0.0;
            c.window_b = 32.0;
            c.window_c = 3.0;
        }
        if (c.patch_radius == 0) c.patch_radius = 12;
    }
}

namespace {

void preset_fill(Parser& p) {
    ExperimentConfig& c = p.c;
    if (c.preset == Preset::stokes) {
        if (!p.nx_set) c.nx = 257;
        c.ny = c.nx;
        c.h = 1.0 / (c.nx - 1);
        c.x0 = -0.5;
        c.y0 = -0.5;
        if (!p.gamma_set) c.gamma = 0.5;
        if (!p.line_set) c.line_y = 0.0;
        if (!p.boundary_set) c.boundary = BoundaryPreset::crest;
        if (c.boundary == BoundaryPreset::crest) {
            if (c.core_radius == 0.0) c.core_radius = 0.28;
            if (c.boundary_taper == 0.0) c.boundary_taper = 0.6;
        }
        if (c.patch_radius == 0) c.patch_radius = 16;
    } else if (c.preset == Preset::strip) {
        if (!p.nx_set) c.nx = 1025;
        c.h = 32.0 / (c.nx - 1);
        c.ny = (int)std::llround(3.0 / c.h) + 1;
        c.x0 = 0.0;
        c.y0 = 0.0;
        if (!p.gamma_set) c.gamma = 0.5;
        if (!p.line_set) c.line_y = 0.0;
        if (!p.boundary_set) c.boundary = BoundaryPreset::strip_bumps;
        if (c.window_b == 0.0) {
            c.window_a = 0.0;
            c.window_b = 32.0;
            c.window_c = 3.0;
        }
        if (c.patch_radius == 0) c.patch_radius = 12;
    }
}

void validate(Parser& p) {
    ExperimentConfig& c = p.c;
    auto err0 = [&](const std::string& m) { p.err(0, m); };
    if (!(c.gamma > 0.0)) err0("gamma must be > 0");
    if (c.nx < 3 || c.ny < 3) err0("grid must have at least 3x3 nodes");
    if (!(c.h > 0.0)) err0("grid.h must be > 0");
    if (c.preset != Preset::custom && (c.nx < 32 || c.ny < 32))
        err0("presets need at least 32x32 nodes");
    if (c.preset == Preset::stokes && p.gamma_set && c.gamma != 0.5)
        err0("stokes preset requires gamma = 0.5 (Q = sqrt|line_y - y|)");
    if (!(c.cg_tol > 0.0)) err0("solver.cg_tol must be > 0");
    if (c.max_outer < 1) err0("solver.max_outer must be >= 1");
    if (c.patch_radius < 0) err0("solver.patch_radius must be >= 0");
    if (c.core_radius < 0.0) err0("boundary.core_radius must be >= 0");
    if (c.sigma_threshold < 0.0) err0("analysis.sigma_threshold must be >= 0");
    if (c.circle_samples < 8) err0("analysis.circle_samples must be >= 8");
    if (c.t_steps < 1) err0("perturb.t_steps must be >= 1");
    if (c.t_lo > c.t_hi) err0("perturb.t_lo must not exceed perturb.t_hi");
}

} // namespace

ParsedConfig parse_config(const std::string& text) {
    Parser p;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            p.err(lineno, "expected key = value");
            continue;
        }
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) {
            p.err(lineno, "empty key");
            continue;
        }
        p.handle(lineno, key, val);
    }
    preset_fill(p);
    validate(p);
    ParsedConfig out;
    out.config = p.c;
    out.errors = p.errors;
    return out;
}

std::string serialize_config(const ExperimentConfig& c) {
    std::string out;
    out += "preset = " + to_string(c.preset) + "\n";
    out += "grid.nx = " + std::to_string(c.nx) + "\n";
    out += "grid.ny = " + std::to_string(c.ny) + "\n";
    out += "grid.h = " + format_full(c.h) + "\n";
    out += "grid.x0 = " + format_full(c.x0) + "\n";
    out += "grid.y0 = " + format_full(c.y0) + "\n";
    out += "gamma = " + format_full(c.gamma) + "\n";
    out += "line_y = " + format_full(c.line_y) + "\n";
    out += "boundary.preset = " + to_string(c.boundary) + "\n";
    out += "boundary.amplitude = " + format_full(c.boundary_amplitude) + "\n";
    out += "boundary.taper = " + format_full(c.boundary_taper) + "\n";
    out += "boundary.core_radius = " + format_full(c.core_radius) + "\n";
    out += "solver.cg_tol = " + format_full(c.cg_tol) + "\n";
    out += "solver.max_outer = " + std::to_string(c.max_outer) + "\n";
    out += "solver.patch_radius = " + std::to_string(c.patch_radius) + "\n";
    out += "analysis.r_min = " + format_full(c.r_min) + "\n";
    out += "analysis.r_max = " + format_full(c.r_max) + "\n";
    out += "analysis.sigma_threshold = " + format_full(c.sigma_threshold) + "\n";
    out += "analysis.weiss_defect_tol = " + format_full(c.weiss_defect_tol) + "\n";
    out += "analysis.circle_samples = " + std::to_string(c.circle_samples) + "\n";
    out += "perturb.window = " + format_full(c.window_a) + "," + format_full(c.window_b) + "," +
           format_full(c.window_c) + "\n";
    out += "perturb.epsilon = " + format_full(c.epsilon) + "\n";
    out += "perturb.t_lo = " + format_full(c.t_lo) + "\n";
    out += "perturb.t_hi = " + format_full(c.t_hi) + "\n";
    out += "perturb.t_steps = " + std::to_string(c.t_steps) + "\n";
    if (!c.output_dir.empty()) out += "output.dir = " + c.output_dir + "\n";
    out += "seed = " + std::to_string(c.seed) + "\n";
    return out;
}

} // namespace fbx
