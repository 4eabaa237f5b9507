#include "CLI11.hpp"

#include "fbx/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace fbx;

namespace {

std::string out_root(const std::string& cli_dir) {
    if (!cli_dir.empty()) return cli_dir;
    const char* env = std::getenv("FBX_OUTPUT_DIR");
    return env ? std::string(env) : std::string("out");
}

ExperimentConfig load_config_or_die(const std::string& path) {
    ParsedConfig pc = parse_config(read_text_file(path));
    if (!pc.ok()) {
        for (const auto& e : pc.errors)
            std::cerr << path << ":" << e.line << ": " << e.message << "\n";
        std::exit(1);
    }
    return pc.config;
}

bool parse_pair(const std::string& s, double& a, double& b) {
    return std::sscanf(s.c_str(), "%lf,%lf", &a, &b) == 2;
}

bool parse_triple(const std::string& s, double& a, double& b, double& c) {
    return std::sscanf(s.c_str(), "%lf,%lf,%lf", &a, &b, &c) == 3;
}

int cmd_solve(const std::string& config_path, const std::string& dir_opt) {
    ExperimentConfig cfg = load_config_or_die(config_path);
    std::string dir = out_root(dir_opt);
    fs::create_directories(dir);
    ScalarField boundary = make_boundary_field(cfg);
    Weight w(cfg.gamma, cfg.line_y);
    SolveConfig scfg;
    scfg.cg_tol = cfg.cg_tol;
    scfg.max_outer = cfg.max_outer;
    scfg.flip_patch_radius = cfg.patch_radius;
    SolveResult res = local_minimize(boundary, w, scfg);
    write_field_csv((fs::path(dir) / "field.csv").string(), res.field, w);
    write_pgm((fs::path(dir) / "pattern.pgm").string(), res.pattern);
    write_text_file((fs::path(dir) / "energy.csv").string(), energy_csv_text(res.energy));
    std::cout << "solve: total=" << format_full(res.energy.total)
              << " flip_stable=" << (res.flip_stable ? 1 : 0)
              << " outer_iters=" << res.outer_iters << "\n";
    return 0;
}

int cmd_oracle(const std::string& config_path) {
    ExperimentConfig cfg = load_config_or_die(config_path);
    ScalarField boundary = make_boundary_field(cfg);
    Weight w(cfg.gamma, cfg.line_y);
    OracleResult o = brute_force_oracle(boundary, w);
    std::cout << "oracle: free_nodes=" << o.free_nodes.size()
              << " patterns=" << o.energies.size()
              << " global_min=" << format_full(o.global_min.total)
              << " stable_patterns=" << o.stable_masks.size() << "\n";
    return 0;
}

int cmd_analyze(const std::string& field_path, const std::string& center_s,
                const std::string& ladder_s, double threshold, int samples,
                const std::string& dir_opt) {
    FieldFile ff = read_field_csv(field_path);
    double cx, cy, rmin, rmax;
    if (!parse_pair(center_s, cx, cy)) {
        std::cerr << "analyze: --center must be x,y\n";
        return 1;
    }
    if (!parse_pair(ladder_s, rmin, rmax)) {
        std::cerr << "analyze: --ladder must be rmin,rmax\n";
        return 1;
    }
    std::string dir = out_root(dir_opt);
    fs::create_directories(dir);

    WeissSeries ws = weiss_series(ff.field, ff.weight, {cx, cy}, rmin, rmax, samples);
    CsvTable wt;
    wt.header = {"r", "W"};
    for (std::size_t k = 0; k < ws.radii.size(); ++k)
        wt.rows.push_back({format_full(ws.radii[k]), format_full(ws.values[k])});
    write_text_file((fs::path(dir) / "weiss.csv").string(), csv_text(wt));

    auto cls = classify_fb_on_gamma(ff.field, ff.weight, threshold);
    CsvTable ct;
    ct.header = {"x", "y", "density", "label"};
    for (const auto& fc : cls)
        ct.rows.push_back({format_full(fc.point.x), format_full(fc.point.y),
                           format_full(fc.density),
                           fc.label == FBLabel::sigma_candidate ? "sigma_candidate"
                                                                : "nondegenerate"});
    write_text_file((fs::path(dir) / "classification.csv").string(), csv_text(ct));

    DiagnosticsReport d = run_diagnostics(ff.field, ff.weight);
    CsvTable dt;
    dt.header = {"lipschitz_ratio_max", "gradient_q_ratio_max", "interior_ball_ratio_min",
                 "interior_ball_ratio_max", "interior_ball_count", "fb_residual_max",
                 "fb_residual_mean", "fb_node_count", "height_c1_like", "height_c2_like",
                 "positive_node_count"};
    dt.rows.push_back({format_full(d.lipschitz_ratio_max), format_full(d.gradient_q_ratio_max),
                       format_full(d.interior_ball_ratio_min),
                       format_full(d.interior_ball_ratio_max),
                       std::to_string(d.interior_ball_count), format_full(d.fb_residual_max),
                       format_full(d.fb_residual_mean), std::to_string(d.fb_node_count),
                       format_full(d.height_c1_like), format_full(d.height_c2_like),
                       std::to_string(d.positive_node_count)});
    write_text_file((fs::path(dir) / "diagnostics.csv").string(), csv_text(dt));

    std::cout << "analyze: ladder_points=" << ws.radii.size()
              << " monotone_defect=" << format_full(ws.monotone_defect)
              << " fb_gamma_points=" << cls.size() << "\n";
    return 0;
}

int cmd_perturb(const std::string& field_path, const std::string& window_s,
                const std::string& tsweep_s, int component, double epsilon,
                const std::string& dir_opt) {
    FieldFile ff = read_field_csv(field_path);
    double a, b, c;
    if (!parse_triple(window_s, a, b, c)) {
        std::cerr << "perturb: --window must be a,b,c\n";
        return 1;
    }
    double tlo, thi, steps_d;
    if (!parse_triple(tsweep_s, tlo, thi, steps_d) || steps_d < 1) {
        std::cerr << "perturb: --t-sweep must be lo,hi,steps\n";
        return 1;
    }
    int steps = (int)steps_d;
    std::string dir = out_root(dir_opt);
    fs::create_directories(dir);

    const Grid& g = ff.field.grid;
    PositivitySet pattern = positivity_set(ff.field);
    if (component == 0) {
        // component of the largest field value
        int arg = 0;
        for (int p = 1; p < g.node_count(); ++p)
            if (ff.field.values[p] > ff.field.values[arg]) arg = p;
        component = pattern.labels[arg];
    }
    if (component == 0) {
        std::cerr << "perturb: field has no positive component\n";
        return 1;
    }

    CompetitorSpec spec;
    spec.window = {a, b, 0.0, c};
    spec.component_id = component;
    if (epsilon > 0.0) {
        spec.epsilon = epsilon;
    } else {
        double eta = std::numeric_limits<double>::infinity();
        NodeBox nb = g.box_of(spec.window);
        const int di[4] = {1, -1, 0, 0};
        const int dj[4] = {0, 0, 1, -1};
        for (int j = nb.j0; j <= nb.j1; ++j) {
            for (int i = nb.i0; i <= nb.i1; ++i) {
                if (pattern.indicator[g.index(i, j)]) continue;
                for (int d = 0; d < 4; ++d) {
                    int ni = i + di[d], nj = j + dj[d];
                    if (g.in_grid(ni, nj) && pattern.labels[g.index(ni, nj)] == component) {
                        eta = std::min(eta, std::fabs(g.node(i, j).y - g.gamma_line_y));
                        break;
                    }
                }
            }
        }
        // keep the margin below the separation of the other components
        Rect inset{a + 0.5, b - 0.5, 0.0, c};
        double sep = component_separation(pattern, component, inset);
        if (std::isfinite(sep)) eta = std::min(eta, sep * 0.999);
        if (!std::isfinite(eta) || eta <= 0.0) {
            std::cerr << "perturb: cannot derive epsilon (no component boundary in window)\n";
            return 1;
        }
        spec.epsilon = eta;
    }

    double n_half = 0.5 * (b - a) - 0.5;
    double t_cap = spec.epsilon / (2.0 * n_half);
    Weight w = ff.weight;

    CsvTable gt;
    gt.header = {"t", "I_t_minus_I_0"};
    CsvTable vt;
    vt.header = {"case", "lhs", "rhs", "holds"};
    double min_gap = std::numeric_limits<double>::infinity();
    int skipped = 0;
    for (int k = 0; k < steps; ++k) {
        double f = steps == 1 ? 0.0 : (double)k / (steps - 1);
        double t = tlo * std::pow(thi / tlo, f);
        if (t > t_cap * (1.0 - 1e-9)) continue;
        double gap;
        try {
            gap = energy_gap(ff.field, spec, w, t);
        } catch (const std::exception& e) {
            vt.rows.push_back({"gap_t=" + format_full(t), "", "", std::string("skipped:") + e.what()});
            ++skipped;
            continue;
        }
        min_gap = std::min(min_gap, gap);
        gt.rows.push_back({format_full(t), format_full(gap)});
        try {
            ShearSpec ss{t, a + 0.5, 1};
            IncreaseReport ir = verify_increase(ff.field, ss, spec.window);
            vt.rows.push_back({"increase_t=" + format_full(t), format_full(ir.lhs),
                               format_full(ir.rhs), ir.holds ? "1" : "0"});
        } catch (const std::exception& e) {
            vt.rows.push_back({"increase_t=" + format_full(t), "", "", std::string("skipped:") + e.what()});
        }
    }
    // decrease estimate on the left-half component, translated to the pivot
    try {
        std::vector<std::uint8_t> ind(g.node_count(), 0);
        double mid = 0.5 * (a + b);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                Point p = g.node(i, j);
                // one cell inside the pivot keeps the translated set at x > 0
                if (pattern.labels[g.index(i, j)] == component && p.x >= a + 0.5 + g.h &&
                    p.x <= mid && p.y >= 0.0 && p.y <= c)
                    ind[g.index(i, j)] = 1;
            }
        Grid shifted(g.nx, g.ny, g.h, g.x0 - (a + 0.5), g.y0, g.gamma_line_y);
        PositivitySet omega = positivity_set_from_indicator(shifted, ind);
        Weight ws2(w.gamma, w.line_y);
        DecreaseReport dr = verify_decrease(omega, ws2);
        vt.rows.push_back({"decrease", format_full(dr.derivative), format_full(dr.bound),
                           dr.holds ? "1" : "0"});
    } catch (const std::exception& e) {
        vt.rows.push_back({"decrease", "", "", std::string("skipped:") + e.what()});
    }

    write_text_file((fs::path(dir) / "gap.csv").string(), csv_text(gt));
    write_text_file((fs::path(dir) / "verification.csv").string(), csv_text(vt));
    std::cout << "perturb: t_cap=" << format_full(t_cap) << " points=" << gt.rows.size()
              << " skipped=" << skipped
              << " min_gap=" << (gt.rows.empty() ? "n/a" : format_full(min_gap)) << "\n";
    return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& dir_opt) {
    ExperimentConfig cfg = load_config_or_die(config_path);
    std::string dir = !dir_opt.empty() ? dir_opt
                      : !cfg.output_dir.empty() ? cfg.output_dir
                                                : out_root("");
    ExperimentResult res = run_experiment(cfg);
    export_artifacts(res, dir);
    for (const auto& [k, v] : res.summary) std::cout << k << "=" << v << "\n";
    return res.solve_failed ? 2 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fbx: a laboratory for the degenerate one-phase free-boundary functional"};
    app.require_subcommand(1);

    std::string config_path, dir_opt, field_path, center_s, ladder_s, window_s, tsweep_s;
    double threshold = 0.02, epsilon = 0.0;
    int samples = 128, component = 0;

    auto* solve = app.add_subcommand("solve", "compute a flip-stable local minimizer");
    solve->add_option("--config", config_path, "config file")->required();
    solve->add_option("--out", dir_opt, "output directory");

    auto* oracle = app.add_subcommand("oracle", "brute-force pattern enumeration (tiny grids)");
    oracle->add_option("--config", config_path, "config file")->required();

    auto* analyze = app.add_subcommand("analyze", "Weiss series, classification, diagnostics");
    analyze->add_option("--field", field_path, "field CSV")->required();
    analyze->add_option("--center", center_s, "center x,y")->required();
    analyze->add_option("--ladder", ladder_s, "radius ladder rmin,rmax")->required();
    analyze->add_option("--threshold", threshold, "sigma density threshold");
    analyze->add_option("--samples", samples, "circle quadrature samples");
    analyze->add_option("--out", dir_opt, "output directory");

    auto* perturb = app.add_subcommand("perturb", "shear-competitor energy gaps");
    perturb->add_option("--field", field_path, "field CSV")->required();
    perturb->add_option("--window", window_s, "window a,b,c")->required();
    perturb->add_option("--t-sweep", tsweep_s, "t sweep lo,hi,steps")->required();
    perturb->add_option("--component", component, "component id (default: at max u)");
    perturb->add_option("--epsilon", epsilon, "separation margin (default: derived)");
    perturb->add_option("--out", dir_opt, "output directory");

    auto* experiment = app.add_subcommand("experiment", "full preset pipeline");
    experiment->add_option("--config", config_path, "config file")->required();
    experiment->add_option("--out", dir_opt, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(config_path, dir_opt);
        if (oracle->parsed()) return cmd_oracle(config_path);
        if (analyze->parsed())
            return cmd_analyze(field_path, center_s, ladder_s, threshold, samples, dir_opt);
        if (perturb->parsed())
            return cmd_perturb(field_path, window_s, tsweep_s, component, epsilon, dir_opt);
        if (experiment->parsed()) return cmd_experiment(config_path, dir_opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
