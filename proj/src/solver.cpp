#include "fbx/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <stdexcept>

namespace fbx {

namespace {

constexpr int kNbI[4] = {1, -1, 0, 0};
constexpr int kNbJ[4] = {0, 0, 1, -1};

double sor_omega(int span) {
    if (span < 4) return 1.0;
    double w = 2.0 / (1.0 + std::sin(3.14159265358979323846 / span));
    return std::min(w, 1.97);
}

/** Shared harmonic-solve kernel over the free nodes of a region. */
class RegionSolver {
public:
    RegionSolver(const Grid& g, const std::vector<std::uint8_t>& pattern,
                 const std::vector<std::uint8_t>& mask, std::vector<double>& vals)
        : g_(g), pattern_(pattern), mask_(mask), vals_(vals) {}

    // Collects free nodes (pattern, non-Dirichlet) inside box. Throws if a
    // free node sits on the grid perimeter.
    void collect(const NodeBox& box) {
        free_.clear();
        for (int j = box.j0; j <= box.j1; ++j) {
            for (int i = box.i0; i <= box.i1; ++i) {
                int p = g_.index(i, j);
                if (!pattern_[p] || mask_[p]) continue;
                if (g_.on_perimeter(i, j))
                    throw std::invalid_argument("harmonic solve: free node on grid perimeter");
                free_.push_back(p);
            }
        }
        span_ = std::max(box.i1 - box.i0, box.j1 - box.j0) + 1;
    }

    std::size_t free_count() const { return free_.size(); }

    double residual_max() const {
        double r = 0.0;
        for (int p : free_) {
            double s = vals_[p + 1] + vals_[p - 1] + vals_[p + g_.nx] + vals_[p - g_.nx];
            r = std::max(r, std::fabs(4.0 * vals_[p] - s));
        }
        return r;
    }

    // Red-black SOR sweeps until residual <= tol_abs or the sweep cap.
    // Returns true on convergence.
    bool sor(double tol_abs, int max_sweeps) {
        if (free_.empty()) return true;
        double omega = sor_omega(span_);
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            for (int color = 0; color < 2; ++color) {
                for (int p : free_) {
                    int i = p % g_.nx, j = p / g_.nx;
                    if (((i + j) & 1) != color) continue;
                    double s = vals_[p + 1] + vals_[p - 1] + vals_[p + g_.nx] + vals_[p - g_.nx];
                    double v = (1.0 - omega) * vals_[p] + omega * 0.25 * s;
                    vals_[p] = v > 0.0 ? v : 0.0;
                }
            }
            if ((sweep & 7) == 7 && residual_max() <= tol_abs) return true;
        }
        return residual_max() <= tol_abs;
    }

    // Conjugate gradient on the free set (no clamping; SPD system).
    bool cg(double tol_abs, int max_iters) {
        std::size_t n = free_.size();
        if (n == 0) return true;
        std::vector<double> r(n), p(n), ap(n);
        std::vector<int> pos(g_.node_count(), -1);
        for (std::size_t k = 0; k < n; ++k) pos[free_[k]] = (int)k;

        auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
            for (std::size_t k = 0; k < n; ++k) {
                int q = free_[k];
                double s = 4.0 * x[k];
                const int off[4] = {1, -1, g_.nx, -g_.nx};
                for (int d = 0; d < 4; ++d) {
                    int nb = q + off[d];
                    if (pos[nb] >= 0) s -= x[pos[nb]];
                }
                y[k] = s;
            }
        };

        // r = b - A u with u the current values; work in the correction space.
        for (std::size_t k = 0; k < n; ++k) {
            int q = free_[k];
            double s = vals_[q + 1] + vals_[q - 1] + vals_[q + g_.nx] + vals_[q - g_.nx];
            r[k] = s - 4.0 * vals_[q];
        }
        std::vector<double> x(n, 0.0);
        p = r;
        double rr = 0.0;
        for (std::size_t k = 0; k < n; ++k) rr += r[k] * r[k];
        double tol2 = tol_abs * tol_abs;
        int it = 0;
        while (it < max_iters) {
            double rmax = 0.0;
            for (std::size_t k = 0; k < n; ++k) rmax = std::max(rmax, std::fabs(r[k]));
            if (rmax * rmax <= tol2) break;
            apply(p, ap);
            double pap = 0.0;
            for (std::size_t k = 0; k < n; ++k) pap += p[k] * ap[k];
            if (pap <= 0.0) break;
            double alpha = rr / pap;
            for (std::size_t k = 0; k < n; ++k) {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            double rr2 = 0.0;
            for (std::size_t k = 0; k < n; ++k) rr2 += r[k] * r[k];
            double beta = rr2 / rr;
            rr = rr2;
            for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * p[k];
            ++it;
        }
        for (std::size_t k = 0; k < n; ++k) vals_[free_[k]] += x[k];
        return residual_max() <= tol_abs;
    }

    // Full-quality solve: SOR then CG fallback; throws on failure.
    void solve_strict(double tol_abs) {
        int cap = 40 * span_ + 400;
        if (sor(tol_abs, cap)) return;
        if (cg(tol_abs, 8 * span_ + 400)) return;
        throw std::runtime_error("harmonic solve: no convergence within iteration cap");
    }

    // Budgeted solve for candidate-flip patches; best effort, no throw.
    void solve_budget(double tol_abs, int max_sweeps) {
        if (!sor(tol_abs, max_sweeps)) cg(tol_abs, 2 * span_ + 100);
    }

private:
    const Grid& g_;
    const std::vector<std::uint8_t>& pattern_;
    const std::vector<std::uint8_t>& mask_;
    std::vector<double>& vals_;
    std::vector<int> free_;
    int span_ = 0;
};

double dirichlet_cells(const Grid& g, const std::vector<double>& vals, const NodeBox& box) {
    double acc = 0.0;
    for (int j = box.j0; j < box.j1; ++j) {
        for (int i = box.i0; i < box.i1; ++i) {
            double v = vals[g.index(i, j)];
            double dx = vals[g.index(i + 1, j)] - v;
            double dy = vals[g.index(i, j + 1)] - v;
            acc += dx * dx + dy * dy;
        }
    }
    return acc;
}

double volume_cells(const Grid& g, const Weight& w, const std::vector<std::uint8_t>& pattern,
                    const NodeBox& box) {
    double acc = 0.0;
    for (int j = box.j0; j < box.j1; ++j) {
        for (int i = box.i0; i < box.i1; ++i) {
            int k = (pattern[g.index(i, j)] ? 1 : 0) + (pattern[g.index(i + 1, j)] ? 1 : 0) +
                    (pattern[g.index(i, j + 1)] ? 1 : 0) + (pattern[g.index(i + 1, j + 1)] ? 1 : 0);
            if (k == 0) continue;
            Point p = g.node(i, j);
            acc += 0.25 * k * cell_weight_mass(w, p.x, p.x + g.h, p.y, p.y + g.h);
        }
    }
    return acc;
}

/** Mass increment of turning one node positive: (1/4) of each incident cell. */
std::vector<double> node_mass_table(const Grid& g, const Weight& w) {
    std::vector<double> m(g.node_count(), 0.0);
    for (int j = 0; j < g.ny - 1; ++j) {
        for (int i = 0; i < g.nx - 1; ++i) {
            Point p = g.node(i, j);
            double q = 0.25 * cell_weight_mass(w, p.x, p.x + g.h, p.y, p.y + g.h);
            m[g.index(i, j)] += q;
            m[g.index(i + 1, j)] += q;
            m[g.index(i, j + 1)] += q;
            m[g.index(i + 1, j + 1)] += q;
        }
    }
    return m;
}

NodeBox patch_box(const Grid& g, int i, int j, int radius) {
    if (radius <= 0) return g.full_box();
    NodeBox b;
    b.i0 = std::max(0, i - radius);
    b.i1 = std::min(g.nx - 1, i + radius);
    b.j0 = std::max(0, j - radius);
    b.j1 = std::min(g.ny - 1, j + radius);
    return b;
}

NodeBox expand_cells(const Grid& g, const NodeBox& b) {
    NodeBox e;
    e.i0 = std::max(0, b.i0 - 1);
    e.j0 = std::max(0, b.j0 - 1);
    e.i1 = std::min(g.nx - 1, b.i1 + 1);
    e.j1 = std::min(g.ny - 1, b.j1 + 1);
    return e;
}

/** Flip local search working state. */
struct Engine {
    const Grid& g;
    const Weight& w;
    const std::vector<std::uint8_t>& mask;
    std::vector<double> vals;
    std::vector<std::uint8_t> pattern;
    std::vector<double> node_mass;
    double sup_b = 0.0;
    double tol_abs = 0.0;
    double eps_accept = 0.0;
    int patch_radius = 0;
    double energy = 0.0;

    Engine(const ScalarField& boundary, const Weight& w_, double tol, int patch_r)
        : g(boundary.grid), w(w_), mask(boundary.boundary_mask) {
        vals.assign(g.node_count(), 0.0);
        for (int p = 0; p < g.node_count(); ++p)
            if (mask[p]) vals[p] = boundary.values[p];
        pattern.assign(g.node_count(), 0);
        for (int p = 0; p < g.node_count(); ++p)
            if (mask[p] && vals[p] > 0.0) pattern[p] = 1;
        node_mass = node_mass_table(g, w);
        sup_b = 0.0;
        for (int p = 0; p < g.node_count(); ++p)
            if (mask[p]) sup_b = std::max(sup_b, vals[p]);
        tol_abs = tol * std::max(sup_b, 1e-300);
        patch_radius = patch_r;
    }

    void full_solve() {
        // off-pattern non-Dirichlet nodes are pinned at zero
        for (int p = 0; p < g.node_count(); ++p)
            if (!mask[p] && !pattern[p]) vals[p] = 0.0;
        if (sup_b == 0.0) {
            for (int p = 0; p < g.node_count(); ++p)
                if (!mask[p]) vals[p] = 0.0;
            return;
        }
        RegionSolver rs(g, pattern, mask, vals);
        rs.collect(g.full_box());
        rs.solve_strict(tol_abs);
    }

    double total_energy_now() const {
        return dirichlet_cells(g, vals, g.full_box()) + volume_cells(g, w, pattern, g.full_box());
    }

    // Candidate flip at non-Dirichlet node p. Returns true if applied
    // (pattern, values and energy updated); otherwise leaves state intact.
    bool try_flip(int p) {
        int i = p % g.nx, j = p / g.nx;
        bool removing = pattern[p] != 0;
        double dmass = removing ? -node_mass[p] : node_mass[p];

        // exact quick paths: an all-zero neighborhood stays all-zero
        double nbsum = vals[p + 1] + vals[p - 1] + vals[p + g.nx] + vals[p - g.nx];
        if (vals[p] == 0.0 && nbsum == 0.0) {
            if (removing) { // dead node: field unchanged, mass strictly drops
                pattern[p] = 0;
                energy += dmass;
                return true;
            }
            return false; // isolated turn-on: harmonic extension of zero is zero
        }

        NodeBox pb = patch_box(g, i, j, patch_radius);
        NodeBox cells = expand_cells(g, pb);
        cells.i1 = std::min(cells.i1, g.nx - 1);
        cells.j1 = std::min(cells.j1, g.ny - 1);

        // snapshot free values in the patch (and the node itself)
        saved_nodes.clear();
        saved_vals.clear();
        for (int jj = pb.j0; jj <= pb.j1; ++jj) {
            for (int ii = pb.i0; ii <= pb.i1; ++ii) {
                int q = g.index(ii, jj);
                if (!mask[q] && (pattern[q] || q == p)) {
                    saved_nodes.push_back(q);
                    saved_vals.push_back(vals[q]);
                }
            }
        }

        double dir_before = dirichlet_cells(g, vals, cells);
        pattern[p] = removing ? 0 : 1;
        if (removing) vals[p] = 0.0;

        RegionSolver rs(g, pattern, mask, vals);
        rs.collect(pb);
        int budget = 30 + 4 * (pb.i1 - pb.i0 + pb.j1 - pb.j0);
        rs.solve_budget(tol_abs, budget);

        double dir_after = dirichlet_cells(g, vals, cells);
        double delta = (dir_after - dir_before) + dmass;
        if (delta < -eps_accept) {
            energy += delta;
            return true;
        }
        // restore
        pattern[p] = removing ? 1 : 0;
        for (std::size_t k = 0; k < saved_nodes.size(); ++k) vals[saved_nodes[k]] = saved_vals[k];
        return false;
    }

    // One sweep over `seeds` (row-major), first-improvement acceptance with
    // neighbor cascade. Returns the number of accepted flips.
    int sweep(const std::vector<int>& seeds) {
        std::deque<int> fifo(seeds.begin(), seeds.end());
        std::vector<std::uint8_t> queued(g.node_count(), 0);
        for (int p : seeds) queued[p] = 1;
        int accepted = 0;
        while (!fifo.empty()) {
            int p = fifo.front();
            fifo.pop_front();
            queued[p] = 0;
            if (mask[p]) continue;
            if (try_flip(p)) {
                ++accepted;
                int i = p % g.nx, j = p / g.nx;
                for (int d = 0; d < 4; ++d) {
                    int ni = i + kNbI[d], nj = j + kNbJ[d];
                    if (!g.in_grid(ni, nj)) continue;
                    int q = g.index(ni, nj);
                    if (!mask[q] && !queued[q]) {
                        queued[q] = 1;
                        fifo.push_back(q);
                    }
                }
            }
        }
        return accepted;
    }

    std::vector<int> all_candidates() const {
        std::vector<int> out;
        for (int p = 0; p < g.node_count(); ++p)
            if (!mask[p]) out.push_back(p);
        return out;
    }

    // Nodes within Chebyshev distance 2 of the pattern interface.
    std::vector<int> interface_candidates() const {
        std::vector<std::uint8_t> mark(g.node_count(), 0);
        for (int j = 0; j < g.ny; ++j) {
            for (int i = 0; i < g.nx; ++i) {
                int p = g.index(i, j);
                bool border = false;
                if (pattern[p]) {
                    if (vals[p] == 0.0) border = true; // dead node
                    for (int d = 0; d < 4 && !border; ++d) {
                        int ni = i + kNbI[d], nj = j + kNbJ[d];
                        if (g.in_grid(ni, nj) && !pattern[g.index(ni, nj)]) border = true;
                    }
                } else {
                    for (int d = 0; d < 4 && !border; ++d) {
                        int ni = i + kNbI[d], nj = j + kNbJ[d];
                        if (g.in_grid(ni, nj) && pattern[g.index(ni, nj)]) border = true;
                    }
                }
                if (!border) continue;
                for (int dj = -2; dj <= 2; ++dj)
                    for (int di = -2; di <= 2; ++di)
                        if (g.in_grid(i + di, j + dj)) mark[g.index(i + di, j + dj)] = 1;
            }
        }
        std::vector<int> out;
        for (int p = 0; p < g.node_count(); ++p)
            if (mark[p] && !mask[p]) out.push_back(p);
        return out;
    }

    std::vector<int> saved_nodes;
    std::vector<double> saved_vals;
};

} // namespace

ScalarField harmonic_solve(const PositivitySet& pattern, const ScalarField& boundary, double tol) {
    if (!same_layout(pattern.grid, boundary.grid))
        throw std::invalid_argument("harmonic_solve: grid mismatch");
    for (int p = 0; p < boundary.grid.node_count(); ++p)
        if (boundary.boundary_mask[p] && boundary.values[p] < 0.0)
            throw std::invalid_argument("harmonic_solve: negative Dirichlet value");

    ScalarField u(boundary.grid);
    u.boundary_mask = boundary.boundary_mask;
    const Grid& g = u.grid;
    double sup_b = 0.0;
    for (int p = 0; p < g.node_count(); ++p) {
        if (u.boundary_mask[p]) {
            u.values[p] = boundary.values[p];
            sup_b = std::max(sup_b, u.values[p]);
        } else {
            u.values[p] = 0.0;
        }
    }
    if (sup_b == 0.0) {
        for (int p = 0; p < g.node_count(); ++p)
            if (!u.boundary_mask[p]) u.values[p] = 0.0;
        return u;
    }
    RegionSolver rs(g, pattern.indicator, u.boundary_mask, u.values);
    rs.collect(g.full_box());
    rs.solve_strict(tol * sup_b);
    double min_v = 0.0;
    for (int p = 0; p < g.node_count(); ++p)
        if (!u.boundary_mask[p]) min_v = std::min(min_v, u.values[p]);
    if (min_v < -10.0 * tol * sup_b)
        throw std::runtime_error("harmonic_solve: negative values at convergence");
    for (double& v : u.values)
        if (v < 0.0) v = 0.0;
    return u;
}

SolveResult local_minimize(const ScalarField& boundary, const Weight& w, const SolveConfig& cfg) {
    if (!(cfg.cg_tol > 0.0)) throw std::invalid_argument("local_minimize: cg_tol must be > 0");
    if (cfg.max_outer < 1) throw std::invalid_argument("local_minimize: max_outer must be >= 1");
    const Grid& g = boundary.grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (g.on_perimeter(i, j) && !boundary.boundary_mask[g.index(i, j)])
                throw std::invalid_argument("local_minimize: grid perimeter must be Dirichlet");

    Engine e(boundary, w, cfg.cg_tol, cfg.flip_patch_radius);

    if (cfg.init == InitMode::truncated_harmonic) {
        for (int p = 0; p < g.node_count(); ++p)
            if (!e.mask[p]) e.pattern[p] = 1;
        e.full_solve();
        for (int p = 0; p < g.node_count(); ++p)
            if (!e.mask[p]) e.pattern[p] = e.vals[p] > 0.0 ? 1 : 0;
    } else {
        if ((int)cfg.init_pattern.size() != g.node_count())
            throw std::invalid_argument("local_minimize: init_pattern size mismatch");
        for (int p = 0; p < g.node_count(); ++p)
            if (!e.mask[p]) e.pattern[p] = cfg.init_pattern[p] ? 1 : 0;
    }

    e.full_solve();
    e.energy = e.total_energy_now();
    e.eps_accept = 1e-12 * (1.0 + std::fabs(e.energy));

    int outer = 0;
    bool stable = false;
    bool fast_clean = false; // last fast sweep accepted nothing
    while (outer < cfg.max_outer) {
        ++outer;
        int accepted;
        if (!fast_clean) {
            accepted = e.sweep(e.interface_candidates());
            if (accepted == 0) {
                fast_clean = true;
                continue; // certification sweep next round, same outer budget
            }
        } else {
            accepted = e.sweep(e.all_candidates());
            if (accepted == 0) {
                stable = true;
                break;
            }
            fast_clean = false;
        }
        e.full_solve();
        e.energy = e.total_energy_now();
    }

    e.full_solve();

    SolveResult res;
    res.field = ScalarField(g);
    res.field.boundary_mask = boundary.boundary_mask;
    res.field.values = e.vals;
    for (double& v : res.field.values)
        if (v < 0.0) v = 0.0;
    res.pattern = positivity_set_from_indicator(g, e.pattern);
    res.energy = make_energy_report(dirichlet_cells(g, res.field.values, g.full_box()),
                                    volume_cells(g, w, e.pattern, g.full_box()));
    res.outer_iters = outer;
    res.flip_stable = stable;
    return res;
}

double flip_delta(const ScalarField& u, const Weight& w, NodeIndex node, int patch_radius,
                  double tol) {
    const Grid& g = u.grid;
    if (!g.in_grid(node.i, node.j)) throw std::invalid_argument("flip_delta: node outside grid");
    int p = g.index(node.i, node.j);
    if (u.boundary_mask[p]) throw std::invalid_argument("flip_delta: node is Dirichlet");

    std::vector<std::uint8_t> pattern(g.node_count(), 0);
    for (int q = 0; q < g.node_count(); ++q) pattern[q] = u.values[q] > 0.0 ? 1 : 0;

    std::vector<double> vals = u.values;
    double sup_b = 0.0;
    for (int q = 0; q < g.node_count(); ++q)
        if (u.boundary_mask[q]) sup_b = std::max(sup_b, u.values[q]);
    double tol_abs = tol * std::max(sup_b, 1e-300);

    std::vector<double> nm = node_mass_table(g, w);
    bool removing = pattern[p] != 0;
    double dmass = removing ? -nm[p] : nm[p];

    double dir_before = dirichlet_cells(g, vals, g.full_box());
    pattern[p] = removing ? 0 : 1;
    if (removing) vals[p] = 0.0;
    for (int q = 0; q < g.node_count(); ++q)
        if (!u.boundary_mask[q] && !pattern[q]) vals[q] = 0.0;

    NodeBox pb = patch_box(g, node.i, node.j, patch_radius);
    RegionSolver rs(g, pattern, u.boundary_mask, vals);
    rs.collect(pb);
    rs.solve_strict(tol_abs);

    double dir_after = dirichlet_cells(g, vals, g.full_box());
    return (dir_after - dir_before) + dmass;
}

OracleResult brute_force_oracle(const ScalarField& boundary, const Weight& w) {
    const Grid& g = boundary.grid;
    std::vector<int> free_nodes;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            int p = g.index(i, j);
            if (boundary.boundary_mask[p]) continue;
            if (g.on_perimeter(i, j))
                throw std::invalid_argument("brute_force_oracle: free node on grid perimeter");
            free_nodes.push_back(p);
        }
    }
    int k = (int)free_nodes.size();
    if (k > 20) throw std::invalid_argument("brute_force_oracle: more than 20 free nodes");

    std::vector<std::uint8_t> base(g.node_count(), 0);
    for (int p = 0; p < g.node_count(); ++p)
        if (boundary.boundary_mask[p] && boundary.values[p] > 0.0) base[p] = 1;

    std::uint32_t count = 1u << k;
    OracleResult out;
    out.free_nodes = free_nodes;
    out.energies.assign(count, 0.0);

    std::vector<double> vals(g.node_count(), 0.0);
    for (int p = 0; p < g.node_count(); ++p)
        if (boundary.boundary_mask[p]) vals[p] = boundary.values[p];

    std::vector<std::uint8_t> pattern(g.node_count());
    std::vector<int> active;
    std::vector<int> pos(g.node_count(), -1);
    std::vector<double> A, b, x;

    // Dense-solves the active free nodes of `mask` into vals and fills the
    // pattern indicator. Cholesky on the restricted 5-point system.
    auto solve_mask = [&](std::uint32_t mask) {
        pattern = base;
        active.clear();
        for (int r = 0; r < k; ++r) {
            if (mask & (1u << r)) {
                pattern[free_nodes[r]] = 1;
                active.push_back(free_nodes[r]);
            }
        }
        for (int p : free_nodes) vals[p] = 0.0;
        int n = (int)active.size();
        if (n == 0) return;
        for (int m = 0; m < n; ++m) pos[active[m]] = m;
        A.assign((std::size_t)n * n, 0.0);
        b.assign(n, 0.0);
        const int off[4] = {1, -1, g.nx, -g.nx};
        for (int m = 0; m < n; ++m) {
            int p = active[m];
            A[(std::size_t)m * n + m] = 4.0;
            for (int d = 0; d < 4; ++d) {
                int nb = p + off[d];
                if (pos[nb] >= 0)
                    A[(std::size_t)m * n + pos[nb]] = -1.0;
                else if (boundary.boundary_mask[nb])
                    b[m] += boundary.values[nb];
                // off-pattern free neighbors contribute zero
            }
        }
        for (int c = 0; c < n; ++c) {
            double d = A[(std::size_t)c * n + c];
            for (int m = 0; m < c; ++m) d -= A[(std::size_t)c * n + m] * A[(std::size_t)c * n + m];
            if (d <= 0.0) throw std::runtime_error("brute_force_oracle: Cholesky breakdown");
            d = std::sqrt(d);
            A[(std::size_t)c * n + c] = d;
            for (int r2 = c + 1; r2 < n; ++r2) {
                double s = A[(std::size_t)r2 * n + c];
                for (int m = 0; m < c; ++m)
                    s -= A[(std::size_t)r2 * n + m] * A[(std::size_t)c * n + m];
                A[(std::size_t)r2 * n + c] = s / d;
            }
        }
        x = b;
        for (int r2 = 0; r2 < n; ++r2) {
            double s = x[r2];
            for (int m = 0; m < r2; ++m) s -= A[(std::size_t)r2 * n + m] * x[m];
            x[r2] = s / A[(std::size_t)r2 * n + r2];
        }
        for (int r2 = n - 1; r2 >= 0; --r2) {
            double s = x[r2];
            for (int m = r2 + 1; m < n; ++m) s -= A[(std::size_t)m * n + r2] * x[m];
            x[r2] = s / A[(std::size_t)r2 * n + r2];
        }
        for (int m = 0; m < n; ++m) vals[active[m]] = x[m] > 0.0 ? x[m] : 0.0;
        for (int m = 0; m < n; ++m) pos[active[m]] = -1;
    };

    double best = 0.0;
    std::uint32_t best_mask = 0;
    bool have_best = false;

    for (std::uint32_t mask = 0; mask < count; ++mask) {
        solve_mask(mask);
        double E = dirichlet_cells(g, vals, g.full_box()) + volume_cells(g, w, pattern, g.full_box());
        out.energies[mask] = E;
        if (!have_best || E < best) {
            best = E;
            best_mask = mask;
            have_best = true;
        }
    }

    double scale = 1.0 + std::fabs(best);
    double eps_stable = 1e-9 * scale;
    for (std::uint32_t mask = 0; mask < count; ++mask) {
        bool stable = true;
        for (int r = 0; r < k && stable; ++r)
            if (out.energies[mask ^ (1u << r)] < out.energies[mask] - eps_stable) stable = false;
        if (stable) out.stable_masks.push_back(mask);
    }

    out.global_mask = best_mask;
    solve_mask(best_mask);
    out.global_pattern = pattern;
    out.global_min = make_energy_report(dirichlet_cells(g, vals, g.full_box()),
                                        volume_cells(g, w, pattern, g.full_box()));
    return out;
}

} // namespace fbx
