#include "fbx/grid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace fbx {

Grid::Grid(int nx_, int ny_, double h_, double x0_, double y0_, double line_y)
    : nx(nx_), ny(ny_), h(h_), x0(x0_), y0(y0_), gamma_line_y(line_y) {
    if (nx < 3 || ny < 3) throw std::invalid_argument("Grid: nx, ny must be >= 3");
    if (!(h > 0.0)) throw std::invalid_argument("Grid: h must be > 0");
}

NodeBox Grid::box_of(const Rect& r) const {
    const double eps = 1e-9 * h;
    NodeBox b;
    b.i0 = std::max(0, (int)std::ceil((r.x_lo - x0) / h - eps));
    b.i1 = std::min(nx - 1, (int)std::floor((r.x_hi - x0) / h + eps));
    b.j0 = std::max(0, (int)std::ceil((r.y_lo - y0) / h - eps));
    b.j1 = std::min(ny - 1, (int)std::floor((r.y_hi - y0) / h + eps));
    return b;
}

bool same_layout(const Grid& a, const Grid& b) {
    return a.nx == b.nx && a.ny == b.ny && a.h == b.h && a.x0 == b.x0 && a.y0 == b.y0;
}

ScalarField::ScalarField(const Grid& g)
    : grid(g), values(g.node_count(), 0.0), boundary_mask(g.node_count(), 0) {
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (g.on_perimeter(i, j)) boundary_mask[g.index(i, j)] = 1;
}

double ScalarField::sample(Point p) const {
    const Grid& g = grid;
    double fx = (p.x - g.x0) / g.h;
    double fy = (p.y - g.y0) / g.h;
    const double eps = 1e-9;
    if (fx < -eps || fy < -eps || fx > g.nx - 1 + eps || fy > g.ny - 1 + eps)
        throw std::invalid_argument("ScalarField::sample: point outside grid");
    fx = std::clamp(fx, 0.0, (double)(g.nx - 1));
    fy = std::clamp(fy, 0.0, (double)(g.ny - 1));
    int i = std::min((int)fx, g.nx - 2);
    int j = std::min((int)fy, g.ny - 2);
    double ax = fx - i, ay = fy - j;
    double v00 = values[g.index(i, j)], v10 = values[g.index(i + 1, j)];
    double v01 = values[g.index(i, j + 1)], v11 = values[g.index(i + 1, j + 1)];
    return (1 - ax) * (1 - ay) * v00 + ax * (1 - ay) * v10 + (1 - ax) * ay * v01 + ax * ay * v11;
}

double ScalarField::sample_or_zero(Point p) const {
    const Grid& g = grid;
    if (p.x < g.x0 || p.y < g.y0 || p.x > g.x_max() || p.y > g.y_max()) return 0.0;
    return sample(p);
}

double ScalarField::max_value() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
}

void ScalarField::check_invariants() const {
    for (double v : values)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::runtime_error("ScalarField: values must be finite and >= 0");
}

Weight::Weight(double gamma_, double line_y_) : gamma(gamma_), line_y(line_y_) {
    if (!(gamma > 0.0)) throw std::invalid_argument("Weight: gamma must be > 0");
}

double eval_weight(const Weight& w, Point p) {
    return std::pow(std::fabs(p.y - w.line_y), w.gamma);
}

double weight_q2_antiderivative(const Weight& w, double y) {
    double d = y - w.line_y;
    double sign = d < 0 ? -1.0 : 1.0;
    double tg = 2.0 * w.gamma;
    return sign * std::pow(std::fabs(d), tg + 1.0) / (tg + 1.0);
}

double cell_weight_mass(const Weight& w, double x_lo, double x_hi, double y_lo, double y_hi) {
    if (x_lo > x_hi || y_lo > y_hi)
        throw std::invalid_argument("cell_weight_mass: degenerate rectangle");
    return (x_hi - x_lo) *
           (weight_q2_antiderivative(w, y_hi) - weight_q2_antiderivative(w, y_lo));
}

PositivitySet positivity_set_from_indicator(const Grid& g, std::vector<std::uint8_t> indicator) {
    PositivitySet s;
    s.grid = g;
    s.indicator = std::move(indicator);
    s.labels.assign(g.node_count(), 0);
    int next = 0;
    std::deque<int> queue;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            int p = g.index(i, j);
            if (!s.indicator[p] || s.labels[p] != 0) continue;
            ++next;
            s.labels[p] = next;
            queue.push_back(p);
            while (!queue.empty()) {
                int q = queue.front();
                queue.pop_front();
                int qi = q % g.nx, qj = q / g.nx;
                const int di[4] = {1, -1, 0, 0};
                const int dj[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4; ++k) {
                    int ni = qi + di[k], nj = qj + dj[k];
                    if (!g.in_grid(ni, nj)) continue;
                    int np = g.index(ni, nj);
                    if (s.indicator[np] && s.labels[np] == 0) {
                        s.labels[np] = next;
                        queue.push_back(np);
                    }
                }
            }
        }
    }
    s.component_count = next;
    return s;
}

PositivitySet positivity_set(const ScalarField& u) {
    std::vector<std::uint8_t> ind(u.grid.node_count(), 0);
    for (int p = 0; p < u.grid.node_count(); ++p) ind[p] = u.values[p] > 0.0 ? 1 : 0;
    return positivity_set_from_indicator(u.grid, std::move(ind));
}

std::vector<NodeIndex> free_boundary_nodes(const PositivitySet& s) {
    const Grid& g = s.grid;
    std::vector<NodeIndex> out;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (s.indicator[g.index(i, j)]) continue;
            bool adj = false;
            const int di[4] = {1, -1, 0, 0};
            const int dj[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4 && !adj; ++k) {
                int ni = i + di[k], nj = j + dj[k];
                if (g.in_grid(ni, nj) && s.indicator[g.index(ni, nj)]) adj = true;
            }
            if (adj) out.push_back({i, j});
        }
    }
    return out;
}

double component_separation(const PositivitySet& s, int comp_id, const Rect& window) {
    if (comp_id < 1 || comp_id > s.component_count)
        throw std::invalid_argument("component_separation: unknown component id");
    const Grid& g = s.grid;
    NodeBox b = g.box_of(window);
    std::vector<NodeIndex> mine, others;
    for (int j = b.j0; j <= b.j1; ++j) {
        for (int i = b.i0; i <= b.i1; ++i) {
            int l = s.labels[g.index(i, j)];
            if (l == 0) continue;
            if (l == comp_id)
                mine.push_back({i, j});
            else
                others.push_back({i, j});
        }
    }
    if (mine.empty() || others.empty()) return kInfiniteSeparation;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : mine) {
        for (const auto& o : others) {
            double dx = (a.i - o.i) * g.h, dy = (a.j - o.j) * g.h;
            best = std::min(best, dx * dx + dy * dy);
        }
    }
    return std::sqrt(best);
}

namespace {
// 1D lower envelope of parabolas (squared distances in index units).
// Indices with f = +inf carry no parabola.
void edt_1d(const std::vector<double>& f, std::vector<double>& d, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<int> finite;
    finite.reserve(n);
    for (int q = 0; q < n; ++q)
        if (f[q] < inf) finite.push_back(q);
    if (finite.empty()) {
        std::fill(d.begin(), d.begin() + n, inf);
        return;
    }
    std::vector<int> v(finite.size());
    std::vector<double> z(finite.size() + 1);
    int k = 0;
    v[0] = finite[0];
    z[0] = -inf;
    z[1] = inf;
    for (size_t m = 1; m < finite.size(); ++m) {
        int q = finite[m];
        double sv;
        for (;;) {
            int p = v[k];
            sv = ((f[q] + q * (double)q) - (f[p] + p * (double)p)) / (2.0 * (q - p));
            if (sv > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = sv;
        z[k + 1] = inf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        double dq = q - (double)v[k];
        d[q] = dq * dq + f[v[k]];
    }
}
} // namespace

std::vector<double> distance_sq_transform(const Grid& g, const std::vector<std::uint8_t>& sites) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d(g.node_count());
    for (int p = 0; p < g.node_count(); ++p) d[p] = sites[p] ? 0.0 : inf;

    std::vector<double> col(g.ny), colOut(g.ny);
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) col[j] = d[g.index(i, j)];
        edt_1d(col, colOut, g.ny);
        for (int j = 0; j < g.ny; ++j) d[g.index(i, j)] = colOut[j];
    }
    std::vector<double> row(g.nx), rowOut(g.nx);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) row[i] = d[g.index(i, j)];
        edt_1d(row, rowOut, g.nx);
        for (int i = 0; i < g.nx; ++i) d[g.index(i, j)] = rowOut[i] * g.h * g.h;
    }
    return d;
}

} // namespace fbx
