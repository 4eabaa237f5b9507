#include "fbx/perturbation.hpp"

#include "fbx/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fbx {

namespace {

double shear_epsilon_needed(const ShearSpec& s, const Rect& rect) {
    return std::fabs(s.t) *
           std::max(std::fabs(rect.x_lo - s.pivot_x), std::fabs(rect.x_hi - s.pivot_x));
}

void check_shear_margin(const ScalarField& u, const ShearSpec& s, const Rect& rect) {
    if (!(std::fabs(s.t) < 1.0)) throw std::invalid_argument("shear: |t| must be < 1");
    if (s.t == 0.0) return;
    double need = shear_epsilon_needed(s, rect);
    const Grid& g = u.grid;
    NodeBox nb = g.box_of(rect);
    double margin = std::numeric_limits<double>::infinity();
    for (int j = nb.j0; j <= nb.j1; ++j) {
        for (int i = nb.i0; i <= nb.i1; ++i) {
            if (u.values[g.index(i, j)] <= 0.0) continue;
            Point p = g.node(i, j);
            margin = std::min(margin, std::min(p.y - rect.y_lo, rect.y_hi - p.y));
        }
    }
    if (margin <= need)
        throw std::invalid_argument("shear: support margin violated (support too close to the "
                                    "horizontal sides of the rectangle)");
}

} // namespace

ScalarField shear_field(const ScalarField& u, const ShearSpec& s, const Rect& rect) {
    check_shear_margin(u, s, rect);
    ScalarField v = u;
    const Grid& g = u.grid;
    NodeBox nb = g.box_of(rect);
    for (int j = nb.j0; j <= nb.j1; ++j) {
        for (int i = nb.i0; i <= nb.i1; ++i) {
            Point p = g.node(i, j);
            double yy = p.y + s.sign * s.t * (p.x - s.pivot_x);
            v.values[g.index(i, j)] = u.sample_or_zero({p.x, yy});
        }
    }
    return v;
}

IncreaseReport verify_increase(const ScalarField& u, const ShearSpec& s, const Rect& rect) {
    ScalarField ut = shear_field(u, s, rect);
    const Grid& g = u.grid;
    NodeBox nb = g.box_of(rect);
    IncreaseReport rep;
    double base = dirichlet_energy(u, nb);
    rep.lhs = dirichlet_energy(ut, nb);
    double t = std::fabs(s.t);
    rep.rhs = base * (1.0 + t + t * t);
    rep.holds = rep.lhs <= rep.rhs + 1e-12 * rep.rhs;

    // pointwise algebra on the un-resampled difference quotients:
    // (d1 + t d2)^2 + d2^2 <= (1 + t + t^2)(d1^2 + d2^2)
    double acc = 0.0;
    for (int j = nb.j0; j < nb.j1; ++j) {
        for (int i = nb.i0; i < nb.i1; ++i) {
            double v = u.values[g.index(i, j)];
            double d1 = u.values[g.index(i + 1, j)] - v;
            double d2 = u.values[g.index(i, j + 1)] - v;
            double c = d1 + s.sign * s.t * d2;
            acc += c * c + d2 * d2;
        }
    }
    rep.algebraic_lhs = acc;
    rep.algebraic_holds = acc <= rep.rhs + 1e-12 * rep.rhs;
    return rep;
}

namespace {

struct CellRun {
    double x_lo, x_hi; // column extent
    double y_lo, y_hi; // run extent
};

// Maximal vertical runs of full cells (all four corners positive), column
// by column in row-major cell order.
std::vector<CellRun> full_cell_runs(const PositivitySet& s) {
    const Grid& g = s.grid;
    std::vector<CellRun> runs;
    for (int i = 0; i < g.nx - 1; ++i) {
        int j = 0;
        while (j < g.ny - 1) {
            auto full = [&](int jj) {
                return s.indicator[g.index(i, jj)] && s.indicator[g.index(i + 1, jj)] &&
                       s.indicator[g.index(i, jj + 1)] && s.indicator[g.index(i + 1, jj + 1)];
            };
            if (!full(j)) {
                ++j;
                continue;
            }
            int j0 = j;
            while (j < g.ny - 1 && full(j)) ++j;
            Point lo = g.node(i, j0);
            Point hi = g.node(i + 1, j);
            runs.push_back({lo.x, hi.x, lo.y, hi.y});
        }
    }
    return runs;
}

void check_decrease_hypotheses(const std::vector<CellRun>& runs, const Weight& w) {
    double d_max = w.gamma >= 0.5 ? 1.0 : 2.0 * w.gamma;
    for (const CellRun& r : runs) {
        if (!(r.x_lo > 0.0))
            throw std::invalid_argument("decrease estimate: set must satisfy x >= a > 0");
        double lo = r.y_lo - w.line_y, hi = r.y_hi - w.line_y;
        if (lo < -1e-12)
            throw std::invalid_argument("decrease estimate: set must lie above Gamma");
        if (hi > d_max * (1.0 + 1e-12))
            throw std::invalid_argument("decrease estimate: set exceeds the height hypothesis");
    }
}

} // namespace

double mass_derivative(const PositivitySet& omega, const Weight& w) {
    std::vector<CellRun> runs = full_cell_runs(omega);
    if (runs.empty()) return 0.0;
    check_decrease_hypotheses(runs, w);
    double tg = 2.0 * w.gamma;
    double acc = 0.0;
    for (const CellRun& r : runs) {
        double x_mid = 0.5 * (r.x_lo + r.x_hi);
        double y2 = std::pow(r.y_hi - w.line_y, tg);
        double y1 = std::pow(r.y_lo - w.line_y, tg);
        acc += (r.x_hi - r.x_lo) * (-x_mid) * (y2 - y1);
    }
    return acc;
}

namespace {

// 20-point Gauss-Legendre nodes/weights on [-1, 1].
const double kGx[20] = {
    -0.9931285991850949, -0.9639719272779138, -0.9122344282513259, -0.8391169718222188,
    -0.7463319064601508, -0.6360536807265150, -0.5108670019508271, -0.3737060887154196,
    -0.2277858511416451, -0.0765265211334973, 0.0765265211334973,  0.2277858511416451,
    0.3737060887154196,  0.5108670019508271,  0.6360536807265150,  0.7463319064601508,
    0.8391169718222188,  0.9122344282513259,  0.9639719272779138,  0.9931285991850949};
const double kGw[20] = {
    0.0176140071391521, 0.0406014298003869, 0.0626720483341091, 0.0832767415767048,
    0.1019301198172404, 0.1181945319615184, 0.1316886384491766, 0.1420961093183820,
    0.1491729864726037, 0.1527533871307258, 0.1527533871307258, 0.1491729864726037,
    0.1420961093183820, 0.1316886384491766, 0.1181945319615184, 0.1019301198172404,
    0.0832767415767048, 0.0626720483341091, 0.0406014298003869, 0.0176140071391521};

// integral over [x_lo, x_hi] of F(y - t x); pieces split where the
// argument crosses Gamma, where F is only C^1
double x_integral_of_antideriv(const Weight& w, double y, double t, double x_lo, double x_hi) {
    auto F = [&](double x) { return weight_q2_antiderivative(w, y - t * x); };
    std::vector<double> cuts = {x_lo, x_hi};
    if (t != 0.0) {
        double xc = (y - w.line_y) / t;
        if (xc > x_lo && xc < x_hi) cuts.push_back(xc);
    }
    std::sort(cuts.begin(), cuts.end());
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        double mid = 0.5 * (cuts[k] + cuts[k + 1]);
        double half = 0.5 * (cuts[k + 1] - cuts[k]);
        double piece = 0.0;
        for (int m = 0; m < 20; ++m) piece += kGw[m] * F(mid + half * kGx[m]);
        acc += piece * half;
    }
    return acc;
}

} // namespace

double shifted_mass_exact(const PositivitySet& omega, const Weight& w, double t) {
    std::vector<CellRun> runs = full_cell_runs(omega);
    double acc = 0.0;
    for (const CellRun& r : runs)
        acc += x_integral_of_antideriv(w, r.y_hi, t, r.x_lo, r.x_hi) -
               x_integral_of_antideriv(w, r.y_lo, t, r.x_lo, r.x_hi);
    return acc;
}

DecreaseReport verify_decrease(const PositivitySet& omega, const Weight& w) {
    DecreaseReport rep;
    std::vector<CellRun> runs = full_cell_runs(omega);
    if (runs.empty()) {
        rep.holds = true;
        return rep;
    }
    rep.derivative = mass_derivative(omega, w);
    double a = std::numeric_limits<double>::infinity();
    double mass = 0.0;
    for (const CellRun& r : runs) {
        a = std::min(a, r.x_lo);
        mass += (r.x_hi - r.x_lo) *
                (weight_q2_antiderivative(w, r.y_hi) - weight_q2_antiderivative(w, r.y_lo));
    }
    rep.bound = -a * mass;
    rep.holds = rep.derivative <= rep.bound + 1e-12 * std::fabs(rep.bound);
    return rep;
}

namespace {

struct CompetitorGeometry {
    double pivot_l, pivot_r, mid, n_half;
    std::vector<std::uint8_t> band; // nodes of the perturbed band
};

CompetitorGeometry competitor_geometry(const ScalarField& u, const PositivitySet& pattern,
                                       const CompetitorSpec& spec, double t) {
    const Grid& g = u.grid;
    const Rect& S = spec.window;
    CompetitorGeometry geo;
    geo.pivot_l = S.x_lo + 0.5;
    geo.pivot_r = S.x_hi - 0.5;
    geo.mid = 0.5 * (S.x_lo + S.x_hi);
    geo.n_half = geo.mid - geo.pivot_l;
    if (!(geo.n_half > 0.0))
        throw std::invalid_argument("build_competitor: window narrower than the pivot insets");
    if (t < 0.0) throw std::invalid_argument("build_competitor: t must be >= 0");

    Rect inset{geo.pivot_l, geo.pivot_r, S.y_lo, S.y_hi};
    double sep = component_separation(pattern, spec.component_id, inset);
    if (sep < spec.epsilon)
        throw std::invalid_argument("build_competitor: component separation below epsilon");

    // eta: distance of the component's boundary inside S to Gamma
    double line = g.gamma_line_y;
    double eta = std::numeric_limits<double>::infinity();
    NodeBox nb = g.box_of(S);
    const int di[4] = {1, -1, 0, 0};
    const int dj[4] = {0, 0, 1, -1};
    for (int j = nb.j0; j <= nb.j1; ++j) {
        for (int i = nb.i0; i <= nb.i1; ++i) {
            if (pattern.indicator[g.index(i, j)]) continue;
            bool adj = false;
            for (int d = 0; d < 4 && !adj; ++d) {
                int ni = i + di[d], nj = j + dj[d];
                if (g.in_grid(ni, nj) && pattern.labels[g.index(ni, nj)] == spec.component_id)
                    adj = true;
            }
            if (adj) eta = std::min(eta, std::fabs(g.node(i, j).y - line));
        }
    }
    double eps_prime = std::min(eta, spec.epsilon);
    if (t > eps_prime / (2.0 * geo.n_half) * (1.0 + 1e-12))
        throw std::invalid_argument("build_competitor: t exceeds epsilon'/(2N)");

    // support margin against the window's vertical extent
    double dmax = t * geo.n_half;
    for (int j = nb.j0; j <= nb.j1; ++j) {
        for (int i = nb.i0; i <= nb.i1; ++i) {
            if (pattern.labels[g.index(i, j)] != spec.component_id) continue;
            Point p = g.node(i, j);
            if (std::min(p.y - S.y_lo, S.y_hi - p.y) < dmax - 1e-12)
                throw std::invalid_argument(
                    "build_competitor: support margin below t*N at the window's y-extent");
        }
    }

    // band: epsilon/2-neighborhood of the component, restricted to the
    // inset window
    std::vector<std::uint8_t> sites(g.node_count(), 0);
    for (int p = 0; p < g.node_count(); ++p)
        if (pattern.labels[p] == spec.component_id) sites[p] = 1;
    std::vector<double> d2 = distance_sq_transform(g, sites);
    double r2 = 0.25 * spec.epsilon * spec.epsilon * (1.0 + 1e-12);
    geo.band.assign(g.node_count(), 0);
    bool any = false;
    for (int j = nb.j0; j <= nb.j1; ++j) {
        for (int i = nb.i0; i <= nb.i1; ++i) {
            Point p = g.node(i, j);
            if (p.x < geo.pivot_l || p.x > geo.pivot_r) continue;
            if (d2[g.index(i, j)] <= r2) {
                geo.band[g.index(i, j)] = 1;
                any = true;
            }
        }
    }
    if (!any)
        throw std::invalid_argument(
            "build_competitor: component does not meet the inset window");
    return geo;
}

double band_offset(const CompetitorGeometry& geo, double x, double t) {
    return x <= geo.mid ? t * (x - geo.pivot_l) : t * (geo.pivot_r - x);
}

} // namespace

ScalarField build_competitor(const ScalarField& u, const PositivitySet& pattern,
                             const CompetitorSpec& spec, double t) {
    if (t == 0.0) return u;
    CompetitorGeometry geo = competitor_geometry(u, pattern, spec, t);
    const Grid& g = u.grid;
    ScalarField v = u;
    for (int p = 0; p < g.node_count(); ++p) {
        if (!geo.band[p]) continue;
        Point q = g.node(p % g.nx, p / g.nx);
        v.values[p] = u.sample_or_zero({q.x, q.y + band_offset(geo, q.x, t)});
    }
    return v;
}

ScalarField build_competitor(const ScalarField& u, const CompetitorSpec& spec, double t) {
    return build_competitor(u, positivity_set(u), spec, t);
}

double energy_gap(const ScalarField& u, const PositivitySet& pattern, const CompetitorSpec& spec,
                  const Weight& w, double t) {
    const Grid& g = u.grid;
    NodeBox box = g.box_of(spec.window);
    double e0 = dirichlet_energy(u, box) + volume_energy(pattern, w, box);
    if (t == 0.0) return 0.0;

    CompetitorGeometry geo = competitor_geometry(u, pattern, spec, t);

    ScalarField vt = u;
    ScalarField ind(g);
    for (int p = 0; p < g.node_count(); ++p) ind.values[p] = pattern.indicator[p] ? 1.0 : 0.0;
    std::vector<std::uint8_t> tind = pattern.indicator;
    for (int p = 0; p < g.node_count(); ++p) {
        if (!geo.band[p]) continue;
        Point q = g.node(p % g.nx, p / g.nx);
        Point src{q.x, q.y + band_offset(geo, q.x, t)};
        vt.values[p] = u.sample_or_zero(src);
        tind[p] = ind.sample_or_zero(src) >= 0.5 ? 1 : 0;
    }
    PositivitySet tset = positivity_set_from_indicator(g, std::move(tind));
    double et = dirichlet_energy(vt, box) + volume_energy(tset, w, box);
    return et - e0;
}

double energy_gap(const ScalarField& u, const CompetitorSpec& spec, const Weight& w, double t) {
    return energy_gap(u, positivity_set(u), spec, w, t);
}

} // namespace fbx
