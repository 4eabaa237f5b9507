#include "fbx/analysis.hpp"

#include "fbx/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fbx {

namespace {

constexpr double kPi = 3.14159265358979323846;

// 20-point Gauss-Legendre nodes/weights on [-1, 1].
const double kGlx[20] = {
    -0.9931285991850949, -0.9639719272779138, -0.9122344282513259, -0.8391169718222188,
    -0.7463319064601508, -0.6360536807265150, -0.5108670019508271, -0.3737060887154196,
    -0.2277858511416451, -0.0765265211334973, 0.0765265211334973,  0.2277858511416451,
    0.3737060887154196,  0.5108670019508271,  0.6360536807265150,  0.7463319064601508,
    0.8391169718222188,  0.9122344282513259,  0.9639719272779138,  0.9931285991850949};
const double kGlw[20] = {
    0.0176140071391521, 0.0406014298003869, 0.0626720483341091, 0.0832767415767048,
    0.1019301198172404, 0.1181945319615184, 0.1316886384491766, 0.1420961093183820,
    0.1491729864726037, 0.1527533871307258, 0.1527533871307258, 0.1491729864726037,
    0.1420961093183820, 0.1316886384491766, 0.1181945319615184, 0.1019301198172404,
    0.0832767415767048, 0.0626720483341091, 0.0406014298003869, 0.0176140071391521};

// integral over [a, b] (in the translated x variable) of
// F(upper(x)) - F(lower(x)), where one bound follows the circle arc.
// Substitution x = r sin(phi) keeps the integrand analytic.
double arc_piece(double a, double b, double r, double cy, double y_lo, double y_hi,
                 bool up_is_arc, bool lo_is_arc, const std::function<double(double)>& F) {
    double pa = std::asin(std::clamp(a / r, -1.0, 1.0));
    double pb = std::asin(std::clamp(b / r, -1.0, 1.0));
    int chunks = std::max(1, (int)std::ceil((pb - pa) / (kPi / 8.0)));
    double total = 0.0;
    double fyhi = F(y_hi), fylo = F(y_lo);
    for (int c = 0; c < chunks; ++c) {
        double qa = pa + (pb - pa) * c / chunks;
        double qb = pa + (pb - pa) * (c + 1) / chunks;
        double mid = 0.5 * (qa + qb), half = 0.5 * (qb - qa);
        double acc = 0.0;
        for (int k = 0; k < 20; ++k) {
            double phi = mid + half * kGlx[k];
            double s = r * std::cos(phi);
            double up = up_is_arc ? F(cy + s) : fyhi;
            double lo = lo_is_arc ? F(cy - s) : fylo;
            double d = up - lo;
            if (d > 0.0) acc += kGlw[k] * d * (r * std::cos(phi));
        }
        total += acc * half;
    }
    return total;
}

} // namespace

double disk_cell_integral(const Rect& cell, Point c, double r,
                          const std::function<double(double)>& F) {
    // translated x-range relative to the disk center
    double X1 = cell.x_lo - c.x, X2 = cell.x_hi - c.x;
    double a = std::max(X1, -r), b = std::min(X2, r);
    if (a >= b) return 0.0;

    // fully-inside fast path
    double dx = std::max(std::fabs(X1), std::fabs(X2));
    double dy = std::max(std::fabs(cell.y_lo - c.y), std::fabs(cell.y_hi - c.y));
    if (dx * dx + dy * dy <= r * r)
        return (cell.x_hi - cell.x_lo) * (F(cell.y_hi) - F(cell.y_lo));

    // breakpoints where the arcs cross the cell's horizontal edges
    std::vector<double> cuts = {a, b};
    for (double Y : {cell.y_lo, cell.y_hi}) {
        double d = Y - c.y;
        if (std::fabs(d) < r) {
            double xc = std::sqrt(r * r - d * d);
            if (xc > a && xc < b) cuts.push_back(xc);
            if (-xc > a && -xc < b) cuts.push_back(-xc);
        }
    }
    if (0.0 > a && 0.0 < b) cuts.push_back(0.0);
    std::sort(cuts.begin(), cuts.end());

    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        double pa = cuts[k], pb = cuts[k + 1];
        if (pb - pa < 1e-15 * r) continue;
        double xm = 0.5 * (pa + pb);
        double s = std::sqrt(std::max(0.0, r * r - xm * xm));
        double arc_up = c.y + s, arc_lo = c.y - s;
        bool up_is_arc = arc_up < cell.y_hi;
        bool lo_is_arc = arc_lo > cell.y_lo;
        double up = up_is_arc ? arc_up : cell.y_hi;
        double lo = lo_is_arc ? arc_lo : cell.y_lo;
        if (up <= lo) continue;
        if (!up_is_arc && !lo_is_arc) {
            total += (pb - pa) * (F(cell.y_hi) - F(cell.y_lo));
        } else {
            total += arc_piece(pa, pb, r, c.y, cell.y_lo, cell.y_hi, up_is_arc, lo_is_arc, F);
        }
    }
    return total;
}

double disk_rect_area(const Rect& cell, Point c, double r) {
    return disk_cell_integral(cell, c, r, [](double y) { return y; });
}

double disk_q2_mass(const Weight& w, const Rect& cell, Point c, double r) {
    return disk_cell_integral(cell, c, r, [&](double y) { return weight_q2_antiderivative(w, y); });
}

ScalarField rescale(const ScalarField& u, double gamma, Point center, double r) {
    const Grid& g = u.grid;
    if (!(r > 0.0)) throw std::invalid_argument("rescale: radius must be > 0");
    Rect bb = g.bounds();
    double eps = 1e-9 * g.h;
    if (center.x - r < bb.x_lo - eps || center.x + r > bb.x_hi + eps ||
        center.y - r < bb.y_lo - eps || center.y + r > bb.y_hi + eps)
        throw std::invalid_argument("rescale: ball exits domain");

    int half = std::max(2, (int)std::llround(r / g.h));
    int n = 2 * half + 1;
    Grid tg(n, n, 2.0 / (n - 1), -1.0, -1.0, (g.gamma_line_y - center.y) / r);
    ScalarField v(tg);
    double scale = std::pow(r, gamma + 1.0);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            Point q = tg.node(i, j);
            Point src{center.x + r * q.x, center.y + r * q.y};
            v.values[tg.index(i, j)] = u.sample(src) / scale;
        }
    }
    return v;
}

namespace {

struct BulkIntegrals {
    double dirichlet = 0.0;
    double mass = 0.0;
    double area_positive = 0.0;
};

// Bulk integrals over B_r(c): cell-based |grad u|^2 weighted by the exact
// in-disk area fraction, k/4-weighted exact Q^2 mass, and the k/4-weighted
// positive area.
BulkIntegrals bulk_over_disk(const ScalarField* u, const PositivitySet& s, const Weight* w,
                             Point c, double r) {
    const Grid& g = s.grid;
    BulkIntegrals out;
    Rect disk_box{c.x - r, c.x + r, c.y - r, c.y + r};
    NodeBox nb = g.box_of(disk_box);
    int i0 = std::max(0, nb.i0 - 1), i1 = std::min(g.nx - 2, nb.i1);
    int j0 = std::max(0, nb.j0 - 1), j1 = std::min(g.ny - 2, nb.j1);
    double cell_area = g.h * g.h;
    for (int j = j0; j <= j1; ++j) {
        for (int i = i0; i <= i1; ++i) {
            Point p = g.node(i, j);
            Rect cell{p.x, p.x + g.h, p.y, p.y + g.h};
            // quick reject: cell box vs disk
            double ddx = std::max({cell.x_lo - c.x, c.x - cell.x_hi, 0.0});
            double ddy = std::max({cell.y_lo - c.y, c.y - cell.y_hi, 0.0});
            if (ddx * ddx + ddy * ddy >= r * r) continue;

            double area = disk_rect_area(cell, c, r);
            if (area <= 0.0) continue;
            if (u) {
                double v = u->values[g.index(i, j)];
                double dxv = u->values[g.index(i + 1, j)] - v;
                double dyv = u->values[g.index(i, j + 1)] - v;
                out.dirichlet += (dxv * dxv + dyv * dyv) * (area / cell_area);
            }
            int k = (s.indicator[g.index(i, j)] ? 1 : 0) + (s.indicator[g.index(i + 1, j)] ? 1 : 0) +
                    (s.indicator[g.index(i, j + 1)] ? 1 : 0) +
                    (s.indicator[g.index(i + 1, j + 1)] ? 1 : 0);
            if (k > 0) {
                out.area_positive += 0.25 * k * area;
                if (w) out.mass += 0.25 * k * disk_q2_mass(*w, cell, c, r);
            }
        }
    }
    return out;
}

void check_radius(const Grid& g, Point c, double r, bool need_inside) {
    if (r < 4.0 * g.h * (1.0 - 1e-9)) throw std::invalid_argument("radius too small (< 4h)");
    if (need_inside) {
        Rect bb = g.bounds();
        double eps = 1e-9 * g.h;
        if (c.x - r < bb.x_lo - eps || c.x + r > bb.x_hi + eps || c.y - r < bb.y_lo - eps ||
            c.y + r > bb.y_hi + eps)
            throw std::invalid_argument("radius too large (ball exits domain)");
    }
}

} // namespace

double weiss_density(const ScalarField& u, const Weight& w, Point center, double r,
                     int circle_samples) {
    check_radius(u.grid, center, r, true);
    if (circle_samples < 8) throw std::invalid_argument("weiss_density: too few circle samples");
    PositivitySet s = positivity_set(u);
    BulkIntegrals bulk = bulk_over_disk(&u, s, &w, center, r);

    double circ = 0.0;
    for (int k = 0; k < circle_samples; ++k) {
        double th = 2.0 * kPi * k / circle_samples;
        Point p{center.x + r * std::cos(th), center.y + r * std::sin(th)};
        double v = u.sample(p);
        circ += v * v;
    }
    circ *= 2.0 * kPi * r / circle_samples;

    double g1 = w.gamma + 1.0;
    return std::pow(r, -2.0 * g1) * (bulk.dirichlet + bulk.mass) -
           g1 * std::pow(r, -(2.0 * g1 + 1.0)) * circ;
}

WeissSeries weiss_series(const ScalarField& u, const Weight& w, Point center, double r_min,
                         double r_max, int circle_samples) {
    const Grid& g = u.grid;
    Rect bb = g.bounds();
    double dist_boundary = std::min(std::min(center.x - bb.x_lo, bb.x_hi - center.x),
                                    std::min(center.y - bb.y_lo, bb.y_hi - center.y));
    if (r_min > r_max || r_max > dist_boundary * (1.0 + 1e-9))
        throw std::invalid_argument("weiss_series: empty or out-of-domain ladder");
    WeissSeries out;
    out.center = center;
    for (double r = r_min; r <= r_max * (1.0 + 1e-12); r *= 2.0) {
        out.radii.push_back(r);
        out.values.push_back(weiss_density(u, w, center, r, circle_samples));
    }
    out.monotone_defect = 0.0;
    for (std::size_t k = 0; k + 1 < out.values.size(); ++k)
        out.monotone_defect = std::max(out.monotone_defect, out.values[k] - out.values[k + 1]);
    return out;
}

double weiss_via_mass(const ScalarField& u, const Weight& w, Point center, double r) {
    check_radius(u.grid, center, r, true);
    PositivitySet s = positivity_set(u);
    BulkIntegrals bulk = bulk_over_disk(nullptr, s, &w, center, r);
    return std::pow(r, -(2.0 + 2.0 * w.gamma)) * bulk.mass;
}

double volume_density(const PositivitySet& s, Point center, double r) {
    check_radius(s.grid, center, r, false);
    BulkIntegrals bulk = bulk_over_disk(nullptr, s, nullptr, center, r);
    return bulk.area_positive / (kOmega2 * r * r);
}

std::vector<FBClassification> classify_fb_on_gamma(const ScalarField& u, const Weight& w,
                                                   double threshold) {
    const Grid& g = u.grid;
    PositivitySet s = positivity_set(u);
    std::vector<FBClassification> out;
    double r = 4.0 * g.h;
    Rect bb = g.bounds();
    for (const NodeIndex& n : free_boundary_nodes(s)) {
        Point p = g.node(n.i, n.j);
        if (std::fabs(p.y - w.line_y) > g.h * (1.0 + 1e-9)) continue;
        if (p.x - r < bb.x_lo || p.x + r > bb.x_hi || p.y - r < bb.y_lo || p.y + r > bb.y_hi)
            continue; // 4h-ball exits the domain
        FBClassification c;
        c.point = p;
        c.density = volume_density(s, p, r);
        c.threshold = threshold;
        c.label = c.density < threshold ? FBLabel::sigma_candidate : FBLabel::nondegenerate;
        out.push_back(c);
    }
    return out;
}

double blowup_exponent(const ScalarField& u, Point center, const std::vector<double>& radii) {
    if (radii.size() < 3) throw std::invalid_argument("blowup_exponent: need at least 3 radii");
    const Grid& g = u.grid;
    std::vector<double> lx, ly;
    for (double r : radii) {
        Rect bb = g.bounds();
        if (center.x - r < bb.x_lo || center.x + r > bb.x_hi || center.y - r < bb.y_lo ||
            center.y + r > bb.y_hi)
            throw std::invalid_argument("blowup_exponent: ball exits domain");
        double sup = 0.0;
        NodeBox nb = g.box_of({center.x - r, center.x + r, center.y - r, center.y + r});
        for (int j = nb.j0; j <= nb.j1; ++j) {
            for (int i = nb.i0; i <= nb.i1; ++i) {
                Point p = g.node(i, j);
                double dx = p.x - center.x, dy = p.y - center.y;
                if (dx * dx + dy * dy <= r * r)
                    sup = std::max(sup, u.values[g.index(i, j)]);
            }
        }
        const int m = 1024;
        for (int k = 0; k < m; ++k) {
            double th = 2.0 * kPi * k / m;
            sup = std::max(sup, u.sample({center.x + r * std::cos(th), center.y + r * std::sin(th)}));
        }
        if (!(sup > 0.0))
            throw std::runtime_error("blowup_exponent: sup vanishes at a radius");
        lx.push_back(std::log(r));
        ly.push_back(std::log(sup));
    }
    double n = (double)lx.size(), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sx += lx[k];
        sy += ly[k];
        sxx += lx[k] * lx[k];
        sxy += lx[k] * ly[k];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

struct SectionProbe {
    double height = 0.0;
    Point witness{0.0, 0.0};
    bool found = false;
};

// Max |y - line| over free-boundary nodes in the vertical band
// | |x - cx| - R | <= h, restricted to |y - line| <= y_cap.
SectionProbe section_height(const Grid& g, const std::vector<NodeIndex>& fb, Point center,
                            double line, double R, double y_cap) {
    SectionProbe out;
    for (const NodeIndex& n : fb) {
        Point p = g.node(n.i, n.j);
        double ax = std::fabs(p.x - center.x);
        if (std::fabs(ax - R) > g.h * (1.0 + 1e-9)) continue;
        double ay = std::fabs(p.y - line);
        if (ay > y_cap * (1.0 + 1e-9)) continue;
        if (!out.found || ay > out.height) {
            out.height = ay;
            out.witness = p;
            out.found = true;
        }
    }
    return out;
}

} // namespace

WindowReport find_standard_window(const ScalarField& u, Point center, double N) {
    if (!(N >= 2.0)) throw std::invalid_argument("find_standard_window: N must be >= 2");
    const Grid& g = u.grid;
    double line = g.gamma_line_y;
    double eta = 1.0 / (4.0 * N);

    PositivitySet s = positivity_set(u);
    std::vector<NodeIndex> fb = free_boundary_nodes(s);
    std::vector<NodeIndex> positives;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (s.indicator[g.index(i, j)]) positives.push_back({i, j});

    Rect bb = g.bounds();
    double r_bound = std::min(std::min(center.x - bb.x_lo, bb.x_hi - center.x),
                              std::min(center.y - bb.y_lo, bb.y_hi - center.y));

    // attenuation radius: largest dyadic-graded radius whose ball keeps the
    // positivity set inside the cone |y - line| <= eta |x - cx|
    double r_att = 0.0;
    for (int q = 0; q <= 60; ++q) {
        double r = r_bound * std::pow(2.0, -q / 4.0);
        if (r < 8.0 * g.h) break;
        bool ok = true;
        for (const NodeIndex& n : positives) {
            Point p = g.node(n.i, n.j);
            double dx = p.x - center.x, dy = p.y - center.y;
            if (dx * dx + dy * dy > r * r) continue;
            if (std::fabs(p.y - line) > eta * std::fabs(p.x - center.x) + 1e-12) {
                ok = false;
                break;
            }
        }
        if (ok) {
            r_att = r;
            break;
        }
    }
    if (r_att == 0.0)
        throw std::runtime_error("find_standard_window: no attenuation radius (cone violated)");

    auto height_v = [&](double rho_v) -> SectionProbe {
        SectionProbe p = section_height(g, fb, center, line, rho_v * r_att, r_att);
        p.height /= r_att;
        return p;
    };

    double partial = 0.0; // sum of 2^-k
    for (int i = 0;; ++i) {
        double r_i = 1.0 - 0.5 * partial;
        double bound_i = 0.5 * std::pow(2.0, -i) * eta;
        if (r_i * r_att < 0.5 * r_att + 2.0 * g.h || bound_i * r_att < 0.5 * g.h)
            throw std::runtime_error(
                "find_standard_window: degenerate (positivity vanishes on the inner rectangle)");
        SectionProbe outer = height_v(r_i);
        if (outer.found && outer.height >= bound_i) {
            double scale = outer.height;
            double n0 = r_i / scale;
            double left_rv = r_i - N * scale;
            if (n0 > 4.0 * N && left_rv > 0.0) {
                SectionProbe inner = height_v(left_rv);
                double lh = inner.found ? inner.height / scale : 0.0;
                if (lh >= 0.5) {
                    WindowReport rep;
                    rep.N = N;
                    rep.N0 = n0;
                    rep.rho = r_att * scale;
                    rep.left_height = lh;
                    rep.right_height = 1.0;
                    rep.witness_w = outer.witness;
                    rep.witness_v = inner.witness;
                    rep.index = i;
                    rep.attenuation_radius = r_att;
                    return rep;
                }
            }
        }
        partial += std::pow(2.0, -(i + 1));
    }
}

DiagnosticsReport run_diagnostics(const ScalarField& u, const Weight& w) {
    const Grid& g = u.grid;
    DiagnosticsReport rep;
    PositivitySet s = positivity_set(u);
    std::vector<NodeIndex> fb = free_boundary_nodes(s);
    rep.fb_node_count = (int)fb.size();

    std::vector<std::uint8_t> fb_sites(g.node_count(), 0);
    for (const NodeIndex& n : fb) fb_sites[g.index(n.i, n.j)] = 1;
    std::vector<double> dist2 = fb.empty() ? std::vector<double>() : distance_sq_transform(g, fb_sites);

    auto grad = [&](int i, int j) {
        double gx, gy;
        if (i == 0)
            gx = (u.at(i + 1, j) - u.at(i, j)) / g.h;
        else if (i == g.nx - 1)
            gx = (u.at(i, j) - u.at(i - 1, j)) / g.h;
        else
            gx = (u.at(i + 1, j) - u.at(i - 1, j)) / (2.0 * g.h);
        if (j == 0)
            gy = (u.at(i, j + 1) - u.at(i, j)) / g.h;
        else if (j == g.ny - 1)
            gy = (u.at(i, j) - u.at(i, j - 1)) / g.h;
        else
            gy = (u.at(i, j + 1) - u.at(i, j - 1)) / (2.0 * g.h);
        return std::sqrt(gx * gx + gy * gy);
    };

    // (a) fitted Lipschitz ratio and the gradient-vs-Q bound
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!s.indicator[g.index(i, j)]) continue;
            ++rep.positive_node_count;
            Point p = g.node(i, j);
            double gv = grad(i, j);
            double d = fb.empty() ? std::numeric_limits<double>::infinity()
                                  : std::sqrt(dist2[g.index(i, j)]);
            double denom = std::pow(std::max(d, std::fabs(p.y - w.line_y)), w.gamma);
            if (denom > 0.0 && std::isfinite(denom))
                rep.lipschitz_ratio_max = std::max(rep.lipschitz_ratio_max, gv / denom);
            double q = eval_weight(w, p);
            if (q > 0.0) rep.gradient_q_ratio_max = std::max(rep.gradient_q_ratio_max, gv / q);
        }
    }

    // (b) interior-ball ratios on balls disjoint from Gamma
    Rect bb = g.bounds();
    bool first_ball = true;
    for (const NodeIndex& n : fb) {
        Point p = g.node(n.i, n.j);
        double cap = std::min(std::fabs(p.y - w.line_y),
                              std::min(std::min(p.x - bb.x_lo, bb.x_hi - p.x),
                                       std::min(p.y - bb.y_lo, bb.y_hi - p.y)));
        if (cap < 4.0 * g.h) continue;
        double r = 0.95 * cap;
        double m = 0.0;
        for (int k = 0; k < 64; ++k) {
            double th = 2.0 * kPi * k / 64;
            m = std::max(m, u.sample({p.x + 0.5 * r * std::cos(th), p.y + 0.5 * r * std::sin(th)}));
        }
        double qmin = std::pow(std::fabs(p.y - w.line_y) - 0.5 * r, w.gamma);
        double ratio = m / (r * qmin);
        if (first_ball) {
            rep.interior_ball_ratio_min = rep.interior_ball_ratio_max = ratio;
            first_ball = false;
        } else {
            rep.interior_ball_ratio_min = std::min(rep.interior_ball_ratio_min, ratio);
            rep.interior_ball_ratio_max = std::max(rep.interior_ball_ratio_max, ratio);
        }
        ++rep.interior_ball_count;
    }

    // (c) free-boundary residual one cell inside
    double res_sum = 0.0;
    int res_count = 0;
    for (const NodeIndex& n : fb) {
        int best_i = -1, best_j = -1;
        double best_v = 0.0;
        const int di[4] = {1, -1, 0, 0};
        const int dj[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            int ni = n.i + di[d], nj = n.j + dj[d];
            if (!g.in_grid(ni, nj)) continue;
            double v = u.at(ni, nj);
            if (v > best_v) {
                best_v = v;
                best_i = ni;
                best_j = nj;
            }
        }
        if (best_i < 0) continue;
        double gv = grad(best_i, best_j);
        double q = eval_weight(w, g.node(best_i, best_j));
        double res = std::fabs(gv * gv - q * q);
        rep.fb_residual_max = std::max(rep.fb_residual_max, res);
        res_sum += res;
        ++res_count;
    }
    rep.fb_residual_mean = res_count > 0 ? res_sum / res_count : 0.0;

    // (d) column-height statistics of the largest component
    if (s.component_count > 0) {
        std::vector<int> sizes(s.component_count + 1, 0);
        for (int p = 0; p < g.node_count(); ++p) ++sizes[s.labels[p]];
        int big = 1;
        for (int c = 2; c <= s.component_count; ++c)
            if (sizes[c] > sizes[big]) big = c;
        std::vector<double> height(g.nx, -1.0);
        int imin = g.nx, imax = -1;
        for (int j = 0; j < g.ny; ++j) {
            for (int i = 0; i < g.nx; ++i) {
                if (s.labels[g.index(i, j)] != big) continue;
                Point p = g.node(i, j);
                height[i] = std::max(height[i], std::fabs(p.y - w.line_y));
                imin = std::min(imin, i);
                imax = std::max(imax, i);
            }
        }
        int span = imax - imin;
        int a = imin + span / 4, b = imax - span / 4;
        bool first = true;
        for (int i = imin; i <= imax; ++i) {
            if (height[i] < 0.0) continue;
            rep.height_c2_like = std::max(rep.height_c2_like, height[i]);
            if (i >= a && i <= b) {
                if (first) {
                    rep.height_c1_like = height[i];
                    first = false;
                } else {
                    rep.height_c1_like = std::min(rep.height_c1_like, height[i]);
                }
            }
        }
    }
    return rep;
}

} // namespace fbx
