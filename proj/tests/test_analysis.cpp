#include "doctest.h"
#include "test_support.hpp"

#include "fbx/analysis.hpp"
#include "fbx/energy.hpp"

#include <algorithm>
#include <cmath>

using namespace fbx;

namespace {

constexpr double kPi = 3.14159265358979323846;

// the homogeneous degree-3/2 profile on the sector 0 <= theta <= 2pi/3
double sector_profile(double x, double y) {
    double rho = std::hypot(x, y);
    if (rho == 0.0) return 0.0;
    double th = std::atan2(y, x);
    if (th < 0.0 || th > 2.0 * kPi / 3.0) return 0.0;
    double v = std::pow(rho, 1.5) * std::sin(1.5 * th);
    return v > 0.0 ? v : 0.0;
}

// the FB-condition-matched crest blow-up on [pi/6, 5pi/6]
double crest_profile(double x, double y) {
    double rho = std::hypot(x, y);
    if (rho == 0.0 || y <= 0.0) return 0.0;
    double th = std::atan2(y, x);
    if (th < kPi / 6.0 || th > 5.0 * kPi / 6.0) return 0.0;
    double v = std::sqrt(2.0) / 3.0 * std::pow(rho, 1.5) * std::sin(1.5 * (th - kPi / 6.0));
    return v > 0.0 ? v : 0.0;
}

ScalarField fill(const Grid& g, double (*f)(double, double)) {
    ScalarField u(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            Point p = g.node(i, j);
            u.values[g.index(i, j)] = f(p.x, p.y);
        }
    return u;
}

double bilinear_ref(const ScalarField& u, Point p) {
    const Grid& g = u.grid;
    double fx = (p.x - g.x0) / g.h, fy = (p.y - g.y0) / g.h;
    int i = std::min((int)fx, g.nx - 2), j = std::min((int)fy, g.ny - 2);
    double ax = fx - i, ay = fy - j;
    return (1 - ax) * (1 - ay) * u.at(i, j) + ax * (1 - ay) * u.at(i + 1, j) +
           (1 - ax) * ay * u.at(i, j + 1) + ax * ay * u.at(i + 1, j + 1);
}

ScalarField wedge_field(const Grid& g, double slope, double floor_h) {
    ScalarField u(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            Point p = g.node(i, j);
            if (std::fabs(p.x) < 0.5 * g.h) continue; // keep the tip column at zero
            double cap = slope * std::fabs(p.x);
            if (floor_h > 0.0) cap = std::min(cap, floor_h);
            if (std::fabs(p.y) <= cap && !u.dirichlet(i, j)) u.at(i, j) = 1.0;
        }
    return u;
}

} // namespace

TEST_SUITE_BEGIN("analysis");

TEST_CASE("disk-clipped cell integrals: area and degenerate mass") {
    Grid g(261, 261, 0.01, -1.3, -1.3);
    Point c{0.013, -0.007};
    double r = 1.0;
    double area = 0.0, mass0 = 0.0;
    Weight w(0.5, 0.0);
    Point c0{0.25, 0.0};
    for (int j = 0; j < g.ny - 1; ++j)
        for (int i = 0; i < g.nx - 1; ++i) {
            Point p = g.node(i, j);
            Rect cell{p.x, p.x + g.h, p.y, p.y + g.h};
            area += disk_rect_area(cell, c, r);
            mass0 += disk_q2_mass(w, cell, c0, r);
        }
    CHECK(area == doctest::Approx(kPi).epsilon(1e-9));
    // integral of |y| over a unit disk centered on Gamma is 4/3
    CHECK(mass0 == doctest::Approx(4.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("rescale: identity, homogeneity, group action, direct evaluation") {
    Grid g(129, 129, 2.0 / 128.0, -1.0, -1.0);
    ScalarField u = fill(g, crest_profile);

    ScalarField id = rescale(u, 0.5, {0.0, 0.0}, 1.0);
    REQUIRE(id.grid.nx == g.nx);
    double range = u.max_value();
    for (int p = 0; p < g.node_count(); ++p)
        CHECK(std::fabs(id.values[p] - u.values[p]) <= 1e-12 * range);

    // homogeneous of degree gamma+1: the rescaled field is r-independent
    ScalarField a = rescale(u, 0.5, {0.0, 0.0}, 0.5);  // 65 nodes, spacing 1/32
    ScalarField b = rescale(u, 0.5, {0.0, 0.0}, 0.25); // 33 nodes, spacing 1/16
    for (int j = 0; j < b.grid.ny; ++j)
        for (int i = 0; i < b.grid.nx; ++i) {
            Point q = b.grid.node(i, j);
            CHECK(std::fabs(a.sample(q) - b.values[b.grid.index(i, j)]) <= 1e-10 * range);
        }

    // group action at aligned radii
    ScalarField ab = rescale(a, 0.5, {0.0, 0.0}, 0.5);
    for (int j = 0; j < ab.grid.ny; ++j)
        for (int i = 0; i < ab.grid.nx; ++i) {
            Point q = ab.grid.node(i, j);
            CHECK(std::fabs(ab.values[ab.grid.index(i, j)] - b.sample(q)) <= 1e-8 * range);
        }

    // generic radius against an independent bilinear evaluation
    double r = 0.37;
    ScalarField c = rescale(u, 0.5, {0.0, 0.0}, r);
    for (int j = 0; j < c.grid.ny; ++j)
        for (int i = 0; i < c.grid.nx; ++i) {
            Point q = c.grid.node(i, j);
            double want = bilinear_ref(u, {r * q.x, r * q.y}) / std::pow(r, 1.5);
            CHECK(std::fabs(c.values[c.grid.index(i, j)] - want) <=
                  1e-11 * range / std::pow(r, 1.5));
        }

    CHECK_THROWS(rescale(u, 0.5, {0.9, 0.0}, 0.5)); // ball exits domain
}

TEST_CASE("weiss_density: zero field and homogeneous constancy") {
    Grid gz(33, 33, 1.0 / 32.0, -0.5, -0.5);
    ScalarField z(gz);
    CHECK(weiss_density(z, Weight(0.5, 0.0), {0.0, 0.0}, 0.25) == doctest::Approx(0.0));

    // W is r-independent for the homogeneous sector profile; its value is
    // 1/2; the discrete boundary-layer bias decays like h/r
    Grid g(1761, 1761, 2.2 / 1760.0, -1.1, -1.1);
    ScalarField u = fill(g, sector_profile);
    Weight w(0.5, 0.0);
    double w1 = weiss_density(u, w, {0.0, 0.0}, 0.25);
    double w2 = weiss_density(u, w, {0.0, 0.0}, 0.5);
    double w3 = weiss_density(u, w, {0.0, 0.0}, 1.0);
    double scale = std::max({std::fabs(w1), std::fabs(w2), std::fabs(w3)});
    CHECK(std::fabs(w1 - w2) <= 0.02 * scale);
    CHECK(std::fabs(w2 - w3) <= 0.02 * scale);
    CHECK(std::fabs(w1 - w3) <= 0.02 * scale);
    CHECK(w3 == doctest::Approx(0.5).epsilon(0.03));

    CHECK_THROWS(weiss_density(u, w, {0.0, 0.0}, 2.0 * g.h)); // too small
    CHECK_THROWS(weiss_density(u, w, {0.0, 0.0}, 1.2));       // exits domain
}

TEST_CASE("weiss_series: ladder, defect, errors") {
    Grid g(129, 129, 2.0 / 128.0, -1.0, -1.0);
    ScalarField z(g);
    Weight w(0.5, 0.0);
    WeissSeries s = weiss_series(z, w, {0.0, 0.0}, 8.0 * g.h, 0.9);
    REQUIRE(s.radii.size() >= 3);
    CHECK(s.monotone_defect == 0.0);
    for (double v : s.values) CHECK(v == 0.0);
    for (std::size_t k = 0; k + 1 < s.radii.size(); ++k)
        CHECK(s.radii[k + 1] == doctest::Approx(2.0 * s.radii[k]));

    ScalarField u = fill(g, crest_profile);
    WeissSeries hs = weiss_series(u, w, {0.0, 0.0}, 8.0 * g.h, 0.9);
    double lo = *std::min_element(hs.values.begin(), hs.values.end());
    double hi = *std::max_element(hs.values.begin(), hs.values.end());
    CHECK(hs.monotone_defect <= 0.02 * std::max(std::fabs(hi), 1e-12));
    CHECK(hi - lo <= 0.03 * std::fabs(hi)); // near-constant series

    CHECK_THROWS(weiss_series(u, w, {0.0, 0.0}, 0.5, 0.25)); // empty ladder
}

TEST_CASE("weiss_via_mass: zero, full ball, mass-density consistency") {
    Grid gz(33, 33, 1.0 / 32.0, -0.5, -0.5);
    ScalarField z(gz);
    Weight w(0.5, 0.0);
    CHECK(weiss_via_mass(z, w, {0.0, 0.0}, 0.25) == doctest::Approx(0.0));

    // full positivity over the ball: c_n = integral of |y| over B_1 = 4/3
    Grid g(261, 261, 2.4 / 260.0, -1.2, -1.2);
    ScalarField full(g);
    for (double& v : full.values) v = 1.0;
    CHECK(weiss_via_mass(full, w, {0.0, 0.0}, 1.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-6));

    // the crest blow-up has W_mass = W_density = sqrt(3)/3
    ScalarField u = fill(g, crest_profile);
    for (double r : {0.25, 0.5}) {
        double wm = weiss_via_mass(u, w, {0.0, 0.0}, r);
        double wd = weiss_density(u, w, {0.0, 0.0}, r);
        CHECK(std::fabs(wm - wd) <= 0.1 * std::fabs(wm));
        CHECK(wm == doctest::Approx(std::sqrt(3.0) / 3.0).epsilon(0.03));
        CHECK(wm <= 4.0 / 3.0 + 1e-9);
    }
}

TEST_CASE("volume_density: full, empty, half plane") {
    Grid g(129, 129, 2.0 / 128.0, -1.0, -1.0);
    ScalarField full(g);
    for (double& v : full.values) v = 2.0;
    PositivitySet sf = positivity_set(full);
    CHECK(volume_density(sf, {0.0, 0.0}, 0.5) == doctest::Approx(1.0).epsilon(1e-9));

    ScalarField empty(g);
    CHECK(volume_density(positivity_set(empty), {0.0, 0.0}, 0.5) == doctest::Approx(0.0));

    ScalarField half(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (g.node(i, j).y > 0.0) half.at(i, j) = 1.0;
    double r = 16.0 * g.h;
    double d = volume_density(positivity_set(half), {0.0, 0.0}, r);
    CHECK(std::fabs(d - 0.5) <= 4.0 * g.h / r);

    CHECK_THROWS(volume_density(sf, {0.0, 0.0}, 2.0 * g.h));
}

TEST_CASE("classify_fb_on_gamma") {
    Grid g(65, 65, 1.0 / 32.0, -1.0, -1.0);
    Weight w(0.5, 0.0);
    ScalarField z(g);
    CHECK(classify_fb_on_gamma(z, w, 0.02).empty());

    // half-plane touching Gamma: density about 1/2, labeled nondegenerate
    ScalarField half(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (g.node(i, j).y > 0.0 && !half.dirichlet(i, j)) half.at(i, j) = 1.0;
    auto cls = classify_fb_on_gamma(half, w, 0.02);
    REQUIRE(!cls.empty());
    for (const auto& c : cls) {
        CHECK(c.density == doctest::Approx(0.5).epsilon(0.25));
        CHECK(c.label == FBLabel::nondegenerate);
        CHECK(c.threshold == 0.02);
    }

    // a lone needle one node above Gamma: tiny density at its Gamma node
    ScalarField needle(g);
    needle.at(32, 33) = 1.0; // the node (0, h)
    auto nc = classify_fb_on_gamma(needle, w, 0.02);
    bool found_sigma = false;
    for (const auto& c : nc)
        if (c.label == FBLabel::sigma_candidate) found_sigma = true;
    CHECK(found_sigma);
}

TEST_CASE("volume_density stays in range and classification scales invariantly") {
    std::mt19937_64 rng(421);
    Grid g(65, 65, 1.0 / 32.0, -1.0, -1.0);
    Weight w(0.5, 0.0);
    std::uniform_int_distribution<int> coin(0, 2);
    for (int it = 0; it < 5; ++it) {
        ScalarField u(g);
        for (int p = 0; p < g.node_count(); ++p)
            if (!u.boundary_mask[p] && coin(rng) == 0) u.values[p] = 0.25 + 0.5 * coin(rng);
        PositivitySet s = positivity_set(u);
        for (double r : {4.0 * g.h, 8.0 * g.h, 0.5}) {
            double d = volume_density(s, {0.0, 0.0}, r);
            CHECK(d >= 0.0);
            CHECK(d <= 1.0 + 4.0 * g.h / r);
        }
        // labels depend only on the positivity set: scaling u leaves them
        auto base = classify_fb_on_gamma(u, w, 0.02);
        ScalarField v = u;
        for (double& x : v.values) x *= 3.7;
        auto scaled = classify_fb_on_gamma(v, w, 0.02);
        REQUIRE(base.size() == scaled.size());
        for (std::size_t k = 0; k < base.size(); ++k) {
            CHECK(base[k].density == scaled[k].density);
            CHECK(base[k].label == scaled[k].label);
        }
    }
}

TEST_CASE("blowup_exponent: homogeneous profiles and error case") {
    Grid g(513, 513, 1.1 / 512.0, -0.55, -0.55);
    ScalarField u = fill(g, sector_profile);
    std::vector<double> radii = {0.1, 0.15, 0.2, 0.3, 0.4};
    double slope = blowup_exponent(u, {0.0, 0.0}, radii);
    CHECK(std::fabs(slope - 1.5) <= 1e-3);

    ScalarField lin(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double y = g.node(i, j).y;
            lin.at(i, j) = y > 0.0 ? y : 0.0;
        }
    double s1 = blowup_exponent(lin, {0.0, 0.0}, radii);
    CHECK(std::fabs(s1 - 1.0) <= 1e-3);

    ScalarField z(g);
    CHECK_THROWS(blowup_exponent(z, {0.0, 0.0}, radii));
    CHECK_THROWS(blowup_exponent(u, {0.0, 0.0}, {0.1, 0.2})); // too few radii
}

TEST_CASE("find_standard_window: wedge, degenerate and pinch") {
    Grid g(513, 257, 2.0 / 512.0, -1.0, -0.5);
    ScalarField wedge = wedge_field(g, 0.1, 0.0);
    WindowReport rep = find_standard_window(wedge, {0.0, 0.0}, 2.0);
    CHECK(rep.index == 0);
    CHECK(rep.N0 > 8.0);  // invariant N0 > 4N
    CHECK(rep.N0 < 10.5); // outer radius / height for the 0.1-slope wedge
    CHECK(rep.right_height == 1.0);
    CHECK(rep.left_height >= 0.5);
    CHECK(rep.left_height < 1.05);
    CHECK(rep.rho > 0.0);
    CHECK(rep.attenuation_radius > 0.0);

    ScalarField z(g);
    CHECK_THROWS_AS((void)find_standard_window(z, {0.0, 0.0}, 2.0), std::runtime_error);

    // pinched wedge: slope profile capped at 0.03 beyond |x| = 0.3
    ScalarField pinch = wedge_field(g, 0.1, 0.03);
    WindowReport pr = find_standard_window(pinch, {0.0, 0.0}, 2.0);
    CHECK(pr.left_height >= 0.5);
    CHECK(pr.N0 > 8.0);
}

TEST_CASE("run_diagnostics: zero field and an exact linear one-phase profile") {
    Grid gz(33, 33, 1.0 / 32.0, 0, 0);
    Weight wz(0.5, 0.0);
    ScalarField z(gz);
    DiagnosticsReport rz = run_diagnostics(z, wz);
    CHECK(rz.positive_node_count == 0);
    CHECK(rz.fb_node_count == 0);
    CHECK(rz.lipschitz_ratio_max == 0.0);
    CHECK(rz.fb_residual_max == 0.0);
    CHECK(rz.interior_ball_count == 0);

    // u = sqrt(5) y_+ with Gamma far below: the probe-row residual is
    // exactly the h offset of Q^2
    Grid g(65, 65, 1.0 / 64.0, 0, 0);
    Weight w(0.5, -5.0);
    ScalarField lin(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double y = g.node(i, j).y;
            lin.at(i, j) = y > 0.0 ? std::sqrt(5.0) * y : 0.0;
        }
    DiagnosticsReport r = run_diagnostics(lin, w);
    CHECK(r.fb_node_count > 0);
    CHECK(r.fb_residual_max <= 2.0 * g.h);
    CHECK(r.height_c2_like > 0.0);
}

TEST_SUITE_END();
