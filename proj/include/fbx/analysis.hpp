#ifndef FBX_ANALYSIS_HPP
#define FBX_ANALYSIS_HPP

#include "fbx/grid.hpp"

#include <functional>
#include <vector>

namespace fbx {

/** Unit-disk area, the volume-density normalizer in two dimensions. */
constexpr double kOmega2 = 3.14159265358979323846;

/** Weiss (gamma+1)-density sampled over a dyadic radius ladder. */
struct WeissSeries {
    Point center;
    std::vector<double> radii;  // ascending
    std::vector<double> values; // W(center, r) per radius
    double monotone_defect = 0.0;
};

enum class FBLabel { sigma_candidate, nondegenerate };

struct FBClassification {
    Point point;
    double density = 0.0;
    FBLabel label = FBLabel::nondegenerate;
    double threshold = 0.0;
};

struct WindowReport {
    double N = 0.0;
    double N0 = 0.0;          // outer section radius after normalization
    double rho = 0.0;         // composite rescaling radius (physical units)
    double left_height = 0.0; // section height at N0 - N, >= 1/2 on success
    double right_height = 1.0;
    Point witness_w;          // realizes the outer section height
    Point witness_v;          // realizes the inner section height
    int index = 0;            // succeeding step of the shrinking-radius search
    double attenuation_radius = 0.0;
};

struct DiagnosticsReport {
    double lipschitz_ratio_max = 0.0;   // |grad u| / max(dist to FB, |y|)^gamma
    double gradient_q_ratio_max = 0.0;  // |grad u| / Q over positive nodes
    double interior_ball_ratio_min = 0.0;
    double interior_ball_ratio_max = 0.0;
    int interior_ball_count = 0;
    double fb_residual_max = 0.0;       // | |grad u|^2 - Q^2 | one cell inside
    double fb_residual_mean = 0.0;
    int fb_node_count = 0;
    double height_c1_like = 0.0;        // min column height, middle half
    double height_c2_like = 0.0;        // max column height
    int positive_node_count = 0;
};

/**
 * Exact integral of f(y) over cell-rectangle intersected with the disk
 * B_r(c); antideriv_y is the closed-form antiderivative of f. Straddling
 * cells are integrated piecewise with an arc-angle substitution.
 */
double disk_cell_integral(const Rect& cell, Point c, double r,
                          const std::function<double(double)>& antideriv_y);

double disk_rect_area(const Rect& cell, Point c, double r);
double disk_q2_mass(const Weight& w, const Rect& cell, Point c, double r);

/**
 * Rescaled field u(center + r*.)/r^(gamma+1) on a unit-scale grid over
 * [-1,1]^2, bilinear resampling. The square hull of B_r(center) must lie
 * inside the source grid.
 */
ScalarField rescale(const ScalarField& u, double gamma, Point center, double r);

/**
 * Weiss (gamma+1)-density at a center on Gamma: scale-weighted bulk energy
 * over B_r minus the boundary-sphere term (trapezoid circle quadrature).
 */
double weiss_density(const ScalarField& u, const Weight& w, Point center, double r,
                     int circle_samples = 128);

WeissSeries weiss_series(const ScalarField& u, const Weight& w, Point center, double r_min,
                         double r_max, int circle_samples = 128);

/** The pure weighted-mass form r^-(2+2 gamma) * integral of Q^2 chi_{u>0}. */
double weiss_via_mass(const ScalarField& u, const Weight& w, Point center, double r);

/** Area fraction of the positivity set in B_r(center); cells clipped exactly. */
double volume_density(const PositivitySet& s, Point center, double r);

/**
 * Labels every free-boundary node within h of Gamma by its volume density
 * at the smallest reliable radius (4h). Nodes whose 4h-ball exits the
 * domain are skipped.
 */
std::vector<FBClassification> classify_fb_on_gamma(const ScalarField& u, const Weight& w,
                                                   double threshold);

/** Least-squares slope of log sup_{B_r} u against log r. */
double blowup_exponent(const ScalarField& u, Point center, const std::vector<double>& radii);

/**
 * The shrinking-radius window search: from the attenuation radius of the
 * cone |y| <= |x|/(4N), tests radii r_i = 1 - (1/2) sum 2^-k against the
 * halving height bound, and returns the window normalized so the outer
 * section height is 1. Throws when the search exhausts (degenerate case).
 */
WindowReport find_standard_window(const ScalarField& u, Point center, double N);

DiagnosticsReport run_diagnostics(const ScalarField& u, const Weight& w);

} // namespace fbx

#endif
