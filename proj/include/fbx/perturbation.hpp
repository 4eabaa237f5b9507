#ifndef FBX_PERTURBATION_HPP
#define FBX_PERTURBATION_HPP

#include "fbx/grid.hpp"

#include <vector>

namespace fbx {

/** Horizontal shear (x, y) -> (x, y + sign * t * (x - pivot_x)). */
struct ShearSpec {
    double t = 0.0;
    double pivot_x = 0.0;
    int sign = 1;
};

struct IncreaseReport {
    double lhs = 0.0;  // Dirichlet energy of the resampled composite
    double rhs = 0.0;  // (1 + t + t^2) times the original
    bool holds = false;
    double algebraic_lhs = 0.0; // composite energy from the un-resampled difference quotients
    bool algebraic_holds = false;
};

struct DecreaseReport {
    double derivative = 0.0;
    double bound = 0.0; // -a * mass(Omega)
    bool holds = false;
};

/**
 * Window and margins for the two-sided shear competitor: S = window,
 * pivots sit 1/2 inside each end, epsilon is the separation margin of the
 * standard component, t must stay below epsilon'/(2N) with
 * N = (width - 1)/2 and epsilon' = min(epsilon, dist of the component's
 * boundary to Gamma).
 */
struct CompetitorSpec {
    Rect window;
    int component_id = 1;
    double epsilon = 0.0;
    std::vector<double> t_values;
};

/**
 * u composed with the shear inside rect (bilinear resampling), unchanged
 * outside. Requires the support margin epsilon > |t| * max|x - pivot|.
 */
ScalarField shear_field(const ScalarField& u, const ShearSpec& s, const Rect& rect);

/** Checks the Dirichlet increase estimate lhs <= (1 + t + t^2) rhs. */
IncreaseReport verify_increase(const ScalarField& u, const ShearSpec& s, const Rect& rect);

/**
 * Exact d/dt at t=0 of the Q^2 mass of F_{-t}(Omega): per column of full
 * cells, width * (-x_mid) * (y2^2g - y1^2g) summed over maximal y-runs.
 * Requires min x > 0 and the height hypothesis (d <= 1 for gamma >= 1/2,
 * d <= 2 gamma otherwise).
 */
double mass_derivative(const PositivitySet& omega, const Weight& w);

/** Closed-form Q^2 mass of F_{-t}(Omega) (full cells of omega). */
double shifted_mass_exact(const PositivitySet& omega, const Weight& w, double t);

/** Checks the decrease estimate: derivative <= -a * mass(Omega). */
DecreaseReport verify_decrease(const PositivitySet& omega, const Weight& w);

/**
 * The two-sided shear competitor v_t: positive shear about a + 1/2 on the
 * left half of the component's epsilon/2-neighborhood, negative shear about
 * b - 1/2 on the right half, identity elsewhere. Throws on separation or
 * margin violations. The pattern-explicit overload serves hand-built
 * configurations whose declared positivity extends past the field's
 * solver-truncated support.
 */
ScalarField build_competitor(const ScalarField& u, const CompetitorSpec& spec, double t);
ScalarField build_competitor(const ScalarField& u, const PositivitySet& pattern,
                             const CompetitorSpec& spec, double t);

/**
 * J_Q(v_t) - J_Q(u) over the window (differences vanish outside the
 * perturbed band). Negative values certify that u is not a local minimizer
 * against this perturbation family.
 */
double energy_gap(const ScalarField& u, const CompetitorSpec& spec, const Weight& w, double t);
double energy_gap(const ScalarField& u, const PositivitySet& pattern, const CompetitorSpec& spec,
                  const Weight& w, double t);

} // namespace fbx

#endif
