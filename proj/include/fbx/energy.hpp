#ifndef FBX_ENERGY_HPP
#define FBX_ENERGY_HPP

#include "fbx/grid.hpp"

namespace fbx {

/** The two parts of J_Q and their sum. */
struct EnergyReport {
    double dirichlet = 0.0;
    double mass = 0.0;
    double total = 0.0;
};

EnergyReport make_energy_report(double dirichlet, double mass);

/**
 * Discrete Dirichlet energy over the cells of `box`: per cell, the forward
 * differences from the lower-left corner, ((u_b - u_a)/h)^2 * h^2 for both
 * orientations. Exact for linear fields; accumulation is row-major.
 */
double dirichlet_energy(const ScalarField& u, const NodeBox& box);
double dirichlet_energy(const ScalarField& u);

/**
 * Weighted volume of the positivity set over the cells of `box`. A cell
 * with k of 4 positive corners contributes (k/4) of its exact Q^2 mass.
 */
double volume_energy(const PositivitySet& s, const Weight& w, const NodeBox& box);
double volume_energy(const PositivitySet& s, const Weight& w);

EnergyReport total_energy(const ScalarField& u, const Weight& w, const NodeBox& box);
EnergyReport total_energy(const ScalarField& u, const Weight& w);

/**
 * Energy change of flipping the positivity state of one non-Dirichlet node:
 * re-solves harmonically on the flipped pattern and returns the new J_Q
 * minus the current one. The volume term counts the declared pattern.
 * patch_radius = 0 re-solves on the whole grid (correctness mode); a
 * positive radius restricts the re-solve to a (2r+1)^2 patch, which upper
 * bounds the full-re-solve delta.
 */
double flip_delta(const ScalarField& u, const Weight& w, NodeIndex node,
                  int patch_radius = 0, double tol = 1e-10);

} // namespace fbx

#endif
