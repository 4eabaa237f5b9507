#ifndef FBX_SOLVER_HPP
#define FBX_SOLVER_HPP

#include "fbx/energy.hpp"
#include "fbx/grid.hpp"

#include <cstdint>
#include <vector>

namespace fbx {

enum class InitMode { truncated_harmonic, given_pattern };

struct SolveConfig {
    double cg_tol = 1e-10;      // residual tolerance, relative to sup of boundary data
    int max_outer = 10000;      // cap on solve+sweep rounds
    InitMode init = InitMode::truncated_harmonic;
    std::vector<std::uint8_t> init_pattern; // node indicator, used with given_pattern
    int flip_patch_radius = 0;  // 0 = full re-solve per candidate flip
};

struct SolveResult {
    ScalarField field;
    PositivitySet pattern;
    EnergyReport energy;
    int outer_iters = 0;
    bool flip_stable = false;
};

/**
 * Discrete-harmonic extension on a fixed positivity pattern: u = 0 off
 * pattern, u = boundary on Dirichlet nodes, 5-point Laplacian residual
 * <= tol * sup(boundary) on pattern interior nodes. Red-black SOR with a
 * conjugate-gradient fallback. Throws on non-convergence and on negative
 * values at convergence (inconsistent pattern).
 */
ScalarField harmonic_solve(const PositivitySet& pattern, const ScalarField& boundary, double tol);

/**
 * Alternates harmonic solves with first-improvement flip sweeps in
 * row-major order until no single flip strictly decreases J_Q.
 * Total energy is non-increasing across rounds.
 */
SolveResult local_minimize(const ScalarField& boundary, const Weight& w, const SolveConfig& cfg);

struct OracleResult {
    EnergyReport global_min;
    std::uint32_t global_mask = 0;
    std::vector<std::uint8_t> global_pattern; // full-grid indicator
    std::vector<std::uint32_t> stable_masks;  // single-flip stable patterns
    std::vector<int> free_nodes;              // node index per mask bit (row-major)
    std::vector<double> energies;             // total J_Q per mask
};

/**
 * Enumerates all 2^k positivity patterns over the non-Dirichlet nodes
 * (k <= 20), dense-solving each, and records the global minimizer and all
 * single-flip-stable patterns.
 */
OracleResult brute_force_oracle(const ScalarField& boundary, const Weight& w);

} // namespace fbx

#endif
