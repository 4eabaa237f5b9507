#ifndef FBX_EXPERIMENT_HPP
#define FBX_EXPERIMENT_HPP

#include "fbx/analysis.hpp"
#include "fbx/config.hpp"
#include "fbx/io.hpp"
#include "fbx/perturbation.hpp"
#include "fbx/solver.hpp"

#include <string>
#include <utility>
#include <vector>

namespace fbx {

/** Dirichlet boundary field for a config (preset data + support masks). */
ScalarField make_boundary_field(const ExperimentConfig& c);

/** Node indicator of the initial strip pattern [0,N] x [1,2]. */
std::vector<std::uint8_t> strip_init_pattern(const Grid& g);

struct GapPoint {
    double t = 0.0;
    double gap = 0.0;
    bool admissible = false;
};

struct ExperimentResult {
    ExperimentConfig config;
    Weight weight{0.5, 0.0};
    SolveResult solve;
    bool solve_failed = false;
    std::string solve_error;

    std::vector<FBClassification> classifications;
    int sigma_candidates = 0;
    std::vector<Point> weiss_points;      // FB-on-Gamma centers analyzed below
    std::vector<WeissSeries> weiss;       // one series per center
    std::vector<double> blowup_slopes;    // matching order
    DiagnosticsReport diagnostics;
    int positive_below_line = 0;          // support-constraint check

    std::vector<GapPoint> gap_curve;
    double min_gap = 0.0;
    bool has_gap = false;
    double t_admissible_max = 0.0;
    double sag_energy_delta = 0.0;
    double sag_centroid_shift = 0.0;
    ScalarField strip_field;       // the hand-built configuration the gaps measure
    PositivitySet strip_pattern;   // its declared positivity
    EnergyReport strip_energy;

    std::vector<std::pair<std::string, std::string>> summary;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct ManifestEntry {
    std::string name;
    std::size_t bytes = 0;
    std::string checksum;
};

/** Writes all artifact files plus manifest.csv; returns the manifest. */
std::vector<ManifestEntry> export_artifacts(const ExperimentResult& r, const std::string& dir);

} // namespace fbx

#endif
