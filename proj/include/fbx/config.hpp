#ifndef FBX_CONFIG_HPP
#define FBX_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace fbx {

enum class Preset { stokes, strip, custom };
enum class BoundaryPreset { zero, crest, bump, flat, strip_bumps };

std::string to_string(Preset p);
std::string to_string(BoundaryPreset b);

/**
 * Experiment description parsed from key=value text. Preset geometry is
 * filled by apply_preset_defaults; explicit keys override where allowed.
 */
struct ExperimentConfig {
    Preset preset = Preset::custom;
    int nx = 65, ny = 65;
    double h = 1.0 / 64.0;
    double x0 = 0.0, y0 = 0.0;
    double gamma = 0.5;
    double line_y = 0.0;

    BoundaryPreset boundary = BoundaryPreset::zero;
    double boundary_amplitude = 1.0;
    double boundary_taper = 0.0; // degree-3 sector mode mixed into the crest data
    double core_radius = 0.0;    // crest disk held as Dirichlet data (0 = none)

    double cg_tol = 1e-10;
    int max_outer = 10000;
    int patch_radius = 0;

    double r_min = 0.0, r_max = 0.0; // 0 = ladder chosen from the geometry
    double sigma_threshold = 0.02;
    double weiss_defect_tol = 0.02;
    int circle_samples = 128;

    double window_a = 0.0, window_b = 0.0, window_c = 0.0;
    double epsilon = 0.0; // 0 = derived from the component geometry
    double t_lo = 1e-3, t_hi = 1e-1;
    int t_steps = 16;

    std::string output_dir;
    std::uint64_t seed = 1;
};

struct ConfigError {
    int line = 0;
    std::string message;
};

struct ParsedConfig {
    ExperimentConfig config;
    std::vector<ConfigError> errors;
    bool ok() const { return errors.empty(); }
};

/** Parses `key = value` lines with `#` comments; collects all violations. */
ParsedConfig parse_config(const std::string& text);

/** Canonical text form; parse_config(serialize_config(c)) reproduces c. */
std::string serialize_config(const ExperimentConfig& c);

/** Fills preset-dependent geometry and boundary defaults. */
void apply_preset_defaults(ExperimentConfig& c);

} // namespace fbx

#endif
