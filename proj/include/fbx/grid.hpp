#ifndef FBX_GRID_HPP
#define FBX_GRID_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace fbx {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/** Axis-aligned rectangle in physical coordinates. */
struct Rect {
    double x_lo = 0.0, x_hi = 0.0;
    double y_lo = 0.0, y_hi = 0.0;

    bool contains(Point p) const {
        return p.x >= x_lo && p.x <= x_hi && p.y >= y_lo && p.y <= y_hi;
    }
    double width() const { return x_hi - x_lo; }
    double height() const { return y_hi - y_lo; }
};

struct NodeIndex {
    int i = 0;
    int j = 0;
};

/** Inclusive node-index box [i0,i1] x [j0,j1]; cells are (i,j) with
 *  i0 <= i < i1, j0 <= j < j1. */
struct NodeBox {
    int i0 = 0, i1 = 0;
    int j0 = 0, j1 = 0;
};

/**
 * Uniform node-centered grid on a rectangle. Node (i,j) sits at
 * (x0 + i*h, y0 + j*h); the line Gamma is horizontal at y = gamma_line_y.
 */
struct Grid {
    int nx = 0, ny = 0;
    double h = 0.0;
    double x0 = 0.0, y0 = 0.0;
    double gamma_line_y = 0.0;

    Grid() = default;
    Grid(int nx_, int ny_, double h_, double x0_, double y0_, double line_y = 0.0);

    int node_count() const { return nx * ny; }
    int cell_count() const { return (nx - 1) * (ny - 1); }
    int index(int i, int j) const { return j * nx + i; }
    bool in_grid(int i, int j) const { return i >= 0 && i < nx && j >= 0 && j < ny; }
    bool on_perimeter(int i, int j) const {
        return i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
    }
    Point node(int i, int j) const { return {x0 + i * h, y0 + j * h}; }
    double x_max() const { return x0 + (nx - 1) * h; }
    double y_max() const { return y0 + (ny - 1) * h; }
    Rect bounds() const { return {x0, x_max(), y0, y_max()}; }
    NodeBox full_box() const { return {0, nx - 1, 0, ny - 1}; }

    /** Node box of nodes inside rect (extremes snapped inward, fp-tolerant). */
    NodeBox box_of(const Rect& r) const;
};

bool same_layout(const Grid& a, const Grid& b);

/**
 * Nonnegative grid function with Dirichlet-node flags. Solvers never modify
 * nodes where boundary_mask is set. Default mask covers the grid perimeter.
 */
struct ScalarField {
    Grid grid;
    std::vector<double> values;
    std::vector<std::uint8_t> boundary_mask;

    ScalarField() = default;
    explicit ScalarField(const Grid& g);

    double& at(int i, int j) { return values[grid.index(i, j)]; }
    double at(int i, int j) const { return values[grid.index(i, j)]; }
    bool dirichlet(int i, int j) const { return boundary_mask[grid.index(i, j)] != 0; }

    /** Bilinear interpolation; p must lie inside the grid rectangle. */
    double sample(Point p) const;
    /** Bilinear interpolation with zero extension outside the grid rectangle. */
    double sample_or_zero(Point p) const;

    double max_value() const;
    /** Throws if any value is negative or non-finite. */
    void check_invariants() const;
};

/** The degenerate weight Q(x,y) = |y - line_y|^gamma. */
struct Weight {
    double gamma = 1.0;
    double line_y = 0.0;

    Weight() = default;
    Weight(double gamma_, double line_y_ = 0.0);
};

double eval_weight(const Weight& w, Point p);

/** Antiderivative in y of Q^2 = |y - line_y|^(2 gamma), continuous across Gamma. */
double weight_q2_antiderivative(const Weight& w, double y);

/**
 * Exact integral of Q^2 over the rectangle [x_lo,x_hi] x [y_lo,y_hi],
 * via the closed-form antiderivative of |y - line_y|^(2*gamma).
 * A cell straddling Gamma is handled by the signed antiderivative,
 * which equals the split-at-Gamma sum exactly.
 */
double cell_weight_mass(const Weight& w, double x_lo, double x_hi, double y_lo, double y_hi);

/**
 * Node-indexed indicator of {u > 0} with 4-connected component labels.
 * Label 0 marks nodes outside the set; components are numbered from 1
 * in row-major discovery order.
 */
struct PositivitySet {
    Grid grid;
    std::vector<std::uint8_t> indicator;
    std::vector<int> labels;
    int component_count = 0;

    bool positive(int i, int j) const { return indicator[grid.index(i, j)] != 0; }
    int label(int i, int j) const { return labels[grid.index(i, j)]; }
};

PositivitySet positivity_set(const ScalarField& u);

/** Rebuild labels from an indicator (row-major seeded flood fill). */
PositivitySet positivity_set_from_indicator(const Grid& g, std::vector<std::uint8_t> indicator);

/** Zero-valued nodes 4-adjacent to a positive node, in row-major order. */
std::vector<NodeIndex> free_boundary_nodes(const PositivitySet& s);

constexpr double kInfiniteSeparation = std::numeric_limits<double>::infinity();

/**
 * Minimum Euclidean distance inside `window` between nodes of component
 * comp_id and nodes of any other component. Returns kInfiniteSeparation
 * when no other component meets the window. Throws on unknown comp_id.
 */
double component_separation(const PositivitySet& s, int comp_id, const Rect& window);

/**
 * Exact squared Euclidean distance transform (Felzenszwalb-Huttenlocher)
 * of the node set marked in `sites`. Distances are in physical units.
 * Nodes of an empty site set get +infinity.
 */
std::vector<double> distance_sq_transform(const Grid& g, const std::vector<std::uint8_t>& sites);

} // namespace fbx

#endif
