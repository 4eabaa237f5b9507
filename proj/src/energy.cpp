#include "fbx/energy.hpp"

#include <stdexcept>

namespace fbx {

EnergyReport make_energy_report(double dirichlet, double mass) {
    EnergyReport r;
    r.dirichlet = dirichlet;
    r.mass = mass;
    r.total = dirichlet + mass;
    return r;
}

double dirichlet_energy(const ScalarField& u, const NodeBox& box) {
    const Grid& g = u.grid;
    double acc = 0.0;
    for (int j = box.j0; j < box.j1; ++j) {
        for (int i = box.i0; i < box.i1; ++i) {
            double v = u.values[g.index(i, j)];
            double dx = u.values[g.index(i + 1, j)] - v;
            double dy = u.values[g.index(i, j + 1)] - v;
            acc += dx * dx + dy * dy;
        }
    }
    return acc;
}

double dirichlet_energy(const ScalarField& u) { return dirichlet_energy(u, u.grid.full_box()); }

double volume_energy(const PositivitySet& s, const Weight& w, const NodeBox& box) {
    const Grid& g = s.grid;
    double acc = 0.0;
    for (int j = box.j0; j < box.j1; ++j) {
        for (int i = box.i0; i < box.i1; ++i) {
            int k = (s.indicator[g.index(i, j)] ? 1 : 0) + (s.indicator[g.index(i + 1, j)] ? 1 : 0) +
                    (s.indicator[g.index(i, j + 1)] ? 1 : 0) +
                    (s.indicator[g.index(i + 1, j + 1)] ? 1 : 0);
            if (k == 0) continue;
            Point p = g.node(i, j);
            acc += 0.25 * k * cell_weight_mass(w, p.x, p.x + g.h, p.y, p.y + g.h);
        }
    }
    return acc;
}

double volume_energy(const PositivitySet& s, const Weight& w) {
    return volume_energy(s, w, s.grid.full_box());
}

EnergyReport total_energy(const ScalarField& u, const Weight& w, const NodeBox& box) {
    PositivitySet s = positivity_set(u);
    return make_energy_report(dirichlet_energy(u, box), volume_energy(s, w, box));
}

EnergyReport total_energy(const ScalarField& u, const Weight& w) {
    return total_energy(u, w, u.grid.full_box());
}

} // namespace fbx
