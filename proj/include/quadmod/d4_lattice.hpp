#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "quadmod/constellation.hpp"
#include "quadmod/errors.hpp"

namespace quadmod {

// Carve of the D4 checkerboard lattice (integer 4-vectors with even
// coordinate sum), translated by `offset`, keeping the `target_count`
// nodes closest to the origin. With the deep-hole offset (1/2,1/2,1/2,1/2)
// no node lands at the origin and shells fill symmetrically.
struct LatticeCarveSpec {
    std::array<double, 4> offset = {0.5, 0.5, 0.5, 0.5};
    std::size_t target_count = 0;
    double search_radius_hint = 0.0;  // squared-radius hint; 0 = derive from count
    bool allow_partial_shell = true;  // false: demand the carve end on a full shell
};

struct CarvedLattice {
    std::vector<std::array<double, 4>> nodes;  // offset applied, sorted (energy, lex)
    double boundary_energy = 0.0;              // squared norm of the outermost shell used
    std::size_t boundary_population = 0;       // lattice nodes on that shell
    std::size_t boundary_used = 0;             // how many of them the carve keeps
};

inline CarvedLattice carve_d4(const LatticeCarveSpec& spec) {
    if (spec.target_count == 0) throw InvalidCount("carve_d4: target_count must be positive");

    // D4 fills half the integer grid, so a 4-ball of squared radius r2 holds
    // about (pi^2/4) r2^2 nodes. Grow the search radius until the carve fits.
    double r2 = spec.search_radius_hint;
    if (r2 <= 0.0)
        r2 = std::sqrt(4.0 * static_cast<double>(spec.target_count) / (M_PI * M_PI)) + 3.0;

    std::vector<std::pair<double, std::array<double, 4>>> nodes;
    for (;;) {
        nodes.clear();
        const double r = std::sqrt(r2);
        std::array<int, 4> lo{}, hi{};
        for (int i = 0; i < 4; ++i) {
            lo[i] = static_cast<int>(std::floor(-r - spec.offset[i]));
            hi[i] = static_cast<int>(std::ceil(r - spec.offset[i]));
        }
        for (int a = lo[0]; a <= hi[0]; ++a)
            for (int b = lo[1]; b <= hi[1]; ++b)
                for (int c = lo[2]; c <= hi[2]; ++c)
                    for (int d = lo[3]; d <= hi[3]; ++d) {
                        if ((a + b + c + d) & 1) continue;  // checkerboard parity
                        const std::array<double, 4> p = {
                            a + spec.offset[0], b + spec.offset[1], c + spec.offset[2],
                            d + spec.offset[3]};
                        const double e = p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + p[3] * p[3];
                        if (e <= r2) nodes.emplace_back(e, p);
                    }
        if (nodes.size() >= spec.target_count) break;
        r2 += std::max(1.0, 0.25 * r2);
    }

    std::sort(nodes.begin(), nodes.end());

    CarvedLattice out;
    const double e_last = nodes[spec.target_count - 1].first;
    const double tol = 1e-9 * std::max(1.0, e_last);
    std::size_t below = 0, on_shell = 0;
    for (const auto& [e, p] : nodes) {
        if (e < e_last - tol)
            ++below;
        else if (e <= e_last + tol)
            ++on_shell;
    }
    out.boundary_energy = e_last;
    out.boundary_population = on_shell;
    out.boundary_used = spec.target_count - below;

    if (!spec.allow_partial_shell && out.boundary_used != out.boundary_population)
        throw CountUnreachable(
            "carve_d4: count " + std::to_string(spec.target_count) +
                " splits the shell at squared radius " + std::to_string(e_last) + " (" +
                std::to_string(below) + " nodes inside, " + std::to_string(on_shell) +
                " on the shell)",
            e_last, on_shell, below);

    out.nodes.reserve(spec.target_count);
    for (std::size_t i = 0; i < spec.target_count; ++i) out.nodes.push_back(nodes[i].second);
    return out;
}

// Lattice amplitude modulation: D4 carve mapped to dual-polarization
// symbols (xI, xQ, yI, yQ) and normalized to unit average energy.
inline Constellation generate_d4_lam(std::size_t count, bool allow_partial_shell = true) {
    LatticeCarveSpec spec;
    spec.target_count = count;
    spec.allow_partial_shell = allow_partial_shell;
    const auto carve = carve_d4(spec);

    std::vector<Symbol4D> pts;
    pts.reserve(count);
    for (const auto& v : carve.nodes) pts.push_back(Symbol4D::from_coords(v));
    auto c = make_constellation("lam" + std::to_string(count), std::move(pts),
                                std::log2(static_cast<double>(count)), DetectionMode::Joint4D);
    c.normalize();
    return c;
}

}  // namespace quadmod
