#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "quadmod/constellation.hpp"
#include "quadmod/errors.hpp"
#include "quadmod/rng.hpp"

namespace quadmod {

struct PackingParams {
    std::uint64_t seed = 1;
    int restarts = 20;
    int iterations_per_stage = 400;
    double stall_step = 1e-13;  // line-search step below this ends a stage
};

struct SpherePackingResult {
    Constellation constellation;
    double min_distance = 0.0;
    // True when the winning restart was stable through its final annealing
    // stage (no meaningful minimum-distance movement left).
    bool converged = false;
    int iterations = 0;  // accepted steps over all restarts
};

namespace detail {

using Vec4 = std::array<double, 4>;

inline double dot(const Vec4& a, const Vec4& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

inline void normalize(Vec4& v) {
    const double n = std::sqrt(dot(v, v));
    for (auto& x : v) x /= n;
}

inline double pack_min_distance(const std::vector<Vec4>& p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j) {
            double d2 = 0.0;
            for (int k = 0; k < 4; ++k) {
                const double t = p[i][k] - p[j][k];
                d2 += t * t;
            }
            best = std::min(best, d2);
        }
    return std::sqrt(best);
}

// Riesz s-energy with distances scaled by the current minimum, so every
// term is <= 1 and large exponents stay finite.
inline double pack_energy(const std::vector<Vec4>& p, double s, double dmin) {
    double e = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j) {
            double d2 = 0.0;
            for (int k = 0; k < 4; ++k) {
                const double t = p[i][k] - p[j][k];
                d2 += t * t;
            }
            e += std::exp(-0.5 * s * std::log(d2 / (dmin * dmin)));
        }
    return e;
}

}  // namespace detail

// Spreads `count` points on the unit sphere in R^4 by annealed Riesz-energy
// descent: the exponent s doubles stage by stage, turning soft repulsion
// into an effectively maximin objective. Multistart keeps the best
// minimum-distance iterate seen anywhere.
inline SpherePackingResult generate_sphere_4dpsk(std::size_t count, const PackingParams& params = {}) {
    using detail::Vec4;
    if (count < 2) throw InvalidCount("generate_sphere_4dpsk: need at least 2 points");

    std::vector<Vec4> best_pts;
    double best_dmin = -1.0;
    bool best_converged = false;
    int total_iters = 0;

    const double s_final = 4096.0;
    for (int restart = 0; restart < params.restarts; ++restart) {
        RngStream rng(params.seed, 0x5048u /* packing */, static_cast<std::uint64_t>(restart));
        std::vector<Vec4> pts(count);
        for (auto& p : pts) {
            do {
                for (auto& x : p) x = rng.gaussian();
            } while (detail::dot(p, p) < 1e-12);
            detail::normalize(p);
        }

        bool stage_settled = false;
        bool owns_best = false;
        double final_stage_start_dmin = 0.0;
        for (double s = 2.0; s <= s_final; s *= 2.0) {
            double step = 0.05;
            stage_settled = false;
            double dmin = detail::pack_min_distance(pts);
            if (s == s_final) final_stage_start_dmin = dmin;
            double energy = detail::pack_energy(pts, s, dmin);
            std::vector<Vec4> grad(count), trial(count);

            for (int it = 0; it < params.iterations_per_stage; ++it) {
                // Repulsion gradient, projected onto each point's tangent plane.
                for (auto& g : grad) g = {0, 0, 0, 0};
                for (std::size_t i = 0; i + 1 < count; ++i)
                    for (std::size_t j = i + 1; j < count; ++j) {
                        Vec4 diff;
                        double d2 = 0.0;
                        for (int k = 0; k < 4; ++k) {
                            diff[k] = pts[i][k] - pts[j][k];
                            d2 += diff[k] * diff[k];
                        }
                        const double w =
                            s * std::exp(-0.5 * s * std::log(d2 / (dmin * dmin))) / d2;
                        for (int k = 0; k < 4; ++k) {
                            grad[i][k] += w * diff[k];
                            grad[j][k] -= w * diff[k];
                        }
                    }
                double gmax = 0.0;
                for (std::size_t i = 0; i < count; ++i) {
                    const double r = detail::dot(grad[i], pts[i]);
                    for (int k = 0; k < 4; ++k) grad[i][k] -= r * pts[i][k];
                    gmax = std::max(gmax, std::sqrt(detail::dot(grad[i], grad[i])));
                }
                if (gmax == 0.0) {
                    stage_settled = true;
                    break;
                }

                // Trust-region step with halving on energy increase.
                bool accepted = false;
                while (step >= params.stall_step) {
                    const double eta = step / gmax;
                    for (std::size_t i = 0; i < count; ++i) {
                        for (int k = 0; k < 4; ++k)
                            trial[i][k] = pts[i][k] + eta * grad[i][k];
                        detail::normalize(trial[i]);
                    }
                    const double trial_dmin = detail::pack_min_distance(trial);
                    const double trial_energy = detail::pack_energy(trial, s, dmin);
                    if (trial_energy < energy) {
                        pts.swap(trial);
                        dmin = trial_dmin;
                        energy = detail::pack_energy(pts, s, dmin);  // rescale to new dmin
                        step = std::min(step * 1.3, 0.2);
                        ++total_iters;
                        accepted = true;
                        if (trial_dmin > best_dmin) {
                            best_dmin = trial_dmin;
                            best_pts = pts;
                            owns_best = true;
                        }
                        break;
                    }
                    step *= 0.5;
                }
                if (!accepted) {
                    stage_settled = true;
                    break;
                }
            }
        }
        if (owns_best) {
            const double here = detail::pack_min_distance(pts);
            best_converged = stage_settled ||
                             here - final_stage_start_dmin <= 1e-6 * std::max(1.0, here);
        }
    }

    std::vector<Symbol4D> sym;
    sym.reserve(count);
    for (const auto& p : best_pts) sym.push_back(Symbol4D::from_coords(p));
    auto c = make_constellation("psk4d" + std::to_string(count), std::move(sym),
                                std::log2(static_cast<double>(count)), DetectionMode::Joint4D);
    c.normalize();

    SpherePackingResult res;
    res.min_distance = min_distance(c);
    res.converged = best_converged;
    res.iterations = total_iters;
    res.constellation = std::move(c);
    return res;
}

}  // namespace quadmod
