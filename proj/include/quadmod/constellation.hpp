#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "quadmod/errors.hpp"
#include "quadmod/symbol4d.hpp"

namespace quadmod {

// Joint4D: maximum-likelihood detection searches all M points in R^4.
// PerPolarization: each polarization is detected independently against its
// factor set; only valid when the point list is an exact Cartesian product.
enum class DetectionMode { Joint4D, PerPolarization };

inline const char* to_string(DetectionMode m) {
    return m == DetectionMode::Joint4D ? "joint4d" : "per_polarization";
}

struct Constellation {
    std::string name;
    std::vector<Symbol4D> points;
    double bits_per_symbol = 0.0;
    DetectionMode detection_mode = DetectionMode::Joint4D;
    double avg_energy = 0.0;

    // Factor sets for product constellations; point k corresponds to the
    // pair (factors_x[k / factors_y.size()], factors_y[k % factors_y.size()]).
    std::vector<cplx> factors_x, factors_y;

    std::size_t size() const { return points.size(); }
    bool is_product() const { return !factors_x.empty() && !factors_y.empty(); }

    void recompute_energy() {
        double sum = 0.0;
        for (const auto& p : points) sum += p.energy();
        avg_energy = points.empty() ? 0.0 : sum / static_cast<double>(points.size());
    }

    void scale(double s) {
        for (auto& p : points) p = s * p;
        for (auto& f : factors_x) f *= s;
        for (auto& f : factors_y) f *= s;
        recompute_energy();
    }

    // Scale so the average total (both-polarization) energy is exactly 1.
    void normalize() {
        recompute_energy();
        if (avg_energy > 0.0) scale(1.0 / std::sqrt(avg_energy));
    }
};

inline Constellation make_constellation(std::string name, std::vector<Symbol4D> points,
                                        double bits_per_symbol, DetectionMode mode) {
    Constellation c;
    c.name = std::move(name);
    c.points = std::move(points);
    c.bits_per_symbol = bits_per_symbol;
    c.detection_mode = mode;
    c.recompute_energy();
    return c;
}

// Cartesian product of two 2-D sets, point index = ix * ny + iy.
inline Constellation make_dual_product(std::string name, const std::vector<cplx>& fx,
                                       const std::vector<cplx>& fy) {
    std::vector<Symbol4D> pts;
    pts.reserve(fx.size() * fy.size());
    for (const auto& a : fx)
        for (const auto& b : fy) pts.push_back({a, b});
    auto c = make_constellation(std::move(name), std::move(pts),
                                std::log2(static_cast<double>(fx.size() * fy.size())),
                                DetectionMode::PerPolarization);
    c.factors_x = fx;
    c.factors_y = fy;
    return c;
}

inline double min_distance_sq(const Constellation& c) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < c.points.size(); ++i)
        for (std::size_t j = i + 1; j < c.points.size(); ++j)
            best = std::min(best, distance_sq(c.points[i], c.points[j]));
    return best;
}

inline double min_distance(const Constellation& c) { return std::sqrt(min_distance_sq(c)); }

// Unordered-pair distance spectrum: ascending squared distances with pair
// counts, near-equal values (relative 1e-9) merged into one bin.
struct DistanceSpectrum {
    std::vector<std::pair<double, std::uint64_t>> bins;  // (d^2, pair count)
    std::size_t constellation_size = 0;
};

inline DistanceSpectrum distance_spectrum(const Constellation& c) {
    std::vector<double> d2;
    d2.reserve(c.points.size() * (c.points.size() - 1) / 2);
    for (std::size_t i = 0; i + 1 < c.points.size(); ++i)
        for (std::size_t j = i + 1; j < c.points.size(); ++j)
            d2.push_back(distance_sq(c.points[i], c.points[j]));
    std::sort(d2.begin(), d2.end());
    DistanceSpectrum spec;
    spec.constellation_size = c.points.size();
    for (double v : d2) {
        if (!spec.bins.empty() && v - spec.bins.back().first <= 1e-9 * std::max(1.0, v))
            ++spec.bins.back().second;
        else
            spec.bins.emplace_back(v, 1);
    }
    return spec;
}

// Minimum-distance pair count (kissing pairs). Helpful when two sets share
// the same minimum distance and differ only in how often it occurs.
inline std::uint64_t min_distance_pairs(const Constellation& c) {
    const auto spec = distance_spectrum(c);
    return spec.bins.empty() ? 0 : spec.bins.front().second;
}

// Distinct amplitudes seen on one polarization, with multiplicities.
struct ConstituentTable {
    std::vector<cplx> elements;
    std::vector<std::size_t> counts;
};

inline ConstituentTable project_constituents(const Constellation& c, int polarization) {
    ConstituentTable t;
    for (const auto& p : c.points) {
        const cplx v = polarization == 0 ? p.x : p.y;
        bool found = false;
        for (std::size_t i = 0; i < t.elements.size(); ++i) {
            if (std::abs(v - t.elements[i]) <= 1e-9 * std::max(1.0, std::abs(v))) {
                ++t.counts[i];
                found = true;
                break;
            }
        }
        if (!found) {
            t.elements.push_back(v);
            t.counts.push_back(1);
        }
    }
    return t;
}

// ---- interchange format ----------------------------------------------------
// Header:  # <name> <M> <bits_per_symbol> <detection_mode>
// Body:    M lines of "xI xQ yI yQ", printed with 17 significant digits so a
// write/read round trip reproduces every double bit-exactly.

inline void write_constellation(std::ostream& os, const Constellation& c) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "# %s %zu %.17g %s\n", c.name.c_str(), c.points.size(),
                  c.bits_per_symbol, to_string(c.detection_mode));
    os << buf;
    for (const auto& p : c.points) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", p.x.real(), p.x.imag(),
                      p.y.real(), p.y.imag());
        os << buf;
    }
}

inline void write_constellation_file(const std::string& path, const Constellation& c) {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot open for writing: " + path);
    write_constellation(os, c);
}

namespace detail {

// Rebuild factor sets from a point list known (or claimed) to be a product.
// Doubles must match exactly; interchange round trips are bit-exact.
inline bool rebuild_product_factors(Constellation& c) {
    std::vector<cplx> fx, fy;
    for (const auto& p : c.points) {
        if (std::find(fx.begin(), fx.end(), p.x) == fx.end()) fx.push_back(p.x);
        if (std::find(fy.begin(), fy.end(), p.y) == fy.end()) fy.push_back(p.y);
    }
    if (fx.size() * fy.size() != c.points.size()) return false;
    // Every (x, y) pair must appear exactly once, in product order.
    for (std::size_t k = 0; k < c.points.size(); ++k) {
        const cplx ex = fx[k / fy.size()];
        const cplx ey = fy[k % fy.size()];
        if (c.points[k].x != ex || c.points[k].y != ey) return false;
    }
    c.factors_x = std::move(fx);
    c.factors_y = std::move(fy);
    return true;
}

}  // namespace detail

inline Constellation read_constellation(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw ParseError("constellation file: empty input");
    std::istringstream hs(header);
    std::string hash, name, mode_str;
    std::size_t m = 0;
    double bits = 0.0;
    if (!(hs >> hash >> name >> m >> bits >> mode_str) || hash != "#")
        throw ParseError("constellation file: bad header line: " + header);

    Constellation c;
    c.name = name;
    c.bits_per_symbol = bits;
    if (mode_str == "joint4d")
        c.detection_mode = DetectionMode::Joint4D;
    else if (mode_str == "per_polarization")
        c.detection_mode = DetectionMode::PerPolarization;
    else
        throw ParseError("constellation file: unknown detection mode: " + mode_str);

    c.points.reserve(m);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        double a, b, d, e;
        if (!(ls >> a >> b >> d >> e))
            throw ParseError("constellation file: bad point line: " + line);
        c.points.push_back({cplx{a, b}, cplx{d, e}});
    }
    if (c.points.size() != m)
        throw ParseError("constellation file: header declares " + std::to_string(m) +
                         " points, found " + std::to_string(c.points.size()));
    for (const auto& p : c.points)
        if (!std::isfinite(p.energy())) throw ParseError("constellation file: non-finite point");

    if (c.detection_mode == DetectionMode::PerPolarization &&
        !detail::rebuild_product_factors(c))
        throw ParseError("constellation file: per-polarization mode requires an exact "
                         "Cartesian product point list in product order");
    c.recompute_energy();
    return c;
}

inline Constellation read_constellation_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open constellation file: " + path);
    return read_constellation(is);
}

}  // namespace quadmod
