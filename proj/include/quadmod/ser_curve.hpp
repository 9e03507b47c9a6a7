#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "quadmod/channel.hpp"
#include "quadmod/errors.hpp"

namespace quadmod {

struct CurvePoint {
    double esn0_db = 0.0;
    SerEstimate estimate;
};

// Es/N0 (dB) where a SER curve crosses `target`, by log-linear
// interpolation between the bracketing pair. Points are scanned in
// ascending Es/N0; zero-SER points carry no level information and are
// skipped. Throws NoBracket when no adjacent usable pair straddles the
// target.
inline double snr_at_ser(const std::vector<std::pair<double, double>>& curve, double target) {
    if (!(target > 0.0)) throw NoBracket("snr_at_ser: target must be positive");
    std::vector<std::pair<double, double>> pts;
    for (const auto& [snr, ser] : curve)
        if (ser > 0.0) pts.emplace_back(snr, ser);
    std::sort(pts.begin(), pts.end());

    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const auto [x0, p0] = pts[i];
        const auto [x1, p1] = pts[i + 1];
        if ((p0 >= target && p1 <= target) || (p0 <= target && p1 >= target)) {
            if (p0 == p1) return 0.5 * (x0 + x1);
            const double t = (std::log(target) - std::log(p0)) / (std::log(p1) - std::log(p0));
            return x0 + t * (x1 - x0);
        }
    }
    throw NoBracket("snr_at_ser: no adjacent pair of curve points brackets target " +
                    std::to_string(target));
}

inline double snr_at_ser(const std::vector<CurvePoint>& curve, double target) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(curve.size());
    for (const auto& cp : curve) pts.emplace_back(cp.esn0_db, cp.estimate.ser());
    return snr_at_ser(pts, target);
}

}  // namespace quadmod
