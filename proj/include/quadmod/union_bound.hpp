#pragma once

#include <cmath>

#include "quadmod/constellation.hpp"
#include "quadmod/qfunc.hpp"
#include "quadmod/snr.hpp"

namespace quadmod {

// Pairwise union bound on the ML symbol error rate in AWGN:
//   P_e <= (1/M) sum_i sum_{j != i} Q(d_ij / (2 sigma)),
// evaluated from the distance spectrum (each unordered pair counts twice).
inline double union_bound(const DistanceSpectrum& spec, double esn0_db) {
    if (std::isinf(esn0_db) && esn0_db > 0) return 0.0;
    const double esn0 = db_to_lin(esn0_db);
    // d/(2 sigma) with sigma^2 = 1/(2 Es/N0) per dimension: d * sqrt(esn0/2).
    const double scale = std::sqrt(0.5 * esn0);
    double sum = 0.0;
    for (const auto& [d2, pairs] : spec.bins)
        sum += static_cast<double>(pairs) * q_function(std::sqrt(d2) * scale);
    return 2.0 * sum / static_cast<double>(spec.constellation_size);
}

inline double union_bound(const Constellation& c, double esn0_db) {
    return union_bound(distance_spectrum(c), esn0_db);
}

}  // namespace quadmod
