#pragma once

#include <cmath>

namespace quadmod {

// Gaussian tail probability Q(x) = P(N(0,1) > x) = erfc(x/sqrt(2)) / 2.
// erfc keeps full relative accuracy deep into the tail, so Q stays usable
// until the result itself underflows (x around 38).
inline double q_function(double x) {
    return 0.5 * std::erfc(x * 0.70710678118654752440);
}

}  // namespace quadmod
