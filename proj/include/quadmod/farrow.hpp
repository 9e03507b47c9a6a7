#pragma once

#include <array>

namespace quadmod {

// Cubic Lagrange (Farrow) interpolation over four consecutive samples
// w[0..3] at integer positions -1, 0, 1, 2; evaluates at 0 <= mu < 1
// relative to the basepoint w[1]. Exact for polynomials up to degree 3.
template <typename T>
inline T farrow_interpolate(const std::array<T, 4>& w, double mu) {
    const double c0 = -mu * (mu - 1.0) * (mu - 2.0) / 6.0;
    const double c1 = (mu * mu - 1.0) * (mu - 2.0) / 2.0;
    const double c2 = -mu * (mu + 1.0) * (mu - 2.0) / 2.0;
    const double c3 = mu * (mu * mu - 1.0) / 6.0;
    return c0 * w[0] + c1 * w[1] + c2 * w[2] + c3 * w[3];
}

}  // namespace quadmod
