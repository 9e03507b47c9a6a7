#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace quadmod {

using cplx = std::complex<double>;

// One dual-polarization symbol: a complex amplitude per polarization,
// i.e. a point in R^4 with coordinates (xI, xQ, yI, yQ).
struct Symbol4D {
    cplx x{0.0, 0.0};  // horizontal polarization
    cplx y{0.0, 0.0};  // vertical polarization

    double energy() const { return std::norm(x) + std::norm(y); }

    std::array<double, 4> coords() const { return {x.real(), x.imag(), y.real(), y.imag()}; }

    static Symbol4D from_coords(const std::array<double, 4>& v) {
        return {cplx{v[0], v[1]}, cplx{v[2], v[3]}};
    }

    friend Symbol4D operator+(const Symbol4D& a, const Symbol4D& b) {
        return {a.x + b.x, a.y + b.y};
    }
    friend Symbol4D operator-(const Symbol4D& a, const Symbol4D& b) {
        return {a.x - b.x, a.y - b.y};
    }
    friend Symbol4D operator*(double s, const Symbol4D& a) { return {s * a.x, s * a.y}; }
};

inline double distance_sq(const Symbol4D& a, const Symbol4D& b) {
    return std::norm(a.x - b.x) + std::norm(a.y - b.y);
}

inline double distance(const Symbol4D& a, const Symbol4D& b) {
    return std::sqrt(distance_sq(a, b));
}

// Real 4x4 matrix acting on the (xI, xQ, yI, yQ) coordinates. Used for the
// rotation-invariance checks; rows index the output coordinate.
using Mat4 = std::array<std::array<double, 4>, 4>;

inline Symbol4D rotate4(const Mat4& m, const Symbol4D& s) {
    const auto v = s.coords();
    std::array<double, 4> out{};
    for (int r = 0; r < 4; ++r)
        out[r] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
    return Symbol4D::from_coords(out);
}

inline Mat4 identity4() {
    Mat4 m{};
    for (int i = 0; i < 4; ++i) m[i][i] = 1.0;
    return m;
}

}  // namespace quadmod
