#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "quadmod/constellation.hpp"
#include "quadmod/errors.hpp"

namespace quadmod {

// Classic single-polarization formats, used twice (once per polarization)
// as reference schemes. Each 2-D set is returned with unit average energy.
enum class ClassicKind { Qpsk, Psk3, Psk8, Qam16, Apsk16, HexQam8 };

inline const char* to_string(ClassicKind k) {
    switch (k) {
        case ClassicKind::Qpsk: return "qpsk";
        case ClassicKind::Psk3: return "psk3";
        case ClassicKind::Psk8: return "psk8";
        case ClassicKind::Qam16: return "qam16";
        case ClassicKind::Apsk16: return "apsk16";
        default: return "hexqam8";
    }
}

inline std::vector<cplx> classic_2d_set(ClassicKind kind) {
    std::vector<cplx> s;
    auto phasor = [](double phi) { return cplx{std::cos(phi), std::sin(phi)}; };
    switch (kind) {
        case ClassicKind::Qpsk:
            for (int k = 0; k < 4; ++k) s.push_back(phasor(M_PI / 4 + k * M_PI / 2));
            break;
        case ClassicKind::Psk3:
            for (int k = 0; k < 3; ++k) s.push_back(phasor(2.0 * M_PI * k / 3));
            break;
        case ClassicKind::Psk8:
            for (int k = 0; k < 8; ++k) s.push_back(phasor(k * M_PI / 4));
            break;
        case ClassicKind::Qam16:
            for (double a : {-3.0, -1.0, 1.0, 3.0})
                for (double b : {-3.0, -1.0, 1.0, 3.0}) s.push_back(cplx{a, b});
            break;
        case ClassicKind::Apsk16: {
            // 4+12 rings, outer/inner radius ratio 2.5; ring phases offset so
            // outer points straddle the inner ones.
            const double r1 = 1.0, r2 = 2.5;
            for (int k = 0; k < 4; ++k) s.push_back(r1 * phasor(M_PI / 4 + k * M_PI / 2));
            for (int k = 0; k < 12; ++k) s.push_back(r2 * phasor(M_PI / 12 + k * M_PI / 6));
            break;
        }
        case ClassicKind::HexQam8: {
            // Eight points of the hexagonal (triangular) grid, spacing d = 1.
            const double h = std::sqrt(3.0) / 2.0;
            const cplx raw[8] = {{-1.0, 0.0}, {1.0, 0.0},  {0.0, 2 * h},  {0.0, -2 * h},
                                 {-2.0, 2 * h}, {-2.0, -2 * h}, {2.0, 2 * h}, {2.0, -2 * h}};
            s.assign(raw, raw + 8);
            break;
        }
    }
    double avg = 0.0;
    for (const auto& v : s) avg += std::norm(v);
    avg /= static_cast<double>(s.size());
    const double g = 1.0 / std::sqrt(avg);
    for (auto& v : s) v *= g;
    return s;
}

// Same classic format on both polarizations, detected independently.
inline Constellation generate_classic_dual(ClassicKind kind) {
    const auto f = classic_2d_set(kind);
    auto c = make_dual_product(std::string("dual-") + to_string(kind), f, f);
    c.normalize();
    return c;
}

// Hexagonal cylinder set: a p x q grid on the phase torus (phi_x, phi_y),
// odd rows shifted by half a column step so neighbours interleave like a
// hexagonal packing. Both polarizations keep constant envelope. The rows
// are coupled through the shift, so the set is not a product and is
// detected jointly.
inline Constellation generate_hex_cylinder(std::size_t count) {
    if (count < 4) throw InvalidCount("generate_hex_cylinder: need at least 4 points");
    // Factor count = p * q, p <= q, as square as possible.
    std::size_t p = 0;
    for (std::size_t d = static_cast<std::size_t>(std::sqrt(static_cast<double>(count))); d >= 2;
         --d)
        if (count % d == 0) {
            p = d;
            break;
        }
    if (p < 2)
        throw InvalidCount("generate_hex_cylinder: count " + std::to_string(count) +
                           " has no p x q factorization with p, q >= 2");
    const std::size_t q = count / p;  // q rows of p columns

    std::vector<Symbol4D> pts;
    pts.reserve(count);
    const double amp = 1.0 / std::sqrt(2.0);  // unit total energy per symbol
    for (std::size_t r = 0; r < q; ++r) {
        const double phi_y = 2.0 * M_PI * static_cast<double>(r) / static_cast<double>(q);
        const double row_shift = (r & 1) ? M_PI / static_cast<double>(p) : 0.0;
        for (std::size_t col = 0; col < p; ++col) {
            const double phi_x =
                2.0 * M_PI * static_cast<double>(col) / static_cast<double>(p) + row_shift;
            pts.push_back({amp * cplx{std::cos(phi_x), std::sin(phi_x)},
                           amp * cplx{std::cos(phi_y), std::sin(phi_y)}});
        }
    }
    auto c = make_constellation("hexcyl" + std::to_string(count), std::move(pts),
                                std::log2(static_cast<double>(count)), DetectionMode::Joint4D);
    c.normalize();
    return c;
}

// Bi-orthogonal 8-point set: the +/- unit vectors along the four real axes.
// With `rotated` the same set is expressed as the even-parity half of a
// dual-QPSK product (both polarizations active at amplitude 1/sqrt(2)),
// which keeps per-polarization envelopes constant.
inline Constellation generate_biorthogonal(bool rotated = false) {
    std::vector<Symbol4D> pts;
    if (!rotated) {
        for (int axis = 0; axis < 4; ++axis)
            for (double sgn : {1.0, -1.0}) {
                std::array<double, 4> v{};
                v[axis] = sgn;
                pts.push_back(Symbol4D::from_coords(v));
            }
    } else {
        const double a = 1.0 / std::sqrt(2.0);
        for (int ix = 0; ix < 4; ++ix)
            for (int iy = 0; iy < 4; ++iy) {
                if ((ix + iy) & 1) continue;  // even-parity phase pairs
                const double px = M_PI / 4 + ix * M_PI / 2;
                const double py = M_PI / 4 + iy * M_PI / 2;
                pts.push_back({a * cplx{std::cos(px), std::sin(px)},
                               a * cplx{std::cos(py), std::sin(py)}});
            }
    }
    auto c = make_constellation(rotated ? "biortho" : "biortho-axes", std::move(pts), 3.0,
                                DetectionMode::Joint4D);
    c.normalize();
    return c;
}

}  // namespace quadmod
