#pragma once

#include <cmath>

#include "quadmod/errors.hpp"

namespace quadmod {

// Normalized mean-square pulse bandwidth xi for a root-raised-cosine
// spectrum with the given rolloff:
//   xi = T^2 integral f^2 |G(f)|^2 df / integral |G(f)|^2 df
//      = 1/12 + a^2 (1/4 - 2/pi^2).
// (|G|^2 is the raised cosine; both integrals are elementary.)
inline double rrc_timing_xi(double rolloff) {
    if (rolloff < 0.0 || rolloff > 1.0)
        throw InvalidCount("rrc_timing_xi: rolloff must lie in [0, 1]");
    return 1.0 / 12.0 + rolloff * rolloff * (0.25 - 2.0 / (M_PI * M_PI));
}

struct McrbParams {
    double bn_t = 5e-4;         // one-sided loop-noise bandwidth, normalized B_N * T
    double xi = 0.0;            // normalized pulse bandwidth (see rrc_timing_xi)
    double esn0_linear = 10.0;  // per-polarization symbol Es/N0, linear
    bool dual = false;          // joint estimation from both polarizations
};

// Modified Cramer-Rao bound on normalized timing error variance,
// E[((tau_hat - tau)/T)^2], for a tracking loop of bandwidth B_N T:
//   MCRB = B_N T / (4 pi^2 xi) * N0/Es_pol, halved when two polarizations
// carry independently modulated but synchronously timed signals.
inline double mcrb_tau_normalized(const McrbParams& p) {
    const double single = p.bn_t / (4.0 * M_PI * M_PI * p.xi * p.esn0_linear);
    return p.dual ? 0.5 * single : single;
}

}  // namespace quadmod
