#pragma once

#include <cmath>
#include <vector>

#include "quadmod/errors.hpp"

namespace quadmod {

// Raised-cosine pulse h(t/T), peak-normalized so h(0) = 1. Zero crossings
// at every nonzero integer t/T regardless of rolloff.
inline double rc_value(double t, double rolloff) {
    const double a = rolloff;
    if (t == 0.0) return 1.0;
    if (a > 0.0) {
        const double denom_arg = 2.0 * a * t;
        if (std::abs(std::abs(denom_arg) - 1.0) < 1e-10) {
            // l'Hopital at t = 1/(2a): (pi/4) sinc(1/(2a)).
            const double x = 1.0 / (2.0 * a);
            return (M_PI / 4.0) * std::sin(M_PI * x) / (M_PI * x);
        }
        return (std::sin(M_PI * t) / (M_PI * t)) * std::cos(M_PI * a * t) /
               (1.0 - denom_arg * denom_arg);
    }
    return std::sin(M_PI * t) / (M_PI * t);
}

// Root-raised-cosine pulse g(t/T); g convolved with itself gives the
// raised cosine. Continuous-time form, g(0) = 1 - a + 4a/pi.
inline double rrc_value(double t, double rolloff) {
    const double a = rolloff;
    if (t == 0.0) return 1.0 - a + 4.0 * a / M_PI;
    if (a > 0.0 && std::abs(std::abs(4.0 * a * t) - 1.0) < 1e-10) {
        const double s = 1.0 / std::sqrt(2.0);
        return a * s *
               ((1.0 + 2.0 / M_PI) * std::sin(M_PI / (4.0 * a)) +
                (1.0 - 2.0 / M_PI) * std::cos(M_PI / (4.0 * a)));
    }
    const double x = 4.0 * a * t;
    return (std::sin(M_PI * t * (1.0 - a)) + x * std::cos(M_PI * t * (1.0 + a))) /
           (M_PI * t * (1.0 - x * x));
}

enum class PulseKind { RootRaisedCosine, RaisedCosine };
enum class TapNorm { UnitEnergy, UnitPeak };

struct PulseShape {
    PulseKind kind = PulseKind::RootRaisedCosine;
    double rolloff = 0.20;
    int span_symbols = 32;      // taps cover [-span/2, +span/2] symbol periods
    int samples_per_symbol = 8;
};

// Symmetric FIR taps sampling the analytic pulse; length span*sps + 1 (odd).
// UnitEnergy scales so sum(h^2) = 1 (a matched pair then has unit gain at
// the strobe); UnitPeak keeps the analytic peak value.
inline std::vector<double> pulse_taps(const PulseShape& p, TapNorm norm = TapNorm::UnitEnergy) {
    if (p.span_symbols < 2 || p.samples_per_symbol < 2)
        throw InvalidCount("pulse_taps: span_symbols and samples_per_symbol must be >= 2");
    if (p.rolloff < 0.0 || p.rolloff > 1.0)
        throw InvalidCount("pulse_taps: rolloff must lie in [0, 1]");
    const int n = p.span_symbols * p.samples_per_symbol + 1;
    const int mid = (n - 1) / 2;
    std::vector<double> h(n);
    for (int k = 0; k < n; ++k) {
        const double t = static_cast<double>(k - mid) / p.samples_per_symbol;
        h[k] = p.kind == PulseKind::RootRaisedCosine ? rrc_value(t, p.rolloff)
                                                     : rc_value(t, p.rolloff);
    }
    if (norm == TapNorm::UnitEnergy) {
        double e = 0.0;
        for (double v : h) e += v * v;
        const double g = 1.0 / std::sqrt(e);
        for (double& v : h) v *= g;
    }
    return h;
}

}  // namespace quadmod
