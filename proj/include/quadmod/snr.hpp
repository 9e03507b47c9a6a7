#pragma once

#include <cmath>
#include <string>

#include "quadmod/errors.hpp"

namespace quadmod {

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

// Signal-to-noise conventions for a dual-polarization symbol of total
// energy Es (both polarizations combined) carrying b bits:
//   Snr  = Es / (2 N0)   (per-polarization symbol energy over N0)
//   EsN0 = Es / N0       = 2 * Snr
//   EbN0 = Es / (b N0)   = (2 / b) * Snr
enum class SnrConvention { Snr, EsN0, EbN0 };

struct SnrSpec {
    double value_db = 0.0;
    SnrConvention convention = SnrConvention::EsN0;
    double bits_per_symbol = 0.0;  // required only for EbN0 conversions
};

inline const char* to_string(SnrConvention c) {
    switch (c) {
        case SnrConvention::Snr: return "snr";
        case SnrConvention::EsN0: return "esn0";
        default: return "ebn0";
    }
}

inline double convert_snr_db(const SnrSpec& in, SnrConvention target) {
    // Express the input as Es/N0 in dB, then re-express in the target.
    const bool needs_bits = in.convention == SnrConvention::EbN0 || target == SnrConvention::EbN0;
    if (needs_bits && !(in.bits_per_symbol > 0.0))
        throw MissingBits("convert_snr_db: Eb/N0 conversion requires bits_per_symbol > 0");

    double esn0_db = in.value_db;
    switch (in.convention) {
        case SnrConvention::Snr: esn0_db += 10.0 * std::log10(2.0); break;
        case SnrConvention::EbN0: esn0_db += 10.0 * std::log10(in.bits_per_symbol); break;
        case SnrConvention::EsN0: break;
    }
    switch (target) {
        case SnrConvention::Snr: return esn0_db - 10.0 * std::log10(2.0);
        case SnrConvention::EbN0: return esn0_db - 10.0 * std::log10(in.bits_per_symbol);
        case SnrConvention::EsN0: return esn0_db;
    }
    return esn0_db;
}

inline SnrSpec convert_snr(const SnrSpec& in, SnrConvention target) {
    return SnrSpec{convert_snr_db(in, target), target, in.bits_per_symbol};
}

}  // namespace quadmod
