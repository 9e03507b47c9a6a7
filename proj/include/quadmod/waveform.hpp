#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "quadmod/constellation.hpp"
#include "quadmod/generators.hpp"
#include "quadmod/pulse.hpp"
#include "quadmod/rng.hpp"

namespace quadmod {

struct DualWaveform {
    std::vector<cplx> x, y;
    int samples_per_symbol = 1;
};

// Pulse-shapes a symbol sequence on both polarizations. The output is
// aligned: sample k*sps sits on symbol k's strobe (group delay removed),
// with length n*sps, so edge samples only carry partial pulse tails.
inline DualWaveform shape_waveform(const Constellation& c, std::span<const std::uint32_t> symbols,
                                   const PulseShape& pulse, TapNorm norm = TapNorm::UnitEnergy) {
    const auto h = pulse_taps(pulse, norm);
    const int sps = pulse.samples_per_symbol;
    const int mid = (static_cast<int>(h.size()) - 1) / 2;
    const std::int64_t n_out = static_cast<std::int64_t>(symbols.size()) * sps;

    DualWaveform w;
    w.samples_per_symbol = sps;
    w.x.assign(static_cast<std::size_t>(n_out), cplx{0.0, 0.0});
    w.y.assign(static_cast<std::size_t>(n_out), cplx{0.0, 0.0});

    for (std::size_t k = 0; k < symbols.size(); ++k) {
        if (symbols[k] >= c.points.size())
            throw std::out_of_range("shape_waveform: symbol index out of range");
        const Symbol4D& s = c.points[symbols[k]];
        const std::int64_t base = static_cast<std::int64_t>(k) * sps - mid;
        const std::int64_t lo = std::max<std::int64_t>(0, -base);
        const std::int64_t hi =
            std::min<std::int64_t>(static_cast<std::int64_t>(h.size()), n_out - base);
        for (std::int64_t t = lo; t < hi; ++t) {
            w.x[static_cast<std::size_t>(base + t)] += h[static_cast<std::size_t>(t)] * s.x;
            w.y[static_cast<std::size_t>(base + t)] += h[static_cast<std::size_t>(t)] * s.y;
        }
    }
    return w;
}

// Peak-to-average power ratios (linear). `combined` treats both
// polarizations as one 4-D signal; `single` rates each polarization branch
// against the per-branch average, taking the worse branch peak.
struct PaprPair {
    double combined = 0.0;
    double single = 0.0;
};

inline PaprPair papr_symbol(const Constellation& c) {
    double peak_tot = 0.0, peak_pol = 0.0, sum_tot = 0.0;
    for (const auto& p : c.points) {
        const double ex = std::norm(p.x), ey = std::norm(p.y);
        peak_tot = std::max(peak_tot, ex + ey);
        peak_pol = std::max({peak_pol, ex, ey});
        sum_tot += ex + ey;
    }
    const double mean_tot = sum_tot / static_cast<double>(c.points.size());
    return {peak_tot / mean_tot, peak_pol / (0.5 * mean_tot)};
}

// `guard` samples at each end are excluded so filter ramp-in/out does not
// bias the average.
inline PaprPair papr_shaped(const DualWaveform& w, std::size_t guard = 0) {
    const std::size_t n = w.x.size();
    if (n <= 2 * guard) throw std::out_of_range("papr_shaped: waveform shorter than guards");
    double peak_tot = 0.0, peak_pol = 0.0, sum_tot = 0.0;
    for (std::size_t i = guard; i < n - guard; ++i) {
        const double ex = std::norm(w.x[i]), ey = std::norm(w.y[i]);
        peak_tot = std::max(peak_tot, ex + ey);
        peak_pol = std::max({peak_pol, ex, ey});
        sum_tot += ex + ey;
    }
    const double mean_tot = sum_tot / static_cast<double>(n - 2 * guard);
    return {peak_tot / mean_tot, peak_pol / (0.5 * mean_tot)};
}

struct PaprReport {
    double symbol_combined = 0.0;
    double symbol_single = 0.0;
    double shaped_combined = 0.0;
    double shaped_single = 0.0;
};

// Measurement protocol shared by every table row: one long equiprobable
// symbol stream, root-raised-cosine shaping, edges trimmed by one filter
// span.
struct PaprProtocol {
    std::size_t n_symbols = 200'000;
    PulseShape pulse{PulseKind::RootRaisedCosine, 0.20, 32, 8};
};

inline PaprReport measure_papr(const Constellation& c, std::span<const std::uint32_t> symbols,
                               const PaprProtocol& proto) {
    const auto sym = papr_symbol(c);
    const auto w = shape_waveform(c, symbols, proto.pulse);
    const auto guard = static_cast<std::size_t>(proto.pulse.span_symbols) *
                       static_cast<std::size_t>(proto.pulse.samples_per_symbol);
    const auto sh = papr_shaped(w, guard);
    return {sym.combined, sym.single, sh.combined, sh.single};
}

inline PaprReport measure_papr(const Constellation& c, const PaprProtocol& proto,
                               const RngKey& key) {
    RngStream rng = key.substream(0);
    std::vector<std::uint32_t> idx(proto.n_symbols);
    for (auto& v : idx) v = static_cast<std::uint32_t>(rng.uniform_index(c.points.size()));
    return measure_papr(c, idx, proto);
}

// Alternated bi-orthogonal transmission: the 16-point dual-QPSK product is
// split by phase-index parity into two 8-point bi-orthogonal halves, and
// successive symbols draw from the halves alternately. Every slot still
// carries 3 bits while each polarization keeps its plain QPSK envelope.
struct BiorthAltSequence {
    Constellation base;  // dual-qpsk product the indices refer to
    std::array<std::vector<std::uint32_t>, 2> subsets;
    std::vector<std::uint32_t> indices;
};

inline BiorthAltSequence biorthogonal_alt_sequence(std::size_t n, RngStream& rng) {
    BiorthAltSequence seq;
    seq.base = generate_classic_dual(ClassicKind::Qpsk);
    for (std::uint32_t ix = 0; ix < 4; ++ix)
        for (std::uint32_t iy = 0; iy < 4; ++iy)
            seq.subsets[(ix + iy) & 1].push_back(ix * 4 + iy);
    seq.indices.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& sub = seq.subsets[k & 1];
        seq.indices[k] = sub[rng.uniform_index(sub.size())];
    }
    return seq;
}

}  // namespace quadmod
