#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>
#include <vector>

#include "quadmod/constellation.hpp"
#include "quadmod/rng.hpp"
#include "quadmod/snr.hpp"

namespace quadmod {

// Symbol-error-rate estimate with a normal-approximation confidence bound.
// Estimates from disjoint streams combine by adding counts, so any
// partition of the work merges to the same result.
struct SerEstimate {
    std::uint64_t errors = 0;
    std::uint64_t trials = 0;
    bool underresolved = false;  // stopped by the symbol cap, not the error target

    double ser() const {
        return trials == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(trials);
    }
    // 95% half-width of the binomial proportion (Wald with 1.96 sigma).
    double ci95_halfwidth() const {
        if (trials == 0) return 0.0;
        const double p = ser();
        return 1.96 * std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(trials));
    }
    friend SerEstimate merge(const SerEstimate& a, const SerEstimate& b) {
        return {a.errors + b.errors, a.trials + b.trials, a.underresolved || b.underresolved};
    }
};

// Per-real-dimension noise sigma for a unit-average-energy constellation at
// the given Es/N0 (total dual-polarization symbol energy over N0). Noise is
// white over the four real dimensions with variance N0/2 each.
inline double noise_sigma_per_dim(double esn0_db) {
    if (std::isinf(esn0_db) && esn0_db > 0) return 0.0;
    return std::sqrt(0.5 / db_to_lin(esn0_db));
}

struct TransmitResult {
    std::vector<std::uint32_t> sent;
    std::vector<Symbol4D> received;
};

// Draws n equiprobable symbols and adds white Gaussian noise at the given
// Es/N0. +infinity disables the noise.
inline TransmitResult awgn_transmit(const Constellation& c, std::size_t n, double esn0_db,
                                    RngStream& rng) {
    const double sigma = noise_sigma_per_dim(esn0_db);
    TransmitResult out;
    out.sent.resize(n);
    out.received.resize(n);
    const auto m = static_cast<std::uint64_t>(c.points.size());
    for (std::size_t k = 0; k < n; ++k) {
        const auto idx = static_cast<std::uint32_t>(rng.uniform_index(m));
        out.sent[k] = idx;
        const Symbol4D& s = c.points[idx];
        out.received[k] = {s.x + cplx{sigma * rng.gaussian(), sigma * rng.gaussian()},
                           s.y + cplx{sigma * rng.gaussian(), sigma * rng.gaussian()}};
    }
    return out;
}

namespace detail {

inline std::uint32_t nearest_index(const std::vector<cplx>& set, cplx v) {
    std::uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::uint32_t i = 0; i < set.size(); ++i) {
        const double d = std::norm(v - set[i]);
        if (d < best_d) {  // strict: ties resolve to the lowest index
            best_d = d;
            best = i;
        }
    }
    return best;
}

}  // namespace detail

// Maximum-likelihood decision. Joint4D scans all points; PerPolarization
// decides each polarization against its factor set and recombines the
// product index. Distance ties resolve to the lowest point index either way.
inline std::uint32_t detect_ml(const Constellation& c, const Symbol4D& r) {
    if (c.detection_mode == DetectionMode::PerPolarization && c.is_product()) {
        const std::uint32_t ix = detail::nearest_index(c.factors_x, r.x);
        const std::uint32_t iy = detail::nearest_index(c.factors_y, r.y);
        return ix * static_cast<std::uint32_t>(c.factors_y.size()) + iy;
    }
    std::uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::uint32_t i = 0; i < c.points.size(); ++i) {
        const double d = distance_sq(r, c.points[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

struct SimStop {
    std::uint64_t min_errors = 200;
    std::uint64_t max_symbols = 200'000'000;
};

namespace detail {

constexpr std::uint64_t kSerBatch = 65536;

// One fixed-size batch: substream index == batch index, so the result for a
// given (key, batch) never depends on scheduling.
inline SerEstimate ser_batch(const Constellation& c, double esn0_db, const RngKey& key,
                             std::uint64_t batch_index, std::uint64_t batch_symbols) {
    RngStream rng = key.substream(batch_index);
    const double sigma = noise_sigma_per_dim(esn0_db);
    const auto m = static_cast<std::uint64_t>(c.points.size());
    SerEstimate est;
    for (std::uint64_t k = 0; k < batch_symbols; ++k) {
        const auto idx = static_cast<std::uint32_t>(rng.uniform_index(m));
        const Symbol4D& s = c.points[idx];
        const Symbol4D r{s.x + cplx{sigma * rng.gaussian(), sigma * rng.gaussian()},
                         s.y + cplx{sigma * rng.gaussian(), sigma * rng.gaussian()}};
        est.errors += detect_ml(c, r) != idx;
    }
    est.trials = batch_symbols;
    return est;
}

}  // namespace detail

// Monte-Carlo SER at one operating point. Work happens in fixed 65536-symbol
// batches, each on its own substream; the estimate always covers the batch
// prefix 0..B where B is the first batch meeting the stop rule. That makes
// the count pair (errors, trials) a pure function of (constellation, esn0,
// stop, key) regardless of `workers`.
inline SerEstimate simulate_ser(const Constellation& c, double esn0_db, const SimStop& stop,
                                const RngKey& key, unsigned workers = 1) {
    const std::uint64_t total_batches =
        (stop.max_symbols + detail::kSerBatch - 1) / detail::kSerBatch;
    auto batch_len = [&](std::uint64_t b) {
        return std::min<std::uint64_t>(detail::kSerBatch, stop.max_symbols - b * detail::kSerBatch);
    };

    SerEstimate acc;
    if (workers <= 1) {
        for (std::uint64_t b = 0; b < total_batches; ++b) {
            acc = merge(acc, detail::ser_batch(c, esn0_db, key, b, batch_len(b)));
            if (acc.errors >= stop.min_errors) return acc;
        }
        acc.underresolved = acc.errors < stop.min_errors;
        return acc;
    }

    // Parallel waves of `workers` batches; results are merged in batch order
    // and the wave loop stops at the first batch satisfying the rule.
    std::uint64_t next = 0;
    while (next < total_batches) {
        const std::uint64_t wave = std::min<std::uint64_t>(workers, total_batches - next);
        std::vector<SerEstimate> results(wave);
        std::vector<std::thread> pool;
        pool.reserve(wave);
        for (std::uint64_t w = 0; w < wave; ++w)
            pool.emplace_back([&, w] {
                results[w] = detail::ser_batch(c, esn0_db, key, next + w, batch_len(next + w));
            });
        for (auto& t : pool) t.join();
        for (std::uint64_t w = 0; w < wave; ++w) {
            acc = merge(acc, results[w]);
            if (acc.errors >= stop.min_errors) return acc;
        }
        next += wave;
    }
    acc.underresolved = acc.errors < stop.min_errors;
    return acc;
}

// Probability that a dual-polarization decision is wrong when each
// polarization errs independently with probability p: 2p - p^2.
inline double dual_error_compose(double p) { return 2.0 * p - p * p; }

}  // namespace quadmod
