#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "quadmod/channel.hpp"
#include "quadmod/farrow.hpp"
#include "quadmod/gardner.hpp"
#include "quadmod/generators.hpp"
#include "quadmod/mcrb.hpp"
#include "quadmod/pulse.hpp"
#include "quadmod/rng.hpp"

namespace quadmod {

enum class TimingMode { SinglePol, DualPol };

inline const char* to_string(TimingMode m) {
    return m == TimingMode::SinglePol ? "single" : "dual";
}

// First-order loop pole `a` giving one-sided noise bandwidth B_N T:
// the loop tau_{k+1} = (1-a) tau_k + a u_k has B_N T = a / (2 (2 - a)).
inline double loop_gain_for_bandwidth(double bn_t) {
    return 4.0 * bn_t / (1.0 + 2.0 * bn_t);
}

struct TimingLoopConfig {
    double esn0_db = 10.0;  // per-polarization symbol energy over N0
    TimingMode mode = TimingMode::SinglePol;
    bool prefilter = false;             // band-edge filter ahead of the detector
    double loop_bandwidth_norm = 5e-4;  // B_N * T
    double rolloff = 0.20;
    int samples_per_symbol = 4;
    int pulse_span = 32;
    double timing_offset = 0.3;     // true channel delay tau/T
    double initial_estimate = 0.0;  // loop starting point tau_hat/T
    std::uint64_t settle_symbols = 0;  // 0: derived as 20 / (B_N T)
    std::uint64_t measure_symbols = 200'000;
    bool duplicate_polarization = false;  // same data+noise on both branches
    bool record_error_signal = false;
    RngKey rng{1, 0};
};

struct LoopTrace {
    std::vector<double> timing_estimate;  // tau_hat/T after every symbol
    std::vector<double> error_signal;     // raw detector outputs (optional)
    std::uint64_t settle_symbols = 0;     // prefix excluded from the statistics
    double variance = 0.0;                // measurement-window variance about the mean
    double mse = 0.0;                     // E[((tau_hat - tau)/T)^2]: what the MCRB bounds
    double mean_estimate = 0.0;
    double detector_slope = 0.0;  // calibrated k_d
    double loop_gain = 0.0;       // gamma = a / k_d
    bool loss_of_lock = false;    // |tau_hat - tau| exceeded T/2 while measuring
};

// Band-edge prefilter: a symmetric pair of narrow passbands at +-1/(2T)
// (windowed-sinc lowpass of width ~rolloff/T modulated onto the symbol-rate
// half tone). It passes the spectral edges that carry timing information
// and strips the data-bearing inner band, cutting detector self-noise.
inline std::vector<double> band_edge_prefilter_taps(double rolloff, int sps,
                                                    int span_symbols = 16) {
    const int n = span_symbols * sps + 1;
    const int mid = (n - 1) / 2;
    std::vector<double> q(n);
    const double fc = rolloff / (2.0 * sps);  // cycles per sample
    for (int j = 0; j < n; ++j) {
        const double t = j - mid;
        const double x = 2.0 * fc * t;
        const double lp =
            2.0 * fc * (x == 0.0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x));
        const double w = 0.42 + 0.5 * std::cos(2.0 * M_PI * t / (n - 1)) +
                         0.08 * std::cos(4.0 * M_PI * t / (n - 1));  // Blackman
        q[j] = 2.0 * lp * w * std::cos(M_PI * t / sps);
    }
    double e = 0.0;
    for (double v : q) e += v * v;
    const double g = 1.0 / std::sqrt(e);
    for (double& v : q) v *= g;
    return q;
}

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t d = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --d;
    return d;
}

inline std::vector<double> convolve_full(const std::vector<double>& a,
                                         const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

// Transmit taps with the true fractional delay folded in: the analytic
// root-raised-cosine sampled at (j - mid)/sps - tau, so the shaped signal
// peaks at sample (k + tau) * sps for symbol k with no interpolation error.
inline std::vector<double> delayed_tx_taps(double rolloff, int sps, int span, double tau) {
    const int n = span * sps + 1;
    const int mid = (n - 1) / 2;
    std::vector<double> h(n);
    for (int j = 0; j < n; ++j)
        h[j] = rrc_value(static_cast<double>(j - mid) / sps - tau, rolloff);
    // Scale by the unit-energy gain of the undelayed grid so the matched
    // output keeps unit symbol gain independent of tau.
    double e = 0.0;
    for (int j = 0; j < n; ++j) {
        const double v = rrc_value(static_cast<double>(j - mid) / sps, rolloff);
        e += v * v;
    }
    const double g = 1.0 / std::sqrt(e);
    for (double& v : h) v *= g;
    return h;
}

// One polarization of the receiver, evaluated sample by sample: symbols ->
// delayed pulse shaping -> white noise -> receive filter (matched filter,
// optionally convolved with the band-edge prefilter), with the receive
// filter's group delay removed. Sample n sits at continuous time n/sps
// symbol periods; symbol k's strobe is at n = (k + tau) * sps.
class PolChain {
  public:
    PolChain(std::vector<double> tx, std::vector<double> rx, int sps, double sigma_per_dim,
             std::vector<cplx> symbols, RngStream noise)
        : tx_(std::move(tx)),
          rx_(std::move(rx)),
          sps_(sps),
          sigma_(sigma_per_dim),
          symbols_(std::move(symbols)),
          noise_(noise),
          rx_mid_(static_cast<std::int64_t>((rx_.size() - 1) / 2)) {
        r_ring_.resize(kRing);
        y_ring_.resize(kRing);
    }

    cplx sample(std::int64_t n) {
        if (n < 0) return {0.0, 0.0};
        while (y_hi_ <= n) produce_y();
        return y_ring_[static_cast<std::size_t>(n) & (kRing - 1)];
    }

  private:
    static constexpr std::size_t kRing = 4096;  // far above any filter span here

    void produce_r() {
        const std::int64_t n = r_hi_;
        cplx u{0.0, 0.0};
        const std::int64_t tx_len = static_cast<std::int64_t>(tx_.size());
        std::int64_t k_hi = floor_div(n, sps_);
        std::int64_t k_lo = floor_div(n - tx_len + sps_, sps_);  // ceil((n - len + 1)/sps)
        k_lo = std::max<std::int64_t>(k_lo, 0);
        k_hi = std::min<std::int64_t>(k_hi, static_cast<std::int64_t>(symbols_.size()) - 1);
        for (std::int64_t k = k_lo; k <= k_hi; ++k)
            u += symbols_[static_cast<std::size_t>(k)] * tx_[static_cast<std::size_t>(n - k * sps_)];
        u += cplx{sigma_ * noise_.gaussian(), sigma_ * noise_.gaussian()};
        r_ring_[static_cast<std::size_t>(n) & (kRing - 1)] = u;
        ++r_hi_;
    }

    void produce_y() {
        const std::int64_t n = y_hi_;
        const std::int64_t top = n + rx_mid_;
        while (r_hi_ <= top) produce_r();
        cplx acc{0.0, 0.0};
        for (std::size_t j = 0; j < rx_.size(); ++j) {
            const std::int64_t m = top - static_cast<std::int64_t>(j);
            if (m < 0) break;  // samples before the stream start are zero
            acc += rx_[j] * r_ring_[static_cast<std::size_t>(m) & (kRing - 1)];
        }
        y_ring_[static_cast<std::size_t>(n) & (kRing - 1)] = acc;
        ++y_hi_;
    }

    std::vector<double> tx_, rx_;
    int sps_;
    double sigma_;
    std::vector<cplx> symbols_;
    RngStream noise_;
    std::int64_t rx_mid_;
    std::vector<cplx> r_ring_, y_ring_;
    std::int64_t r_hi_ = 0, y_hi_ = 0;
};

inline cplx chain_interp(PolChain& ch, double t_samples) {
    const auto n0 = static_cast<std::int64_t>(std::floor(t_samples));
    const double mu = t_samples - static_cast<double>(n0);
    const std::array<cplx, 4> w = {ch.sample(n0 - 1), ch.sample(n0), ch.sample(n0 + 1),
                                   ch.sample(n0 + 2)};
    return farrow_interpolate(w, mu);
}

inline std::vector<double> receive_taps(double rolloff, int sps, int span, bool prefilter) {
    PulseShape ps{PulseKind::RootRaisedCosine, rolloff, span, sps};
    auto rx = pulse_taps(ps, TapNorm::UnitEnergy);
    if (prefilter) rx = convolve_full(rx, band_edge_prefilter_taps(rolloff, sps));
    return rx;
}

inline std::vector<cplx> draw_symbols(std::size_t n, RngStream rng) {
    static const std::vector<cplx> alphabet = classic_2d_set(ClassicKind::Qam16);
    std::vector<cplx> s(n);
    for (auto& v : s) v = alphabet[rng.uniform_index(alphabet.size())];
    return s;
}

}  // namespace detail

// Mean detector output per unit timing offset, measured on a noiseless
// random-data signal with the estimate pinned at zero and the true delay
// swept to +-delta. This is the calibration the loop uses to set its gain,
// so it includes the prefilter whenever the detector path does.
inline double measure_ged_slope(double rolloff, int sps, int span, bool prefilter,
                                double delta = 0.02) {
    static std::map<std::tuple<double, int, int, bool, double>, double> cache;
    static std::mutex mu;
    const auto key = std::make_tuple(rolloff, sps, span, prefilter, delta);
    {
        std::lock_guard<std::mutex> lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }

    const std::size_t n_sym = 4000;
    const auto rx = detail::receive_taps(rolloff, sps, span, prefilter);
    double mean_e[2] = {0.0, 0.0};
    for (int side = 0; side < 2; ++side) {
        const double tau = side == 0 ? delta : -delta;
        detail::PolChain chain(detail::delayed_tx_taps(rolloff, sps, span, tau), rx, sps, 0.0,
                               detail::draw_symbols(n_sym + 8, RngStream(0xCA11B, 0)),
                               RngStream(0xCA11B, 1));
        cplx prev = detail::chain_interp(chain, static_cast<double>(sps));
        for (std::size_t k = 2; k < n_sym; ++k) {
            const double t = static_cast<double>(k * sps);
            const cplx mid = detail::chain_interp(chain, t - 0.5 * sps);
            const cplx strobe = detail::chain_interp(chain, t);
            mean_e[side] += gardner_ted(strobe, mid, prev);
            prev = strobe;
        }
        mean_e[side] /= static_cast<double>(n_sym - 2);
    }
    const double slope = (mean_e[0] - mean_e[1]) / (2.0 * delta);
    std::lock_guard<std::mutex> lock(mu);
    cache[key] = slope;
    return slope;
}

// Gardner-detector timing recovery over a matched-filtered QAM stream.
// First-order loop; strobe and midpoint samples come from cubic
// interpolation of the receive-filter output. In dual mode the two
// polarizations' detector outputs are averaged before the loop filter.
inline LoopTrace run_timing_loop(const TimingLoopConfig& cfg) {
    const int sps = cfg.samples_per_symbol;
    const std::uint64_t settle =
        cfg.settle_symbols ? cfg.settle_symbols
                           : static_cast<std::uint64_t>(std::ceil(20.0 / cfg.loop_bandwidth_norm));
    const std::uint64_t n_track = settle + cfg.measure_symbols;
    const std::size_t n_sym = n_track + 16;

    const double sigma = noise_sigma_per_dim(cfg.esn0_db);
    const auto rx = detail::receive_taps(cfg.rolloff, sps, cfg.pulse_span, cfg.prefilter);
    const auto tx = detail::delayed_tx_taps(cfg.rolloff, sps, cfg.pulse_span, cfg.timing_offset);

    const bool dual = cfg.mode == TimingMode::DualPol;
    detail::PolChain cx(tx, rx, sps, sigma, detail::draw_symbols(n_sym, cfg.rng.substream(1)),
                        cfg.rng.substream(3));
    detail::PolChain cy(tx, rx, sps, sigma,
                        detail::draw_symbols(n_sym, cfg.rng.substream(
                                                        cfg.duplicate_polarization ? 1 : 2)),
                        cfg.rng.substream(cfg.duplicate_polarization ? 3 : 4));

    LoopTrace trace;
    trace.settle_symbols = settle;
    trace.detector_slope =
        measure_ged_slope(cfg.rolloff, sps, cfg.pulse_span, cfg.prefilter);
    const double a = loop_gain_for_bandwidth(cfg.loop_bandwidth_norm);
    trace.loop_gain = a / trace.detector_slope;

    trace.timing_estimate.reserve(n_track);
    if (cfg.record_error_signal) trace.error_signal.reserve(n_track);

    double tau_hat = cfg.initial_estimate;
    auto strobe_at = [&](std::uint64_t k, double frac) {
        return (static_cast<double>(k) + frac + tau_hat) * sps;
    };
    cplx prev_x = detail::chain_interp(cx, strobe_at(1, 0.0));
    cplx prev_y = dual ? detail::chain_interp(cy, strobe_at(1, 0.0)) : cplx{};

    for (std::uint64_t k = 2; k < 2 + n_track; ++k) {
        const cplx mid_x = detail::chain_interp(cx, strobe_at(k, -0.5));
        const cplx str_x = detail::chain_interp(cx, strobe_at(k, 0.0));
        double e = gardner_ted(str_x, mid_x, prev_x);
        prev_x = str_x;
        if (dual) {
            const cplx mid_y = detail::chain_interp(cy, strobe_at(k, -0.5));
            const cplx str_y = detail::chain_interp(cy, strobe_at(k, 0.0));
            e = 0.5 * (e + gardner_ted(str_y, mid_y, prev_y));
            prev_y = str_y;
        }
        tau_hat += trace.loop_gain * e;
        // A healthy loop stays within a fraction of a symbol; the clamp only
        // bounds runaway excursions after a loss of lock.
        tau_hat = std::clamp(tau_hat, cfg.initial_estimate - 2.0, cfg.initial_estimate + 2.0);
        trace.timing_estimate.push_back(tau_hat);
        if (cfg.record_error_signal) trace.error_signal.push_back(e);
    }

    double sum = 0.0;
    for (std::uint64_t i = settle; i < n_track; ++i) sum += trace.timing_estimate[i];
    trace.mean_estimate = sum / static_cast<double>(cfg.measure_symbols);
    double var = 0.0, mse = 0.0;
    bool lost = false;
    for (std::uint64_t i = settle; i < n_track; ++i) {
        const double v = trace.timing_estimate[i];
        var += (v - trace.mean_estimate) * (v - trace.mean_estimate);
        mse += (v - cfg.timing_offset) * (v - cfg.timing_offset);
        lost = lost || std::abs(v - cfg.timing_offset) > 0.5;
    }
    trace.variance = var / static_cast<double>(cfg.measure_symbols);
    trace.mse = mse / static_cast<double>(cfg.measure_symbols);
    trace.loss_of_lock = lost;
    return trace;
}

struct JitterPoint {
    double esn0_db = 0.0;
    TimingMode mode = TimingMode::SinglePol;
    bool prefilter = false;
    double bn_t = 0.0;
    // Mean-square normalized timing error about the true offset; this is
    // the estimator error power the MCRB lower-bounds, so it includes any
    // static interpolator/detector bias.
    double variance_norm = 0.0;
    double mcrb_norm = 0.0;  // bound at the same operating point
    double ratio_to_mcrb = 0.0;
    // Zero-mean jitter component (variance about the measurement-window
    // mean). Detector-noise averaging across polarizations halves this
    // part; the shared bias above is unaffected by averaging.
    double jitter_about_mean = 0.0;
    bool locked = false;
};

inline JitterPoint evaluate_jitter(const TimingLoopConfig& cfg) {
    const auto trace = run_timing_loop(cfg);
    JitterPoint p;
    p.esn0_db = cfg.esn0_db;
    p.mode = cfg.mode;
    p.prefilter = cfg.prefilter;
    p.bn_t = cfg.loop_bandwidth_norm;
    p.variance_norm = trace.mse;
    p.mcrb_norm = mcrb_tau_normalized({cfg.loop_bandwidth_norm, rrc_timing_xi(cfg.rolloff),
                                       db_to_lin(cfg.esn0_db), cfg.mode == TimingMode::DualPol});
    p.ratio_to_mcrb = p.variance_norm / p.mcrb_norm;
    p.jitter_about_mean = trace.variance;
    p.locked = !trace.loss_of_lock;
    return p;
}

inline std::vector<JitterPoint> jitter_curve(const std::vector<TimingLoopConfig>& configs) {
    std::vector<JitterPoint> out;
    out.reserve(configs.size());
    for (const auto& cfg : configs) out.push_back(evaluate_jitter(cfg));
    return out;
}

}  // namespace quadmod
