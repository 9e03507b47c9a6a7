#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "quadmod/channel.hpp"
#include "quadmod/constellation.hpp"
#include "quadmod/d4_lattice.hpp"
#include "quadmod/generators.hpp"
#include "quadmod/ser_curve.hpp"
#include "quadmod/snr.hpp"
#include "quadmod/sphere_packing.hpp"
#include "quadmod/timing_loop.hpp"
#include "quadmod/union_bound.hpp"
#include "quadmod/waveform.hpp"

namespace quadmod {

enum class ExperimentKind { SerSweep, GainAtThreshold, PaprTable, JitterSweep, ConstellationExport };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::SerSweep: return "ser-sweep";
        case ExperimentKind::GainAtThreshold: return "gain-at-threshold";
        case ExperimentKind::PaprTable: return "papr-table";
        case ExperimentKind::JitterSweep: return "jitter-sweep";
        case ExperimentKind::ConstellationExport: return "constellation-export";
    }
    return "?";
}

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
    for (auto k : {ExperimentKind::SerSweep, ExperimentKind::GainAtThreshold,
                   ExperimentKind::PaprTable, ExperimentKind::JitterSweep,
                   ExperimentKind::ConstellationExport})
        if (s == to_string(k)) return k;
    throw UnknownName("unknown experiment kind '" + s + "'");
}

struct JitterSettings {
    std::vector<TimingMode> modes{TimingMode::SinglePol, TimingMode::DualPol};
    std::vector<bool> prefilters{false};
    double bn_t = 5e-4;
    double rolloff = 0.20;
    std::uint64_t measure_symbols = 1'000'000;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::SerSweep;
    std::string name = "custom";
    std::vector<std::string> constellations;
    std::vector<double> esn0_grid_db;
    double target_ser = 1e-4;
    std::uint64_t seed = 1;
    std::string output_dir = ".";

    // Error-rate sweep tuning. The sweep walks each curve from low to high
    // Es/N0 and stops once it has safely passed the target level (measured
    // SER below target/10, or union bound below target/50), mirroring a
    // curve leaving the bottom of its figure.
    std::uint64_t min_errors = 200;
    std::uint64_t refine_min_errors = 600;
    std::uint64_t max_symbols = 200'000'000;
    bool refine_crossing = true;
    std::vector<std::pair<std::string, std::string>> gain_pairs;  // (candidate, reference)

    std::size_t papr_symbols = 200'000;
    JitterSettings jitter;
};

// ---------------------------------------------------------------------------
// Constellation factory

namespace detail {

inline std::size_t count_suffix(const std::string& spec, std::size_t prefix_len) {
    const std::string digits = spec.substr(prefix_len);
    if (digits.empty() || digits.size() > 9 ||
        digits.find_first_not_of("0123456789") != std::string::npos)
        throw UnknownName("unknown constellation '" + spec + "'");
    return static_cast<std::size_t>(std::stoull(digits));
}

}  // namespace detail

// Resolves a generator spec: lam<N>, psk4d<N>, hexcyl<N>, biortho,
// biortho-axes, dual-<qpsk|psk3|psk8|qam16|apsk16|hexqam8>, or file:<path>
// in the interchange format. "biortho-alt" names a transmission scheme, not
// a fixed point set, and is valid only in the peak-power table.
//
// Sphere packings are expensive to optimize and depend only on the point
// count (the search seed is part of the construction, not of the experiment
// seed), so they are memoized per process.
inline Constellation make_named_constellation(const std::string& spec) {
    if (spec.rfind("file:", 0) == 0) return read_constellation_file(spec.substr(5));
    if (spec == "biortho") return generate_biorthogonal(true);
    if (spec == "biortho-axes") return generate_biorthogonal(false);
    if (spec.rfind("dual-", 0) == 0) {
        const std::string kind = spec.substr(5);
        for (auto k : {ClassicKind::Qpsk, ClassicKind::Psk3, ClassicKind::Psk8,
                       ClassicKind::Qam16, ClassicKind::Apsk16, ClassicKind::HexQam8})
            if (kind == to_string(k)) return generate_classic_dual(k);
        throw UnknownName("unknown constellation '" + spec + "'");
    }
    if (spec.rfind("psk4d", 0) == 0) {
        const std::size_t count = detail::count_suffix(spec, 5);
        if (count < 2) throw UnknownName("unknown constellation '" + spec + "'");
        static std::mutex mu;
        static std::map<std::size_t, Constellation> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(count);
        if (it == cache.end())
            it = cache.emplace(count, generate_sphere_4dpsk(count, {}).constellation).first;
        return it->second;
    }
    if (spec.rfind("hexcyl", 0) == 0) return generate_hex_cylinder(detail::count_suffix(spec, 6));
    if (spec.rfind("lam", 0) == 0) return generate_d4_lam(detail::count_suffix(spec, 3));
    throw UnknownName("unknown constellation '" + spec + "'");
}

// Checks that a spec is well formed without running expensive construction
// (sphere packings are only shape-checked; files are checked at load time).
inline void validate_constellation_spec(const std::string& spec) {
    if (spec.rfind("file:", 0) == 0) return;
    if (spec.rfind("psk4d", 0) == 0) {
        if (detail::count_suffix(spec, 5) < 2)
            throw UnknownName("unknown constellation '" + spec + "'");
        return;
    }
    make_named_constellation(spec);  // cheap for every remaining family
}

// ---------------------------------------------------------------------------
// Validation

inline void validate_config(const ExperimentConfig& cfg) {
    const bool needs_grid = cfg.experiment == ExperimentKind::SerSweep ||
                            cfg.experiment == ExperimentKind::GainAtThreshold ||
                            cfg.experiment == ExperimentKind::JitterSweep;
    if (cfg.constellations.empty() && cfg.experiment != ExperimentKind::JitterSweep)
        throw ParseError("config: 'constellations' must not be empty");
    if (needs_grid && cfg.esn0_grid_db.empty())
        throw ParseError("config: 'esn0_grid_db' must not be empty");
    if (!(cfg.target_ser > 0.0) || !(cfg.target_ser < 0.5))
        throw ParseError("config: 'target_ser' must lie in (0, 0.5)");
    if (cfg.min_errors == 0) throw ParseError("config: 'min_errors' must be positive");
    if (cfg.refine_min_errors < cfg.min_errors)
        throw ParseError("config: 'refine_min_errors' must be >= 'min_errors'");
    if (cfg.max_symbols < cfg.min_errors)
        throw ParseError("config: 'max_symbols' too small for 'min_errors'");
    if (cfg.experiment == ExperimentKind::JitterSweep) {
        if (cfg.jitter.modes.empty() || cfg.jitter.prefilters.empty())
            throw ParseError("config: jitter 'modes' and 'prefilter' must not be empty");
        if (!(cfg.jitter.bn_t > 0.0) || cfg.jitter.bn_t >= 0.25)
            throw ParseError("config: jitter 'bn_t' must lie in (0, 0.25)");
        if (cfg.jitter.measure_symbols == 0)
            throw ParseError("config: jitter 'measure_symbols' must be positive");
    }
    if (cfg.papr_symbols == 0) throw ParseError("config: 'papr_symbols' must be positive");
    if (cfg.experiment == ExperimentKind::GainAtThreshold && cfg.gain_pairs.empty())
        throw ParseError("config: gain-at-threshold requires at least one entry in 'gain_pairs'");
    for (const auto& name : cfg.constellations) {
        if (name == "biortho-alt") {
            if (cfg.experiment != ExperimentKind::PaprTable)
                throw ParseError("config: 'biortho-alt' is a transmission scheme; it is only "
                                 "valid in the papr-table experiment");
            continue;
        }
        validate_constellation_spec(name);  // throws UnknownName on bad specs
    }
    for (const auto& [a, b] : cfg.gain_pairs) {
        auto listed = [&](const std::string& n) {
            return std::find(cfg.constellations.begin(), cfg.constellations.end(), n) !=
                   cfg.constellations.end();
        };
        if (!listed(a) || !listed(b))
            throw ParseError("config: gain pair (" + a + ", " + b +
                             ") references a constellation not in 'constellations'");
    }
}

// ---------------------------------------------------------------------------
// Error-rate sweep

struct SweepCurve {
    std::string constellation;
    double bits_per_symbol = 0.0;
    std::vector<CurvePoint> points;                         // ascending Es/N0
    std::vector<std::pair<double, double>> union_bound_points;  // same abscissae
    bool underresolved = false;
    bool truncated_by_floor = false;  // sweep stopped after passing the target
};

namespace detail {

// Stream id for one (curve, grid point) task: stable under refinement order
// and worker count. Grid values are quantized to 0.25 dB, the refinement
// granularity.
inline std::uint64_t point_stream(std::size_t curve_index, double esn0_db) {
    const auto q = static_cast<std::int64_t>(std::llround(esn0_db * 4.0));
    return (static_cast<std::uint64_t>(curve_index) << 16) |
           (static_cast<std::uint64_t>(q) & 0xFFFFu);
}

inline SweepCurve sweep_one(const ExperimentConfig& cfg, const Constellation& c,
                            std::size_t curve_index, const std::string& display_name,
                            unsigned inner_jobs) {
    SweepCurve out;
    out.constellation = display_name;
    out.bits_per_symbol = c.bits_per_symbol;

    const auto spectrum = distance_spectrum(c);
    const double stop_ser = cfg.target_ser / 10.0;
    const double ub_floor = cfg.target_ser / 50.0;

    std::vector<double> grid = cfg.esn0_grid_db;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    auto run_point = [&](double esn0, std::uint64_t min_errors) {
        const RngKey key{cfg.seed, point_stream(curve_index, esn0)};
        return simulate_ser(c, esn0, {min_errors, cfg.max_symbols}, key, inner_jobs);
    };

    for (double esn0 : grid) {
        if (union_bound(spectrum, esn0) < ub_floor) {
            out.truncated_by_floor = true;  // certainly below the figure floor
            break;
        }
        const auto est = run_point(esn0, cfg.min_errors);
        out.points.push_back({esn0, est});
        out.underresolved |= est.underresolved;
        if (!est.underresolved && est.ser() < stop_ser) {
            out.truncated_by_floor = true;
            break;
        }
    }

    if (cfg.refine_crossing) {
        // Find the bracket around the target, fill it to 0.25 dB steps, and
        // bring every point of the densified bracket (endpoints included) up
        // to the tighter error budget, for gain readings at the threshold.
        // Re-running a point with a larger budget extends the same RNG
        // stream, so the cheap first pass is a prefix of the refined one.
        for (std::size_t i = 0; i + 1 < out.points.size(); ++i) {
            const double s0 = out.points[i].estimate.ser();
            const double s1 = out.points[i + 1].estimate.ser();
            if (!(s0 > 0.0 && s1 > 0.0 && s0 >= cfg.target_ser && s1 <= cfg.target_ser)) continue;
            const double x0 = out.points[i].esn0_db, x1 = out.points[i + 1].esn0_db;
            if (cfg.refine_min_errors > cfg.min_errors) {
                out.points[i].estimate = run_point(x0, cfg.refine_min_errors);
                out.points[i + 1].estimate = run_point(x1, cfg.refine_min_errors);
                out.underresolved |= out.points[i].estimate.underresolved;
                out.underresolved |= out.points[i + 1].estimate.underresolved;
            }
            std::vector<CurvePoint> extra;
            for (double m = x0 + 0.25; m < x1 - 1e-9; m += 0.25)
                extra.push_back({m, run_point(m, cfg.refine_min_errors)});
            for (auto& p : extra) out.underresolved |= p.estimate.underresolved;
            out.points.insert(out.points.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                              extra.begin(), extra.end());
            break;
        }
    }

    out.union_bound_points.reserve(out.points.size());
    for (const auto& p : out.points)
        out.union_bound_points.emplace_back(p.esn0_db, union_bound(spectrum, p.esn0_db));
    return out;
}

}  // namespace detail

inline std::vector<SweepCurve> run_ser_sweep(const ExperimentConfig& cfg, unsigned jobs = 1) {
    const std::size_t n = cfg.constellations.size();
    std::vector<Constellation> built;
    built.reserve(n);
    for (const auto& name : cfg.constellations) built.push_back(make_named_constellation(name));

    std::vector<SweepCurve> curves(n);
    const unsigned pool = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    const unsigned inner = std::max(1u, jobs / static_cast<unsigned>(n));
    if (pool <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            curves[i] = detail::sweep_one(cfg, built[i], i, cfg.constellations[i], jobs);
        return curves;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
            curves[i] = detail::sweep_one(cfg, built[i], i, cfg.constellations[i], inner);
    };
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < pool; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    return curves;
}

// ---------------------------------------------------------------------------
// Gain at the target error rate

struct GainEntry {
    std::string constellation_a, constellation_b;
    double bits_a = 0.0, bits_b = 0.0;
    double esn0_a_db = 0.0, esn0_b_db = 0.0;  // raw crossings at the target SER
    double ebn0_a_db = 0.0, ebn0_b_db = 0.0;  // per-information-bit crossings
    double gain_db = 0.0;                     // ebn0_b - ebn0_a
};

struct GainReport {
    double target_ser = 0.0;
    std::vector<GainEntry> pairs;
};

// Pairwise power gains at the common target SER. Crossings are read off
// each curve by log-linear interpolation; the gain is taken on the
// per-information-bit axis (Eb/N0 = Es/N0 - 10 log10 bits), which reduces
// to the plain Es/N0 difference whenever the two schemes carry equal bits
// per symbol and makes unequal-rate schemes comparable.
inline GainReport compare_gain(const std::vector<SweepCurve>& curves,
                               const std::vector<std::pair<std::string, std::string>>& pairs,
                               double target_ser) {
    auto find = [&](const std::string& name) -> const SweepCurve& {
        for (const auto& c : curves)
            if (c.constellation == name) return c;
        throw UnknownName("compare_gain: no curve named '" + name + "'");
    };
    auto crossing = [&](const SweepCurve& c) {
        try {
            return snr_at_ser(c.points, target_ser);
        } catch (const NoBracket& e) {
            throw NoBracket("compare_gain: curve '" + c.constellation + "': " + e.what());
        }
    };

    GainReport rep;
    rep.target_ser = target_ser;
    for (const auto& [name_a, name_b] : pairs) {
        const SweepCurve& a = find(name_a);
        const SweepCurve& b = find(name_b);
        GainEntry g;
        g.constellation_a = name_a;
        g.constellation_b = name_b;
        g.bits_a = a.bits_per_symbol;
        g.bits_b = b.bits_per_symbol;
        g.esn0_a_db = crossing(a);
        g.esn0_b_db = crossing(b);
        g.ebn0_a_db = g.esn0_a_db - 10.0 * std::log10(g.bits_a);
        g.ebn0_b_db = g.esn0_b_db - 10.0 * std::log10(g.bits_b);
        g.gain_db = g.ebn0_b_db - g.ebn0_a_db;
        rep.pairs.push_back(g);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Peak-power table and jitter sweep

struct PaprRow {
    std::string modulation;
    PaprReport report;
};

inline std::vector<PaprRow> run_papr_table(const ExperimentConfig& cfg, unsigned jobs = 1) {
    const std::size_t n = cfg.constellations.size();
    std::vector<PaprRow> rows(n);
    auto run_row = [&](std::size_t i) {
        const std::string& name = cfg.constellations[i];
        const PaprProtocol proto{cfg.papr_symbols,
                                 PulseShape{PulseKind::RootRaisedCosine, 0.20, 32, 8}};
        const RngKey key{cfg.seed, static_cast<std::uint64_t>(i)};
        if (name == "biortho-alt") {
            RngStream rng = key.substream(0);
            const auto seq = biorthogonal_alt_sequence(cfg.papr_symbols, rng);
            rows[i] = {name, measure_papr(seq.base, seq.indices, proto)};
        } else {
            rows[i] = {name, measure_papr(make_named_constellation(name), proto, key)};
        }
    };
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) run_row(i);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) run_row(i);
    };
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < std::min<unsigned>(jobs, static_cast<unsigned>(n)); ++t)
        threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    return rows;
}

inline std::vector<JitterPoint> run_jitter_sweep(const ExperimentConfig& cfg, unsigned jobs = 1) {
    std::vector<double> grid = cfg.esn0_grid_db;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<TimingLoopConfig> rows;
    for (TimingMode mode : cfg.jitter.modes)
        for (bool pf : cfg.jitter.prefilters)
            for (double esn0 : grid) {
                TimingLoopConfig lc;
                lc.esn0_db = esn0;
                lc.mode = mode;
                lc.prefilter = pf;
                lc.loop_bandwidth_norm = cfg.jitter.bn_t;
                lc.rolloff = cfg.jitter.rolloff;
                lc.measure_symbols = cfg.jitter.measure_symbols;
                lc.rng = RngKey{cfg.seed, static_cast<std::uint64_t>(rows.size())};
                rows.push_back(lc);
            }

    std::vector<JitterPoint> out(rows.size());
    if (jobs <= 1) {
        for (std::size_t i = 0; i < rows.size(); ++i) out[i] = evaluate_jitter(rows[i]);
        return out;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < rows.size(); i = next.fetch_add(1))
            out[i] = evaluate_jitter(rows[i]);
    };
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < std::min<unsigned>(jobs, static_cast<unsigned>(rows.size())); ++t)
        threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    return out;
}

// ---------------------------------------------------------------------------
// Presets

namespace detail {

inline std::vector<double> db_grid(double lo, double hi, double step) {
    std::vector<double> g;
    const int n = static_cast<int>(std::lround((hi - lo) / step));
    for (int k = 0; k <= n; ++k) g.push_back(lo + k * step);
    return g;
}

}  // namespace detail

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"fig-ser-6bit",    "fig-ser-8bit",
                                                   "fig-ser-cyl",     "fig-ser-biortho",
                                                   "tab-papr",        "fig-jitter"};
    return names;
}

// One preset per figure/table artifact. SER grids use 0.5 dB steps over
// each figure's visible range; the sweep refines to 0.25 dB at the target
// crossing on its own.
inline ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig cfg;
    cfg.name = name;
    if (name == "fig-ser-6bit") {
        cfg.experiment = ExperimentKind::SerSweep;
        cfg.constellations = {"lam88", "psk4d64", "dual-psk8", "dual-hexqam8"};
        cfg.esn0_grid_db = detail::db_grid(12.0, 22.0, 0.5);
        cfg.gain_pairs = {{"lam88", "dual-psk8"}, {"lam88", "dual-hexqam8"}, {"psk4d64", "lam88"}};
    } else if (name == "fig-ser-8bit") {
        cfg.experiment = ExperimentKind::SerSweep;
        cfg.constellations = {"lam256", "dual-qam16", "dual-apsk16"};
        cfg.esn0_grid_db = detail::db_grid(14.0, 24.5, 0.5);
        cfg.gain_pairs = {{"lam256", "dual-qam16"}, {"lam256", "dual-apsk16"}};
    } else if (name == "fig-ser-cyl") {
        cfg.experiment = ExperimentKind::SerSweep;
        cfg.constellations = {"hexcyl64", "dual-psk8"};
        cfg.esn0_grid_db = detail::db_grid(13.0, 22.5, 0.5);
        cfg.gain_pairs = {{"hexcyl64", "dual-psk8"}};
    } else if (name == "fig-ser-biortho") {
        cfg.experiment = ExperimentKind::SerSweep;
        cfg.constellations = {"biortho", "dual-qpsk", "dual-psk3"};
        cfg.esn0_grid_db = detail::db_grid(6.0, 17.0, 0.5);
        cfg.gain_pairs = {{"biortho", "dual-qpsk"}, {"biortho", "dual-psk3"}};
    } else if (name == "tab-papr") {
        cfg.experiment = ExperimentKind::PaprTable;
        cfg.constellations = {"lam256",   "dual-qam16", "dual-apsk16", "lam88",
                              "psk4d64",  "dual-hexqam8", "hexcyl64",  "dual-psk8",
                              "biortho",  "biortho-alt", "dual-qpsk",  "dual-psk3"};
    } else if (name == "fig-jitter") {
        cfg.experiment = ExperimentKind::JitterSweep;
        cfg.constellations = {};
        cfg.esn0_grid_db = {5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
        cfg.jitter.modes = {TimingMode::SinglePol, TimingMode::DualPol};
        cfg.jitter.prefilters = {false, true};
    } else {
        throw UnknownName("unknown preset '" + name + "'");
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Config file parsing (JSON)

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("config: missing field '") + key + "'");
    return *it;
}

template <typename T>
inline T field_as(const nlohmann::json& j, const char* key) {
    try {
        return field(j, key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config field '") + key + "': " + e.what());
    }
}

template <typename T>
inline void opt_field(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = field_as<T>(j, key);
}

inline std::vector<double> parse_grid(const nlohmann::json& g) {
    if (g.is_array()) return g.get<std::vector<double>>();
    if (g.is_object()) {
        for (const auto& [k, v] : g.items())
            if (k != "start" && k != "stop" && k != "step")
                throw ParseError("config field 'esn0_grid_db': unknown key '" + k + "'");
        const double lo = field_as<double>(g, "start");
        const double hi = field_as<double>(g, "stop");
        const double step = field_as<double>(g, "step");
        if (!(step > 0.0) || hi < lo)
            throw ParseError("config field 'esn0_grid_db': need step > 0 and stop >= start");
        return db_grid(lo, hi, step);
    }
    throw ParseError("config field 'esn0_grid_db': expected array or {start, stop, step}");
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("config parse: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("config: top level must be an object");

    static const std::vector<std::string> known = {
        "experiment",  "name",       "constellations", "esn0_grid_db",      "target_ser",
        "seed",        "output_dir", "min_errors",     "refine_min_errors", "max_symbols",
        "refine_crossing", "gain_pairs", "papr_symbols", "jitter"};
    for (const auto& [key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ParseError("config: unknown field '" + key + "'");

    ExperimentConfig cfg;
    cfg.experiment = experiment_kind_from_string(detail::field_as<std::string>(j, "experiment"));
    detail::opt_field(j, "name", cfg.name);
    detail::opt_field(j, "constellations", cfg.constellations);
    if (j.contains("esn0_grid_db")) cfg.esn0_grid_db = detail::parse_grid(j["esn0_grid_db"]);
    detail::opt_field(j, "target_ser", cfg.target_ser);
    detail::opt_field(j, "seed", cfg.seed);
    detail::opt_field(j, "output_dir", cfg.output_dir);
    detail::opt_field(j, "min_errors", cfg.min_errors);
    detail::opt_field(j, "refine_min_errors", cfg.refine_min_errors);
    detail::opt_field(j, "max_symbols", cfg.max_symbols);
    detail::opt_field(j, "refine_crossing", cfg.refine_crossing);
    detail::opt_field(j, "papr_symbols", cfg.papr_symbols);
    if (j.contains("gain_pairs")) {
        try {
            for (const auto& p : j["gain_pairs"]) {
                if (!p.is_array() || p.size() != 2)
                    throw ParseError("config field 'gain_pairs': each entry must be a pair");
                cfg.gain_pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("config field 'gain_pairs': ") + e.what());
        }
    }
    if (j.contains("jitter")) {
        const auto& jj = j["jitter"];
        if (!jj.is_object()) throw ParseError("config field 'jitter': expected object");
        for (const auto& [key, value] : jj.items())
            if (key != "modes" && key != "prefilter" && key != "bn_t" && key != "rolloff" &&
                key != "measure_symbols")
                throw ParseError("config field 'jitter': unknown key '" + key + "'");
        if (jj.contains("modes")) {
            cfg.jitter.modes.clear();
            for (const auto& m : detail::field_as<std::vector<std::string>>(jj, "modes")) {
                if (m == "single") cfg.jitter.modes.push_back(TimingMode::SinglePol);
                else if (m == "dual") cfg.jitter.modes.push_back(TimingMode::DualPol);
                else throw ParseError("config field 'jitter.modes': unknown mode '" + m + "'");
            }
        }
        if (jj.contains("prefilter")) {
            cfg.jitter.prefilters.clear();
            try {
                for (const auto& b : jj["prefilter"]) cfg.jitter.prefilters.push_back(b.get<bool>());
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(std::string("config field 'jitter.prefilter': ") + e.what());
            }
        }
        detail::opt_field(jj, "bn_t", cfg.jitter.bn_t);
        detail::opt_field(jj, "rolloff", cfg.jitter.rolloff);
        detail::opt_field(jj, "measure_symbols", cfg.jitter.measure_symbols);
    }
    return cfg;
}

inline std::string serialize_config(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["experiment"] = to_string(cfg.experiment);
    j["name"] = cfg.name;
    j["constellations"] = cfg.constellations;
    j["esn0_grid_db"] = cfg.esn0_grid_db;
    j["target_ser"] = cfg.target_ser;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    j["min_errors"] = cfg.min_errors;
    j["refine_min_errors"] = cfg.refine_min_errors;
    j["max_symbols"] = cfg.max_symbols;
    j["refine_crossing"] = cfg.refine_crossing;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [a, b] : cfg.gain_pairs) pairs.push_back({a, b});
    j["gain_pairs"] = pairs;
    j["papr_symbols"] = cfg.papr_symbols;
    nlohmann::json jj;
    std::vector<std::string> modes;
    for (auto m : cfg.jitter.modes) modes.emplace_back(to_string(m));
    jj["modes"] = modes;
    jj["prefilter"] = cfg.jitter.prefilters;
    jj["bn_t"] = cfg.jitter.bn_t;
    jj["rolloff"] = cfg.jitter.rolloff;
    jj["measure_symbols"] = cfg.jitter.measure_symbols;
    j["jitter"] = jj;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Output files

namespace detail {

inline std::string strf(const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

}  // namespace detail

struct ExperimentResult {
    std::vector<std::string> files;
    std::string summary;
    bool underresolved = false;
    std::vector<SweepCurve> curves;
    GainReport gains;
    std::vector<PaprRow> papr;
    std::vector<JitterPoint> jitter;
};

namespace detail {

class OutputSet {
  public:
    explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::filesystem::path dir() const { return dir_; }

    void write(const std::string& name, const std::string& content,
               std::vector<std::string>& files) {
        const auto path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open output file " + path.string());
        out << content;
        if (!out) throw std::runtime_error("write failed for " + path.string());
        created_.push_back(path);
        files.push_back(path.string());
    }

    // Removes everything written through this set (failure cleanup).
    void discard() {
        for (const auto& p : created_) {
            std::error_code ec;
            std::filesystem::remove(p, ec);
        }
        created_.clear();
    }

  private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> created_;
};

inline std::string ser_csv(const std::vector<SweepCurve>& curves) {
    std::string s = "constellation,esn0_db,ser,errors,trials,ci95\n";
    for (const auto& c : curves)
        for (const auto& p : c.points)
            s += strf("%s,%.10g,%.10e,%llu,%llu,%.10e\n", c.constellation.c_str(), p.esn0_db,
                      p.estimate.ser(),
                      static_cast<unsigned long long>(p.estimate.errors),
                      static_cast<unsigned long long>(p.estimate.trials),
                      p.estimate.ci95_halfwidth());
    return s;
}

inline std::string union_bound_csv(const std::vector<SweepCurve>& curves) {
    std::string s = "constellation,esn0_db,union_bound\n";
    for (const auto& c : curves)
        for (const auto& [esn0, ub] : c.union_bound_points)
            s += strf("%s,%.10g,%.10e\n", c.constellation.c_str(), esn0, ub);
    return s;
}

inline std::string ser_dat(const std::vector<SweepCurve>& curves) {
    std::string s = "# symbol error rate vs Es/N0; one index block per constellation\n";
    for (const auto& c : curves) {
        s += strf("# %s (%.6g bits per symbol)\n", c.constellation.c_str(), c.bits_per_symbol);
        s += "# esn0_db  ser  union_bound\n";
        for (std::size_t i = 0; i < c.points.size(); ++i)
            s += strf("%-8.10g %.10e %.10e\n", c.points[i].esn0_db, c.points[i].estimate.ser(),
                      c.union_bound_points[i].second);
        s += "\n\n";
    }
    return s;
}

inline std::string gains_csv(const GainReport& rep) {
    std::string s =
        "constellation_a,constellation_b,bits_a,bits_b,esn0_a_db,esn0_b_db,ebn0_a_db,"
        "ebn0_b_db,gain_db\n";
    for (const auto& g : rep.pairs)
        s += strf("%s,%s,%.6g,%.6g,%.4f,%.4f,%.4f,%.4f,%.4f\n", g.constellation_a.c_str(),
                  g.constellation_b.c_str(), g.bits_a, g.bits_b, g.esn0_a_db, g.esn0_b_db,
                  g.ebn0_a_db, g.ebn0_b_db, g.gain_db);
    return s;
}

inline std::string papr_csv(const std::vector<PaprRow>& rows) {
    std::string s = "modulation,symbol_combined,symbol_single,shaped_combined,shaped_single\n";
    for (const auto& r : rows)
        s += strf("%s,%.2f,%.2f,%.2f,%.2f\n", r.modulation.c_str(), r.report.symbol_combined,
                  r.report.symbol_single, r.report.shaped_combined, r.report.shaped_single);
    return s;
}

inline std::string jitter_csv(const std::vector<JitterPoint>& rows) {
    std::string s = "esn0_db,mode,prefilter,bn_t,variance_norm,mcrb_norm,ratio_to_mcrb,lock_flag\n";
    for (const auto& p : rows)
        s += strf("%.10g,%s,%d,%.10g,%.10e,%.10e,%.6f,%d\n", p.esn0_db, to_string(p.mode),
                  p.prefilter ? 1 : 0, p.bn_t, p.variance_norm, p.mcrb_norm, p.ratio_to_mcrb,
                  p.locked ? 1 : 0);
    return s;
}

inline std::string jitter_dat(const std::vector<JitterPoint>& rows) {
    std::string s = "# normalized timing error power vs Es/N0; one block per tracker variant\n";
    std::vector<std::pair<TimingMode, bool>> variants;
    for (const auto& p : rows) {
        const std::pair<TimingMode, bool> v{p.mode, p.prefilter};
        if (std::find(variants.begin(), variants.end(), v) == variants.end())
            variants.push_back(v);
    }
    for (const auto& [mode, pf] : variants) {
        s += strf("# mode=%s prefilter=%d\n", to_string(mode), pf ? 1 : 0);
        s += "# esn0_db  variance_norm  mcrb_norm\n";
        for (const auto& p : rows)
            if (p.mode == mode && p.prefilter == pf)
                s += strf("%-8.10g %.10e %.10e\n", p.esn0_db, p.variance_norm, p.mcrb_norm);
        s += "\n\n";
    }
    return s;
}

}  // namespace detail

// Runs one experiment end to end: validates, computes everything in memory,
// then writes the artifact files. Nothing is written when validation or
// computation fails; a failure while writing removes the partial set.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned jobs = 1) {
    validate_config(cfg);

    ExperimentResult res;
    std::string summary;
    summary += detail::strf("experiment: %s\n", to_string(cfg.experiment));
    summary += detail::strf("name: %s\nseed: %llu\n", cfg.name.c_str(),
                            static_cast<unsigned long long>(cfg.seed));

    // Compute phase (no files touched).
    const bool ser_like = cfg.experiment == ExperimentKind::SerSweep ||
                          cfg.experiment == ExperimentKind::GainAtThreshold;
    std::vector<std::pair<std::string, Constellation>> exports;
    if (ser_like) {
        res.curves = run_ser_sweep(cfg, jobs);
        for (const auto& c : res.curves) {
            res.underresolved |= c.underresolved;
            summary += detail::strf("curve %s: %zu points%s%s", c.constellation.c_str(),
                                    c.points.size(), c.truncated_by_floor ? "" : " (grid end)",
                                    c.underresolved ? ", UNDERRESOLVED points" : "");
            try {
                summary += detail::strf(", crosses SER %.3g at %.4f dB Es/N0\n", cfg.target_ser,
                                        snr_at_ser(c.points, cfg.target_ser));
            } catch (const NoBracket&) {
                summary += detail::strf(", does not cross SER %.3g\n", cfg.target_ser);
            }
        }
        if (!cfg.gain_pairs.empty()) {
            res.gains = compare_gain(res.curves, cfg.gain_pairs, cfg.target_ser);
            for (const auto& g : res.gains.pairs)
                summary += detail::strf("gain %s over %s: %.4f dB (per-bit axis)\n",
                                        g.constellation_a.c_str(), g.constellation_b.c_str(),
                                        g.gain_db);
        }
    } else if (cfg.experiment == ExperimentKind::PaprTable) {
        res.papr = run_papr_table(cfg, jobs);
        summary += detail::strf("rows: %zu\n", res.papr.size());
    } else if (cfg.experiment == ExperimentKind::JitterSweep) {
        res.jitter = run_jitter_sweep(cfg, jobs);
        std::size_t locked = 0;
        for (const auto& p : res.jitter) locked += p.locked;
        summary += detail::strf("rows: %zu, locked: %zu\n", res.jitter.size(), locked);
    } else {  // ConstellationExport
        for (const auto& name : cfg.constellations) {
            auto c = make_named_constellation(name);
            summary += detail::strf("export %s: %zu points\n", c.name.c_str(), c.points.size());
            exports.emplace_back(c.name + ".cst", std::move(c));
        }
    }
    if (res.underresolved)
        summary += "warning: some points hit the symbol cap before the error target; "
                   "estimates kept and flagged\n";
    res.summary = summary;

    // Write phase.
    std::filesystem::create_directories(cfg.output_dir);
    detail::OutputSet out{std::filesystem::path(cfg.output_dir)};
    try {
        if (cfg.experiment == ExperimentKind::SerSweep) {
            out.write("ser.csv", detail::ser_csv(res.curves), res.files);
            out.write("union_bound.csv", detail::union_bound_csv(res.curves), res.files);
            out.write("ser.dat", detail::ser_dat(res.curves), res.files);
            if (!res.gains.pairs.empty())
                out.write("gains.csv", detail::gains_csv(res.gains), res.files);
        } else if (cfg.experiment == ExperimentKind::GainAtThreshold) {
            out.write("gains.csv", detail::gains_csv(res.gains), res.files);
        } else if (cfg.experiment == ExperimentKind::PaprTable) {
            out.write("papr.csv", detail::papr_csv(res.papr), res.files);
        } else if (cfg.experiment == ExperimentKind::JitterSweep) {
            out.write("jitter.csv", detail::jitter_csv(res.jitter), res.files);
            out.write("jitter.dat", detail::jitter_dat(res.jitter), res.files);
        } else {
            for (const auto& [fname, c] : exports) {
                write_constellation_file((out.dir() / fname).string(), c);
                res.files.push_back((out.dir() / fname).string());
            }
        }
        out.write("summary.txt", res.summary, res.files);
    } catch (...) {
        out.discard();
        for (const auto& [fname, c] : exports) {
            std::error_code ec;
            std::filesystem::remove(out.dir() / fname, ec);
        }
        throw;
    }
    return res;
}

}  // namespace quadmod
