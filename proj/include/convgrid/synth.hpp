#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "convgrid/dataset.hpp"
#include "convgrid/rng.hpp"

namespace convgrid {

/// Synthetic dataset request, parsed from the CLI string
/// "<generator>:n=<count>:seed=<seed>[:key=value]...". Generators:
///   series1d  9-channel length-240 piecewise-constant series; regression
///             label = total variation of the stored values. params:
///             min_gap (8), gap_spread (28), level (0.5)
///   edges2d   single-channel size x size images with one horizontal
///             (class 0) or vertical (class 1) step edge. params:
///             size (16), noise (0.05)
///   faults2d  52 x 60 multivariate windows with one injected signature:
///             class 0 step, 1 drift, 2 oscillation, 3 random variation.
///             params: k (4), noise (0.1), amp (1.5), rows (6)
///   voxels3d  3-channel 20^3 density fields of random Gaussian blobs;
///             regression label = sum over voxels of channel0 * channel1.
///             params: blobs (3)
struct SynthSpec {
    std::string generator;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    std::map<std::string, double> params;

    double param(const std::string& key, double fallback) const {
        const auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
};

inline SynthSpec parse_synth_spec(const std::string& text) {
    SynthSpec spec;
    std::size_t start = 0;
    bool first = true;
    bool have_n = false;
    while (start <= text.size()) {
        std::size_t end = text.find(':', start);
        if (end == std::string::npos) end = text.size();
        const std::string part = text.substr(start, end - start);
        if (first) {
            spec.generator = part;
            first = false;
        } else if (!part.empty()) {
            const std::size_t eq = part.find('=');
            if (eq == std::string::npos)
                throw value_error("synth spec field '" + part + "' is not key=value");
            const std::string key = part.substr(0, eq);
            const std::string value = part.substr(eq + 1);
            try {
                if (key == "n") {
                    spec.count = static_cast<std::size_t>(std::stoull(value));
                    have_n = true;
                } else if (key == "seed") {
                    spec.seed = std::stoull(value);
                } else {
                    spec.params[key] = std::stod(value);
                }
            } catch (const value_error&) {
                throw;
            } catch (const std::exception&) {
                throw value_error("could not parse synth value '" + part + "'");
            }
        }
        start = end + 1;
    }
    if (spec.generator.empty()) throw value_error("synth spec needs a generator id");
    if (!have_n || spec.count < 1) throw value_error("synth spec needs n >= 1");
    return spec;
}

// ---------------------------------------------------------------------------
// Label functionals (closed forms over the stored sample values)
// ---------------------------------------------------------------------------

/// Sum over channels and positions of |v_c[x+1] - v_c[x]| along the last
/// axis. The series1d regression label.
inline double total_variation(const Grid& g) {
    const auto e3 = g.shape().extent3();
    const std::size_t sp = g.shape().spatial_size();
    double tv = 0.0;
    for (int c = 0; c < g.channels(); ++c) {
        const double* ch = g.data() + static_cast<std::size_t>(c) * sp;
        for (int x0 = 0; x0 < e3[0]; ++x0)
            for (int x1 = 0; x1 < e3[1]; ++x1) {
                const double* row = ch + (static_cast<std::size_t>(x0) * e3[1] + x1) * e3[2];
                for (int x2 = 0; x2 + 1 < e3[2]; ++x2) tv += std::abs(row[x2 + 1] - row[x2]);
            }
    }
    return tv;
}

/// Sum over lattice sites of channel0 * channel1. The voxels3d label.
inline double channel_overlap(const Grid& g) {
    if (g.channels() < 2) throw value_error("channel overlap needs at least two channels");
    const std::size_t sp = g.shape().spatial_size();
    const double* a = g.channel_data(0);
    const double* b = g.channel_data(1);
    double sum = 0.0;
    for (std::size_t k = 0; k < sp; ++k) sum += a[k] * b[k];
    return sum;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr double k_two_pi = 6.283185307179586476925286766559;

inline Dataset synth_series1d(const SynthSpec& spec, SplitMix64& rng) {
    constexpr int channels = 9;
    constexpr int length = 240;
    const int min_gap = static_cast<int>(spec.param("min_gap", 8));
    const int gap_spread = static_cast<int>(spec.param("gap_spread", 20));
    const int min_hold = static_cast<int>(spec.param("min_hold", 6));
    const int hold_spread = static_cast<int>(spec.param("hold_spread", 0));
    const double level = spec.param("level", 1.0);
    if (min_gap < 4 || min_hold < 4)
        throw value_error("series1d needs min_gap >= 4 and min_hold >= 4 so edges stay separated");

    Dataset ds;
    ds.task = Task::regression;
    ds.arity = 1;
    ds.shape = make_shape({length}, channels);

    // Piecewise-constant references: the channels rest at zero and take
    // turns holding a plateau of random height and sign (one variable steps
    // at a time, on a shared timeline). Every plateau contributes twice its
    // |height| to the total variation, plateaus never overlap, and the zero
    // baseline keeps the flat background identical across samples.
    for (std::size_t s = 0; s < spec.count; ++s) {
        std::vector<double> values(ds.shape.value_count(), 0.0);
        int x = min_gap + static_cast<int>(rng.below(static_cast<std::uint64_t>(gap_spread) + 1));
        while (x < length) {
            const int c = static_cast<int>(rng.below(channels));
            double* ch = values.data() + static_cast<std::size_t>(c) * length;
            const int hold = min_hold + static_cast<int>(rng.below(static_cast<std::uint64_t>(hold_spread) + 1));
            if (x + hold >= length) break;  // plateaus keep both edges inside the window
            const double height = (rng.below(2) ? 1.0 : -1.0) * level * rng.uniform(0.3, 1.0);
            for (int k = 0; k < hold; ++k) ch[x++] = height;
            x += min_gap + static_cast<int>(rng.below(static_cast<std::uint64_t>(gap_spread) + 1));
        }
        Grid input = Grid::unchecked(ds.shape, std::move(values));
        const double label = total_variation(input);
        ds.samples.push_back({std::move(input), Label::regression(label)});
    }
    return ds;
}

inline Dataset synth_edges2d(const SynthSpec& spec, SplitMix64& rng) {
    const int size = static_cast<int>(spec.param("size", 16));
    const double noise = spec.param("noise", 0.05);
    if (size < 8) throw value_error("edges2d size must be >= 8");

    Dataset ds;
    ds.task = Task::classification;
    ds.arity = 2;
    ds.shape = make_shape({size, size}, 1);

    for (std::size_t s = 0; s < spec.count; ++s) {
        const int cls = static_cast<int>(rng.below(2));  // 0 horizontal edge, 1 vertical edge
        const int cut = 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(size - 6)));
        double lo = rng.uniform(-1.0, -0.25);
        double hi = rng.uniform(0.25, 1.0);
        if (rng.below(2)) std::swap(lo, hi);

        std::vector<double> values(ds.shape.value_count());
        for (int r = 0; r < size; ++r)
            for (int c = 0; c < size; ++c) {
                const bool far_side = cls == 0 ? (r >= cut) : (c >= cut);
                double v = far_side ? hi : lo;
                if (noise > 0.0) v += rng.uniform(-noise, noise);
                values[static_cast<std::size_t>(r) * size + c] = v;
            }
        ds.samples.push_back({Grid::unchecked(ds.shape, std::move(values)), Label::of_class(cls)});
    }
    return ds;
}

inline Dataset synth_faults2d(const SynthSpec& spec, SplitMix64& rng) {
    constexpr int vars = 52;
    constexpr int time = 60;
    const int classes = static_cast<int>(spec.param("k", 4));
    const double noise = spec.param("noise", 0.1);
    const double amp = spec.param("amp", 1.5);
    const int rows = static_cast<int>(spec.param("rows", 6));
    if (classes < 2 || classes > 4) throw value_error("faults2d supports k in [2, 4]");
    if (rows < 1 || rows > vars) throw value_error("faults2d rows must be in [1, 52]");

    Dataset ds;
    ds.task = Task::classification;
    ds.arity = classes;
    ds.shape = make_shape({vars, time}, 1);

    for (std::size_t s = 0; s < spec.count; ++s) {
        std::vector<double> values(ds.shape.value_count());
        for (double& v : values) v = rng.uniform(-noise, noise);

        const int cls = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
        const int t0 = 10 + static_cast<int>(rng.below(30));
        const double a = amp * (0.75 + 0.5 * rng.next_double());
        const double sign = rng.below(2) ? 1.0 : -1.0;

        // Affected variable rows: first `rows` entries of a seeded shuffle.
        std::vector<std::size_t> order = shuffled_indices(vars, rng);
        for (int r = 0; r < rows; ++r) {
            double* row = values.data() + order[r] * time;
            for (int t = t0; t < time; ++t) {
                double sig = 0.0;
                switch (cls) {
                    case 0: sig = a; break;                                          // step
                    case 1: sig = a * (t - t0 + 1) / static_cast<double>(time - t0); break;  // drift
                    case 2: sig = a * std::sin(k_two_pi * 0.15 * (t - t0)); break;   // oscillation
                    default: sig = a * (2.0 * rng.next_double() - 1.0); break;       // random variation
                }
                row[t] += sign * sig;
            }
        }
        ds.samples.push_back({Grid::unchecked(ds.shape, std::move(values)), Label::of_class(cls)});
    }
    return ds;
}

inline Dataset synth_voxels3d(const SynthSpec& spec, SplitMix64& rng) {
    constexpr int size = 20;
    constexpr int channels = 3;
    const int blobs = static_cast<int>(spec.param("blobs", 3));
    if (blobs < 1) throw value_error("voxels3d needs blobs >= 1");

    Dataset ds;
    ds.task = Task::regression;
    ds.arity = 1;
    ds.shape = make_shape({size, size, size}, channels);
    const std::size_t sp = ds.shape.spatial_size();

    for (std::size_t s = 0; s < spec.count; ++s) {
        std::vector<double> values(ds.shape.value_count(), 0.0);
        for (int c = 0; c < channels; ++c) {
            double* ch = values.data() + static_cast<std::size_t>(c) * sp;
            for (int b = 0; b < blobs; ++b) {
                const double cx = rng.uniform(0.0, size);
                const double cy = rng.uniform(0.0, size);
                const double cz = rng.uniform(0.0, size);
                const double width = rng.uniform(1.5, 4.0);
                const double height = rng.uniform(0.5, 1.0);
                const double inv = 1.0 / (2.0 * width * width);
                for (int x = 0; x < size; ++x)
                    for (int y = 0; y < size; ++y)
                        for (int z = 0; z < size; ++z) {
                            const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy) + (z - cz) * (z - cz);
                            ch[(static_cast<std::size_t>(x) * size + y) * size + z] += height * std::exp(-d2 * inv);
                        }
            }
        }
        Grid input = Grid::unchecked(ds.shape, std::move(values));
        const double label = channel_overlap(input);
        ds.samples.push_back({std::move(input), Label::regression(label)});
    }
    return ds;
}

}  // namespace detail

/// Deterministic synthetic dataset for the given spec: equal seeds give
/// byte-identical datasets. Labels are computed by closed-form functionals of
/// the stored sample values (or are the injected class), so ground truth is
/// exact.
inline Dataset synthesize(const SynthSpec& spec) {
    SplitMix64 rng(spec.seed);
    if (spec.generator == "series1d") return detail::synth_series1d(spec, rng);
    if (spec.generator == "edges2d") return detail::synth_edges2d(spec, rng);
    if (spec.generator == "faults2d") return detail::synth_faults2d(spec, rng);
    if (spec.generator == "voxels3d") return detail::synth_voxels3d(spec, rng);
    throw value_error("unknown generator '" + spec.generator + "'");
}

}  // namespace convgrid
