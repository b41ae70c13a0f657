#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "convgrid/grid.hpp"
#include "convgrid/rng.hpp"

namespace convgrid {

/// Target of one labeled sample: a real vector for regression or a 0-based
/// class index for classification.
struct Label {
    std::vector<double> values;
    int class_index = -1;
    bool is_class = false;

    static Label regression(std::vector<double> v) { return Label{std::move(v), -1, false}; }
    static Label regression(double v) { return Label{{v}, -1, false}; }
    static Label of_class(int k) { return Label{{}, k, true}; }
};

struct LabeledSample {
    Grid input;
    Label target;
};

enum class Task : std::uint8_t { regression = 0, classification = 1 };

/// Homogeneous collection of labeled samples. arity is the regression output
/// width or the class count.
struct Dataset {
    Task task = Task::regression;
    int arity = 1;
    Shape shape;
    std::vector<LabeledSample> samples;
};

inline void check_dataset(const Dataset& ds) {
    if (ds.arity < 1) throw value_error("dataset arity must be >= 1");
    check_shape(ds.shape);
    for (const LabeledSample& s : ds.samples) {
        if (!(s.input.shape() == ds.shape)) throw value_error("dataset samples must share one shape");
        if (ds.task == Task::classification) {
            if (!s.target.is_class || s.target.class_index < 0 || s.target.class_index >= ds.arity)
                throw value_error("classification label out of range");
        } else {
            if (s.target.is_class || s.target.values.size() != static_cast<std::size_t>(ds.arity))
                throw value_error("regression label width does not match dataset arity");
        }
    }
}

/// Seeded index partition: indices are shuffled once (Fisher-Yates over
/// SplitMix64) and cut at boundaries round(n * cumulative_ratio). Every index
/// lands in exactly one part.
inline std::vector<std::vector<std::size_t>> split_indices(std::size_t n, std::span<const double> ratios,
                                                           std::uint64_t seed) {
    if (ratios.empty()) throw value_error("split needs at least one ratio");
    double total = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0)) throw value_error("split ratios must be positive");
        total += r;
    }
    SplitMix64 rng(seed);
    const std::vector<std::size_t> order = shuffled_indices(n, rng);

    std::vector<std::vector<std::size_t>> parts(ratios.size());
    double cumulative = 0.0;
    std::size_t start = 0;
    for (std::size_t k = 0; k < ratios.size(); ++k) {
        cumulative += ratios[k];
        const std::size_t end =
            (k + 1 == ratios.size()) ? n : static_cast<std::size_t>(std::llround(n * cumulative / total));
        parts[k].assign(order.begin() + start, order.begin() + end);
        start = end;
    }
    return parts;
}

inline Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
    Dataset out;
    out.task = ds.task;
    out.arity = ds.arity;
    out.shape = ds.shape;
    out.samples.reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= ds.samples.size()) throw value_error("subset index out of range");
        out.samples.push_back(ds.samples[i]);
    }
    return out;
}

}  // namespace convgrid
