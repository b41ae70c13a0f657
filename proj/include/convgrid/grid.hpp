#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "convgrid/errors.hpp"

namespace convgrid {

/// Lattice shape of a grid object: rank in {1,2,3}, per-axis spatial extents
/// (which may differ per axis), and a channel count.
struct Shape {
    int rank = 1;
    std::array<int, 3> extent{1, 1, 1};  // extent[0..rank) are the spatial sizes
    int channels = 1;

    std::size_t spatial_size() const {
        std::size_t n = 1;
        for (int a = 0; a < rank; ++a) n *= static_cast<std::size_t>(extent[a]);
        return n;
    }

    std::size_t value_count() const { return spatial_size() * static_cast<std::size_t>(channels); }

    /// Extents padded to three axes with leading ones. Row-major layout is
    /// unchanged by leading singleton axes, so rank-generic kernels can treat
    /// every grid as rank 3.
    std::array<int, 3> extent3() const {
        std::array<int, 3> e{1, 1, 1};
        for (int a = 0; a < rank; ++a) e[3 - rank + a] = extent[a];
        return e;
    }

    std::span<const int> extents() const { return {extent.data(), static_cast<std::size_t>(rank)}; }

    bool operator==(const Shape&) const = default;
};

inline void check_shape(const Shape& s) {
    if (s.rank < 1 || s.rank > 3) throw value_error("shape rank must be 1, 2, or 3");
    if (s.channels < 1) throw value_error("shape channel count must be >= 1");
    for (int a = 0; a < s.rank; ++a)
        if (s.extent[a] < 1) throw value_error("shape extents must be >= 1");
}

inline Shape make_shape(std::initializer_list<int> extents, int channels = 1) {
    Shape s;
    s.rank = static_cast<int>(extents.size());
    if (s.rank < 1 || s.rank > 3) throw value_error("shape rank must be 1, 2, or 3");
    int a = 0;
    for (int e : extents) s.extent[a++] = e;
    s.channels = channels;
    check_shape(s);
    return s;
}

inline std::string to_string(const Shape& s) {
    std::string out;
    for (int a = 0; a < s.rank; ++a) {
        if (a) out += "x";
        out += std::to_string(s.extent[a]);
    }
    out += "x" + std::to_string(s.channels) + "ch";
    return out;
}

/// An n-channel real-valued tensor over a 1/2/3-dimensional lattice. Values
/// are stored channel-major, then row-major over the spatial axes, as 64-bit
/// IEEE-754 reals. Grids are immutable by convention after construction:
/// every operation in the engine returns a new grid.
class Grid {
public:
    Grid() = default;  // empty placeholder, distinguishable via empty()

    Grid(Shape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
        check_shape(shape_);
        if (values_.size() != shape_.value_count())
            throw value_error("grid value count " + std::to_string(values_.size()) +
                              " does not match shape " + to_string(shape_));
        for (double v : values_)
            if (!std::isfinite(v)) throw value_error("grid values must be finite");
    }

    static Grid zeros(Shape shape) {
        check_shape(shape);
        Grid g;
        g.shape_ = shape;
        g.values_.assign(shape.value_count(), 0.0);
        return g;
    }

    // Wraps computed values without the finiteness scan. Intermediate results
    // inside the engine may legitimately carry non-finite values; they are
    // checked only at the boundaries flagged in training.
    static Grid unchecked(Shape shape, std::vector<double> values) {
        Grid g;
        g.shape_ = shape;
        g.values_ = std::move(values);
        return g;
    }

    bool empty() const { return values_.empty() && shape_ == Shape{}; }

    const Shape& shape() const { return shape_; }
    int rank() const { return shape_.rank; }
    int channels() const { return shape_.channels; }

    // Ref-qualified so a span can never be taken into a temporary grid.
    std::span<const double> values() const& { return values_; }
    std::span<double> values() & { return values_; }
    std::span<const double> values() const&& = delete;
    std::span<double> values() && = delete;
    const double* data() const { return values_.data(); }
    double* data() { return values_.data(); }

    const double* channel_data(int c) const { return values_.data() + static_cast<std::size_t>(c) * shape_.spatial_size(); }
    double* channel_data(int c) { return values_.data() + static_cast<std::size_t>(c) * shape_.spatial_size(); }

    /// Flat index of (channel c, spatial multi-index x), all 0-based:
    /// (c * n1 + x1) * n2 + x2 ... for however many axes the rank has.
    std::size_t flat_index(int c, std::span<const int> x) const {
        std::size_t idx = static_cast<std::size_t>(c);
        for (int a = 0; a < shape_.rank; ++a)
            idx = idx * static_cast<std::size_t>(shape_.extent[a]) + static_cast<std::size_t>(x[a]);
        return idx;
    }

    double at(int c, std::initializer_list<int> x) const {
        std::array<int, 3> xs{0, 0, 0};
        int a = 0;
        for (int v : x) xs[a++] = v;
        return values_[flat_index(c, {xs.data(), x.size()})];
    }

private:
    Shape shape_;
    std::vector<double> values_;
};

/// Vectorization of a grid, keeping the origin shape so the flattening can be
/// inverted exactly.
struct FeatureVector {
    std::vector<double> values;
    std::optional<Shape> origin;
};

inline Grid make_grid(Shape shape, std::vector<double> values) { return Grid(shape, std::move(values)); }

/// Grows each spatial extent by 2*pad on that axis, centering the original
/// values and filling the border with exact zeros. Channels are unchanged.
inline Grid zero_pad(const Grid& g, std::span<const int> pad_per_axis) {
    const Shape& s = g.shape();
    if (static_cast<int>(pad_per_axis.size()) != s.rank)
        throw value_error("pad list length must equal grid rank");
    for (int p : pad_per_axis)
        if (p < 0) throw value_error("pad must be non-negative");

    Shape out = s;
    for (int a = 0; a < s.rank; ++a) out.extent[a] = s.extent[a] + 2 * pad_per_axis[a];

    std::array<int, 3> pad3{0, 0, 0};
    for (int a = 0; a < s.rank; ++a) pad3[3 - s.rank + a] = pad_per_axis[a];
    const auto ie = s.extent3();
    const auto oe = out.extent3();

    std::vector<double> values(out.value_count(), 0.0);
    const std::size_t in_sp = s.spatial_size();
    const std::size_t out_sp = out.spatial_size();
    for (int c = 0; c < s.channels; ++c) {
        const double* src = g.data() + static_cast<std::size_t>(c) * in_sp;
        double* dst = values.data() + static_cast<std::size_t>(c) * out_sp;
        for (int x0 = 0; x0 < ie[0]; ++x0)
            for (int x1 = 0; x1 < ie[1]; ++x1) {
                const double* srow = src + (static_cast<std::size_t>(x0) * ie[1] + x1) * ie[2];
                double* drow = dst + ((static_cast<std::size_t>(x0) + pad3[0]) * oe[1] + (x1 + pad3[1])) * oe[2] + pad3[2];
                for (int x2 = 0; x2 < ie[2]; ++x2) drow[x2] = srow[x2];
            }
    }
    return Grid::unchecked(out, std::move(values));
}

// Inverse of zero_pad: drops pad entries from each axis border.
inline Grid crop(const Grid& g, std::span<const int> pad_per_axis) {
    const Shape& s = g.shape();
    if (static_cast<int>(pad_per_axis.size()) != s.rank)
        throw value_error("pad list length must equal grid rank");
    Shape out = s;
    for (int a = 0; a < s.rank; ++a) {
        out.extent[a] = s.extent[a] - 2 * pad_per_axis[a];
        if (out.extent[a] < 1) throw value_error("crop removes the whole axis");
    }
    std::array<int, 3> pad3{0, 0, 0};
    for (int a = 0; a < s.rank; ++a) pad3[3 - s.rank + a] = pad_per_axis[a];
    const auto ie = s.extent3();
    const auto oe = out.extent3();

    std::vector<double> values(out.value_count());
    const std::size_t in_sp = s.spatial_size();
    const std::size_t out_sp = out.spatial_size();
    for (int c = 0; c < s.channels; ++c) {
        const double* src = g.data() + static_cast<std::size_t>(c) * in_sp;
        double* dst = values.data() + static_cast<std::size_t>(c) * out_sp;
        for (int x0 = 0; x0 < oe[0]; ++x0)
            for (int x1 = 0; x1 < oe[1]; ++x1) {
                const double* srow = src + ((static_cast<std::size_t>(x0) + pad3[0]) * ie[1] + (x1 + pad3[1])) * ie[2] + pad3[2];
                double* drow = dst + (static_cast<std::size_t>(x0) * oe[1] + x1) * oe[2];
                for (int x2 = 0; x2 < oe[2]; ++x2) drow[x2] = srow[x2];
            }
    }
    return Grid::unchecked(out, std::move(values));
}

/// Vectorizes a grid in its storage order (channel-major, row-major spatial);
/// the origin shape is recorded so unflatten can invert it exactly.
inline FeatureVector flatten(const Grid& g) {
    return FeatureVector{std::vector<double>(g.values().begin(), g.values().end()), g.shape()};
}

inline Grid unflatten(const FeatureVector& fv) {
    if (!fv.origin) throw value_error("feature vector carries no origin shape");
    if (fv.values.size() != fv.origin->value_count())
        throw value_error("feature vector length does not match origin shape");
    return Grid::unchecked(*fv.origin, fv.values);
}

/// The i-th channel (0-based) as a single-channel grid over the same lattice.
inline Grid channel_view(const Grid& g, int i) {
    if (i < 0 || i >= g.channels())
        throw value_error("channel index " + std::to_string(i) + " out of range [0," +
                          std::to_string(g.channels()) + ")");
    Shape out = g.shape();
    out.channels = 1;
    const std::size_t sp = g.shape().spatial_size();
    const double* src = g.channel_data(i);
    return Grid::unchecked(out, std::vector<double>(src, src + sp));
}

}  // namespace convgrid
