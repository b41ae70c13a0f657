#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convgrid/grid.hpp"

namespace convgrid {

#ifdef CONVGRID_COUNT_OPS
namespace detail {
inline thread_local std::uint64_t madd_count = 0;
}
#define CONVGRID_MADD() (++::convgrid::detail::madd_count)
#else
#define CONVGRID_MADD() ((void)0)
#endif

/// The 4-axis kernel collection: in-channels p, out-channels q, and one small
/// spatial kernel per (i, j) pair. Weights are stored with j outermost, i
/// next, then the kernel's spatial entries row-major.
class OperatorBank {
public:
    OperatorBank() = default;

    OperatorBank(int in_channels, int out_channels, int rank, std::span<const int> kernel_extents,
                 std::vector<double> weights)
        : p_(in_channels), q_(out_channels), rank_(rank), weights_(std::move(weights)) {
        if (p_ < 1 || q_ < 1) throw value_error("operator bank needs p >= 1 and q >= 1");
        if (rank_ < 1 || rank_ > 3) throw value_error("operator bank rank must be 1, 2, or 3");
        if (static_cast<int>(kernel_extents.size()) != rank_)
            throw value_error("kernel extent list length must equal rank");
        kernel_extent_ = {1, 1, 1};
        for (int a = 0; a < rank_; ++a) {
            if (kernel_extents[a] < 1) throw value_error("kernel extents must be >= 1");
            kernel_extent_[a] = kernel_extents[a];
        }
        if (weights_.size() != weight_count())
            throw value_error("operator bank weight count " + std::to_string(weights_.size()) +
                              " does not match p*q*kernel size");
    }

    /// Single-input single-output bank from one kernel grid.
    static OperatorBank siso(int rank, std::span<const int> kernel_extents, std::vector<double> weights) {
        return OperatorBank(1, 1, rank, kernel_extents, std::move(weights));
    }

    int in_channels() const { return p_; }
    int out_channels() const { return q_; }
    int rank() const { return rank_; }
    std::span<const int> kernel_extents() const { return {kernel_extent_.data(), static_cast<std::size_t>(rank_)}; }

    std::array<int, 3> kernel_extent3() const {
        std::array<int, 3> e{1, 1, 1};
        for (int a = 0; a < rank_; ++a) e[3 - rank_ + a] = kernel_extent_[a];
        return e;
    }

    std::size_t kernel_size() const {
        std::size_t n = 1;
        for (int a = 0; a < rank_; ++a) n *= static_cast<std::size_t>(kernel_extent_[a]);
        return n;
    }
    std::size_t weight_count() const { return kernel_size() * p_ * q_; }

    const double* kernel_data(int i, int j) const {
        return weights_.data() + (static_cast<std::size_t>(j) * p_ + i) * kernel_size();
    }
    double* kernel_data(int i, int j) {
        return weights_.data() + (static_cast<std::size_t>(j) * p_ + i) * kernel_size();
    }
    std::span<const double> kernel(int i, int j) const { return {kernel_data(i, j), kernel_size()}; }

    std::span<const double> weights() const { return weights_; }
    std::span<double> weights() { return weights_; }

private:
    int p_ = 1, q_ = 1, rank_ = 1;
    std::array<int, 3> kernel_extent_{1, 1, 1};
    std::vector<double> weights_;
};

/// Zero padding and stride per spatial axis of the input grid.
struct ConvGeometry {
    std::array<int, 3> pad{0, 0, 0};
    std::array<int, 3> stride{1, 1, 1};

    static ConvGeometry with(std::span<const int> pads, std::span<const int> strides) {
        ConvGeometry g;
        for (std::size_t a = 0; a < pads.size() && a < 3; ++a) g.pad[a] = pads[a];
        for (std::size_t a = 0; a < strides.size() && a < 3; ++a) g.stride[a] = strides[a];
        return g;
    }
};

/// Valid output extent of one axis: floor((n_in + 2*pad - n_k) / stride) + 1.
inline int output_extent(int n_in, int n_k, int pad, int stride) {
    if (pad < 0) throw value_error("pad must be non-negative");
    if (stride < 1) throw value_error("stride must be >= 1");
    if (n_in + 2 * pad < n_k)
        throw value_error("kernel extent " + std::to_string(n_k) + " exceeds padded input extent " +
                          std::to_string(n_in + 2 * pad));
    return (n_in + 2 * pad - n_k) / stride + 1;
}

namespace detail {

inline void check_conv_geometry(const Shape& in, const OperatorBank& bank, const ConvGeometry& geom,
                                Shape& out_shape) {
    if (bank.rank() != in.rank) throw value_error("operator bank rank does not match input rank");
    if (bank.in_channels() != in.channels)
        throw value_error("input has " + std::to_string(in.channels) + " channels but bank expects " +
                          std::to_string(bank.in_channels()));
    out_shape.rank = in.rank;
    out_shape.channels = bank.out_channels();
    for (int a = 0; a < in.rank; ++a)
        out_shape.extent[a] = output_extent(in.extent[a], bank.kernel_extents()[a], geom.pad[a], geom.stride[a]);
}

// Leading-axis-padded stride array so rank-1/2 run through the rank-3 loops.
inline std::array<int, 3> stride3(const ConvGeometry& geom, int rank) {
    std::array<int, 3> s{1, 1, 1};
    for (int a = 0; a < rank; ++a) s[3 - rank + a] = geom.stride[a];
    return s;
}

inline bool any_pad(const ConvGeometry& geom, int rank) {
    for (int a = 0; a < rank; ++a)
        if (geom.pad[a] > 0) return true;
    return false;
}

}  // namespace detail

/// MIMO cross-correlation over the zero-padded input with the given stride.
/// Output channel j is the sum over input channels i of the SISO
/// cross-correlation of kernel (i,j) with channel i; each per-channel partial
/// is accumulated over kernel offsets in row-major order and the partials are
/// added in ascending channel order, so results are bit-reproducible and the
/// MIMO output equals the sum of SISO outputs exactly. No bias is applied.
inline Grid cross_correlate(const Grid& input, const OperatorBank& bank, const ConvGeometry& geom = {}) {
    Shape out_shape;
    detail::check_conv_geometry(input.shape(), bank, geom, out_shape);

    std::optional<Grid> padded;
    const Grid* src = &input;
    if (detail::any_pad(geom, input.rank())) {
        padded = zero_pad(input, std::span<const int>(geom.pad.data(), input.rank()));
        src = &*padded;
    }

    const auto ie = src->shape().extent3();
    const auto oe = out_shape.extent3();
    const auto ke = bank.kernel_extent3();
    const auto st = detail::stride3(geom, input.rank());
    const int p = bank.in_channels();
    const int q = bank.out_channels();
    const std::size_t in_sp = src->shape().spatial_size();
    const std::size_t out_sp = out_shape.spatial_size();

    std::vector<double> out(out_shape.value_count());
    const double* vbase = src->data();

    for (int j = 0; j < q; ++j) {
        double* oj = out.data() + static_cast<std::size_t>(j) * out_sp;
        for (int o0 = 0; o0 < oe[0]; ++o0)
            for (int o1 = 0; o1 < oe[1]; ++o1)
                for (int o2 = 0; o2 < oe[2]; ++o2) {
                    const int b0 = o0 * st[0], b1 = o1 * st[1], b2 = o2 * st[2];
                    double acc = 0.0;
                    for (int i = 0; i < p; ++i) {
                        const double* vch = vbase + static_cast<std::size_t>(i) * in_sp;
                        const double* uk = bank.kernel_data(i, j);
                        double part = 0.0;
                        for (int k0 = 0; k0 < ke[0]; ++k0)
                            for (int k1 = 0; k1 < ke[1]; ++k1) {
                                const double* vrow =
                                    vch + (static_cast<std::size_t>(b0 + k0) * ie[1] + (b1 + k1)) * ie[2] + b2;
                                const double* urow = uk + (static_cast<std::size_t>(k0) * ke[1] + k1) * ke[2];
                                for (int k2 = 0; k2 < ke[2]; ++k2) {
                                    part += urow[k2] * vrow[k2];
                                    CONVGRID_MADD();
                                }
                            }
                        acc += part;
                    }
                    oj[(static_cast<std::size_t>(o0) * oe[1] + o1) * oe[2] + o2] = acc;
                }
    }
    return Grid::unchecked(out_shape, std::move(out));
}

/// Reverses every kernel's spatial axes; p and q are preserved.
inline OperatorBank rotate180(const OperatorBank& bank) {
    const auto ke = bank.kernel_extent3();
    const std::size_t ks = bank.kernel_size();
    std::vector<double> rotated(bank.weights().begin(), bank.weights().end());
    for (int j = 0; j < bank.out_channels(); ++j)
        for (int i = 0; i < bank.in_channels(); ++i) {
            const double* src = bank.kernel_data(i, j);
            double* dst = rotated.data() + (static_cast<std::size_t>(j) * bank.in_channels() + i) * ks;
            for (int k0 = 0; k0 < ke[0]; ++k0)
                for (int k1 = 0; k1 < ke[1]; ++k1)
                    for (int k2 = 0; k2 < ke[2]; ++k2) {
                        const std::size_t from = (static_cast<std::size_t>(k0) * ke[1] + k1) * ke[2] + k2;
                        const std::size_t to =
                            (static_cast<std::size_t>(ke[0] - 1 - k0) * ke[1] + (ke[1] - 1 - k1)) * ke[2] +
                            (ke[2] - 1 - k2);
                        dst[to] = src[from];
                    }
        }
    std::vector<int> ext(bank.kernel_extents().begin(), bank.kernel_extents().end());
    return OperatorBank(bank.in_channels(), bank.out_channels(), bank.rank(), ext, std::move(rotated));
}

/// True convolution: cross-correlation with the 180-degree-rotated bank.
inline Grid convolve(const Grid& input, const OperatorBank& bank, const ConvGeometry& geom = {}) {
    return cross_correlate(input, rotate180(bank), geom);
}

}  // namespace convgrid
