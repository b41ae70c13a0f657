// Shared test helpers: independent brute-force oracles and random instance
// generators. The oracles here deliberately share no index machinery with the
// engine; they zero-pad by bounds checking and accumulate with plain loops.
#pragma once

#include <cmath>
#include <vector>

#include "convgrid/conv.hpp"
#include "convgrid/grid.hpp"
#include "convgrid/rng.hpp"

namespace testutil {

using convgrid::ConvGeometry;
using convgrid::Grid;
using convgrid::OperatorBank;
using convgrid::Shape;
using convgrid::SplitMix64;

// Reads input value at (channel, x0, x1, x2) of an imagined zero-padded
// input, using 3-axis coordinates with leading singleton axes.
inline double padded_at(const Grid& g, int channel, int x0, int x1, int x2, const std::array<int, 3>& pad3) {
    const auto e3 = g.shape().extent3();
    const int u0 = x0 - pad3[0], u1 = x1 - pad3[1], u2 = x2 - pad3[2];
    if (u0 < 0 || u0 >= e3[0] || u1 < 0 || u1 >= e3[1] || u2 < 0 || u2 >= e3[2]) return 0.0;
    const std::size_t sp = g.shape().spatial_size();
    return g.values()[channel * sp + (static_cast<std::size_t>(u0) * e3[1] + u1) * e3[2] + u2];
}

// Direct summation over the defining MIMO formula, no padding materialized.
inline Grid oracle_cross_correlate(const Grid& input, const OperatorBank& bank, const ConvGeometry& geom = {}) {
    const Shape& s = input.shape();
    std::array<int, 3> pad3{0, 0, 0}, st3{1, 1, 1};
    for (int a = 0; a < s.rank; ++a) {
        pad3[3 - s.rank + a] = geom.pad[a];
        st3[3 - s.rank + a] = geom.stride[a];
    }
    Shape out = s;
    out.channels = bank.out_channels();
    for (int a = 0; a < s.rank; ++a)
        out.extent[a] = (s.extent[a] + 2 * geom.pad[a] - bank.kernel_extents()[a]) / geom.stride[a] + 1;

    const auto oe = out.extent3();
    const auto ke = bank.kernel_extent3();
    std::vector<double> values(out.value_count(), 0.0);
    std::size_t n = 0;
    for (int j = 0; j < bank.out_channels(); ++j)
        for (int o0 = 0; o0 < oe[0]; ++o0)
            for (int o1 = 0; o1 < oe[1]; ++o1)
                for (int o2 = 0; o2 < oe[2]; ++o2) {
                    double acc = 0.0;
                    for (int i = 0; i < bank.in_channels(); ++i)
                        for (int k0 = 0; k0 < ke[0]; ++k0)
                            for (int k1 = 0; k1 < ke[1]; ++k1)
                                for (int k2 = 0; k2 < ke[2]; ++k2) {
                                    const double u =
                                        bank.kernel(i, j)[(static_cast<std::size_t>(k0) * ke[1] + k1) * ke[2] + k2];
                                    acc += u * padded_at(input, i, o0 * st3[0] + k0, o1 * st3[1] + k1,
                                                         o2 * st3[2] + k2, pad3);
                                }
                    values[n++] = acc;
                }
    return Grid::unchecked(out, std::move(values));
}

inline Grid random_grid(const Shape& shape, SplitMix64& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> values(shape.value_count());
    for (double& v : values) v = rng.uniform(lo, hi);
    return Grid::unchecked(shape, std::move(values));
}

inline OperatorBank random_bank(int p, int q, int rank, const std::array<int, 3>& kernel, SplitMix64& rng) {
    std::size_t count = static_cast<std::size_t>(p) * q;
    for (int a = 0; a < rank; ++a) count *= static_cast<std::size_t>(kernel[a]);
    std::vector<double> weights(count);
    for (double& w : weights) w = rng.uniform(-1.0, 1.0);
    return OperatorBank(p, q, rank, {kernel.data(), static_cast<std::size_t>(rank)}, std::move(weights));
}

inline double max_abs_diff(const Grid& a, const Grid& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k)
        worst = std::max(worst, std::abs(a.values()[k] - b.values()[k]));
    return worst;
}

// Relative mismatch max_k |a-b| / max(1, |a|, |b|).
inline double rel_mismatch(const Grid& a, const Grid& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.values().size(); ++k) {
        const double denom = std::max({1.0, std::abs(a.values()[k]), std::abs(b.values()[k])});
        worst = std::max(worst, std::abs(a.values()[k] - b.values()[k]) / denom);
    }
    return worst;
}

}  // namespace testutil
