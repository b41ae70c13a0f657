#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "convgrid/conv.hpp"
#include "convgrid/grid.hpp"

namespace convgrid {

/// First-derivative stencil (1, 0, -1), the scaled central difference.
inline OperatorBank derivative1d() {
    const int ext[1] = {3};
    return OperatorBank::siso(1, ext, {1.0, 0.0, -1.0});
}

/// Smoothing operator (1, 2, 1).
inline OperatorBank binomial1d() {
    const int ext[1] = {3};
    return OperatorBank::siso(1, ext, {1.0, 2.0, 1.0});
}

enum class SobelDirection { vertical, horizontal };

/// Vertical form is the outer product of (1,0,-1) and (1,2,1): a first
/// derivative down the rows, smoothed across the columns. Horizontal is its
/// transpose.
inline OperatorBank sobel2d(SobelDirection direction) {
    const int ext[2] = {3, 3};
    if (direction == SobelDirection::vertical)
        return OperatorBank::siso(2, ext, {1, 2, 1, 0, 0, 0, -1, -2, -1});
    return OperatorBank::siso(2, ext, {1, 0, -1, 2, 0, -2, 1, 0, -1});
}

/// 5-point finite-difference stencil for the 2D Laplacian.
inline OperatorBank laplacian2d() {
    const int ext[2] = {3, 3};
    return OperatorBank::siso(2, ext, {0, 1, 0, 1, -4, 1, 0, 1, 0});
}

/// The classic 3x3 preset with exact rational weights summing to 1. The
/// sampled constructor below does not reproduce these entries for any sigma,
/// so the preset is kept verbatim.
inline OperatorBank gaussian3x3() {
    const int ext[2] = {3, 3};
    return OperatorBank::siso(
        2, ext,
        {1.0 / 16, 2.0 / 16, 1.0 / 16, 2.0 / 16, 4.0 / 16, 2.0 / 16, 1.0 / 16, 2.0 / 16, 1.0 / 16});
}

struct GaussianSpec {
    int rank = 2;
    std::array<int, 3> size{3, 3, 3};  // odd extent per axis, [0, rank)
    double sigma = 1.0;
};

/// Samples the Gaussian density at integer offsets centered on 0 and
/// renormalizes so the weights sum to exactly 1.
inline OperatorBank gaussian(const GaussianSpec& spec) {
    if (spec.rank < 1 || spec.rank > 3) throw value_error("gaussian rank must be 1, 2, or 3");
    if (!(spec.sigma > 0.0)) throw value_error("gaussian sigma must be positive");
    for (int a = 0; a < spec.rank; ++a)
        if (spec.size[a] < 1 || spec.size[a] % 2 == 0)
            throw value_error("gaussian size must be odd and positive");

    std::array<int, 3> e3{1, 1, 1};
    for (int a = 0; a < spec.rank; ++a) e3[3 - spec.rank + a] = spec.size[a];
    const std::array<int, 3> half{(e3[0] - 1) / 2, (e3[1] - 1) / 2, (e3[2] - 1) / 2};

    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(e3[0]) * e3[1] * e3[2]);
    double sum = 0.0;
    for (int k0 = 0; k0 < e3[0]; ++k0)
        for (int k1 = 0; k1 < e3[1]; ++k1)
            for (int k2 = 0; k2 < e3[2]; ++k2) {
                const double d0 = k0 - half[0], d1 = k1 - half[1], d2 = k2 - half[2];
                const double v = std::exp(-(d0 * d0 + d1 * d1 + d2 * d2) / (2.0 * spec.sigma * spec.sigma));
                w.push_back(v);
                sum += v;
            }
    for (double& v : w) v /= sum;
    return OperatorBank::siso(spec.rank, {spec.size.data(), static_cast<std::size_t>(spec.rank)}, std::move(w));
}

/// Turns a 0/1 mask into a matched filter: cross-correlating it over a 0/1
/// input attains its maximum (the count of ones in the mask) exactly where
/// the pattern occurs. A multi-channel mask matches all channels jointly.
inline OperatorBank pattern_operator(const Grid& mask) {
    for (double v : mask.values())
        if (v != 0.0 && v != 1.0) throw value_error("pattern mask entries must be 0 or 1");
    std::vector<double> w(mask.values().begin(), mask.values().end());
    // Mask channels become input channels of a q=1 bank; the (j=0, i) kernel
    // layout coincides with the grid's channel-major storage.
    return OperatorBank(mask.channels(), 1, mask.rank(), mask.shape().extents(), std::move(w));
}

/// Resolves the CLI operator ids: derivative1d, binomial1d, sobel-v, sobel-h,
/// laplacian, gaussian3x3, gaussian:<size>:<sigma>. The gaussian constructor
/// uses rank_hint (the rank of the grid it will be applied to).
inline OperatorBank operator_by_name(const std::string& id, int rank_hint = 2) {
    if (id == "derivative1d") return derivative1d();
    if (id == "binomial1d") return binomial1d();
    if (id == "sobel-v") return sobel2d(SobelDirection::vertical);
    if (id == "sobel-h") return sobel2d(SobelDirection::horizontal);
    if (id == "laplacian") return laplacian2d();
    if (id == "gaussian3x3") return gaussian3x3();
    if (id.rfind("gaussian:", 0) == 0) {
        const std::string rest = id.substr(9);
        const std::size_t colon = rest.find(':');
        if (colon == std::string::npos) throw value_error("expected gaussian:<size>:<sigma>");
        GaussianSpec spec;
        spec.rank = rank_hint;
        int size = 0;
        try {
            size = std::stoi(rest.substr(0, colon));
            spec.sigma = std::stod(rest.substr(colon + 1));
        } catch (const std::exception&) {
            throw value_error("could not parse gaussian:<size>:<sigma> from '" + id + "'");
        }
        spec.size = {size, size, size};
        return gaussian(spec);
    }
    throw value_error("unknown operator id '" + id + "'");
}

}  // namespace convgrid
