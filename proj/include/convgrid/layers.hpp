#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convgrid/conv.hpp"
#include "convgrid/grid.hpp"

namespace convgrid {

enum class Activation { sigmoid, tanh, relu, linear, softmax };

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
        case Activation::linear: return "linear";
        case Activation::softmax: return "softmax";
    }
    return "?";
}

inline Activation parse_activation(const std::string& name) {
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    if (name == "linear") return Activation::linear;
    if (name == "softmax") return Activation::softmax;
    throw value_error("unknown activation '" + name + "'");
}

inline double activate_scalar(double z, Activation kind) {
    switch (kind) {
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::tanh: return std::tanh(z);
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::linear: return z;
        case Activation::softmax: break;
    }
    throw value_error("softmax is not an element-wise activation");
}

/// Element-wise activation of a grid. Softmax is vector-only and rejected.
inline Grid activate(const Grid& x, Activation kind) {
    if (kind == Activation::linear) return x;
    std::vector<double> out(x.values().size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = activate_scalar(x.values()[k], kind);
    return Grid::unchecked(x.shape(), std::move(out));
}

/// Vector activation; softmax (stable, max-shifted) is permitted here.
inline std::vector<double> activate(std::vector<double> x, Activation kind) {
    if (kind == Activation::softmax) {
        const double m = *std::max_element(x.begin(), x.end());
        double sum = 0.0;
        for (double& v : x) {
            v = std::exp(v - m);
            sum += v;
        }
        for (double& v : x) v /= sum;
        return x;
    }
    for (double& v : x) v = activate_scalar(v, kind);
    return x;
}

// Derivative conventions, fixed by contract so only one tensor needs to be
// kept per block: sigmoid and tanh take POST-activation values (a(1-a) and
// 1-a^2), relu takes PRE-activation values with derivative exactly 0 at 0.
inline double activate_derivative_scalar(double v, Activation kind) {
    switch (kind) {
        case Activation::sigmoid: return v * (1.0 - v);
        case Activation::tanh: return 1.0 - v * v;
        case Activation::relu: return v > 0.0 ? 1.0 : 0.0;
        case Activation::linear: return 1.0;
        case Activation::softmax: break;
    }
    throw value_error("softmax derivative is only available fused with the cross-entropy loss");
}

inline Grid activate_derivative(const Grid& pre_or_post, Activation kind) {
    std::vector<double> out(pre_or_post.values().size());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = activate_derivative_scalar(pre_or_post.values()[k], kind);
    return Grid::unchecked(pre_or_post.shape(), std::move(out));
}

inline std::vector<double> activate_derivative(std::span<const double> pre_or_post, Activation kind) {
    std::vector<double> out(pre_or_post.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = activate_derivative_scalar(pre_or_post[k], kind);
    return out;
}

// ---------------------------------------------------------------------------
// Convolution block
// ---------------------------------------------------------------------------

/// Convolution block parameters: the operator bank, one bias per output
/// channel, and the padding/stride geometry.
struct ConvBlockParams {
    OperatorBank bank;
    std::vector<double> bias;  // length q
    ConvGeometry geom;
};

inline void check_conv_params(const ConvBlockParams& params) {
    if (static_cast<int>(params.bias.size()) != params.bank.out_channels())
        throw value_error("conv bias length must equal the bank's output channel count");
}

/// Cross-correlation with bias[j] added to every element of output channel j.
inline Grid conv_forward(const Grid& input, const ConvBlockParams& params) {
    check_conv_params(params);
    Grid psi = cross_correlate(input, params.bank, params.geom);
    const std::size_t sp = psi.shape().spatial_size();
    double* base = psi.data();
    for (int j = 0; j < psi.channels(); ++j) {
        const double b = params.bias[j];
        double* ch = base + static_cast<std::size_t>(j) * sp;
        for (std::size_t k = 0; k < sp; ++k) ch[k] += b;
    }
    return psi;
}

struct ConvGrads {
    OperatorBank bank;         // dL/dU, same layout as the parameter bank
    std::vector<double> bias;  // dL/db_c
    Grid input;                // dL/dV
};

/// Backward pass of the convolution block for the gradient dPsi at the
/// pre-activation output. dU accumulates dPsi against the padded input over
/// every output position (the valid cross-correlation of dPsi over V when the
/// stride is 1); db_c[j] is the sum of dPsi channel j; dV scatters dPsi back
/// through the kernels onto the strided input lattice and is validated by
/// finite differences rather than asserted from a closed form.
inline ConvGrads conv_backward(const Grid& d_psi, const Grid& input, const ConvBlockParams& params,
                               bool want_input_grad = true) {
    check_conv_params(params);
    Shape expect_out;
    detail::check_conv_geometry(input.shape(), params.bank, params.geom, expect_out);
    if (!(d_psi.shape() == expect_out))
        throw value_error("dPsi shape " + to_string(d_psi.shape()) + " does not match conv output " +
                          to_string(expect_out));

    const OperatorBank& bank = params.bank;
    const int rank = input.rank();
    std::optional<Grid> padded;
    const Grid* src = &input;
    if (detail::any_pad(params.geom, rank)) {
        padded = zero_pad(input, std::span<const int>(params.geom.pad.data(), rank));
        src = &*padded;
    }

    const auto ie = src->shape().extent3();
    const auto oe = d_psi.shape().extent3();
    const auto ke = bank.kernel_extent3();
    const auto st = detail::stride3(params.geom, rank);
    const int p = bank.in_channels();
    const int q = bank.out_channels();
    const std::size_t in_sp = src->shape().spatial_size();
    const std::size_t out_sp = d_psi.shape().spatial_size();
    const std::size_t ks = bank.kernel_size();

    std::vector<double> d_weights(bank.weight_count(), 0.0);
    std::vector<double> d_bias(q, 0.0);
    std::vector<double> d_vpad(want_input_grad ? src->shape().value_count() : 0, 0.0);

    for (int j = 0; j < q; ++j) {
        const double* gj = d_psi.data() + static_cast<std::size_t>(j) * out_sp;
        double bsum = 0.0;
        for (int o0 = 0; o0 < oe[0]; ++o0)
            for (int o1 = 0; o1 < oe[1]; ++o1)
                for (int o2 = 0; o2 < oe[2]; ++o2) {
                    const double g = gj[(static_cast<std::size_t>(o0) * oe[1] + o1) * oe[2] + o2];
                    bsum += g;
                    const int b0 = o0 * st[0], b1 = o1 * st[1], b2 = o2 * st[2];
                    for (int i = 0; i < p; ++i) {
                        const double* vch = src->data() + static_cast<std::size_t>(i) * in_sp;
                        const double* uk = bank.kernel_data(i, j);
                        double* duk = d_weights.data() + (static_cast<std::size_t>(j) * p + i) * ks;
                        double* dvch = want_input_grad ? d_vpad.data() + static_cast<std::size_t>(i) * in_sp : nullptr;
                        for (int k0 = 0; k0 < ke[0]; ++k0)
                            for (int k1 = 0; k1 < ke[1]; ++k1) {
                                const std::size_t vrow =
                                    (static_cast<std::size_t>(b0 + k0) * ie[1] + (b1 + k1)) * ie[2] + b2;
                                const std::size_t krow = (static_cast<std::size_t>(k0) * ke[1] + k1) * ke[2];
                                for (int k2 = 0; k2 < ke[2]; ++k2) {
                                    duk[krow + k2] += g * vch[vrow + k2];
                                    if (want_input_grad) dvch[vrow + k2] += g * uk[krow + k2];
                                }
                            }
                    }
                }
        d_bias[j] = bsum;
    }

    ConvGrads grads;
    std::vector<int> kext(bank.kernel_extents().begin(), bank.kernel_extents().end());
    grads.bank = OperatorBank(p, q, rank, kext, std::move(d_weights));
    grads.bias = std::move(d_bias);
    if (want_input_grad) {
        Grid dpad = Grid::unchecked(src->shape(), std::move(d_vpad));
        grads.input = detail::any_pad(params.geom, rank)
                          ? crop(dpad, std::span<const int>(params.geom.pad.data(), rank))
                          : std::move(dpad);
    }
    return grads;
}

// ---------------------------------------------------------------------------
// Pooling block
// ---------------------------------------------------------------------------

struct PoolSpec {
    enum class Kind { max, average };
    Kind kind = Kind::max;
    std::array<int, 3> window{1, 1, 1};  // per true axis, [0, rank)

    std::array<int, 3> window3(int rank) const {
        std::array<int, 3> w{1, 1, 1};
        for (int a = 0; a < rank; ++a) w[3 - rank + a] = window[a];
        return w;
    }
};

/// For each pooled output element of a max pool, the flat index into the
/// input grid's value array of the winning element. Ties go to the first
/// element in row-major window order.
using ArgmaxCache = std::vector<std::size_t>;

struct PoolResult {
    Grid output;
    ArgmaxCache argmax;  // empty for average pooling
};

/// Non-overlapping windows; output extent floor(n/n_p) per axis, trailing
/// elements beyond n_p*floor(n/n_p) are dropped.
inline PoolResult pool_forward(const Grid& input, const PoolSpec& spec) {
    const Shape& s = input.shape();
    Shape out = s;
    for (int a = 0; a < s.rank; ++a) {
        const int w = spec.window[a];
        if (w < 1) throw value_error("pooling window must be >= 1");
        if (w > s.extent[a])
            throw value_error("pooling window " + std::to_string(w) + " larger than input extent " +
                              std::to_string(s.extent[a]));
        out.extent[a] = s.extent[a] / w;
    }

    const auto ie = s.extent3();
    const auto oe = out.extent3();
    const auto w3 = spec.window3(s.rank);
    const std::size_t in_sp = s.spatial_size();
    const std::size_t out_sp = out.spatial_size();
    const bool is_max = spec.kind == PoolSpec::Kind::max;
    const double inv_count = 1.0 / (static_cast<double>(w3[0]) * w3[1] * w3[2]);

    std::vector<double> values(out.value_count());
    ArgmaxCache argmax;
    if (is_max) argmax.resize(out.value_count());

    for (int c = 0; c < s.channels; ++c) {
        const double* vch = input.data() + static_cast<std::size_t>(c) * in_sp;
        const std::size_t ch_base = static_cast<std::size_t>(c) * in_sp;
        for (int o0 = 0; o0 < oe[0]; ++o0)
            for (int o1 = 0; o1 < oe[1]; ++o1)
                for (int o2 = 0; o2 < oe[2]; ++o2) {
                    const int b0 = o0 * w3[0], b1 = o1 * w3[1], b2 = o2 * w3[2];
                    const std::size_t oidx = static_cast<std::size_t>(c) * out_sp +
                                             (static_cast<std::size_t>(o0) * oe[1] + o1) * oe[2] + o2;
                    if (is_max) {
                        double best = -std::numeric_limits<double>::infinity();
                        std::size_t best_idx = 0;
                        for (int k0 = 0; k0 < w3[0]; ++k0)
                            for (int k1 = 0; k1 < w3[1]; ++k1)
                                for (int k2 = 0; k2 < w3[2]; ++k2) {
                                    const std::size_t idx =
                                        (static_cast<std::size_t>(b0 + k0) * ie[1] + (b1 + k1)) * ie[2] + (b2 + k2);
                                    const double v = vch[idx];
                                    if (v > best) {
                                        best = v;
                                        best_idx = ch_base + idx;
                                    }
                                }
                        values[oidx] = best;
                        argmax[oidx] = best_idx;
                    } else {
                        double sum = 0.0;
                        for (int k0 = 0; k0 < w3[0]; ++k0)
                            for (int k1 = 0; k1 < w3[1]; ++k1)
                                for (int k2 = 0; k2 < w3[2]; ++k2)
                                    sum += vch[(static_cast<std::size_t>(b0 + k0) * ie[1] + (b1 + k1)) * ie[2] +
                                               (b2 + k2)];
                        values[oidx] = sum * inv_count;
                    }
                }
    }
    return PoolResult{Grid::unchecked(out, std::move(values)), std::move(argmax)};
}

/// Up-samples pooled gradients back onto the input lattice. Max pooling
/// routes each gradient to its cached argmax location (zeros elsewhere);
/// average pooling spreads each gradient equally over its window. Elements
/// dropped by the floor rule receive zero.
inline Grid pool_backward(const Grid& d_pooled, const ArgmaxCache& cache, const PoolSpec& spec,
                          const Shape& input_shape) {
    Shape expect = input_shape;
    for (int a = 0; a < input_shape.rank; ++a) expect.extent[a] = input_shape.extent[a] / spec.window[a];
    if (!(d_pooled.shape() == expect))
        throw value_error("pooled gradient shape does not match pool output for the given input shape");

    std::vector<double> values(input_shape.value_count(), 0.0);
    if (spec.kind == PoolSpec::Kind::max) {
        if (cache.size() != d_pooled.values().size())
            throw value_error("max pool backward requires the argmax cache from the forward pass");
        for (std::size_t k = 0; k < cache.size(); ++k) values[cache[k]] += d_pooled.values()[k];
        return Grid::unchecked(input_shape, std::move(values));
    }

    const auto ie = input_shape.extent3();
    const auto oe = expect.extent3();
    const auto w3 = spec.window3(input_shape.rank);
    const std::size_t in_sp = input_shape.spatial_size();
    const std::size_t out_sp = expect.spatial_size();
    const double inv_count = 1.0 / (static_cast<double>(w3[0]) * w3[1] * w3[2]);

    for (int c = 0; c < input_shape.channels; ++c) {
        double* vch = values.data() + static_cast<std::size_t>(c) * in_sp;
        const double* gch = d_pooled.data() + static_cast<std::size_t>(c) * out_sp;
        for (int o0 = 0; o0 < oe[0]; ++o0)
            for (int o1 = 0; o1 < oe[1]; ++o1)
                for (int o2 = 0; o2 < oe[2]; ++o2) {
                    const double g = gch[(static_cast<std::size_t>(o0) * oe[1] + o1) * oe[2] + o2] * inv_count;
                    const int b0 = o0 * w3[0], b1 = o1 * w3[1], b2 = o2 * w3[2];
                    for (int k0 = 0; k0 < w3[0]; ++k0)
                        for (int k1 = 0; k1 < w3[1]; ++k1)
                            for (int k2 = 0; k2 < w3[2]; ++k2)
                                vch[(static_cast<std::size_t>(b0 + k0) * ie[1] + (b1 + k1)) * ie[2] + (b2 + k2)] += g;
                }
    }
    return Grid::unchecked(input_shape, std::move(values));
}

// ---------------------------------------------------------------------------
// Dense (prediction) block
// ---------------------------------------------------------------------------

/// Affine map d = W v + b. Activation is a separate composable op so linear
/// regression heads stay expressible.
struct DenseParams {
    int n_out = 0;
    int n_in = 0;
    std::vector<double> weights;  // row-major, weights[o * n_in + i]
    std::vector<double> bias;     // length n_out
};

inline void check_dense_params(const DenseParams& p) {
    if (p.n_out < 1 || p.n_in < 1) throw value_error("dense block needs n_out >= 1 and n_in >= 1");
    if (p.weights.size() != static_cast<std::size_t>(p.n_out) * p.n_in)
        throw value_error("dense weight count does not match n_out x n_in");
    if (p.bias.size() != static_cast<std::size_t>(p.n_out))
        throw value_error("dense bias length does not match n_out");
}

inline std::vector<double> dense_forward(std::span<const double> v, const DenseParams& params) {
    check_dense_params(params);
    if (v.size() != static_cast<std::size_t>(params.n_in))
        throw value_error("dense input length " + std::to_string(v.size()) + " does not match n_in " +
                          std::to_string(params.n_in));
    std::vector<double> d(params.n_out);
    for (int o = 0; o < params.n_out; ++o) {
        const double* w = params.weights.data() + static_cast<std::size_t>(o) * params.n_in;
        double acc = 0.0;
        for (int i = 0; i < params.n_in; ++i) acc += w[i] * v[i];
        d[o] = acc + params.bias[o];
    }
    return d;
}

struct DenseGrads {
    std::vector<double> weights;  // dL/dW, row-major
    std::vector<double> bias;     // dL/db
    std::vector<double> input;    // dL/dv
};

/// dW[o,i] = dd[o] * v[i]; db[o] = dd[o]; dv[i] = sum_o dd[o] * W[o,i].
inline DenseGrads dense_backward(std::span<const double> dd, std::span<const double> v,
                                 const DenseParams& params) {
    check_dense_params(params);
    if (dd.size() != static_cast<std::size_t>(params.n_out) || v.size() != static_cast<std::size_t>(params.n_in))
        throw value_error("dense backward dimension mismatch");
    DenseGrads g;
    g.weights.resize(params.weights.size());
    g.bias.assign(dd.begin(), dd.end());
    g.input.assign(params.n_in, 0.0);
    for (int o = 0; o < params.n_out; ++o) {
        const double go = dd[o];
        const double* w = params.weights.data() + static_cast<std::size_t>(o) * params.n_in;
        double* gw = g.weights.data() + static_cast<std::size_t>(o) * params.n_in;
        for (int i = 0; i < params.n_in; ++i) {
            gw[i] = go * v[i];
            g.input[i] += go * w[i];
        }
    }
    return g;
}

}  // namespace convgrid
