#pragma once

#include <cctype>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "convgrid/layers.hpp"
#include "convgrid/rng.hpp"

namespace convgrid {

// ---------------------------------------------------------------------------
// Block descriptors and the architecture grammar
// ---------------------------------------------------------------------------

struct ConvBlockSpec {
    int out_channels = 1;
    std::array<int, 3> kernel{1, 1, 1};  // per true axis
    ConvGeometry geom;
    Activation act = Activation::linear;
};

struct PoolBlockSpec {
    PoolSpec pool;
};

struct FlattenBlockSpec {};

struct DenseBlockSpec {
    int units = 1;
    Activation act = Activation::linear;
};

using BlockSpec = std::variant<ConvBlockSpec, PoolBlockSpec, FlattenBlockSpec, DenseBlockSpec>;

/// Ordered block sequence over a declared input shape. Structural rule:
/// conv/pool blocks first, exactly one flatten, then dense blocks only,
/// ending in a dense block. Softmax is valid only on the final block.
struct NetworkSpec {
    Shape input;
    std::vector<BlockSpec> blocks;
};

namespace detail {

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t end = text.find(sep, start);
        if (end == std::string::npos) {
            parts.push_back(text.substr(start));
            break;
        }
        parts.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return parts;
}

inline int parse_int(const std::string& text, const std::string& what) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(text, &pos);
        if (pos != text.size()) throw value_error("");
        return v;
    } catch (const std::exception&) {
        throw value_error("could not parse " + what + " from '" + text + "'");
    }
}

// Comma-separated per-axis list; a single value broadcasts to every axis.
// Slots beyond the rank keep `fill` so parsed arrays compare equal to
// programmatically built ones.
inline std::array<int, 3> parse_axis_list(const std::string& text, int rank, const std::string& what,
                                          int fill = 1) {
    const auto parts = split(text, ',');
    std::array<int, 3> out{fill, fill, fill};
    if (parts.size() == 1) {
        const int v = parse_int(parts[0], what);
        for (int a = 0; a < rank; ++a) out[a] = v;
        return out;
    }
    if (static_cast<int>(parts.size()) != rank)
        throw value_error(what + " list '" + text + "' must have one entry or one per axis");
    for (int a = 0; a < rank; ++a) out[a] = parse_int(parts[a], what);
    return out;
}

inline std::string format_axis_list(std::span<const int> v) {
    std::string out;
    for (std::size_t a = 0; a < v.size(); ++a) {
        if (a) out += ",";
        out += std::to_string(v[a]);
    }
    return out;
}

}  // namespace detail

/// Parses the architecture grammar
///   input:<rank>:<ext,...>:<channels>; conv:<q>:<k,...>:<pad,...>:<stride,...>:<act>;
///   pool:<max|avg>:<n_p,...>; flatten; dense:<n_out>:<act>
/// Whitespace is ignored everywhere; keywords are case-sensitive. Per-axis
/// lists accept a single value, which broadcasts to every axis.
inline NetworkSpec parse_spec(std::string_view text) {
    std::string compact;
    compact.reserve(text.size());
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) compact += c;

    NetworkSpec spec;
    bool saw_input = false;
    for (const std::string& stmt : detail::split(compact, ';')) {
        if (stmt.empty()) continue;
        const auto f = detail::split(stmt, ':');
        const std::string& kw = f[0];
        if (kw == "input") {
            if (saw_input) throw value_error("duplicate input statement");
            if (f.size() != 4) throw value_error("expected input:<rank>:<ext,...>:<channels>");
            const int rank = detail::parse_int(f[1], "input rank");
            if (rank < 1 || rank > 3) throw value_error("input rank must be 1, 2, or 3");
            Shape s;
            s.rank = rank;
            s.extent = detail::parse_axis_list(f[2], rank, "input extent");
            s.channels = detail::parse_int(f[3], "input channels");
            check_shape(s);
            spec.input = s;
            saw_input = true;
        } else if (kw == "conv") {
            if (f.size() != 6) throw value_error("expected conv:<q>:<k,...>:<pad,...>:<stride,...>:<act>");
            if (!saw_input) throw value_error("input statement must come first");
            ConvBlockSpec b;
            b.out_channels = detail::parse_int(f[1], "conv output channels");
            b.kernel = detail::parse_axis_list(f[2], spec.input.rank, "conv kernel extent");
            b.geom.pad = detail::parse_axis_list(f[3], spec.input.rank, "conv pad", 0);
            b.geom.stride = detail::parse_axis_list(f[4], spec.input.rank, "conv stride");
            b.act = parse_activation(f[5]);
            spec.blocks.emplace_back(b);
        } else if (kw == "pool") {
            if (f.size() != 3) throw value_error("expected pool:<max|avg>:<n_p,...>");
            if (!saw_input) throw value_error("input statement must come first");
            PoolBlockSpec b;
            if (f[1] == "max")
                b.pool.kind = PoolSpec::Kind::max;
            else if (f[1] == "avg")
                b.pool.kind = PoolSpec::Kind::average;
            else
                throw value_error("pool kind must be max or avg");
            b.pool.window = detail::parse_axis_list(f[2], spec.input.rank, "pool window");
            spec.blocks.emplace_back(b);
        } else if (kw == "flatten") {
            if (f.size() != 1) throw value_error("flatten takes no arguments");
            spec.blocks.emplace_back(FlattenBlockSpec{});
        } else if (kw == "dense") {
            if (f.size() != 3) throw value_error("expected dense:<n_out>:<act>");
            DenseBlockSpec b;
            b.units = detail::parse_int(f[1], "dense units");
            b.act = parse_activation(f[2]);
            spec.blocks.emplace_back(b);
        } else {
            throw value_error("unknown block keyword '" + kw + "'");
        }
    }
    if (!saw_input) throw value_error("spec must declare an input");
    return spec;
}

/// Canonical textual form of a spec; parse_spec(format_spec(s)) reproduces s.
inline std::string format_spec(const NetworkSpec& spec) {
    const int rank = spec.input.rank;
    std::string out = "input:" + std::to_string(rank) + ":" +
                      detail::format_axis_list(spec.input.extents()) + ":" +
                      std::to_string(spec.input.channels);
    for (const BlockSpec& block : spec.blocks) {
        out += "; ";
        if (const auto* c = std::get_if<ConvBlockSpec>(&block)) {
            out += "conv:" + std::to_string(c->out_channels) + ":" +
                   detail::format_axis_list({c->kernel.data(), static_cast<std::size_t>(rank)}) + ":" +
                   detail::format_axis_list({c->geom.pad.data(), static_cast<std::size_t>(rank)}) + ":" +
                   detail::format_axis_list({c->geom.stride.data(), static_cast<std::size_t>(rank)}) + ":" +
                   to_string(c->act);
        } else if (const auto* p = std::get_if<PoolBlockSpec>(&block)) {
            out += std::string("pool:") + (p->pool.kind == PoolSpec::Kind::max ? "max" : "avg") + ":" +
                   detail::format_axis_list({p->pool.window.data(), static_cast<std::size_t>(rank)});
        } else if (std::holds_alternative<FlattenBlockSpec>(block)) {
            out += "flatten";
        } else if (const auto* d = std::get_if<DenseBlockSpec>(&block)) {
            out += "dense:" + std::to_string(d->units) + ":" + to_string(d->act);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shape chain validation
// ---------------------------------------------------------------------------

struct ShapeReport {
    struct Entry {
        std::string label;
        Shape shape;              // grid stages
        std::size_t vector_length = 0;  // flatten/dense stages
        bool is_vector = false;
    };
    bool ok = false;
    std::string error;  // first inconsistency when !ok
    std::vector<Entry> chain;
    std::size_t flatten_length = 0;
    int output_arity = 0;
    std::size_t param_count = 0;
};

/// Walks the block sequence, reporting every intermediate shape or the first
/// inconsistency. Non-throwing; use checked_spec() to turn failures into
/// errors.
inline ShapeReport validate_spec(const NetworkSpec& spec) {
    ShapeReport report;
    try {
        check_shape(spec.input);
    } catch (const value_error& e) {
        report.error = e.what();
        return report;
    }
    report.chain.push_back({"input", spec.input, 0, false});

    Shape cur = spec.input;
    bool flattened = false;
    std::size_t vec_len = 0;
    std::size_t params = 0;

    for (std::size_t k = 0; k < spec.blocks.size(); ++k) {
        const BlockSpec& block = spec.blocks[k];
        const std::string where = "block " + std::to_string(k + 1);
        try {
            if (const auto* c = std::get_if<ConvBlockSpec>(&block)) {
                if (flattened) throw value_error(where + ": conv block after flatten");
                if (c->out_channels < 1) throw value_error(where + ": conv needs q >= 1");
                if (c->act == Activation::softmax) throw value_error(where + ": softmax is not valid in a conv block");
                Shape out = cur;
                out.channels = c->out_channels;
                std::size_t ksize = 1;
                for (int a = 0; a < cur.rank; ++a) {
                    if (c->kernel[a] < 1) throw value_error(where + ": kernel extents must be >= 1");
                    out.extent[a] = output_extent(cur.extent[a], c->kernel[a], c->geom.pad[a], c->geom.stride[a]);
                    ksize *= static_cast<std::size_t>(c->kernel[a]);
                }
                params += ksize * cur.channels * c->out_channels + c->out_channels;
                cur = out;
                report.chain.push_back({"conv(" + to_string(c->act) + ")", cur, 0, false});
            } else if (const auto* p = std::get_if<PoolBlockSpec>(&block)) {
                if (flattened) throw value_error(where + ": pool block after flatten");
                Shape out = cur;
                for (int a = 0; a < cur.rank; ++a) {
                    const int w = p->pool.window[a];
                    if (w < 1) throw value_error(where + ": pool window must be >= 1");
                    if (w > cur.extent[a])
                        throw value_error(where + ": pool window " + std::to_string(w) +
                                          " larger than input extent " + std::to_string(cur.extent[a]));
                    out.extent[a] = cur.extent[a] / w;
                }
                cur = out;
                report.chain.push_back(
                    {p->pool.kind == PoolSpec::Kind::max ? "pool(max)" : "pool(avg)", cur, 0, false});
            } else if (std::holds_alternative<FlattenBlockSpec>(block)) {
                if (flattened) throw value_error(where + ": more than one flatten block");
                flattened = true;
                vec_len = cur.value_count();
                report.flatten_length = vec_len;
                report.chain.push_back({"flatten", Shape{}, vec_len, true});
            } else if (const auto* d = std::get_if<DenseBlockSpec>(&block)) {
                if (!flattened) throw value_error(where + ": dense block before flatten");
                if (d->units < 1) throw value_error(where + ": dense needs n_out >= 1");
                if (d->act == Activation::softmax && k + 1 != spec.blocks.size())
                    throw value_error(where + ": softmax is only valid on the final block");
                params += vec_len * static_cast<std::size_t>(d->units) + static_cast<std::size_t>(d->units);
                vec_len = static_cast<std::size_t>(d->units);
                report.chain.push_back({"dense(" + to_string(d->act) + ")", Shape{}, vec_len, true});
            }
        } catch (const value_error& e) {
            report.error = e.what();
            return report;
        }
    }

    if (!flattened) {
        report.error = "spec has no flatten block";
        return report;
    }
    if (spec.blocks.empty() || !std::holds_alternative<DenseBlockSpec>(spec.blocks.back())) {
        report.error = "spec must end in a dense block";
        return report;
    }
    report.ok = true;
    report.output_arity = static_cast<int>(vec_len);
    report.param_count = params;
    return report;
}

inline ShapeReport checked_spec(const NetworkSpec& spec) {
    ShapeReport report = validate_spec(spec);
    if (!report.ok) throw value_error("invalid network spec: " + report.error);
    return report;
}

// ---------------------------------------------------------------------------
// Parameter vector layout
// ---------------------------------------------------------------------------

struct ParamSegment {
    std::size_t offset = 0;
    std::size_t count = 0;
};

struct BlockLayout {
    ParamSegment weights;  // bank weights / dense W
    ParamSegment bias;
};

/// Maps each block's parameters to contiguous segments of the flat vector
/// theta: block order, weights before bias. Conv bank weights follow the
/// OperatorBank layout (j, i, kernel row-major); dense weights are row-major
/// n_out x n_in.
struct ParamLayout {
    std::size_t total = 0;
    std::vector<BlockLayout> blocks;  // aligned with spec.blocks
};

inline ParamLayout param_layout(const NetworkSpec& spec) {
    const ShapeReport report = checked_spec(spec);
    ParamLayout layout;
    layout.blocks.resize(spec.blocks.size());
    Shape cur = spec.input;
    std::size_t vec_len = 0;
    std::size_t offset = 0;
    for (std::size_t k = 0; k < spec.blocks.size(); ++k) {
        const BlockSpec& block = spec.blocks[k];
        if (const auto* c = std::get_if<ConvBlockSpec>(&block)) {
            std::size_t ksize = 1;
            Shape out = cur;
            out.channels = c->out_channels;
            for (int a = 0; a < cur.rank; ++a) {
                ksize *= static_cast<std::size_t>(c->kernel[a]);
                out.extent[a] = output_extent(cur.extent[a], c->kernel[a], c->geom.pad[a], c->geom.stride[a]);
            }
            layout.blocks[k].weights = {offset, ksize * cur.channels * c->out_channels};
            offset += layout.blocks[k].weights.count;
            layout.blocks[k].bias = {offset, static_cast<std::size_t>(c->out_channels)};
            offset += layout.blocks[k].bias.count;
            cur = out;
        } else if (const auto* p = std::get_if<PoolBlockSpec>(&block)) {
            for (int a = 0; a < cur.rank; ++a) cur.extent[a] /= p->pool.window[a];
        } else if (std::holds_alternative<FlattenBlockSpec>(block)) {
            vec_len = cur.value_count();
        } else if (const auto* d = std::get_if<DenseBlockSpec>(&block)) {
            layout.blocks[k].weights = {offset, vec_len * static_cast<std::size_t>(d->units)};
            offset += layout.blocks[k].weights.count;
            layout.blocks[k].bias = {offset, static_cast<std::size_t>(d->units)};
            offset += layout.blocks[k].bias.count;
            vec_len = static_cast<std::size_t>(d->units);
        }
    }
    layout.total = offset;
    if (layout.total != report.param_count) throw value_error("parameter layout disagrees with shape report");
    return layout;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

struct InitScheme {
    enum class Kind { uniform_scaled, constant };
    Kind kind = Kind::uniform_scaled;
    double value = 0.0;

    static InitScheme constant(double c) { return InitScheme{Kind::constant, c}; }
};

/// Deterministic parameter initialization. uniform_scaled draws each weight
/// from +-sqrt(6 / (fan_in + fan_out)) using one SplitMix64 draw per weight in
/// theta order; biases are set to zero without consuming draws.
inline std::vector<double> init_params(const NetworkSpec& spec, std::uint64_t seed, InitScheme scheme = {}) {
    const ParamLayout layout = param_layout(spec);
    std::vector<double> theta(layout.total, 0.0);
    if (scheme.kind == InitScheme::Kind::constant) {
        std::fill(theta.begin(), theta.end(), scheme.value);
        return theta;
    }

    SplitMix64 rng(seed);
    Shape cur = spec.input;
    std::size_t vec_len = 0;
    for (std::size_t k = 0; k < spec.blocks.size(); ++k) {
        const BlockSpec& block = spec.blocks[k];
        if (const auto* c = std::get_if<ConvBlockSpec>(&block)) {
            std::size_t ksize = 1;
            Shape out = cur;
            out.channels = c->out_channels;
            for (int a = 0; a < cur.rank; ++a) {
                ksize *= static_cast<std::size_t>(c->kernel[a]);
                out.extent[a] = output_extent(cur.extent[a], c->kernel[a], c->geom.pad[a], c->geom.stride[a]);
            }
            const double fan_in = static_cast<double>(ksize) * cur.channels;
            const double fan_out = static_cast<double>(ksize) * c->out_channels;
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            const ParamSegment seg = layout.blocks[k].weights;
            for (std::size_t w = 0; w < seg.count; ++w) theta[seg.offset + w] = rng.uniform(-bound, bound);
            cur = out;
        } else if (const auto* p = std::get_if<PoolBlockSpec>(&block)) {
            for (int a = 0; a < cur.rank; ++a) cur.extent[a] /= p->pool.window[a];
        } else if (std::holds_alternative<FlattenBlockSpec>(block)) {
            vec_len = cur.value_count();
        } else if (const auto* d = std::get_if<DenseBlockSpec>(&block)) {
            const double bound = std::sqrt(6.0 / (static_cast<double>(vec_len) + d->units));
            const ParamSegment seg = layout.blocks[k].weights;
            for (std::size_t w = 0; w < seg.count; ++w) theta[seg.offset + w] = rng.uniform(-bound, bound);
            vec_len = static_cast<std::size_t>(d->units);
        }
    }
    return theta;
}

// ---------------------------------------------------------------------------
// Materialized parameters and forward propagation
// ---------------------------------------------------------------------------

using BlockParams = std::variant<ConvBlockParams, PoolSpec, FlattenBlockSpec, DenseParams>;

/// Per-block parameters materialized from a flat theta. pack_params inverts
/// unpack_params exactly (pure copies, no arithmetic).
struct NetworkParams {
    std::vector<BlockParams> blocks;
};

inline NetworkParams unpack_params(const NetworkSpec& spec, std::span<const double> theta) {
    const ParamLayout layout = param_layout(spec);
    if (theta.size() != layout.total)
        throw value_error("theta length " + std::to_string(theta.size()) + " does not match spec parameter count " +
                          std::to_string(layout.total));
    NetworkParams params;
    params.blocks.reserve(spec.blocks.size());
    Shape cur = spec.input;
    std::size_t vec_len = 0;
    for (std::size_t k = 0; k < spec.blocks.size(); ++k) {
        const BlockSpec& block = spec.blocks[k];
        if (const auto* c = std::get_if<ConvBlockSpec>(&block)) {
            const ParamSegment w = layout.blocks[k].weights;
            const ParamSegment b = layout.blocks[k].bias;
            ConvBlockParams cp;
            cp.bank = OperatorBank(cur.channels, c->out_channels, cur.rank,
                                   {c->kernel.data(), static_cast<std::size_t>(cur.rank)},
                                   std::vector<double>(theta.begin() + w.offset, theta.begin() + w.offset + w.count));
            cp.bias.assign(theta.begin() + b.offset, theta.begin() + b.offset + b.count);
            cp.geom = c->geom;
            params.blocks.emplace_back(std::move(cp));
            Shape out = cur;
            out.channels = c->out_channels;
            for (int a = 0; a < cur.rank; ++a)
                out.extent[a] = output_extent(cur.extent[a], c->kernel[a], c->geom.pad[a], c->geom.stride[a]);
            cur = out;
        } else if (const auto* p = std::get_if<PoolBlockSpec>(&block)) {
            params.blocks.emplace_back(p->pool);
            for (int a = 0; a < cur.rank; ++a) cur.extent[a] /= p->pool.window[a];
        } else if (std::holds_alternative<FlattenBlockSpec>(block)) {
            params.blocks.emplace_back(FlattenBlockSpec{});
            vec_len = cur.value_count();
        } else if (const auto* d = std::get_if<DenseBlockSpec>(&block)) {
            const ParamSegment w = layout.blocks[k].weights;
            const ParamSegment b = layout.blocks[k].bias;
            DenseParams dp;
            dp.n_out = d->units;
            dp.n_in = static_cast<int>(vec_len);
            dp.weights.assign(theta.begin() + w.offset, theta.begin() + w.offset + w.count);
            dp.bias.assign(theta.begin() + b.offset, theta.begin() + b.offset + b.count);
            params.blocks.emplace_back(std::move(dp));
            vec_len = static_cast<std::size_t>(d->units);
        }
    }
    return params;
}

inline std::vector<double> pack_params(const NetworkSpec& spec, const NetworkParams& params) {
    const ParamLayout layout = param_layout(spec);
    if (params.blocks.size() != spec.blocks.size())
        throw value_error("block parameter count does not match spec");
    std::vector<double> theta(layout.total, 0.0);
    for (std::size_t k = 0; k < spec.blocks.size(); ++k) {
        if (const auto* cp = std::get_if<ConvBlockParams>(&params.blocks[k])) {
            const ParamSegment w = layout.blocks[k].weights;
            const ParamSegment b = layout.blocks[k].bias;
            std::copy(cp->bank.weights().begin(), cp->bank.weights().end(), theta.begin() + w.offset);
            std::copy(cp->bias.begin(), cp->bias.end(), theta.begin() + b.offset);
        } else if (const auto* dp = std::get_if<DenseParams>(&params.blocks[k])) {
            const ParamSegment w = layout.blocks[k].weights;
            const ParamSegment b = layout.blocks[k].bias;
            std::copy(dp->weights.begin(), dp->weights.end(), theta.begin() + w.offset);
            std::copy(dp->bias.begin(), dp->bias.end(), theta.begin() + b.offset);
        }
    }
    return theta;
}

/// Per-block cached intermediates from one traced forward pass: block inputs
/// and outputs, pre-activation tensors, and pooling argmax caches. A trace
/// belongs to a single evaluation.
struct ForwardTrace {
    struct BlockTrace {
        Grid pre_act;                  // conv: Psi
        Grid post_act;                 // conv: A; pool: P
        ArgmaxCache pool_cache;        // max pooling only
        Shape flatten_origin;          // flatten block
        std::vector<double> vec_pre;   // dense: d; flatten: v
        std::vector<double> vec_post;  // dense: activated output
    };
    Grid input;
    std::vector<BlockTrace> blocks;
    std::vector<double> output;
};

namespace detail {

inline std::vector<double> forward_impl(const NetworkSpec& spec, const NetworkParams& params, const Grid& input,
                                        ForwardTrace* trace) {
    if (!(input.shape() == spec.input))
        throw value_error("input shape " + to_string(input.shape()) + " does not match spec input " +
                          to_string(spec.input));
    if (trace) {
        trace->input = input;
        trace->blocks.resize(spec.blocks.size());
    }

    Grid cur = input;
    std::vector<double> vec;
    bool in_vector_stage = false;

    for (std::size_t k = 0; k < spec.blocks.size(); ++k) {
        const BlockSpec& block = spec.blocks[k];
        if (const auto* c = std::get_if<ConvBlockSpec>(&block)) {
            const auto& cp = std::get<ConvBlockParams>(params.blocks[k]);
            Grid psi = conv_forward(cur, cp);
            Grid act = activate(psi, c->act);
            if (trace) {
                trace->blocks[k].pre_act = psi;
                trace->blocks[k].post_act = act;
            }
            cur = std::move(act);
        } else if (std::holds_alternative<PoolBlockSpec>(block)) {
            const auto& ps = std::get<PoolSpec>(params.blocks[k]);
            PoolResult res = pool_forward(cur, ps);
            if (trace) {
                trace->blocks[k].pool_cache = std::move(res.argmax);
                trace->blocks[k].post_act = res.output;
            }
            cur = std::move(res.output);
        } else if (std::holds_alternative<FlattenBlockSpec>(block)) {
            FeatureVector fv = flatten(cur);
            vec = std::move(fv.values);
            in_vector_stage = true;
            if (trace) {
                trace->blocks[k].flatten_origin = cur.shape();
                trace->blocks[k].vec_pre = vec;
            }
        } else if (const auto* d = std::get_if<DenseBlockSpec>(&block)) {
            const auto& dp = std::get<DenseParams>(params.blocks[k]);
            std::vector<double> pre = dense_forward(vec, dp);
            std::vector<double> post = activate(pre, d->act);
            if (trace) {
                trace->blocks[k].vec_pre = pre;
                trace->blocks[k].vec_post = post;
            }
            vec = std::move(post);
        }
    }
    if (!in_vector_stage) throw value_error("spec has no flatten block");
    if (trace) trace->output = vec;
    return vec;
}

}  // namespace detail

/// Forward propagation: applies the blocks in order to produce the prediction
/// vector. Pure and deterministic for fixed (spec, theta, input).
inline std::vector<double> forward(const NetworkSpec& spec, const NetworkParams& params, const Grid& input) {
    return detail::forward_impl(spec, params, input, nullptr);
}

inline std::vector<double> forward(const NetworkSpec& spec, std::span<const double> theta, const Grid& input) {
    const NetworkParams params = unpack_params(spec, theta);
    return detail::forward_impl(spec, params, input, nullptr);
}

inline ForwardTrace forward_traced(const NetworkSpec& spec, const NetworkParams& params, const Grid& input) {
    ForwardTrace trace;
    detail::forward_impl(spec, params, input, &trace);
    return trace;
}

inline ForwardTrace forward_traced(const NetworkSpec& spec, std::span<const double> theta, const Grid& input) {
    const NetworkParams params = unpack_params(spec, theta);
    return forward_traced(spec, params, input);
}

/// Scalar heads: label 1 iff yhat >= 0.5. Multi-output heads: argmax index
/// with ties broken toward the lowest index.
inline int predict_class(std::span<const double> yhat) {
    if (yhat.empty()) throw value_error("prediction vector is empty");
    if (yhat.size() == 1) return yhat[0] >= 0.5 ? 1 : 0;
    int best = 0;
    for (int k = 1; k < static_cast<int>(yhat.size()); ++k)
        if (yhat[k] > yhat[best]) best = k;
    return best;
}

}  // namespace convgrid
