#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "convgrid/dataset.hpp"
#include "convgrid/network.hpp"

namespace convgrid {

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

enum class LossKind { mse, binary_cross_entropy, categorical_cross_entropy };

inline std::string to_string(LossKind k) {
    switch (k) {
        case LossKind::mse: return "mse";
        case LossKind::binary_cross_entropy: return "binary-cross-entropy";
        case LossKind::categorical_cross_entropy: return "categorical-cross-entropy";
    }
    return "?";
}

inline LossKind parse_loss(const std::string& name) {
    if (name == "mse") return LossKind::mse;
    if (name == "binary-cross-entropy" || name == "bce") return LossKind::binary_cross_entropy;
    if (name == "categorical-cross-entropy" || name == "cce") return LossKind::categorical_cross_entropy;
    throw value_error("unknown loss '" + name + "'");
}

/// Number of times a cross-entropy input has been clamped into
/// [1e-12, 1-1e-12] since the counter was last reset. Callers that care
/// (the training loop, the CLI) report it as a warning.
inline std::atomic<std::uint64_t>& ce_clamp_count() {
    static std::atomic<std::uint64_t> count{0};
    return count;
}

namespace detail {
inline double clamp_probability(double y) {
    constexpr double eps = 1e-12;
    if (y < eps || y > 1.0 - eps) {
        ce_clamp_count().fetch_add(1, std::memory_order_relaxed);
        return std::clamp(y, eps, 1.0 - eps);
    }
    return y;
}

inline double label_scalar(const Label& target) {
    if (target.is_class) return static_cast<double>(target.class_index);
    if (target.values.size() != 1) throw value_error("expected a scalar target");
    return target.values[0];
}
}  // namespace detail

/// Per-sample loss, the quantity backward propagation differentiates.
/// mse: 1/2 * sum_o (yhat_o - y_o)^2 (the squared-error form whose gradient
/// is yhat - y); binary cross-entropy: -[y ln yhat + (1-y) ln(1-yhat)] with
/// yhat clamped away from {0,1}; categorical cross-entropy: -ln yhat[y] on a
/// softmax head.
inline double sample_loss(std::span<const double> yhat, const Label& target, LossKind kind) {
    switch (kind) {
        case LossKind::mse: {
            if (target.is_class || target.values.size() != yhat.size())
                throw value_error("mse target width does not match prediction");
            double acc = 0.0;
            for (std::size_t o = 0; o < yhat.size(); ++o) {
                const double d = yhat[o] - target.values[o];
                acc += d * d;
            }
            return 0.5 * acc;
        }
        case LossKind::binary_cross_entropy: {
            if (yhat.size() != 1) throw value_error("binary cross-entropy needs a scalar prediction");
            const double y = detail::label_scalar(target);
            const double p = detail::clamp_probability(yhat[0]);
            return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
        }
        case LossKind::categorical_cross_entropy: {
            if (!target.is_class) throw value_error("categorical cross-entropy needs a class label");
            if (target.class_index < 0 || target.class_index >= static_cast<int>(yhat.size()))
                throw value_error("class label out of range");
            return -std::log(detail::clamp_probability(yhat[target.class_index]));
        }
    }
    throw value_error("unknown loss kind");
}

/// Gradient of the per-sample loss. For mse and binary cross-entropy this is
/// the gradient at the prediction yhat; for categorical cross-entropy it is
/// the gradient at the evidence d of the softmax head (yhat - onehot(y)), so
/// the backward pass must skip the softmax derivative.
inline std::vector<double> loss_grad(std::span<const double> yhat, const Label& target, LossKind kind) {
    switch (kind) {
        case LossKind::mse: {
            if (target.is_class || target.values.size() != yhat.size())
                throw value_error("mse target width does not match prediction");
            std::vector<double> g(yhat.size());
            for (std::size_t o = 0; o < yhat.size(); ++o) g[o] = yhat[o] - target.values[o];
            return g;
        }
        case LossKind::binary_cross_entropy: {
            if (yhat.size() != 1) throw value_error("binary cross-entropy needs a scalar prediction");
            const double y = detail::label_scalar(target);
            const double p = detail::clamp_probability(yhat[0]);
            return {(p - y) / (p * (1.0 - p))};
        }
        case LossKind::categorical_cross_entropy: {
            if (!target.is_class) throw value_error("categorical cross-entropy needs a class label");
            if (target.class_index < 0 || target.class_index >= static_cast<int>(yhat.size()))
                throw value_error("class label out of range");
            std::vector<double> g(yhat.begin(), yhat.end());
            g[target.class_index] -= 1.0;
            return g;
        }
    }
    throw value_error("unknown loss kind");
}

// ---------------------------------------------------------------------------
// Backward propagation
// ---------------------------------------------------------------------------

struct BackpropResult {
    double loss = 0.0;
    std::vector<double> yhat;
    std::vector<double> grad;  // dL/dtheta in ParamLayout order
    Grid grad_input;           // dL/dV (signed)
};

namespace detail {

inline void check_finite(std::span<const double> v, const std::string& what) {
    for (double x : v)
        if (!std::isfinite(x)) throw numeric_error("non-finite value in " + what);
}

// Gradient of the loss at the evidence of the final dense block, folding the
// head activation derivative in. Softmax is only differentiable here fused
// with categorical cross-entropy.
inline std::vector<double> head_evidence_grad(const std::vector<double>& dvec, const ForwardTrace::BlockTrace& t,
                                              Activation act, bool fused_softmax) {
    if (fused_softmax) return dvec;
    std::vector<double> dd(dvec.size());
    for (std::size_t o = 0; o < dvec.size(); ++o) {
        const double basis = (act == Activation::relu) ? t.vec_pre[o] : t.vec_post[o];
        dd[o] = dvec[o] * activate_derivative_scalar(basis, act);
    }
    return dd;
}

}  // namespace detail

/// Runs a traced forward pass and then the block backward passes in reverse
/// order, assembling dL/dtheta with the ParamVector layout plus the gradient
/// with respect to the input grid. Pure and deterministic.
inline BackpropResult backprop(const NetworkSpec& spec, const NetworkParams& params, const ParamLayout& layout,
                               const LabeledSample& sample, LossKind loss_kind, bool want_input_grad = true) {
    const ForwardTrace trace = forward_traced(spec, params, sample.input);
    BackpropResult result;
    result.yhat = trace.output;
    result.loss = sample_loss(result.yhat, sample.target, loss_kind);
    if (!std::isfinite(result.loss)) throw numeric_error("non-finite loss");
    result.grad.assign(layout.total, 0.0);

    const auto* final_dense = std::get_if<DenseBlockSpec>(&spec.blocks.back());
    const bool fused_softmax = final_dense && final_dense->act == Activation::softmax;
    if (fused_softmax && loss_kind != LossKind::categorical_cross_entropy)
        throw value_error("a softmax head is trainable only with categorical cross-entropy");
    if (!fused_softmax && loss_kind == LossKind::categorical_cross_entropy)
        throw value_error("categorical cross-entropy requires a softmax head");

    std::vector<double> dvec = loss_grad(result.yhat, sample.target, loss_kind);

    Grid dgrid;
    for (std::size_t k = spec.blocks.size(); k-- > 0;) {
        const BlockSpec& block = spec.blocks[k];
        const ForwardTrace::BlockTrace& t = trace.blocks[k];
        const Grid& block_input = (k == 0) ? trace.input : trace.blocks[k - 1].post_act;

        if (const auto* d = std::get_if<DenseBlockSpec>(&block)) {
            const auto& dp = std::get<DenseParams>(params.blocks[k]);
            const bool is_final = (k + 1 == spec.blocks.size());
            const std::vector<double> dd =
                detail::head_evidence_grad(dvec, t, d->act, is_final && fused_softmax);
            // The dense input is the previous vector stage: flatten's v or the
            // previous dense block's activated output.
            const std::vector<double>& v_in =
                std::holds_alternative<FlattenBlockSpec>(spec.blocks[k - 1]) ? trace.blocks[k - 1].vec_pre
                                                                             : trace.blocks[k - 1].vec_post;
            DenseGrads g = dense_backward(dd, v_in, dp);
            std::copy(g.weights.begin(), g.weights.end(), result.grad.begin() + layout.blocks[k].weights.offset);
            std::copy(g.bias.begin(), g.bias.end(), result.grad.begin() + layout.blocks[k].bias.offset);
            dvec = std::move(g.input);
        } else if (std::holds_alternative<FlattenBlockSpec>(block)) {
            dgrid = unflatten(FeatureVector{dvec, t.flatten_origin});
        } else if (std::holds_alternative<PoolBlockSpec>(block)) {
            const auto& ps = std::get<PoolSpec>(params.blocks[k]);
            dgrid = pool_backward(dgrid, t.pool_cache, ps, block_input.shape());
        } else if (const auto* c = std::get_if<ConvBlockSpec>(&block)) {
            const auto& cp = std::get<ConvBlockParams>(params.blocks[k]);
            // dPsi = dA .* act'(Psi), with the derivative evaluated on post
            // values for sigmoid/tanh and pre values for relu.
            const Grid& basis = (c->act == Activation::relu) ? t.pre_act : t.post_act;
            std::vector<double> dpsi(dgrid.values().size());
            for (std::size_t n = 0; n < dpsi.size(); ++n)
                dpsi[n] = dgrid.values()[n] * activate_derivative_scalar(basis.values()[n], c->act);
            const bool need_dv = want_input_grad || k > 0;
            ConvGrads g = conv_backward(Grid::unchecked(dgrid.shape(), std::move(dpsi)), block_input, cp, need_dv);
            std::copy(g.bank.weights().begin(), g.bank.weights().end(),
                      result.grad.begin() + layout.blocks[k].weights.offset);
            std::copy(g.bias.begin(), g.bias.end(), result.grad.begin() + layout.blocks[k].bias.offset);
            if (need_dv) dgrid = std::move(g.input);
        }

        const BlockLayout& bl = layout.blocks[k];
        if (bl.weights.count + bl.bias.count > 0)
            detail::check_finite({result.grad.data() + bl.weights.offset, bl.weights.count + bl.bias.count},
                                 "gradient of block " + std::to_string(k + 1));
    }
    if (want_input_grad) result.grad_input = std::move(dgrid);
    return result;
}

inline BackpropResult backprop(const NetworkSpec& spec, std::span<const double> theta, const LabeledSample& sample,
                               LossKind loss_kind, bool want_input_grad = true) {
    const NetworkParams params = unpack_params(spec, theta);
    const ParamLayout layout = param_layout(spec);
    return backprop(spec, params, layout, sample, loss_kind, want_input_grad);
}

// ---------------------------------------------------------------------------
// Finite-difference oracle
// ---------------------------------------------------------------------------

template <typename F>
double central_difference(F&& f, double x, double h) {
    if (!(h > 0.0)) throw value_error("finite-difference step h must be positive");
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Central finite differences of the per-sample loss over every theta
/// coordinate, with per-coordinate step h * max(1, |theta_k|). O(n_theta)
/// forward pairs; this is the independent oracle backprop is checked against.
inline std::vector<double> finite_difference_grad(const NetworkSpec& spec, std::span<const double> theta,
                                                  const LabeledSample& sample, LossKind loss_kind,
                                                  double h = 1e-6) {
    if (!(h > 0.0)) throw value_error("finite-difference step h must be positive");
    std::vector<double> work(theta.begin(), theta.end());
    std::vector<double> grad(theta.size());
    for (std::size_t k = 0; k < work.size(); ++k) {
        const double original = work[k];
        const double hk = h * std::max(1.0, std::abs(original));
        work[k] = original + hk;
        const double up = sample_loss(forward(spec, work, sample.input), sample.target, loss_kind);
        work[k] = original - hk;
        const double down = sample_loss(forward(spec, work, sample.input), sample.target, loss_kind);
        work[k] = original;
        grad[k] = (up - down) / (2.0 * hk);
    }
    return grad;
}

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    std::size_t n_theta = 0;
};

/// Elementwise comparison of backprop against the finite-difference oracle.
/// Differences below the absolute floor are accepted outright; otherwise the
/// error is |a - b| / max(|a|, |b|).
inline GradCheckResult gradient_check(const NetworkSpec& spec, std::span<const double> theta,
                                      const LabeledSample& sample, LossKind loss_kind, double h = 1e-6,
                                      double abs_floor = 1e-9) {
    const std::vector<double> analytic = backprop(spec, theta, sample, loss_kind, false).grad;
    const std::vector<double> numeric = finite_difference_grad(spec, theta, sample, loss_kind, h);
    GradCheckResult result;
    result.n_theta = theta.size();
    for (std::size_t k = 0; k < analytic.size(); ++k) {
        const double diff = std::abs(analytic[k] - numeric[k]);
        if (diff <= abs_floor) continue;
        const double rel = diff / std::max(std::abs(analytic[k]), std::abs(numeric[k]));
        if (rel > result.max_rel_err) {
            result.max_rel_err = rel;
            result.worst_index = k;
        }
    }
    return result;
}

/// Random input grid with values uniform in [-1, 1]; the standard probe for
/// gradient checks.
inline Grid random_input(const Shape& shape, SplitMix64& rng) {
    std::vector<double> values(shape.value_count());
    for (double& v : values) v = rng.uniform(-1.0, 1.0);
    return Grid::unchecked(shape, std::move(values));
}

/// Fully random parameter vector (biases included) for gradient checking.
/// Gradient checks must not probe exactly at relu kinks or pooling ties;
/// continuous draws for every coordinate, biases included, keep those
/// events measure-zero (zero biases would pin padded-border relu
/// pre-activations exactly onto the kink).
inline std::vector<double> random_params(const NetworkSpec& spec, SplitMix64& rng, double scale = 0.5) {
    std::vector<double> theta(param_layout(spec).total);
    for (double& v : theta) v = rng.uniform(-scale, scale);
    return theta;
}

/// Random labeled sample matching the spec's head and the loss kind.
inline LabeledSample random_sample(const NetworkSpec& spec, LossKind loss_kind, SplitMix64& rng) {
    const ShapeReport report = checked_spec(spec);
    LabeledSample sample;
    sample.input = random_input(spec.input, rng);
    switch (loss_kind) {
        case LossKind::mse: {
            std::vector<double> target(report.output_arity);
            for (double& v : target) v = rng.uniform(0.0, 1.0);
            sample.target = Label::regression(std::move(target));
            break;
        }
        case LossKind::binary_cross_entropy:
            sample.target = Label::regression(static_cast<double>(rng.below(2)));
            break;
        case LossKind::categorical_cross_entropy:
            sample.target = Label::of_class(static_cast<int>(rng.below(report.output_arity)));
            break;
    }
    return sample;
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

struct OptimizerConfig {
    enum class Kind { gd, sgd, minibatch };
    Kind kind = Kind::gd;
    double learning_rate = 0.01;
    int batch_size = 1;  // minibatch only
    int epochs = 1;
    std::uint64_t seed = 0;  // shuffle seed
};

inline OptimizerConfig::Kind parse_optimizer(const std::string& name) {
    if (name == "gd") return OptimizerConfig::Kind::gd;
    if (name == "sgd") return OptimizerConfig::Kind::sgd;
    if (name == "minibatch") return OptimizerConfig::Kind::minibatch;
    throw value_error("unknown optimizer '" + name + "'");
}

namespace detail {

// Sums per-sample gradients over `indices` into `sum`, reducing in the order
// the index list gives. Gradients are computed in blocks; with workers > 1
// the samples of a block are evaluated concurrently, but each result lands in
// its own slot and the reduction always walks slots in list order, so the sum
// is bit-identical for every worker count.
inline double accumulate_gradients(const NetworkSpec& spec, const NetworkParams& params, const ParamLayout& layout,
                                   std::span<const LabeledSample> samples, std::span<const std::size_t> indices,
                                   LossKind loss_kind, int workers, std::vector<double>& sum) {
    sum.assign(layout.total, 0.0);
    double loss_sum = 0.0;
    const std::size_t block =
        std::max<std::size_t>(1, std::min<std::size_t>(indices.size(), static_cast<std::size_t>(workers) * 4));
    std::vector<BackpropResult> results(block);

    for (std::size_t start = 0; start < indices.size(); start += block) {
        const std::size_t count = std::min(block, indices.size() - start);
        if (workers <= 1 || count == 1) {
            for (std::size_t s = 0; s < count; ++s)
                results[s] = backprop(spec, params, layout, samples[indices[start + s]], loss_kind, false);
        } else {
            const std::size_t nthreads = std::min<std::size_t>(workers, count);
            std::vector<std::thread> pool;
            pool.reserve(nthreads);
            std::exception_ptr failure;
            std::mutex failure_mutex;
            for (std::size_t t = 0; t < nthreads; ++t) {
                pool.emplace_back([&, t]() {
                    try {
                        for (std::size_t s = t; s < count; s += nthreads)
                            results[s] = backprop(spec, params, layout, samples[indices[start + s]], loss_kind, false);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                });
            }
            for (std::thread& th : pool) th.join();
            if (failure) std::rethrow_exception(failure);
        }
        for (std::size_t s = 0; s < count; ++s) {
            const std::vector<double>& g = results[s].grad;
            for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += g[k];
            loss_sum += results[s].loss;
        }
    }
    return loss_sum;
}

inline void apply_step(std::vector<double>& theta, std::span<const double> step, double lr, double scale) {
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= lr * scale * step[k];
}

}  // namespace detail

/// One full-dataset gradient-descent step: theta <- theta - lr * mean grad,
/// with per-sample gradients reduced in ascending sample index.
inline std::vector<double> gd_epoch(const NetworkSpec& spec, std::vector<double> theta,
                                    std::span<const LabeledSample> samples, LossKind loss_kind, double lr,
                                    int workers = 1) {
    if (samples.empty()) throw value_error("gd epoch over an empty dataset");
    const NetworkParams params = unpack_params(spec, theta);
    const ParamLayout layout = param_layout(spec);
    std::vector<std::size_t> indices(samples.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    std::vector<double> sum;
    detail::accumulate_gradients(spec, params, layout, samples, indices, loss_kind, workers, sum);
    detail::apply_step(theta, sum, lr, 1.0 / static_cast<double>(samples.size()));
    return theta;
}

/// n single-sample steps in a seeded-shuffle order. Inherently sequential.
inline std::vector<double> sgd_epoch(const NetworkSpec& spec, std::vector<double> theta,
                                     std::span<const LabeledSample> samples, LossKind loss_kind, double lr,
                                     SplitMix64& rng) {
    if (samples.empty()) throw value_error("sgd epoch over an empty dataset");
    const ParamLayout layout = param_layout(spec);
    const std::vector<std::size_t> order = shuffled_indices(samples.size(), rng);
    for (std::size_t i : order) {
        const NetworkParams params = unpack_params(spec, theta);
        const BackpropResult r = backprop(spec, params, layout, samples[i], loss_kind, false);
        detail::apply_step(theta, r.grad, lr, 1.0);
    }
    return theta;
}

/// Seeded shuffle, contiguous split into batches of batch_size (last batch
/// may be short), one averaged step per batch. Within a batch, gradients are
/// reduced in ascending original sample index.
inline std::vector<double> minibatch_epoch(const NetworkSpec& spec, std::vector<double> theta,
                                           std::span<const LabeledSample> samples, LossKind loss_kind, double lr,
                                           int batch_size, SplitMix64& rng, int workers = 1) {
    if (samples.empty()) throw value_error("minibatch epoch over an empty dataset");
    if (batch_size < 1 || batch_size > static_cast<int>(samples.size()))
        throw value_error("batch size must be in [1, n]");
    const ParamLayout layout = param_layout(spec);
    const std::vector<std::size_t> order = shuffled_indices(samples.size(), rng);
    std::vector<double> sum;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
        std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
        std::sort(batch.begin(), batch.end());
        const NetworkParams params = unpack_params(spec, theta);
        detail::accumulate_gradients(spec, params, layout, samples, batch, loss_kind, workers, sum);
        detail::apply_step(theta, sum, lr, 1.0 / static_cast<double>(batch.size()));
    }
    return theta;
}

// ---------------------------------------------------------------------------
// Evaluation and the training loop
// ---------------------------------------------------------------------------

struct EvalResult {
    double rmse = 0.0;
    double accuracy = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [predicted][true]
    std::vector<std::vector<double>> predictions;
    double mean_loss = 0.0;  // mean per-sample loss when a kind is supplied
};

/// Regression: RMSE over all outputs plus per-sample predictions.
/// Classification: accuracy plus the confusion matrix with rows = predicted
/// class and columns = true class.
inline EvalResult evaluate(const NetworkSpec& spec, std::span<const double> theta, const Dataset& ds,
                           std::optional<LossKind> loss_kind = std::nullopt) {
    const NetworkParams params = unpack_params(spec, theta);
    const ShapeReport report = checked_spec(spec);
    EvalResult result;
    result.predictions.reserve(ds.samples.size());

    if (ds.task == Task::classification) {
        if (report.output_arity < 2 && ds.arity > 2)
            throw value_error("network head is too narrow for the dataset's class count");
        result.confusion.assign(ds.arity, std::vector<std::size_t>(ds.arity, 0));
    } else if (report.output_arity != ds.arity) {
        throw value_error("network output arity does not match regression dataset");
    }

    double se = 0.0;
    std::size_t correct = 0;
    double loss_sum = 0.0;
    for (const LabeledSample& s : ds.samples) {
        std::vector<double> yhat = forward(spec, params, s.input);
        if (loss_kind) loss_sum += sample_loss(yhat, s.target, *loss_kind);
        if (ds.task == Task::classification) {
            const int predicted = predict_class(yhat);
            const int truth = s.target.class_index;
            if (predicted >= 0 && predicted < ds.arity) result.confusion[predicted][truth] += 1;
            if (predicted == truth) ++correct;
        } else {
            for (std::size_t o = 0; o < yhat.size(); ++o) {
                const double d = yhat[o] - s.target.values[o];
                se += d * d;
            }
        }
        result.predictions.push_back(std::move(yhat));
    }

    const double n = static_cast<double>(ds.samples.size());
    if (ds.task == Task::classification)
        result.accuracy = n > 0 ? static_cast<double>(correct) / n : 0.0;
    else
        result.rmse = n > 0 ? std::sqrt(se / (n * ds.arity)) : 0.0;
    if (loss_kind && n > 0) result.mean_loss = loss_sum / n;
    return result;
}

struct TrainOptions {
    OptimizerConfig opt;
    LossKind loss = LossKind::mse;
    int workers = 1;
};

struct EpochStats {
    int epoch = 0;          // 1-based
    double mean_loss = 0.0; // mean per-sample loss over the training set
    double metric = 0.0;    // rmse (regression) or accuracy (classification)
};

using EpochHook = std::function<bool(const EpochStats&)>;  // return false to stop early

/// Full training loop: epochs of the configured optimizer with post-epoch
/// evaluation on the training set. The shuffle stream is seeded once with the
/// config seed and advances across epochs. NaN anywhere aborts with the
/// epoch identified.
inline std::vector<double> train(const NetworkSpec& spec, std::vector<double> theta, const Dataset& ds,
                                 const TrainOptions& options, const EpochHook& on_epoch = {}) {
    check_dataset(ds);
    if (ds.samples.empty()) throw value_error("training dataset is empty");
    if (!(options.opt.learning_rate > 0.0)) throw value_error("learning rate must be positive");
    if (options.opt.epochs < 0) throw value_error("epoch count must be >= 0");
    checked_spec(spec);

    SplitMix64 shuffle_rng(options.opt.seed);
    for (int epoch = 1; epoch <= options.opt.epochs; ++epoch) {
        try {
            switch (options.opt.kind) {
                case OptimizerConfig::Kind::gd:
                    theta = gd_epoch(spec, std::move(theta), ds.samples, options.loss, options.opt.learning_rate,
                                     options.workers);
                    break;
                case OptimizerConfig::Kind::sgd:
                    theta = sgd_epoch(spec, std::move(theta), ds.samples, options.loss, options.opt.learning_rate,
                                      shuffle_rng);
                    break;
                case OptimizerConfig::Kind::minibatch:
                    theta = minibatch_epoch(spec, std::move(theta), ds.samples, options.loss,
                                            options.opt.learning_rate, options.opt.batch_size, shuffle_rng,
                                            options.workers);
                    break;
            }
        } catch (const numeric_error& e) {
            throw numeric_error("epoch " + std::to_string(epoch) + ": " + e.what());
        }
        detail::check_finite(theta, "parameters after epoch " + std::to_string(epoch));

        if (on_epoch) {
            const EvalResult eval = evaluate(spec, theta, ds, options.loss);
            EpochStats stats;
            stats.epoch = epoch;
            stats.mean_loss = eval.mean_loss;
            stats.metric = ds.task == Task::classification ? eval.accuracy : eval.rmse;
            if (!std::isfinite(stats.mean_loss))
                throw numeric_error("epoch " + std::to_string(epoch) + ": non-finite loss");
            if (!on_epoch(stats)) break;
        }
    }
    return theta;
}

}  // namespace convgrid
