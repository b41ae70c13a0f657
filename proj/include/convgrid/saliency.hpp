#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "convgrid/training.hpp"

namespace convgrid {

/// Attribution tensor with the same shape as the input it explains. Signed
/// fields keep the raw gradient sign; presentation form is non-negative.
struct SaliencyField {
    Grid values;
    bool is_signed = false;
};

/// Element-wise absolute value: the presentation form of a signed field.
inline SaliencyField to_presentation(const SaliencyField& field) {
    if (!field.is_signed) return field;
    std::vector<double> out(field.values.values().begin(), field.values.values().end());
    for (double& v : out) v = std::abs(v);
    return SaliencyField{Grid::unchecked(field.values.shape(), std::move(out)), false};
}

/// abs of the loss gradient with respect to the input grid, computed by
/// running the backward pass all the way through the first block.
inline SaliencyField gradient_saliency(const NetworkSpec& spec, std::span<const double> theta,
                                       const LabeledSample& sample, LossKind loss_kind) {
    BackpropResult r = backprop(spec, theta, sample, loss_kind, true);
    SaliencyField field{std::move(r.grad_input), true};
    return to_presentation(field);
}

/// Element-wise maximum of the field over channels; signed fields are taken
/// to presentation form first.
inline Grid saliency_mask(const SaliencyField& field) {
    const SaliencyField shown = to_presentation(field);
    const Grid& g = shown.values;
    Shape out = g.shape();
    out.channels = 1;
    const std::size_t sp = g.shape().spatial_size();
    std::vector<double> mask(g.channel_data(0), g.channel_data(0) + sp);
    for (int c = 1; c < g.channels(); ++c) {
        const double* ch = g.channel_data(c);
        for (std::size_t k = 0; k < sp; ++k) mask[k] = std::max(mask[k], ch[k]);
    }
    return Grid::unchecked(out, std::move(mask));
}

/// Integrated gradients from the baseline to the sample, approximating the
/// path integral by a midpoint Riemann sum over beta_k = (k - 1/2) / m:
/// (V - Vbar) .* mean_k dL/dV at Vbar + beta_k (V - Vbar). The returned field
/// is SIGNED; apply to_presentation for display.
inline SaliencyField integrated_gradients(const NetworkSpec& spec, std::span<const double> theta,
                                          const LabeledSample& sample, LossKind loss_kind, const Grid& baseline,
                                          int steps = 50) {
    if (steps < 1) throw value_error("integrated gradients need at least one step");
    if (!(baseline.shape() == sample.input.shape()))
        throw value_error("baseline shape does not match the input shape");

    const NetworkParams params = unpack_params(spec, theta);
    const ParamLayout layout = param_layout(spec);
    const std::size_t n = sample.input.values().size();

    std::vector<double> displacement(n);
    for (std::size_t k = 0; k < n; ++k)
        displacement[k] = sample.input.values()[k] - baseline.values()[k];

    std::vector<double> grad_sum(n, 0.0);
    for (int step = 1; step <= steps; ++step) {
        const double beta = (static_cast<double>(step) - 0.5) / static_cast<double>(steps);
        std::vector<double> point(n);
        for (std::size_t k = 0; k < n; ++k) point[k] = baseline.values()[k] + beta * displacement[k];
        LabeledSample path_sample{Grid::unchecked(sample.input.shape(), std::move(point)), sample.target};
        const BackpropResult r = backprop(spec, params, layout, path_sample, loss_kind, true);
        for (std::size_t k = 0; k < n; ++k) grad_sum[k] += r.grad_input.values()[k];
    }

    std::vector<double> out(n);
    const double inv_m = 1.0 / static_cast<double>(steps);
    for (std::size_t k = 0; k < n; ++k) out[k] = displacement[k] * grad_sum[k] * inv_m;
    return SaliencyField{Grid::unchecked(sample.input.shape(), std::move(out)), true};
}

/// Default all-zero baseline representing the absence of every feature.
inline Grid zero_baseline(const Shape& shape) { return Grid::zeros(shape); }

/// Mean over the time axis (axis 1) of a single-channel rank-2 field whose
/// rows (axis 0) are variables: one mean saliency value per variable.
inline std::vector<double> time_averaged_saliency(const SaliencyField& field) {
    const Grid& g = to_presentation(field).values;
    if (g.rank() != 2 || g.channels() != 1)
        throw value_error("time-averaged saliency expects a single-channel rank-2 field");
    const int vars = g.shape().extent[0];
    const int time = g.shape().extent[1];
    std::vector<double> out(vars, 0.0);
    const double* data = g.data();
    for (int v = 0; v < vars; ++v) {
        double sum = 0.0;
        for (int t = 0; t < time; ++t) sum += data[static_cast<std::size_t>(v) * time + t];
        out[v] = sum / time;
    }
    return out;
}

/// Indices sorted by descending value; ties break toward the lower index.
inline std::vector<int> saliency_ranking(std::span<const double> values) {
    std::vector<int> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] > values[b]; });
    return order;
}

}  // namespace convgrid
