// convgrid command-line tool: synthetic data generation, training,
// evaluation, gradient checking, convolution, and saliency emission over the
// binary grid/dataset/checkpoint formats.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "convgrid/config.hpp"
#include "convgrid/operators.hpp"
#include "convgrid/saliency.hpp"
#include "convgrid/serialize.hpp"
#include "convgrid/synth.hpp"

namespace {

using namespace convgrid;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitGradcheck = 4;

std::vector<int> parse_int_list(const std::string& text, char sep, const std::string& what) {
    std::vector<int> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(sep, start);
        if (end == std::string::npos) end = text.size();
        const std::string part = text.substr(start, end - start);
        if (!part.empty()) {
            try {
                out.push_back(std::stoi(part));
            } catch (const std::exception&) {
                throw value_error("could not parse " + what + " from '" + text + "'");
            }
        }
        start = end + 1;
    }
    if (out.empty()) throw value_error(what + " list is empty");
    return out;
}

std::vector<double> parse_double_list(const std::string& text, char sep, const std::string& what) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(sep, start);
        if (end == std::string::npos) end = text.size();
        const std::string part = text.substr(start, end - start);
        if (!part.empty()) {
            try {
                out.push_back(std::stod(part));
            } catch (const std::exception&) {
                throw value_error("could not parse " + what + " from '" + text + "'");
            }
        }
        start = end + 1;
    }
    if (out.empty()) throw value_error(what + " list is empty");
    return out;
}

std::vector<std::string> parse_string_list(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find(sep, start);
        if (end == std::string::npos) end = text.size();
        out.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

// Expand a per-axis option: empty -> fill, single -> broadcast.
std::array<int, 3> axis_option(const std::string& text, int rank, int fill, const std::string& what) {
    std::array<int, 3> out{fill, fill, fill};
    if (text.empty()) return out;
    const std::vector<int> values = parse_int_list(text, ',', what);
    if (values.size() == 1) {
        out.fill(values[0]);
        return out;
    }
    if (static_cast<int>(values.size()) != rank)
        throw value_error(what + " needs one value or one per axis");
    for (int a = 0; a < rank; ++a) out[a] = values[a];
    return out;
}

int cmd_convolve(const std::string& input_path, const std::string& op, const std::string& pad,
                 const std::string& stride, bool mirror, const std::string& out_path) {
    const Grid input = read_grid(input_path);
    OperatorBank bank;
    if (std::ifstream probe(op, std::ios::binary); probe.good())
        bank = read_operator_bank(op);
    else
        bank = operator_by_name(op, input.rank());

    ConvGeometry geom;
    geom.pad = axis_option(pad, input.rank(), 0, "pad");
    geom.stride = axis_option(stride, input.rank(), 1, "stride");

    const Grid result = mirror ? convolve(input, bank, geom) : cross_correlate(input, bank, geom);
    write_grid(out_path, result);
    std::cout << "wrote " << out_path << " (" << to_string(result.shape()) << ")\n";
    return 0;
}

int cmd_synth(const std::string& spec_text, const std::string& out_path) {
    const SynthSpec spec = parse_synth_spec(spec_text);
    const Dataset ds = synthesize(spec);
    write_dataset(out_path, ds);
    std::cout << "wrote " << out_path << " (" << ds.samples.size() << " samples, shape "
              << to_string(ds.shape) << ")\n";
    return 0;
}

int cmd_split(const std::string& dataset_path, const std::string& ratio_text, std::uint64_t seed,
              const std::string& out_text) {
    const Dataset ds = read_dataset(dataset_path);
    const std::vector<double> ratios = parse_double_list(ratio_text, ':', "ratio");
    const std::vector<std::string> outs = parse_string_list(out_text, ',');
    if (outs.size() != ratios.size())
        throw value_error("need as many output paths as ratio parts");
    const auto parts = split_indices(ds.samples.size(), ratios, seed);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        write_dataset(outs[k], subset(ds, parts[k]));
        std::cout << "wrote " << outs[k] << " (" << parts[k].size() << " samples)\n";
    }
    return 0;
}

int cmd_train(const std::string& config_path, std::string log_path, int workers) {
    const TrainConfig cfg = read_train_config(config_path);
    if (log_path.empty()) log_path = cfg.checkpoint_out + ".csv";
    const TrainRunResult result = run_training(cfg, log_path, workers);
    std::cout << "trained " << result.epochs_run << " epoch(s); "
              << (result.task == Task::classification ? "accuracy=" : "rmse=")
              << detail::format_double(result.final_metric) << "\n";
    std::cout << "wrote " << cfg.checkpoint_out << " and " << log_path << "\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& dataset_path) {
    const Checkpoint ckp = read_checkpoint(checkpoint_path);
    const NetworkSpec spec = parse_spec(ckp.spec_text);
    const Dataset ds = read_dataset(dataset_path);
    const EvalResult result = evaluate(spec, ckp.theta, ds);
    if (ds.task == Task::classification) {
        std::printf("accuracy=%.17g\n", result.accuracy);
        std::printf("confusion matrix (rows = predicted, cols = true):\n");
        for (int r = 0; r < ds.arity; ++r) {
            for (int c = 0; c < ds.arity; ++c) std::printf("%s%zu", c ? " " : "", result.confusion[r][c]);
            std::printf("\n");
        }
    } else {
        std::printf("rmse=%.17g\n", result.rmse);
    }
    return 0;
}

int cmd_gradcheck(const std::string& spec_text, std::uint64_t seed, const std::string& loss_name,
                  double threshold) {
    const NetworkSpec spec = parse_spec(spec_text);
    const LossKind loss = parse_loss(loss_name);
    SplitMix64 rng(seed);
    const std::vector<double> theta = random_params(spec, rng);
    const LabeledSample sample = random_sample(spec, loss, rng);
    const GradCheckResult result = gradient_check(spec, theta, sample, loss);
    std::printf("gradcheck: n_theta=%zu max_rel_err=%.6e\n", result.n_theta, result.max_rel_err);
    if (result.max_rel_err > threshold) {
        std::fprintf(stderr, "gradcheck failed: %.6e > %.6e at theta[%zu]\n", result.max_rel_err, threshold,
                     result.worst_index);
        return kExitGradcheck;
    }
    return 0;
}

int cmd_saliency(const std::string& checkpoint_path, const std::string& input_path, const std::string& out_path,
                 bool use_ig, int steps, const std::string& baseline_path, const std::string& loss_name,
                 const std::string& target_text, int label) {
    const Checkpoint ckp = read_checkpoint(checkpoint_path);
    const NetworkSpec spec = parse_spec(ckp.spec_text);
    const ShapeReport report = checked_spec(spec);

    LabeledSample sample;
    sample.input = read_grid(input_path);
    const LossKind loss = parse_loss(loss_name);
    if (label >= 0) {
        sample.target = Label::of_class(label);
    } else if (!target_text.empty()) {
        sample.target = Label::regression(parse_double_list(target_text, ',', "target"));
    } else if (loss == LossKind::categorical_cross_entropy) {
        throw value_error("categorical cross-entropy saliency needs --label");
    } else {
        sample.target = Label::regression(std::vector<double>(report.output_arity, 0.0));
    }

    SaliencyField field;
    if (use_ig) {
        const Grid baseline = baseline_path.empty() ? zero_baseline(sample.input.shape()) : read_grid(baseline_path);
        field = integrated_gradients(spec, ckp.theta, sample, loss, baseline, steps);
    } else {
        field = gradient_saliency(spec, ckp.theta, sample, loss);
    }

    const SaliencyField shown = to_presentation(field);
    write_grid(out_path, shown.values);
    std::cout << "wrote " << out_path << "\n";

    Grid mask = saliency_mask(shown);
    if (mask.rank() == 1) {
        // render 1D masks as a one-row image
        mask = Grid::unchecked(make_shape({1, mask.shape().extent[0]}, 1),
                               std::vector<double>(mask.values().begin(), mask.values().end()));
    }
    if (mask.rank() == 2) {
        const std::string pgm_path = out_path + ".pgm";
        write_pgm(pgm_path, mask);
        std::cout << "wrote " << pgm_path << "\n";
    } else {
        std::cout << "mask rank > 2, skipping PGM rendering\n";
    }

    // For variables-by-time fields, report which rows carry the attribution.
    if (shown.values.rank() == 2 && shown.values.channels() == 1) {
        const std::vector<double> averaged = time_averaged_saliency(shown);
        const std::vector<int> ranking = saliency_ranking(averaged);
        std::cout << "time-averaged saliency, top rows:";
        for (std::size_t k = 0; k < ranking.size() && k < 5; ++k)
            std::printf(" %d(%.4g)", ranking[k], averaged[ranking[k]]);
        std::cout << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"convolutional network engine for 1D/2D/3D grid data"};
    app.require_subcommand(1);

    // convolve
    auto* convolve_cmd = app.add_subcommand("convolve", "apply an operator to a grid file");
    std::string in_path, op_id, pad_text, stride_text, out_path;
    bool mirror = false;
    convolve_cmd->add_option("--input", in_path, "input grid file")->required();
    convolve_cmd->add_option("--op", op_id, "operator id or bank file")->required();
    convolve_cmd->add_option("--pad", pad_text, "zero padding per axis (default 0)");
    convolve_cmd->add_option("--stride", stride_text, "stride per axis (default 1)");
    convolve_cmd->add_flag("--mirror", mirror, "true convolution (rotate the operator 180 degrees)");
    convolve_cmd->add_option("--out", out_path, "output grid file")->required();

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_text, synth_out;
    synth_cmd->add_option("--spec", synth_text, "generator spec, e.g. edges2d:n=200:seed=7")->required();
    synth_cmd->add_option("--out", synth_out, "output dataset file")->required();

    // split
    auto* split_cmd = app.add_subcommand("split", "seeded index partition of a dataset");
    std::string split_ds, split_ratio = "3:1:2", split_out;
    std::uint64_t split_seed = 0;
    split_cmd->add_option("--dataset", split_ds, "input dataset file")->required();
    split_cmd->add_option("--ratio", split_ratio, "colon-separated ratios (default 3:1:2)");
    split_cmd->add_option("--seed", split_seed, "shuffle seed")->required();
    split_cmd->add_option("--out", split_out, "comma-separated output paths, one per ratio part")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "train from a key=value config file");
    std::string train_config, train_log;
    int train_workers = 1;
    train_cmd->add_option("--config", train_config, "config file")->required();
    train_cmd->add_option("--log", train_log, "CSV loss log path (default <checkpoint_out>.csv)");
    train_cmd->add_option("--workers", train_workers, "per-sample gradient workers (default 1)")
        ->check(CLI::PositiveNumber);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    std::string eval_ckp, eval_ds;
    eval_cmd->add_option("--checkpoint", eval_ckp, "checkpoint file")->required();
    eval_cmd->add_option("--dataset", eval_ds, "dataset file")->required();

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "compare backprop against finite differences");
    std::string grad_spec, grad_loss = "mse";
    std::uint64_t grad_seed = 0;
    double grad_threshold = 1e-5;
    grad_cmd->add_option("--spec", grad_spec, "architecture spec string")->required();
    grad_cmd->add_option("--seed", grad_seed, "seed for parameters and the probe sample")->required();
    grad_cmd->add_option("--loss", grad_loss, "mse | bce | cce (default mse)");
    grad_cmd->add_option("--threshold", grad_threshold, "failure threshold (default 1e-5)");

    // saliency
    auto* sal_cmd = app.add_subcommand("saliency", "emit a saliency field and PGM mask");
    std::string sal_ckp, sal_input, sal_out, sal_baseline, sal_loss = "mse", sal_target;
    bool sal_ig = false;
    int sal_steps = 50, sal_label = -1;
    sal_cmd->add_option("--checkpoint", sal_ckp, "checkpoint file")->required();
    sal_cmd->add_option("--input", sal_input, "input grid file")->required();
    sal_cmd->add_option("--out", sal_out, "output grid path (mask PGM lands at <out>.pgm)")->required();
    sal_cmd->add_flag("--ig", sal_ig, "integrated gradients instead of plain gradient saliency");
    sal_cmd->add_option("--steps", sal_steps, "IG Riemann steps (default 50)")->check(CLI::PositiveNumber);
    sal_cmd->add_option("--baseline", sal_baseline, "baseline grid file (default all zeros)");
    sal_cmd->add_option("--loss", sal_loss, "loss kind the saliency differentiates (default mse)");
    sal_cmd->add_option("--target", sal_target, "comma-separated regression target (default zeros)");
    sal_cmd->add_option("--label", sal_label, "class label for classification losses");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (convolve_cmd->parsed()) return cmd_convolve(in_path, op_id, pad_text, stride_text, mirror, out_path);
        if (synth_cmd->parsed()) return cmd_synth(synth_text, synth_out);
        if (split_cmd->parsed()) return cmd_split(split_ds, split_ratio, split_seed, split_out);
        if (train_cmd->parsed()) return cmd_train(train_config, train_log, train_workers);
        if (eval_cmd->parsed()) return cmd_eval(eval_ckp, eval_ds);
        if (grad_cmd->parsed()) return cmd_gradcheck(grad_spec, grad_seed, grad_loss, grad_threshold);
        if (sal_cmd->parsed())
            return cmd_saliency(sal_ckp, sal_input, sal_out, sal_ig, sal_steps, sal_baseline, sal_loss, sal_target,
                                sal_label);
    } catch (const convgrid::numeric_error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumeric;
    } catch (const convgrid::value_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const convgrid::io_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return kExitUsage;
}
