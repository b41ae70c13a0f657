#pragma once

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "convgrid/serialize.hpp"
#include "convgrid/training.hpp"

namespace convgrid {

/// Line-oriented key=value training configuration. '#' starts a comment and
/// blank lines are ignored. Recognized keys: optimizer, lr, epochs,
/// batch_size, loss, seed, spec, dataset, checkpoint_out. Unknown keys are
/// errors.
struct TrainConfig {
    std::string optimizer;
    double lr = 0.0;
    int epochs = -1;
    int batch_size = 0;
    std::string loss;
    std::uint64_t seed = 0;
    std::string spec;
    std::string dataset;
    std::string checkpoint_out;
};

inline TrainConfig parse_train_config(std::istream& in) {
    TrainConfig cfg;
    bool saw_optimizer = false, saw_lr = false, saw_epochs = false, saw_loss = false, saw_seed = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        // trim
        const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
        std::size_t begin = 0, end = line.size();
        while (begin < end && is_space(line[begin])) ++begin;
        while (end > begin && is_space(line[end - 1])) --end;
        if (begin == end) continue;
        const std::string item = line.substr(begin, end - begin);

        const std::size_t eq = item.find('=');
        if (eq == std::string::npos)
            throw value_error("config line " + std::to_string(line_no) + " is not key=value: '" + item + "'");
        std::string key = item.substr(0, eq);
        std::string value = item.substr(eq + 1);
        while (!key.empty() && is_space(key.back())) key.pop_back();
        std::size_t vb = 0;
        while (vb < value.size() && is_space(value[vb])) ++vb;
        value = value.substr(vb);

        try {
            if (key == "optimizer") {
                cfg.optimizer = value;
                saw_optimizer = true;
            } else if (key == "lr") {
                cfg.lr = std::stod(value);
                saw_lr = true;
            } else if (key == "epochs") {
                cfg.epochs = std::stoi(value);
                saw_epochs = true;
            } else if (key == "batch_size") {
                cfg.batch_size = std::stoi(value);
            } else if (key == "loss") {
                cfg.loss = value;
                saw_loss = true;
            } else if (key == "seed") {
                cfg.seed = std::stoull(value);
                saw_seed = true;
            } else if (key == "spec") {
                cfg.spec = value;
            } else if (key == "dataset") {
                cfg.dataset = value;
            } else if (key == "checkpoint_out") {
                cfg.checkpoint_out = value;
            } else {
                throw value_error("unknown config key '" + key + "' on line " + std::to_string(line_no));
            }
        } catch (const value_error&) {
            throw;
        } catch (const std::exception&) {
            throw value_error("could not parse value for '" + key + "' on line " + std::to_string(line_no));
        }
    }

    if (!saw_optimizer) throw value_error("config is missing 'optimizer'");
    if (!saw_lr) throw value_error("config is missing 'lr'");
    if (!saw_epochs) throw value_error("config is missing 'epochs'");
    if (!saw_loss) throw value_error("config is missing 'loss'");
    if (!saw_seed) throw value_error("config is missing 'seed'");
    if (cfg.spec.empty()) throw value_error("config is missing 'spec'");
    if (cfg.dataset.empty()) throw value_error("config is missing 'dataset'");
    if (cfg.checkpoint_out.empty()) throw value_error("config is missing 'checkpoint_out'");
    if (cfg.optimizer == "minibatch" && cfg.batch_size < 1)
        throw value_error("minibatch optimizer needs batch_size >= 1");
    return cfg;
}

inline TrainConfig read_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config '" + path + "'");
    return parse_train_config(in);
}

namespace detail {
// Shortest round-trip-exact decimal form.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace detail

struct TrainRunResult {
    std::vector<double> theta;
    std::string log_text;
    int epochs_run = 0;
    Task task = Task::regression;
    double final_metric = 0.0;
};

/// Runs a full training job from a parsed config: loads the dataset, builds
/// and validates the spec, initializes parameters from the seed, trains, and
/// writes the checkpoint plus the per-epoch CSV log (epoch,loss,metric with
/// the resolved config in '#' header lines). The parameter init stream uses
/// `seed`; the shuffle stream uses `seed + 1`.
inline TrainRunResult run_training(const TrainConfig& cfg, const std::string& log_path, int workers = 1) {
    const Dataset ds = read_dataset(cfg.dataset);
    const NetworkSpec spec = parse_spec(cfg.spec);
    checked_spec(spec);

    TrainOptions options;
    options.opt.kind = parse_optimizer(cfg.optimizer);
    options.opt.learning_rate = cfg.lr;
    options.opt.epochs = cfg.epochs;
    options.opt.batch_size = cfg.batch_size;
    options.opt.seed = cfg.seed + 1;
    options.loss = parse_loss(cfg.loss);
    options.workers = workers;

    ce_clamp_count().store(0);

    std::ostringstream log;
    log << "# optimizer=" << cfg.optimizer << "\n";
    log << "# lr=" << detail::format_double(cfg.lr) << "\n";
    log << "# epochs=" << cfg.epochs << "\n";
    if (options.opt.kind == OptimizerConfig::Kind::minibatch) log << "# batch_size=" << cfg.batch_size << "\n";
    log << "# loss=" << to_string(options.loss) << "\n";
    log << "# seed=" << cfg.seed << "\n";
    log << "# spec=" << format_spec(spec) << "\n";
    log << "# dataset=" << cfg.dataset << "\n";
    log << "epoch,loss,metric\n";

    TrainRunResult result;
    result.task = ds.task;
    std::vector<double> theta = init_params(spec, cfg.seed);
    theta = train(spec, std::move(theta), ds, options, [&](const EpochStats& stats) {
        log << stats.epoch << "," << detail::format_double(stats.mean_loss) << ","
            << detail::format_double(stats.metric) << "\n";
        result.epochs_run = stats.epoch;
        result.final_metric = stats.metric;
        return true;
    });

    const std::uint64_t clamped = ce_clamp_count().load();
    if (clamped > 0)
        std::cerr << "warning: cross-entropy input clamped " << clamped << " time(s)\n";

    write_checkpoint(cfg.checkpoint_out, Checkpoint{format_spec(spec), theta});
    result.log_text = log.str();
    if (!log_path.empty()) {
        std::ofstream out(log_path, std::ios::trunc);
        if (!out) throw io_error("cannot open log '" + log_path + "' for writing");
        out << result.log_text;
        if (!out) throw io_error("write failed for '" + log_path + "'");
    }
    result.theta = std::move(theta);
    return result;
}

}  // namespace convgrid
