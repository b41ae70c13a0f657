#include <gtest/gtest.h>

#include <cmath>

#include "convgrid/training.hpp"
#include "test_util.hpp"

using namespace convgrid;
using testutil::random_grid;

namespace {

// Randomized small spec drawn from the full option space: ranks 1-3, one or
// two conv units, p,q <= 3, strides 1-2, both pooling kinds, every
// element-wise activation.
NetworkSpec random_small_spec(SplitMix64& rng, LossKind loss, int* arity_out = nullptr) {
    const int rank = 1 + static_cast<int>(rng.below(3));
    Shape input;
    input.rank = rank;
    for (int a = 0; a < rank; ++a) input.extent[a] = 5 + static_cast<int>(rng.below(2));
    input.channels = 1 + static_cast<int>(rng.below(3));

    const Activation acts[4] = {Activation::sigmoid, Activation::tanh, Activation::relu, Activation::linear};
    NetworkSpec spec;
    spec.input = input;

    Shape cur = input;
    const int conv_units = 1 + static_cast<int>(rng.below(2));
    for (int unit = 0; unit < conv_units; ++unit) {
        ConvBlockSpec conv;
        conv.out_channels = 1 + static_cast<int>(rng.below(3));
        bool feasible = true;
        for (int a = 0; a < rank; ++a) {
            conv.kernel[a] = 1 + static_cast<int>(rng.below(3));
            conv.geom.pad[a] = static_cast<int>(rng.below(2));
            conv.geom.stride[a] = 1 + static_cast<int>(rng.below(2));
            if (cur.extent[a] + 2 * conv.geom.pad[a] < conv.kernel[a]) feasible = false;
        }
        if (!feasible) break;
        conv.act = acts[rng.below(4)];
        spec.blocks.emplace_back(conv);
        cur.channels = conv.out_channels;
        for (int a = 0; a < rank; ++a)
            cur.extent[a] = output_extent(cur.extent[a], conv.kernel[a], conv.geom.pad[a], conv.geom.stride[a]);

        PoolBlockSpec pool;
        pool.pool.kind = rng.below(2) ? PoolSpec::Kind::max : PoolSpec::Kind::average;
        bool poolable = true;
        for (int a = 0; a < rank; ++a) {
            pool.pool.window[a] = 1 + static_cast<int>(rng.below(2));
            if (pool.pool.window[a] > cur.extent[a]) poolable = false;
        }
        if (poolable) {
            spec.blocks.emplace_back(pool);
            for (int a = 0; a < rank; ++a) cur.extent[a] /= pool.pool.window[a];
        }
    }
    spec.blocks.emplace_back(FlattenBlockSpec{});

    DenseBlockSpec hidden;
    hidden.units = 2 + static_cast<int>(rng.below(3));
    hidden.act = acts[rng.below(4)];
    spec.blocks.emplace_back(hidden);

    DenseBlockSpec head;
    switch (loss) {
        case LossKind::mse:
            head.units = 1 + static_cast<int>(rng.below(2));
            head.act = acts[rng.below(4)];
            break;
        case LossKind::binary_cross_entropy:
            head.units = 1;
            head.act = Activation::sigmoid;
            break;
        case LossKind::categorical_cross_entropy:
            head.units = 2 + static_cast<int>(rng.below(3));
            head.act = Activation::softmax;
            break;
    }
    spec.blocks.emplace_back(head);
    if (arity_out) *arity_out = head.units;
    return spec;
}

double rel_err(double a, double b, double floor = 1e-9) {
    const double diff = std::abs(a - b);
    if (diff <= floor) return 0.0;
    return diff / std::max(std::abs(a), std::abs(b));
}

}  // namespace

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

TEST(Loss, MseValues) {
    EXPECT_DOUBLE_EQ(sample_loss(std::vector<double>{2.0}, Label::regression(2.0), LossKind::mse), 0.0);
    // 1/2 (0.5)^2
    EXPECT_DOUBLE_EQ(sample_loss(std::vector<double>{0.5}, Label::regression(0.0), LossKind::mse), 0.125);
}

TEST(Loss, BinaryCrossEntropyValues) {
    EXPECT_NEAR(sample_loss(std::vector<double>{0.5}, Label::regression(1.0), LossKind::binary_cross_entropy),
                std::log(2.0), 1e-12);
    EXPECT_NEAR(sample_loss(std::vector<double>{1.0}, Label::regression(1.0), LossKind::binary_cross_entropy),
                0.0, 1e-9);
}

TEST(Loss, ClampingIsCounted) {
    ce_clamp_count().store(0);
    sample_loss(std::vector<double>{0.0}, Label::regression(1.0), LossKind::binary_cross_entropy);
    EXPECT_GE(ce_clamp_count().load(), 1u);
}

TEST(Loss, CategoricalCrossEntropy) {
    const std::vector<double> yhat{0.2, 0.5, 0.3};
    EXPECT_NEAR(sample_loss(yhat, Label::of_class(1), LossKind::categorical_cross_entropy), -std::log(0.5),
                1e-12);
    EXPECT_THROW(sample_loss(yhat, Label::of_class(3), LossKind::categorical_cross_entropy), value_error);
}

TEST(LossGrad, Values) {
    EXPECT_EQ(loss_grad(std::vector<double>{2.0}, Label::regression(2.0), LossKind::mse)[0], 0.0);
    EXPECT_DOUBLE_EQ(loss_grad(std::vector<double>{0.5}, Label::regression(0.0), LossKind::mse)[0], 0.5);
    // chained with the sigmoid derivative 0.25 this gives the 0.125 factor
    EXPECT_DOUBLE_EQ(0.5 * 0.25, 0.125);

    const std::vector<double> g =
        loss_grad(std::vector<double>{0.25, 0.5, 0.25}, Label::of_class(1), LossKind::categorical_cross_entropy);
    EXPECT_DOUBLE_EQ(g[0], 0.25);
    EXPECT_DOUBLE_EQ(g[1], -0.5);
    EXPECT_DOUBLE_EQ(g[2], 0.25);
}

TEST(LossGrad, MatchesFiniteDifferencesOfLoss) {
    SplitMix64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const double y = rng.uniform(0.1, 0.9);
        const double p = rng.uniform(0.1, 0.9);
        for (const LossKind kind : {LossKind::mse, LossKind::binary_cross_entropy}) {
            const Label target = Label::regression(y);
            const double analytic = loss_grad(std::vector<double>{p}, target, kind)[0];
            const double numeric = central_difference(
                [&](double x) { return sample_loss(std::vector<double>{x}, target, kind); }, p, 1e-6);
            EXPECT_LE(rel_err(analytic, numeric, 1e-10), 1e-8);
        }
    }
}

// ---------------------------------------------------------------------------
// Finite-difference oracle
// ---------------------------------------------------------------------------

TEST(CentralDifference, QuadraticToy) {
    const double d = central_difference([](double x) { return x * x; }, 3.0, 1e-5);
    EXPECT_NEAR(d, 6.0, 1e-8);
    EXPECT_THROW(central_difference([](double x) { return x; }, 0.0, 0.0), value_error);
}

TEST(FiniteDifferenceGrad, RejectsZeroStep) {
    const NetworkSpec spec = parse_spec("input:1:3:1; flatten; dense:1:linear");
    const std::vector<double> theta = init_params(spec, 0);
    const LabeledSample sample{make_grid(make_shape({3}), {1, 2, 3}), Label::regression(0.5)};
    EXPECT_THROW(finite_difference_grad(spec, theta, sample, LossKind::mse, 0.0), value_error);
}

// ---------------------------------------------------------------------------
// Backprop
// ---------------------------------------------------------------------------

TEST(Backprop, ZeroLossGradientGivesZeroGrad) {
    const NetworkSpec spec = parse_spec("input:1:3:1; flatten; dense:1:linear");
    std::vector<double> theta = {1.0, 1.0, 1.0, 0.0};  // w = ones, b = 0
    const LabeledSample sample{make_grid(make_shape({3}), {1, 2, 3}), Label::regression(6.0)};
    const BackpropResult r = backprop(spec, theta, sample, LossKind::mse);
    EXPECT_DOUBLE_EQ(r.loss, 0.0);
    for (double g : r.grad) EXPECT_EQ(g, 0.0);
    for (double g : r.grad_input.values()) EXPECT_EQ(g, 0.0);
}

// The single-unit sigmoid network reproduces dw = dyhat * v and db = dyhat.
TEST(Backprop, SigmoidUnitClosedForm) {
    const NetworkSpec spec = parse_spec("input:1:2:1; flatten; dense:1:sigmoid");
    const std::vector<double> theta = {0.0, 0.0, 0.0};  // w = 0, b = 0 -> yhat = 0.5
    const LabeledSample sample{make_grid(make_shape({2}), {2, 4}), Label::regression(0.0)};
    const BackpropResult r = backprop(spec, theta, sample, LossKind::mse);
    EXPECT_DOUBLE_EQ(r.yhat[0], 0.5);
    // dyhat = (0.5 - 0) * 0.5 * 0.5 = 0.125
    EXPECT_DOUBLE_EQ(r.grad[0], 0.25);  // dw[0] = 0.125 * 2
    EXPECT_DOUBLE_EQ(r.grad[1], 0.5);   // dw[1] = 0.125 * 4
    EXPECT_DOUBLE_EQ(r.grad[2], 0.125); // db
    // dv = dyhat * w = 0
    for (double g : r.grad_input.values()) EXPECT_EQ(g, 0.0);
}

// Gradient soundness, the central property: backprop matches central finite
// differences over randomized specs spanning ranks, activations, strides,
// pooling kinds, and losses.
TEST(Backprop, GradientSoundnessRandomized) {
    SplitMix64 rng(1234);
    int done = 0;
    const LossKind losses[3] = {LossKind::mse, LossKind::binary_cross_entropy,
                                LossKind::categorical_cross_entropy};
    while (done < 24) {
        const LossKind loss = losses[done % 3];
        const NetworkSpec spec = random_small_spec(rng, loss);
        const std::vector<double> theta = random_params(spec, rng);
        const LabeledSample sample = random_sample(spec, loss, rng);

        const GradCheckResult check = gradient_check(spec, theta, sample, loss);
        EXPECT_LE(check.max_rel_err, 1e-6) << "spec: " << format_spec(spec) << " loss: " << to_string(loss);
        ++done;
    }
}

TEST(Backprop, PerSampleAdditivity) {
    SplitMix64 rng(77);
    const NetworkSpec spec =
        parse_spec("input:1:8:2; conv:2:3:0:1:tanh; pool:avg:2; flatten; dense:1:linear");
    const std::vector<double> theta = init_params(spec, 3);

    std::vector<LabeledSample> samples;
    for (int k = 0; k < 4; ++k) samples.push_back(random_sample(spec, LossKind::mse, rng));

    std::vector<double> summed(theta.size(), 0.0);
    for (const LabeledSample& s : samples) {
        const BackpropResult r = backprop(spec, theta, s, LossKind::mse, false);
        for (std::size_t k = 0; k < summed.size(); ++k) summed[k] += r.grad[k];
    }
    // gradient of the summed loss = sum of per-sample gradients (additivity
    // of differentiation; checked to tight tolerance)
    std::vector<double> work(theta);
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double hk = 1e-6 * std::max(1.0, std::abs(theta[k]));
        work[k] = theta[k] + hk;
        double up = 0.0;
        for (const LabeledSample& s : samples) up += sample_loss(forward(spec, work, s.input), s.target, LossKind::mse);
        work[k] = theta[k] - hk;
        double down = 0.0;
        for (const LabeledSample& s : samples)
            down += sample_loss(forward(spec, work, s.input), s.target, LossKind::mse);
        work[k] = theta[k];
        EXPECT_LE(rel_err(summed[k], (up - down) / (2 * hk), 1e-7), 1e-5);
    }
}

TEST(Backprop, SoftmaxHeadRequiresCce) {
    const NetworkSpec spec = parse_spec("input:1:4:1; flatten; dense:3:softmax");
    const std::vector<double> theta = init_params(spec, 1);
    const LabeledSample sample{make_grid(make_shape({4}), {1, 0, -1, 2}), Label::of_class(1)};
    EXPECT_NO_THROW(backprop(spec, theta, sample, LossKind::categorical_cross_entropy));
    const LabeledSample bad{make_grid(make_shape({4}), {1, 0, -1, 2}), Label::regression({1, 0, 0})};
    EXPECT_THROW(backprop(spec, theta, bad, LossKind::mse), value_error);
}

TEST(Backprop, NanInputAborts) {
    const NetworkSpec spec = parse_spec("input:1:2:1; flatten; dense:1:linear");
    std::vector<double> theta = {1.0, 1.0, std::numeric_limits<double>::quiet_NaN()};
    const LabeledSample sample{make_grid(make_shape({2}), {1, 2}), Label::regression(0.0)};
    EXPECT_THROW(backprop(spec, theta, sample, LossKind::mse), numeric_error);
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

TEST(Optimizers, ZeroLearningRateLeavesThetaUnchanged) {
    SplitMix64 rng(5);
    const NetworkSpec spec = parse_spec("input:1:6:1; conv:2:3:0:1:tanh; flatten; dense:1:linear");
    const std::vector<double> theta = init_params(spec, 9);
    std::vector<LabeledSample> samples{random_sample(spec, LossKind::mse, rng)};
    const std::vector<double> after = gd_epoch(spec, theta, samples, LossKind::mse, 0.0);
    EXPECT_EQ(after, theta);
}

TEST(Optimizers, GdSolvesQuadraticInOneStep) {
    // Network input 0 makes yhat = b, so the loss is 1/2 (b - 2)^2: a single
    // GD step with lr 1 lands b exactly on 2.
    const NetworkSpec spec = parse_spec("input:1:1:1; flatten; dense:1:linear");
    std::vector<double> theta = {0.0, 0.0};
    std::vector<LabeledSample> samples{{make_grid(make_shape({1}), {0.0}), Label::regression(2.0)}};
    theta = gd_epoch(spec, theta, samples, LossKind::mse, 1.0);
    EXPECT_DOUBLE_EQ(theta[1], 2.0);
    EXPECT_DOUBLE_EQ(theta[0], 0.0);
}

TEST(Optimizers, FullBatchMinibatchEqualsGdBitwise) {
    SplitMix64 rng(6);
    const NetworkSpec spec =
        parse_spec("input:1:8:2; conv:2:3:0:1:sigmoid; pool:max:2; flatten; dense:1:linear");
    const std::vector<double> theta = init_params(spec, 21);
    std::vector<LabeledSample> samples;
    for (int k = 0; k < 6; ++k) samples.push_back(random_sample(spec, LossKind::mse, rng));

    const std::vector<double> gd = gd_epoch(spec, theta, samples, LossKind::mse, 0.05);
    SplitMix64 shuffle(99);
    const std::vector<double> mb =
        minibatch_epoch(spec, theta, samples, LossKind::mse, 0.05, static_cast<int>(samples.size()), shuffle);
    EXPECT_EQ(gd, mb);
}

TEST(Optimizers, WorkerCountDoesNotChangeBits) {
    SplitMix64 rng(7);
    const NetworkSpec spec =
        parse_spec("input:2:8,8:1; conv:3:3,3:0,0:1,1:relu; pool:max:2,2; flatten; dense:1:sigmoid");
    const std::vector<double> theta = init_params(spec, 31);
    std::vector<LabeledSample> samples;
    for (int k = 0; k < 9; ++k) samples.push_back(random_sample(spec, LossKind::binary_cross_entropy, rng));

    const std::vector<double> one = gd_epoch(spec, theta, samples, LossKind::binary_cross_entropy, 0.1, 1);
    const std::vector<double> four = gd_epoch(spec, theta, samples, LossKind::binary_cross_entropy, 0.1, 4);
    EXPECT_EQ(one, four);

    SplitMix64 s1(5), s2(5);
    const std::vector<double> mb1 =
        minibatch_epoch(spec, theta, samples, LossKind::binary_cross_entropy, 0.1, 4, s1, 1);
    const std::vector<double> mb4 =
        minibatch_epoch(spec, theta, samples, LossKind::binary_cross_entropy, 0.1, 4, s2, 4);
    EXPECT_EQ(mb1, mb4);
}

// The GD step is exactly the ascending-index ordered sum of per-sample
// gradients scaled by lr / n: the documented reduction law, bit for bit.
TEST(Optimizers, GdStepEqualsOrderedReduction) {
    SplitMix64 rng(13);
    const NetworkSpec spec =
        parse_spec("input:1:7:2; conv:2:3:0:1:tanh; pool:max:2; flatten; dense:1:linear");
    const std::vector<double> theta = init_params(spec, 4);
    std::vector<LabeledSample> samples;
    for (int k = 0; k < 5; ++k) samples.push_back(random_sample(spec, LossKind::mse, rng));

    const double lr = 0.07;
    const std::vector<double> stepped = gd_epoch(spec, theta, samples, LossKind::mse, lr);

    std::vector<double> sum(theta.size(), 0.0);
    for (const LabeledSample& s : samples) {
        const BackpropResult r = backprop(spec, theta, s, LossKind::mse, false);
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += r.grad[k];
    }
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double expected = theta[k] - lr * (1.0 / static_cast<double>(samples.size())) * sum[k];
        EXPECT_EQ(stepped[k], expected);
    }
}

TEST(Optimizers, SgdDeterministicGivenSeed) {
    SplitMix64 rng(8);
    const NetworkSpec spec = parse_spec("input:1:6:1; flatten; dense:2:tanh; dense:1:linear");
    const std::vector<double> theta = init_params(spec, 2);
    std::vector<LabeledSample> samples;
    for (int k = 0; k < 5; ++k) samples.push_back(random_sample(spec, LossKind::mse, rng));

    SplitMix64 a(17), b(17), c(18);
    const std::vector<double> ta = sgd_epoch(spec, theta, samples, LossKind::mse, 0.05, a);
    const std::vector<double> tb = sgd_epoch(spec, theta, samples, LossKind::mse, 0.05, b);
    const std::vector<double> tc = sgd_epoch(spec, theta, samples, LossKind::mse, 0.05, c);
    EXPECT_EQ(ta, tb);
    EXPECT_NE(ta, tc);
}

// One GD step with a small enough learning rate strictly decreases the total
// loss on smooth instances; the step is found by halving from 0.1.
TEST(Optimizers, LossDecreaseWithHalvingSearch) {
    SplitMix64 rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        const NetworkSpec spec =
            parse_spec("input:1:8:2; conv:2:3:0:1:tanh; pool:avg:2; flatten; dense:2:sigmoid; dense:1:linear");
        const std::vector<double> theta = init_params(spec, rng.next());
        std::vector<LabeledSample> samples;
        for (int k = 0; k < 4; ++k) samples.push_back(random_sample(spec, LossKind::mse, rng));

        const auto total_loss = [&](const std::vector<double>& t) {
            double acc = 0.0;
            for (const LabeledSample& s : samples)
                acc += sample_loss(forward(spec, t, s.input), s.target, LossKind::mse);
            return acc;
        };
        const double before = total_loss(theta);
        bool decreased = false;
        for (double lr = 0.1; lr > 1e-6; lr /= 2) {
            const std::vector<double> after = gd_epoch(spec, theta, samples, LossKind::mse, lr);
            if (total_loss(after) < before) {
                decreased = true;
                break;
            }
        }
        EXPECT_TRUE(decreased);
    }
}

TEST(Optimizers, EmptyDatasetFails) {
    const NetworkSpec spec = parse_spec("input:1:4:1; flatten; dense:1:linear");
    const std::vector<double> theta = init_params(spec, 0);
    EXPECT_THROW(gd_epoch(spec, theta, {}, LossKind::mse, 0.1), value_error);
}

// ---------------------------------------------------------------------------
// Evaluate
// ---------------------------------------------------------------------------

TEST(Evaluate, PerfectPredictorRegression) {
    const NetworkSpec spec = parse_spec("input:1:2:1; flatten; dense:1:linear");
    const std::vector<double> theta = {1.0, 1.0, 0.0};  // sum of inputs
    Dataset ds;
    ds.task = Task::regression;
    ds.arity = 1;
    ds.shape = make_shape({2});
    ds.samples.push_back({make_grid(ds.shape, {1, 2}), Label::regression(3.0)});
    ds.samples.push_back({make_grid(ds.shape, {2, 5}), Label::regression(7.0)});
    const EvalResult r = evaluate(spec, theta, ds);
    EXPECT_DOUBLE_EQ(r.rmse, 0.0);
    EXPECT_EQ(r.predictions.size(), 2u);
}

TEST(Evaluate, RmseHandFormula) {
    const NetworkSpec spec = parse_spec("input:1:1:1; flatten; dense:1:linear");
    const std::vector<double> theta = {0.0, 0.0};  // constant 0 predictor
    Dataset ds;
    ds.task = Task::regression;
    ds.arity = 1;
    ds.shape = make_shape({1});
    for (double y : {1.0, 2.0, 3.0}) ds.samples.push_back({make_grid(ds.shape, {0.0}), Label::regression(y)});
    const EvalResult r = evaluate(spec, theta, ds);
    EXPECT_NEAR(r.rmse, std::sqrt((1.0 + 4.0 + 9.0) / 3.0), 1e-12);
}

TEST(Evaluate, ConfusionMatrixRowsArePredicted) {
    // Constant predictor: always class 1 on a balanced two-class set.
    const NetworkSpec spec = parse_spec("input:1:1:1; flatten; dense:2:softmax");
    const std::vector<double> theta = {0.0, 0.0, 0.0, 1.0};  // bias favors class 1
    Dataset ds;
    ds.task = Task::classification;
    ds.arity = 2;
    ds.shape = make_shape({1});
    ds.samples.push_back({make_grid(ds.shape, {0.0}), Label::of_class(0)});
    ds.samples.push_back({make_grid(ds.shape, {0.0}), Label::of_class(1)});
    const EvalResult r = evaluate(spec, theta, ds);
    EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
    // row 1 (predicted class 1) holds both samples, columns split by truth
    EXPECT_EQ(r.confusion[1][0], 1u);
    EXPECT_EQ(r.confusion[1][1], 1u);
    EXPECT_EQ(r.confusion[0][0], 0u);
    EXPECT_EQ(r.confusion[0][1], 0u);
}

// ---------------------------------------------------------------------------
// Train loop
// ---------------------------------------------------------------------------

TEST(Train, EpochHookRunsAndStops) {
    SplitMix64 rng(10);
    const NetworkSpec spec = parse_spec("input:1:4:1; flatten; dense:1:linear");
    Dataset ds;
    ds.task = Task::regression;
    ds.arity = 1;
    ds.shape = make_shape({4});
    for (int k = 0; k < 8; ++k) {
        const Grid g = random_grid(ds.shape, rng);
        double sum = 0.0;
        for (double v : g.values()) sum += v;
        ds.samples.push_back({g, Label::regression(sum)});
    }

    TrainOptions options;
    options.opt.kind = OptimizerConfig::Kind::minibatch;
    options.opt.learning_rate = 0.05;
    options.opt.batch_size = 4;
    options.opt.epochs = 50;
    options.opt.seed = 3;
    options.loss = LossKind::mse;

    int epochs_seen = 0;
    double first = 0.0, last = 0.0;
    train(spec, init_params(spec, 1), ds, options, [&](const EpochStats& stats) {
        if (stats.epoch == 1) first = stats.mean_loss;
        last = stats.mean_loss;
        epochs_seen = stats.epoch;
        return stats.epoch < 10;  // early stop
    });
    EXPECT_EQ(epochs_seen, 10);
    EXPECT_LT(last, first);
}

TEST(Train, DeterministicTrajectory) {
    SplitMix64 rng(11);
    const NetworkSpec spec = parse_spec("input:1:6:1; conv:2:3:0:1:tanh; flatten; dense:1:linear");
    Dataset ds;
    ds.task = Task::regression;
    ds.arity = 1;
    ds.shape = make_shape({6});
    for (int k = 0; k < 6; ++k) {
        const Grid g = random_grid(ds.shape, rng);
        ds.samples.push_back({g, Label::regression(g.values()[0])});
    }
    TrainOptions options;
    options.opt.kind = OptimizerConfig::Kind::sgd;
    options.opt.learning_rate = 0.02;
    options.opt.epochs = 5;
    options.opt.seed = 7;
    options.loss = LossKind::mse;

    const std::vector<double> a = train(spec, init_params(spec, 2), ds, options);
    const std::vector<double> b = train(spec, init_params(spec, 2), ds, options);
    EXPECT_EQ(a, b);
}

// ---------------------------------------------------------------------------
// SplitMix64 reference stream (reproducibility contract)
// ---------------------------------------------------------------------------

TEST(SplitMix, ReferenceVectors) {
    SplitMix64 rng(0);
    EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFull);
    EXPECT_EQ(rng.next(), 0x6E789E6AA1B965F4ull);
    EXPECT_EQ(rng.next(), 0x06C45D188009454Full);
}

TEST(SplitMix, FisherYatesMatchesHandSimulation) {
    // Re-simulate the documented shuffle: descending i, j = next() mod (i+1).
    SplitMix64 lib_rng(42);
    std::vector<int> items{0, 1, 2, 3, 4, 5, 6, 7};
    fisher_yates(items, lib_rng);

    SplitMix64 sim_rng(42);
    std::vector<int> expected{0, 1, 2, 3, 4, 5, 6, 7};
    for (std::size_t i = expected.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(sim_rng.next() % i);
        std::swap(expected[i - 1], expected[j]);
    }
    EXPECT_EQ(items, expected);
}
