#include "hqcnn/error.hpp"
#include "hqcnn/model.hpp"

#include "gradcheck.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace hqcnn;
using namespace hqcnn::model;

namespace {

ModelConfig small_config() {
    ModelConfig c;
    c.n_qubits = 3;
    c.feature_map = encoding::FeatureMapSpec::parse("family=pauli strings=X,Y,Z reps=1");
    c.ansatz_reps = 2;
    return c;
}

nn::Tensor random_batch(Rng& rng, std::size_t b) {
    nn::Tensor t({b, 1, 8, 8});
    for (auto& v : t.values) v = rng.uniform();
    return t;
}

} // namespace

TEST(Model, ZeroHeadGivesEqualLogits) {
    HqcnnModel m(small_config());
    m.init(1);
    std::fill(m.head().weight.values.begin(), m.head().weight.values.end(), 0.0);
    std::fill(m.head().bias.values.begin(), m.head().bias.values.end(), 0.0);
    const auto logits = m.forward(nn::Tensor({1, 1, 8, 8}, 0.0));
    ASSERT_EQ(logits.shape, (nn::Shape{1, 3}));
    EXPECT_EQ(logits[0], logits[1]);
    EXPECT_EQ(logits[1], logits[2]);
}

TEST(Model, BatchIndependence) {
    HqcnnModel m(small_config());
    m.init(2);
    Rng rng(3);
    const auto batch = random_batch(rng, 2);
    const auto both = m.forward(batch);
    for (std::size_t b = 0; b < 2; ++b) {
        nn::Tensor one({1, 1, 8, 8});
        std::copy_n(batch.values.begin() + static_cast<std::ptrdiff_t>(b * 64), 64, one.values.begin());
        const auto single = m.forward(one);
        for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(single[k], both[b * 3 + k]);
    }
}

TEST(Model, FiniteLogitsAndBoundedQuantumStage) {
    HqcnnModel m(small_config());
    m.init(4);
    Rng rng(5);
    StageCapture cap;
    const auto logits = m.forward(random_batch(rng, 6), &cap);
    for (double v : logits.values) EXPECT_TRUE(std::isfinite(v));
    EXPECT_EQ(cap.classical.shape, (nn::Shape{6, 3}));
    EXPECT_EQ(cap.feature_map.shape, (nn::Shape{6, 8}));
    EXPECT_EQ(cap.qnn.shape, (nn::Shape{6, 3}));
    for (double v : cap.qnn.values) EXPECT_LE(std::abs(v), 1.0);
}

TEST(Model, StageCaptureConsistency) {
    HqcnnModel m(small_config());
    m.init(6);
    Rng rng(7);
    StageCapture cap;
    m.forward(random_batch(rng, 4), &cap);
    const auto& w = m.quantum_weights().values;
    for (std::size_t b = 0; b < 4; ++b) {
        const std::vector<double> x(cap.classical.values.begin() + static_cast<std::ptrdiff_t>(b * 3),
                                    cap.classical.values.begin() + static_cast<std::ptrdiff_t>(b * 3 + 3));
        const auto q = qnn::qnn_forward(m.quantum_layer(), x, w);
        const auto p = qnn::feature_map_probabilities(m.quantum_layer(), x);
        for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(cap.qnn[b * 3 + i], q[i]);
        for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(cap.feature_map[b * 8 + i], p[i]);
    }
}

TEST(Model, RejectsUnnormalisedInput) {
    HqcnnModel m(small_config());
    m.init(0);
    nn::Tensor t({1, 1, 8, 8}, 0.5);
    t[10] = 1.0 + 1e-6;
    EXPECT_THROW(m.forward(t), ValidationError);
    t[10] = 1.0 + 1e-12;
    EXPECT_NO_THROW(m.forward(t));
    t[10] = -0.1;
    EXPECT_THROW(m.forward(t), ValidationError);
    EXPECT_THROW(m.forward(nn::Tensor({1, 1, 4, 4}, 0.5)), ShapeError);
}

TEST(Model, InitIsSeededAndBounded) {
    HqcnnModel a(small_config()), b(small_config()), c(small_config());
    a.init(9);
    b.init(9);
    c.init(10);
    EXPECT_EQ(a.state(), b.state());
    EXPECT_NE(a.state(), c.state());
    for (double v : a.quantum_weights().values) EXPECT_LE(std::abs(v), hqcnn::testing::kPi);
    const auto names = a.parameter_names();
    ASSERT_EQ(names.size(), a.parameters().size());
    EXPECT_EQ(names.front(), "conv1.weight");
    EXPECT_EQ(names.back(), "head.bias");
}

TEST(Model, StateRoundTrip) {
    HqcnnModel a(small_config()), b(small_config());
    a.init(1);
    b.init(2);
    b.load_state(a.state());
    EXPECT_EQ(a.state(), b.state());
    auto broken = a.state();
    broken.erase("head.bias");
    EXPECT_THROW(b.load_state(broken), FormatError);
}

TEST(Model, EndToEndGradient) {
    HqcnnModel m(small_config());
    m.init(11);
    Rng rng(12);
    const auto batch = random_batch(rng, 4);
    const std::vector<int> classes{0, 1, 2, 1};
    for (const auto& g : hqcnn::testing::model_gradient_errors(m, batch, classes, 1e-5, 17)) {
        EXPECT_LT(g.relative, 1e-3) << g.name << " (" << g.checked << " entries)";
    }
}

TEST(Model, BackwardAccumulatesUntilZeroed) {
    HqcnnModel m(small_config());
    m.init(13);
    Rng rng(14);
    const auto batch = random_batch(rng, 2);
    const std::vector<int> classes{0, 2};
    m.zero_grad();
    const auto d = nn::softmax_cross_entropy(m.forward(batch), classes).d_logits;
    m.backward(d);
    const auto once = m.head().weight.grad;
    m.forward(batch);
    m.backward(d);
    for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(m.head().weight.grad[i], 2 * once[i], 1e-15);
    m.zero_grad();
    for (double v : m.head().weight.grad) EXPECT_EQ(v, 0.0);
}

TEST(Evaluate, Accuracy) {
    const std::vector<int> classes{1, 0, 2};
    nn::Tensor perfect({3, 3}, 0.0);
    perfect[0 * 3 + 1] = perfect[1 * 3 + 0] = perfect[2 * 3 + 2] = 5.0;
    EXPECT_EQ(accuracy(perfect, classes), 1.0);
    nn::Tensor always0({3, 3}, 0.0);
    for (std::size_t b = 0; b < 3; ++b) always0[b * 3] = 1.0;
    EXPECT_NEAR(accuracy(always0, classes), 1.0 / 3.0, 1e-15);
    EXPECT_THROW(accuracy(nn::Tensor({0, 3}), {}), ValidationError);
}

TEST(Evaluate, RandomLogitsNearChance) {
    Rng rng(15);
    const std::size_t n = 10000;
    nn::Tensor logits({n, 3});
    for (auto& v : logits.values) v = rng.normal();
    std::vector<int> classes(n);
    for (std::size_t i = 0; i < n; ++i) classes[i] = static_cast<int>(i % 3);
    rng.shuffle(classes.begin(), classes.end());
    EXPECT_NEAR(accuracy(logits, classes), 1.0 / 3.0, 0.02);
}

TEST(Train, ZeroEpochsLeavesModelUnchanged) {
    const auto ds = data::make_dataset(10, 1);
    HqcnnModel m(small_config());
    m.init(1);
    const auto before = m.state();
    TrainOptions opt;
    opt.epochs = 0;
    opt.batch_size = 8;
    const auto r = train(m, ds, opt);
    EXPECT_TRUE(r.log.epochs.empty());
    EXPECT_EQ(r.optimizer_steps, 0u);
    EXPECT_EQ(m.state(), before);
}

TEST(Train, StepCount) {
    auto ds = data::make_dataset(30, 2);
    ds.train.resize(64);
    HqcnnModel m(small_config());
    m.init(2);
    TrainOptions opt;
    opt.epochs = 1;
    EXPECT_EQ(train(m, ds, opt).optimizer_steps, 1u);

    auto ds2 = data::make_dataset(40, 2);  // 96 training samples
    opt.epochs = 3;
    EXPECT_EQ(train(m, ds2, opt).optimizer_steps, 6u);
}

TEST(Train, Errors) {
    const auto ds = data::make_dataset(10, 3);
    HqcnnModel m(small_config());
    m.init(3);
    TrainOptions opt;
    opt.epochs = 1;
    opt.batch_size = static_cast<int>(ds.train.size()) + 1;
    EXPECT_THROW(train(m, ds, opt), ConfigError);
    opt.batch_size = 0;
    EXPECT_THROW(train(m, ds, opt), ConfigError);
    data::Dataset empty;
    opt.batch_size = 1;
    EXPECT_THROW(train(m, empty, opt), ConfigError);
}

TEST(Train, DeterministicForFixedSeed) {
    const auto ds = data::make_dataset(10, 4);
    TrainOptions opt;
    opt.epochs = 3;
    opt.batch_size = 8;
    opt.seed = 4;
    HqcnnModel a(small_config()), b(small_config());
    a.init(4);
    b.init(4);
    const auto ra = train(a, ds, opt);
    const auto rb = train(b, ds, opt);
    EXPECT_EQ(ra.log, rb.log);
    EXPECT_EQ(run_log_csv(ra.log), run_log_csv(rb.log));
    EXPECT_EQ(a.state(), b.state());
    ASSERT_EQ(ra.log.epochs.size(), 3u);
    for (const auto& e : ra.log.epochs) {
        EXPECT_GE(e.train_accuracy, 0.0);
        EXPECT_LE(e.val_accuracy, 1.0);
    }
}

TEST(RunLogCsv, FormatAndParse) {
    RunLog log;
    log.epochs.push_back({1, 0.5, 1.0 / 3.0, 1.0986123, 1.1});
    log.epochs.push_back({2, 0.75, 0.5, 0.9, 1.0});
    const auto csv = run_log_csv(log);
    EXPECT_EQ(csv,
              "epoch,train_acc,val_acc,train_loss,val_loss\n"
              "1,0.500000,0.333333,1.098612,1.100000\n"
              "2,0.750000,0.500000,0.900000,1.000000\n");
    const auto back = parse_run_log_csv(csv);
    ASSERT_EQ(back.epochs.size(), 2u);
    EXPECT_EQ(back.epochs[1].train_accuracy, 0.75);
    EXPECT_NEAR(back.epochs[0].val_accuracy, 0.333333, 1e-12);
    EXPECT_THROW(parse_run_log_csv("epoch,nope\n"), FormatError);
    EXPECT_THROW(parse_run_log_csv("epoch,train_acc,val_acc,train_loss,val_loss\n1,0.5,x,1,1\n"), FormatError);
}
