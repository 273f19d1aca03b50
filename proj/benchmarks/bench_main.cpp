#include "hqcnn/encoding.hpp"
#include "hqcnn/model.hpp"
#include "hqcnn/nn.hpp"
#include "hqcnn/qnn.hpp"
#include "hqcnn/quantum.hpp"

#include <benchmark/benchmark.h>

#include <numeric>

using namespace hqcnn;

namespace {

std::vector<double> uniform(Rng& rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

qnn::QnnLayer make_layer(int n) {
    const auto spec = encoding::FeatureMapSpec::parse("family=zz reps=2 entanglement=full");
    return qnn::QnnLayer(encoding::build_feature_map(spec, n), encoding::build_two_local(n, 2));
}

void BM_CircuitRun(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto layer = make_layer(n);
    Rng rng(1);
    const auto x = uniform(rng, layer.input_size(), 0, 1);
    const auto w = uniform(rng, layer.weight_count(), -3, 3);
    for (auto _ : state) benchmark::DoNotOptimize(quantum::run(layer.circuit(), x, w));
}
BENCHMARK(BM_CircuitRun)->DenseRange(2, 10, 2);

void BM_QnnGrad(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto layer = make_layer(n);
    Rng rng(2);
    const auto x = uniform(rng, layer.input_size(), 0, 1);
    const auto w = uniform(rng, layer.weight_count(), -3, 3);
    for (auto _ : state) benchmark::DoNotOptimize(qnn::qnn_grad(layer, x, w));
}
BENCHMARK(BM_QnnGrad)->DenseRange(2, 8, 2);

void BM_ConvForwardBackward(benchmark::State& state) {
    nn::Conv2d conv(1, 16);
    Rng rng(3);
    conv.init(rng);
    nn::Tensor input({static_cast<std::size_t>(state.range(0)), 1, 8, 8});
    for (auto& v : input.values) v = rng.uniform();
    for (auto _ : state) {
        const auto out = conv.forward(input);
        benchmark::DoNotOptimize(conv.backward(nn::Tensor(out.shape, 1.0)));
    }
}
BENCHMARK(BM_ConvForwardBackward)->Arg(1)->Arg(64);

void BM_TrainStep(benchmark::State& state) {
    model::HqcnnModel m(model::ModelConfig{});
    m.init(4);
    const auto ds = data::make_dataset(30, 4);
    std::vector<std::size_t> idx(static_cast<std::size_t>(state.range(0)));
    std::iota(idx.begin(), idx.end(), 0);
    const auto batch = model::make_batch(ds, idx);
    const auto classes = model::batch_classes(ds, idx);
    nn::SgdNesterov opt;
    Rng rng(5);
    for (auto _ : state) {
        m.zero_grad();
        const auto logits = m.forward(batch, true, rng);
        m.backward(nn::softmax_cross_entropy(logits, classes).d_logits);
        opt.step(m.parameters());
    }
}
BENCHMARK(BM_TrainStep)->Arg(8)->Arg(64);

} // namespace

BENCHMARK_MAIN();
