#include "hqcnn/model.hpp"

#include "hqcnn/error.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace hqcnn::model {

namespace {

qnn::QnnLayer make_quantum_layer(const ModelConfig& c) {
    return qnn::QnnLayer(encoding::build_feature_map(c.feature_map, c.n_qubits),
                         encoding::build_two_local(c.n_qubits, c.ansatz_reps), c.observables);
}

} // namespace

HqcnnModel::HqcnnModel(ModelConfig config)
    : config_(std::move(config)),
      conv1_(1, 16),
      conv2_(16, 32),
      conv3_(32, 64),
      drop1_(config_.dropout),
      drop2_(config_.dropout),
      drop3_(config_.dropout),
      reduce_(64, static_cast<std::size_t>(config_.n_qubits)),
      qnn_(make_quantum_layer(config_)),
      qweights_(nn::Tensor::parameter({qnn_.weight_count()})),
      head_(qnn_.output_size(), static_cast<std::size_t>(config_.num_classes)) {
    if (config_.num_classes < 2) throw ValidationError("need at least two classes");
}

void HqcnnModel::init(std::uint64_t seed) {
    const Rng root(seed);
    Rng conv_rng = root.split(11);
    Rng linear_rng = root.split(12);
    Rng quantum_rng = root.split(13);
    conv1_.init(conv_rng);
    conv2_.init(conv_rng);
    conv3_.init(conv_rng);
    reduce_.init(linear_rng);
    head_.init(linear_rng);
    for (auto& w : qweights_.values) w = quantum_rng.uniform(-std::numbers::pi, std::numbers::pi);
    zero_grad();
}

nn::Tensor HqcnnModel::forward(const nn::Tensor& batch, bool training, Rng& dropout_rng,
                               StageCapture* capture) {
    if (batch.rank() != 4 || batch.dim(1) != 1 || batch.dim(2) != data::kGridSide ||
        batch.dim(3) != data::kGridSide) {
        throw ShapeError("model input must be [B,1,8,8], got " + nn::shape_string(batch.shape));
    }
    for (double v : batch.values) {
        if (!(v >= -1e-9 && v <= 1.0 + 1e-9)) {
            throw ValidationError("model input must be normalised to [0, 1]");
        }
    }

    nn::Tensor x = conv1_.forward(batch);
    x = drop1_.forward(pool1_.forward(relu1_.forward(x)), training, dropout_rng);
    x = conv2_.forward(x);
    x = drop2_.forward(pool2_.forward(relu2_.forward(x)), training, dropout_rng);
    x = conv3_.forward(x);
    x = drop3_.forward(pool3_.forward(relu3_.forward(x)), training, dropout_rng);
    reduced_ = reduce_.forward(nn::flatten(x));

    const std::size_t b = batch.dim(0);
    const std::size_t nq = static_cast<std::size_t>(config_.n_qubits);
    const std::size_t n_out = qnn_.output_size();
    nn::Tensor q({b, n_out});
    for (std::size_t i = 0; i < b; ++i) {
        const std::span<const double> features(&reduced_.values[i * nq], nq);
        const auto e = qnn::qnn_forward(qnn_, features, qweights_.values);
        std::copy(e.begin(), e.end(), q.values.begin() + static_cast<std::ptrdiff_t>(i * n_out));
    }

    if (capture) {
        capture->classical = reduced_;
        capture->classical.grad.clear();
        const std::size_t dim = std::size_t{1} << nq;
        capture->feature_map = nn::Tensor({b, dim});
        for (std::size_t i = 0; i < b; ++i) {
            const std::span<const double> features(&reduced_.values[i * nq], nq);
            const auto p = qnn::feature_map_probabilities(qnn_, features);
            std::copy(p.begin(), p.end(), capture->feature_map.values.begin() + static_cast<std::ptrdiff_t>(i * dim));
        }
        capture->qnn = q;
    }
    return head_.forward(q);
}

nn::Tensor HqcnnModel::forward(const nn::Tensor& batch, StageCapture* capture) {
    Rng unused(0);
    return forward(batch, false, unused, capture);
}

void HqcnnModel::backward(const nn::Tensor& d_logits) {
    const nn::Tensor d_q = head_.backward(d_logits);
    const std::size_t b = reduced_.dim(0);
    const std::size_t nq = static_cast<std::size_t>(config_.n_qubits);
    const std::size_t n_out = qnn_.output_size();
    if (!qweights_.has_grad()) qweights_.zero_grad();

    nn::Tensor d_reduced(reduced_.shape);
    for (std::size_t i = 0; i < b; ++i) {
        const std::span<const double> features(&reduced_.values[i * nq], nq);
        const auto g = qnn::qnn_grad(qnn_, features, qweights_.values);
        for (std::size_t o = 0; o < n_out; ++o) {
            const double up = d_q.values[i * n_out + o];
            if (up == 0.0) continue;
            for (std::size_t w = 0; w < qweights_.size(); ++w) qweights_.grad[w] += up * g.d_weights(o, w);
            for (std::size_t j = 0; j < nq; ++j) d_reduced.values[i * nq + j] += up * g.d_features(o, j);
        }
    }

    nn::Tensor d = reduce_.backward(d_reduced);
    d = d.reshaped({b, 64, 1, 1});
    d = conv3_.backward(relu3_.backward(pool3_.backward(drop3_.backward(d))));
    d = conv2_.backward(relu2_.backward(pool2_.backward(drop2_.backward(d))));
    conv1_.backward(relu1_.backward(pool1_.backward(drop1_.backward(d))));
}

void HqcnnModel::zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
}

std::vector<nn::Tensor*> HqcnnModel::parameters() {
    return {&conv1_.weight, &conv1_.bias, &conv2_.weight, &conv2_.bias, &conv3_.weight,
            &conv3_.bias,   &reduce_.weight, &reduce_.bias, &qweights_, &head_.weight,
            &head_.bias};
}

std::vector<std::string> HqcnnModel::parameter_names() const {
    return {"conv1.weight", "conv1.bias",  "conv2.weight",   "conv2.bias",  "conv3.weight", "conv3.bias",
            "reduce.weight", "reduce.bias", "quantum.weights", "head.weight", "head.bias"};
}

nn::NamedTensors HqcnnModel::state() const {
    auto* self = const_cast<HqcnnModel*>(this);
    const auto params = self->parameters();
    const auto names = parameter_names();
    nn::NamedTensors out;
    for (std::size_t i = 0; i < params.size(); ++i) {
        nn::Tensor t(params[i]->shape, params[i]->values);
        out.emplace(names[i], std::move(t));
    }
    return out;
}

void HqcnnModel::load_state(const nn::NamedTensors& state) {
    const auto params = parameters();
    const auto names = parameter_names();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto it = state.find(names[i]);
        if (it == state.end()) throw FormatError("checkpoint is missing tensor '" + names[i] + "'");
        if (it->second.shape != params[i]->shape) {
            throw ShapeError("checkpoint tensor '" + names[i] + "' has shape " +
                             nn::shape_string(it->second.shape) + ", model expects " +
                             nn::shape_string(params[i]->shape));
        }
        params[i]->values = it->second.values;
    }
}

nn::Tensor make_batch(const data::Dataset& ds, std::span<const std::size_t> indices) {
    nn::Tensor t({indices.size(), 1, data::kGridSide, data::kGridSide});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto& g = ds.samples.at(indices[i]).grid;
        std::copy(g.begin(), g.end(), t.values.begin() + static_cast<std::ptrdiff_t>(i * data::kGridCells));
    }
    return t;
}

std::vector<int> batch_classes(const data::Dataset& ds, std::span<const std::size_t> indices) {
    std::vector<int> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(data::label_to_class(ds.samples.at(i).label));
    return out;
}

std::vector<double> RunLog::train_accuracy() const {
    std::vector<double> out;
    for (const auto& e : epochs) out.push_back(e.train_accuracy);
    return out;
}

std::vector<double> RunLog::val_accuracy() const {
    std::vector<double> out;
    for (const auto& e : epochs) out.push_back(e.val_accuracy);
    return out;
}

std::string run_log_csv(const RunLog& log) {
    std::string out = "epoch,train_acc,val_acc,train_loss,val_loss\n";
    char buf[160];
    for (const auto& e : log.epochs) {
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f\n", e.epoch, e.train_accuracy,
                      e.val_accuracy, e.train_loss, e.val_loss);
        out += buf;
    }
    return out;
}

RunLog parse_run_log_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != "epoch,train_acc,val_acc,train_loss,val_loss") {
        throw FormatError("training log: bad header");
    }
    RunLog log;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        EpochRecord r;
        char extra = 0;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf,%lf%c", &r.epoch, &r.train_accuracy, &r.val_accuracy,
                        &r.train_loss, &r.val_loss, &extra) != 5) {
            throw FormatError("training log line " + std::to_string(lineno) + ": expected 5 fields");
        }
        log.epochs.push_back(r);
    }
    return log;
}

double accuracy(const nn::Tensor& logits, std::span<const int> classes) {
    if (logits.rank() != 2 || logits.dim(0) != classes.size()) throw ShapeError("accuracy: shape mismatch");
    if (classes.empty()) throw ValidationError("accuracy of an empty set is undefined");
    const std::size_t k = logits.dim(1);
    std::size_t correct = 0;
    for (std::size_t b = 0; b < classes.size(); ++b) {
        const auto* row = &logits.values[b * k];
        const auto pred = static_cast<int>(std::max_element(row, row + k) - row);
        if (pred == classes[b]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(classes.size());
}

Evaluation evaluate(HqcnnModel& model, const data::Dataset& ds, std::span<const std::size_t> indices,
                    std::span<const int> class_override) {
    if (indices.empty()) throw ValidationError("cannot evaluate on an empty sample set");
    const auto classes = class_override.empty() ? batch_classes(ds, indices)
                                                : std::vector<int>(class_override.begin(), class_override.end());
    const auto logits = model.forward(make_batch(ds, indices));
    return {accuracy(logits, classes), nn::softmax_cross_entropy(logits, classes).loss};
}

TrainResult train(HqcnnModel& model, const data::Dataset& ds, const TrainOptions& options) {
    if (ds.train.empty() || ds.validation.empty()) throw ConfigError("dataset has an empty train or validation split");
    if (options.epochs < 0) throw ConfigError("epochs must be >= 0");
    if (options.batch_size < 1 || static_cast<std::size_t>(options.batch_size) > ds.train.size()) {
        throw ConfigError("batch size " + std::to_string(options.batch_size) + " must be in [1, " +
                          std::to_string(ds.train.size()) + "] (training set size)");
    }

    const Rng root(options.seed);
    Rng order_rng = root.split(21);
    Rng dropout_rng = root.split(22);
    Rng label_rng = root.split(23);

    // Class for each training sample, optionally permuted for control runs.
    std::vector<int> train_classes = batch_classes(ds, ds.train);
    if (options.shuffle_labels) label_rng.shuffle(train_classes.begin(), train_classes.end());
    std::vector<int> class_of(ds.samples.size(), -1);
    for (std::size_t i = 0; i < ds.train.size(); ++i) class_of[ds.train[i]] = train_classes[i];

    nn::SgdNesterov opt(options.sgd);
    TrainResult result;
    result.log.seed = options.seed;

    std::vector<std::size_t> order = ds.train;
    const auto bs = static_cast<std::size_t>(options.batch_size);
    for (int epoch = 1; epoch <= options.epochs; ++epoch) {
        order_rng.shuffle(order.begin(), order.end());
        for (std::size_t start = 0; start < order.size(); start += bs) {
            const std::span<const std::size_t> idx(order.data() + start, std::min(bs, order.size() - start));
            std::vector<int> classes;
            classes.reserve(idx.size());
            for (auto i : idx) classes.push_back(class_of[i]);

            const auto logits = model.forward(make_batch(ds, idx), true, dropout_rng);
            const auto loss = nn::softmax_cross_entropy(logits, classes);
            model.zero_grad();
            model.backward(loss.d_logits);
            const auto params = model.parameters();
            opt.step(params);
            ++result.optimizer_steps;
        }
        const auto tr = evaluate(model, ds, ds.train, train_classes);
        const auto va = evaluate(model, ds, ds.validation);
        result.log.epochs.push_back({epoch, tr.accuracy, va.accuracy, tr.loss, va.loss});
    }
    return result;
}

} // namespace hqcnn::model
