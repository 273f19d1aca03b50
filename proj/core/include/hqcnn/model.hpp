#pragma once

// Hybrid quantum-classical CNN:
//   [B,1,8,8] -> 3 x (conv3x3 -> relu -> maxpool2 -> dropout) -> flatten(64)
//   -> linear(64 -> n_qubits) -> quantum layer -> linear(-> classes)

#include "hqcnn/data.hpp"
#include "hqcnn/encoding.hpp"
#include "hqcnn/nn.hpp"
#include "hqcnn/qnn.hpp"
#include "hqcnn/random.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hqcnn::model {

struct ModelConfig {
    int n_qubits = 4;
    int num_classes = 3;
    encoding::FeatureMapSpec feature_map = encoding::FeatureMapSpec::parse("family=zz reps=1 entanglement=linear");
    int ansatz_reps = 1;
    qnn::ObservableMode observables = qnn::ObservableMode::PerQubitZ;
    double dropout = 0.5;
};

/// Activations recorded at the three analysis points of the network.
struct StageCapture {
    nn::Tensor classical;    // [B, n_qubits]   reduced vector fed to the quantum layer
    nn::Tensor feature_map;  // [B, 2^n_qubits] probabilities of the feature-map-only state
    nn::Tensor qnn;          // [B, outputs]    expectation values
};

class HqcnnModel {
public:
    explicit HqcnnModel(ModelConfig config);

    const ModelConfig& config() const { return config_; }
    const qnn::QnnLayer& quantum_layer() const { return qnn_; }

    /// Seeded initialisation: uniform +-sqrt(1/fan_in) for conv/linear,
    /// uniform [-pi, pi] for quantum weights.
    void init(std::uint64_t seed);

    /// Logits [B, num_classes]. Inputs must lie in [0, 1] (ValidationError
    /// otherwise). `dropout_rng` is only drawn from when training.
    nn::Tensor forward(const nn::Tensor& batch, bool training, Rng& dropout_rng,
                       StageCapture* capture = nullptr);

    /// Eval-mode forward.
    nn::Tensor forward(const nn::Tensor& batch, StageCapture* capture = nullptr);

    /// Backpropagates dLoss/dLogits from the most recent forward(), adding
    /// into every parameter's grad buffer.
    void backward(const nn::Tensor& d_logits);

    void zero_grad();

    /// Parameters in a fixed order: conv1..3 (w, b), reduce (w, b), quantum, head (w, b).
    std::vector<nn::Tensor*> parameters();
    std::vector<std::string> parameter_names() const;

    nn::Linear& head() { return head_; }
    nn::Tensor& quantum_weights() { return qweights_; }

    nn::NamedTensors state() const;
    void load_state(const nn::NamedTensors& state);

private:
    ModelConfig config_;
    nn::Conv2d conv1_, conv2_, conv3_;
    nn::ReLU relu1_, relu2_, relu3_;
    nn::MaxPool2 pool1_, pool2_, pool3_;
    nn::Dropout drop1_, drop2_, drop3_;
    nn::Linear reduce_;
    qnn::QnnLayer qnn_;
    nn::Tensor qweights_;
    nn::Linear head_;

    nn::Tensor reduced_;  // [B, n_qubits] from the last forward
};

/// Stacks samples into a [B, 1, 8, 8] tensor.
nn::Tensor make_batch(const data::Dataset& ds, std::span<const std::size_t> indices);
std::vector<int> batch_classes(const data::Dataset& ds, std::span<const std::size_t> indices);

struct TrainOptions {
    int epochs = 500;
    int batch_size = 64;
    nn::SgdOptions sgd{};
    std::uint64_t seed = 0;
    /// Permute training labels (chance-level control runs).
    bool shuffle_labels = false;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;

    bool operator==(const EpochRecord&) const = default;
};

struct RunLog {
    std::vector<EpochRecord> epochs;
    std::uint64_t seed = 0;
    std::string config_echo;

    std::vector<double> train_accuracy() const;
    std::vector<double> val_accuracy() const;

    bool operator==(const RunLog&) const = default;
};

/// Per-epoch CSV: `epoch,train_acc,val_acc,train_loss,val_loss`, 6 decimals.
std::string run_log_csv(const RunLog& log);
RunLog parse_run_log_csv(std::string_view text);

struct Evaluation {
    double accuracy = 0.0;
    double loss = 0.0;
};

/// Accuracy and mean loss with dropout off. Throws ValidationError on an empty set.
Evaluation evaluate(HqcnnModel& model, const data::Dataset& ds, std::span<const std::size_t> indices,
                    std::span<const int> class_override = {});

/// Fraction of rows whose argmax equals the class index.
double accuracy(const nn::Tensor& logits, std::span<const int> classes);

struct TrainResult {
    RunLog log;
    std::size_t optimizer_steps = 0;
};

/// Mini-batch training with per-epoch reshuffling; dropout on for updates,
/// metrics recorded in eval mode after each epoch.
TrainResult train(HqcnnModel& model, const data::Dataset& ds, const TrainOptions& options);

} // namespace hqcnn::model
