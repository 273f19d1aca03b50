#pragma once

// Expectation-value quantum layer: features -> <Z_i> of the state prepared by
// a feature map followed by a trainable ansatz.

#include "hqcnn/quantum.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace hqcnn::qnn {

enum class ObservableMode {
    PerQubitZ,  // outputs <Z_0>, ..., <Z_{n-1}>
    SingleZ0    // outputs <Z_0> only
};

ObservableMode parse_observable_mode(std::string_view text);
std::string_view to_string(ObservableMode mode);

/// Row-major real matrix.
struct Jacobian {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Jacobian() = default;
    Jacobian(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

class QnnLayer {
public:
    QnnLayer(quantum::ParamCircuit feature_map, quantum::ParamCircuit ansatz,
             ObservableMode mode = ObservableMode::PerQubitZ);

    const quantum::ParamCircuit& circuit() const { return circuit_; }
    const quantum::ParamCircuit& feature_map() const { return feature_map_; }
    ObservableMode mode() const { return mode_; }

    int n_qubits() const { return circuit_.n_qubits(); }
    std::size_t input_size() const { return static_cast<std::size_t>(circuit_.data_slots()); }
    std::size_t weight_count() const { return static_cast<std::size_t>(circuit_.weight_slots()); }
    std::size_t output_size() const;

private:
    quantum::ParamCircuit feature_map_;
    quantum::ParamCircuit circuit_;
    ObservableMode mode_;
};

struct QnnGradient {
    Jacobian d_weights;   // output_size x weight_count
    Jacobian d_features;  // output_size x input_size
};

/// <psi|Z_qubit|psi>.
double expectation_z(const quantum::StateVector& state, int qubit);

/// Same as expectation_z but over a probability vector.
double expectation_z(std::span<const double> probabilities, int qubit);

std::vector<double> qnn_forward(const QnnLayer& layer, std::span<const double> features,
                                std::span<const double> weights);

/// Parameter-shift Jacobians of the layer outputs. Every bound rotation is
/// shifted by +-pi/2 independently; feature gradients then follow by the
/// chain rule through each gate's angle expression.
QnnGradient qnn_grad(const QnnLayer& layer, std::span<const double> features,
                     std::span<const double> weights);

/// Measurement probabilities of the feature-map-only state (2^n values).
std::vector<double> feature_map_probabilities(const QnnLayer& layer,
                                              std::span<const double> features);

} // namespace hqcnn::qnn
