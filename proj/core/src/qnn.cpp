#include "hqcnn/qnn.hpp"

#include "hqcnn/encoding.hpp"
#include "hqcnn/error.hpp"

#include <algorithm>
#include <numbers>
#include <string>

namespace hqcnn::qnn {

using quantum::AngleExpr;

ObservableMode parse_observable_mode(std::string_view text) {
    if (text == "per_qubit_z") return ObservableMode::PerQubitZ;
    if (text == "single_z0") return ObservableMode::SingleZ0;
    throw ConfigError("observables must be per_qubit_z or single_z0, got '" + std::string(text) + "'");
}

std::string_view to_string(ObservableMode mode) {
    return mode == ObservableMode::PerQubitZ ? "per_qubit_z" : "single_z0";
}

QnnLayer::QnnLayer(quantum::ParamCircuit feature_map, quantum::ParamCircuit ansatz,
                   ObservableMode mode)
    : feature_map_(std::move(feature_map)),
      circuit_(encoding::compose(feature_map_, ansatz)),
      mode_(mode) {}

std::size_t QnnLayer::output_size() const {
    return mode_ == ObservableMode::PerQubitZ ? static_cast<std::size_t>(n_qubits()) : 1;
}

double expectation_z(std::span<const double> probabilities, int qubit) {
    if (qubit < 0 || (std::size_t{1} << qubit) >= probabilities.size()) {
        throw ArityError("observable qubit " + std::to_string(qubit) + " out of range");
    }
    const std::size_t mask = std::size_t{1} << qubit;
    double e = 0.0;
    for (std::size_t k = 0; k < probabilities.size(); ++k) {
        e += (k & mask) ? -probabilities[k] : probabilities[k];
    }
    return e;
}

double expectation_z(const quantum::StateVector& state, int qubit) {
    if (qubit < 0 || qubit >= state.n_qubits()) {
        throw ArityError("observable qubit " + std::to_string(qubit) + " out of range for " +
                         std::to_string(state.n_qubits()) + "-qubit state");
    }
    const std::size_t mask = std::size_t{1} << qubit;
    double e = 0.0;
    const auto amps = state.amplitudes();
    for (std::size_t k = 0; k < amps.size(); ++k) {
        const double p = std::norm(amps[k]);
        e += (k & mask) ? -p : p;
    }
    return e;
}

namespace {

void check_inputs(const QnnLayer& layer, std::span<const double> features,
                  std::span<const double> weights) {
    if (features.size() != layer.input_size()) {
        throw BindingError("quantum layer expects " + std::to_string(layer.input_size()) +
                           " features, got " + std::to_string(features.size()));
    }
    if (weights.size() != layer.weight_count()) {
        throw BindingError("quantum layer expects " + std::to_string(layer.weight_count()) +
                           " weights, got " + std::to_string(weights.size()));
    }
}

void measure(const quantum::StateVector& state, std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = expectation_z(state, static_cast<int>(i));
}

} // namespace

std::vector<double> qnn_forward(const QnnLayer& layer, std::span<const double> features,
                                std::span<const double> weights) {
    check_inputs(layer, features, weights);
    const auto state = quantum::run(layer.circuit(), features, weights);
    std::vector<double> out(layer.output_size());
    measure(state, out);
    return out;
}

QnnGradient qnn_grad(const QnnLayer& layer, std::span<const double> features,
                     std::span<const double> weights) {
    check_inputs(layer, features, weights);
    const auto& circuit = layer.circuit();
    const std::size_t n_out = layer.output_size();

    QnnGradient g{Jacobian(n_out, layer.weight_count()), Jacobian(n_out, layer.input_size())};
    auto angles = quantum::bind_angles(circuit, features, weights);
    std::vector<double> plus(n_out);
    std::vector<double> minus(n_out);

    constexpr double shift = std::numbers::pi / 2;
    for (std::size_t op = 0; op < circuit.ops().size(); ++op) {
        const auto& gate = circuit.ops()[op];
        if (!gate.angle || gate.angle->source == AngleExpr::Source::Fixed) continue;

        const double base = angles[op];
        angles[op] = base + shift;
        measure(quantum::run_bound(circuit, angles), plus);
        angles[op] = base - shift;
        measure(quantum::run_bound(circuit, angles), minus);
        angles[op] = base;

        const auto& expr = *gate.angle;
        if (expr.source == AngleExpr::Source::Weight) {
            const auto slot = static_cast<std::size_t>(expr.slots[0]);
            for (std::size_t i = 0; i < n_out; ++i) {
                g.d_weights(i, slot) += expr.scale * 0.5 * (plus[i] - minus[i]);
            }
        } else {
            for (std::size_t k = 0; k < expr.slots.size(); ++k) {
                const int slot = expr.slots[k];
                // data_derivative already sums over repeats of a slot.
                if (std::find(expr.slots.begin(), expr.slots.begin() + static_cast<std::ptrdiff_t>(k),
                              slot) != expr.slots.begin() + static_cast<std::ptrdiff_t>(k)) {
                    continue;
                }
                const double da = expr.data_derivative(features, slot);
                for (std::size_t i = 0; i < n_out; ++i) {
                    g.d_features(i, static_cast<std::size_t>(slot)) += da * 0.5 * (plus[i] - minus[i]);
                }
            }
        }
    }
    return g;
}

std::vector<double> feature_map_probabilities(const QnnLayer& layer,
                                              std::span<const double> features) {
    if (features.size() != layer.input_size()) {
        throw BindingError("quantum layer expects " + std::to_string(layer.input_size()) +
                           " features, got " + std::to_string(features.size()));
    }
    const auto& fm = layer.feature_map();
    const std::vector<double> no_weights(static_cast<std::size_t>(fm.weight_slots()), 0.0);
    return quantum::run(fm, features, no_weights).probabilities();
}

} // namespace hqcnn::qnn
