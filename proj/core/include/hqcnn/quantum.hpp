#pragma once

// Statevector simulation of parameterised circuits.
//
// Qubit 0 is the least-significant bit of the amplitude index, so the basis
// state |q_{n-1} ... q_1 q_0> lives at index sum_k q_k 2^k.

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hqcnn::quantum {

using Complex = std::complex<double>;

inline constexpr int kMaxQubits = 20;
inline constexpr int kMaxOracleQubits = 6;

class StateVector {
public:
    /// |0...0> on n_qubits qubits; throws SizeError outside [1, kMaxQubits].
    static StateVector zero(int n_qubits);

    /// Takes ownership of explicit amplitudes; the length must be a power of two.
    static StateVector from_amplitudes(std::vector<Complex> amps);

    int n_qubits() const { return n_qubits_; }
    std::size_t dim() const { return amps_.size(); }

    std::span<const Complex> amplitudes() const { return amps_; }
    std::span<Complex> amplitudes() { return amps_; }
    const Complex& operator[](std::size_t i) const { return amps_[i]; }
    Complex& operator[](std::size_t i) { return amps_[i]; }

    /// Sum of squared magnitudes.
    double norm_squared() const;

    /// |amp_k|^2 for every basis state.
    std::vector<double> probabilities() const;

private:
    StateVector(int n_qubits, std::vector<Complex> amps)
        : n_qubits_(n_qubits), amps_(std::move(amps)) {}

    int n_qubits_;
    std::vector<Complex> amps_;
};

enum class GateKind { H, X, Y, Z, S, T, RX, RY, RZ, PHASE, CX };

bool is_parametric(GateKind kind);
std::string_view gate_name(GateKind kind);

/// How a parametric gate's angle is computed from the circuit's bound values.
///
/// Data slots carry input features x_j and weight slots carry trainable
/// angles; the expression maps them to the actual rotation angle.
struct AngleExpr {
    enum class Source {
        Fixed,          // angle = constant
        Weight,         // angle = scale * w[slot]
        Feature,        // angle = scale * x[slot]
        FeatureProduct  // angle = scale * prod_{s in slots} (pi - x[s])
    };

    Source source = Source::Fixed;
    double constant = 0.0;
    double scale = 1.0;
    std::vector<int> slots;

    static AngleExpr fixed(double value);
    static AngleExpr weight(int slot, double scale = 1.0);
    static AngleExpr feature(int slot, double scale = 1.0);
    static AngleExpr feature_product(std::vector<int> slots, double scale);

    bool depends_on_data() const {
        return source == Source::Feature || source == Source::FeatureProduct;
    }

    double evaluate(std::span<const double> data, std::span<const double> weights) const;

    /// d(angle)/d(x[slot]); zero when the expression does not read that slot.
    double data_derivative(std::span<const double> data, int slot) const;

    bool operator==(const AngleExpr&) const = default;
};

struct Gate {
    GateKind kind = GateKind::H;
    /// Target qubit, or control for CX.
    int q0 = 0;
    /// Target qubit for CX; -1 otherwise.
    int q1 = -1;
    std::optional<AngleExpr> angle;

    static Gate single(GateKind kind, int qubit);
    static Gate rotation(GateKind kind, int qubit, AngleExpr angle);
    static Gate cx(int control, int target);

    bool operator==(const Gate&) const = default;
};

/// 2x2 matrix of a single-qubit gate in row-major order.
using Matrix2 = std::array<Complex, 4>;

/// Unitary of a single-qubit gate (angle ignored for fixed gates).
Matrix2 gate_matrix(GateKind kind, double angle = 0.0);

/// Ordered gate list with a data/weight slot partition.
class ParamCircuit {
public:
    explicit ParamCircuit(int n_qubits = 1, int data_slots = 0, int weight_slots = 0);

    int n_qubits() const { return n_qubits_; }
    int data_slots() const { return data_slots_; }
    int weight_slots() const { return weight_slots_; }
    const std::vector<Gate>& ops() const { return ops_; }

    /// Appends a gate after checking qubit indices and slot references.
    ParamCircuit& add(Gate gate);

    void set_data_slots(int n);
    void set_weight_slots(int n);

    /// Number of gates whose angle is bound from data or weight slots.
    std::size_t parametric_op_count() const;

private:
    void check_gate(const Gate& gate) const;

    int n_qubits_;
    int data_slots_;
    int weight_slots_;
    std::vector<Gate> ops_;
};

/// Applies one gate in place. Parametric gates need bound_angle.
void apply_gate_inplace(StateVector& state, const Gate& gate, std::optional<double> bound_angle);

/// Value-returning form of apply_gate_inplace.
StateVector apply_gate(StateVector state, const Gate& gate, std::optional<double> bound_angle);

/// Resolved angle for each op (NaN for non-parametric gates).
std::vector<double> bind_angles(const ParamCircuit& circuit,
                                std::span<const double> data,
                                std::span<const double> weights);

/// Runs the circuit from |0...0>.
StateVector run(const ParamCircuit& circuit,
                std::span<const double> data,
                std::span<const double> weights);

/// Runs the circuit with explicit per-op angles (as returned by bind_angles).
StateVector run_bound(const ParamCircuit& circuit, std::span<const double> op_angles);

/// Row-major dense complex matrix.
struct DenseMatrix {
    std::size_t dim = 0;
    std::vector<Complex> data;

    static DenseMatrix identity(std::size_t dim);
    Complex& operator()(std::size_t r, std::size_t c) { return data[r * dim + c]; }
    const Complex& operator()(std::size_t r, std::size_t c) const { return data[r * dim + c]; }

    DenseMatrix operator*(const DenseMatrix& rhs) const;
    DenseMatrix adjoint() const;
    std::vector<Complex> apply(std::span<const Complex> v) const;

    /// Largest elementwise |A - B|.
    double max_abs_diff(const DenseMatrix& other) const;
};

/// Full-register matrix of one gate, built element by element from the
/// gate's local matrix. Independent of the in-place kernels.
DenseMatrix expand_gate(const Gate& gate, int n_qubits, double angle);

/// Product of expanded gate matrices in application order; n_qubits <= 6.
DenseMatrix dense_unitary(const ParamCircuit& circuit,
                          std::span<const double> data,
                          std::span<const double> weights);

} // namespace hqcnn::quantum
