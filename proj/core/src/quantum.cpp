#include "hqcnn/quantum.hpp"

#include "hqcnn/error.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace hqcnn::quantum {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Complex kI{0.0, 1.0};

void require_qubit(int q, int n_qubits) {
    if (q < 0 || q >= n_qubits) {
        throw ArityError("qubit index " + std::to_string(q) + " out of range for " +
                         std::to_string(n_qubits) + "-qubit register");
    }
}

} // namespace

StateVector StateVector::zero(int n_qubits) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw SizeError("n_qubits must be in [1, " + std::to_string(kMaxQubits) + "], got " +
                        std::to_string(n_qubits));
    }
    std::vector<Complex> amps(std::size_t{1} << n_qubits);
    amps[0] = 1.0;
    return StateVector(n_qubits, std::move(amps));
}

StateVector StateVector::from_amplitudes(std::vector<Complex> amps) {
    if (amps.size() < 2 || !std::has_single_bit(amps.size())) {
        throw SizeError("amplitude count must be a power of two >= 2, got " +
                        std::to_string(amps.size()));
    }
    const int n = std::countr_zero(amps.size());
    if (n > kMaxQubits) throw SizeError("register too large");
    return StateVector(n, std::move(amps));
}

double StateVector::norm_squared() const {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return s;
}

std::vector<double> StateVector::probabilities() const {
    std::vector<double> p(amps_.size());
    for (std::size_t k = 0; k < amps_.size(); ++k) p[k] = std::norm(amps_[k]);
    return p;
}

bool is_parametric(GateKind kind) {
    switch (kind) {
    case GateKind::RX:
    case GateKind::RY:
    case GateKind::RZ:
    case GateKind::PHASE:
        return true;
    default:
        return false;
    }
}

std::string_view gate_name(GateKind kind) {
    switch (kind) {
    case GateKind::H: return "H";
    case GateKind::X: return "X";
    case GateKind::Y: return "Y";
    case GateKind::Z: return "Z";
    case GateKind::S: return "S";
    case GateKind::T: return "T";
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::PHASE: return "PHASE";
    case GateKind::CX: return "CX";
    }
    return "?";
}

AngleExpr AngleExpr::fixed(double value) {
    AngleExpr e;
    e.source = Source::Fixed;
    e.constant = value;
    return e;
}

AngleExpr AngleExpr::weight(int slot, double scale) {
    AngleExpr e;
    e.source = Source::Weight;
    e.scale = scale;
    e.slots = {slot};
    return e;
}

AngleExpr AngleExpr::feature(int slot, double scale) {
    AngleExpr e;
    e.source = Source::Feature;
    e.scale = scale;
    e.slots = {slot};
    return e;
}

AngleExpr AngleExpr::feature_product(std::vector<int> slots, double scale) {
    AngleExpr e;
    e.source = Source::FeatureProduct;
    e.scale = scale;
    e.slots = std::move(slots);
    return e;
}

double AngleExpr::evaluate(std::span<const double> data, std::span<const double> weights) const {
    switch (source) {
    case Source::Fixed:
        return constant;
    case Source::Weight:
        return scale * weights[static_cast<std::size_t>(slots[0])];
    case Source::Feature:
        return scale * data[static_cast<std::size_t>(slots[0])];
    case Source::FeatureProduct: {
        double p = scale;
        for (int s : slots) p *= kPi - data[static_cast<std::size_t>(s)];
        return p;
    }
    }
    return 0.0;
}

double AngleExpr::data_derivative(std::span<const double> data, int slot) const {
    switch (source) {
    case Source::Feature:
        return slots[0] == slot ? scale : 0.0;
    case Source::FeatureProduct: {
        // Product rule; a slot may in principle repeat within the product.
        double total = 0.0;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (slots[i] != slot) continue;
            double p = -scale;
            for (std::size_t m = 0; m < slots.size(); ++m) {
                if (m != i) p *= kPi - data[static_cast<std::size_t>(slots[m])];
            }
            total += p;
        }
        return total;
    }
    default:
        return 0.0;
    }
}

Gate Gate::single(GateKind kind, int qubit) {
    if (is_parametric(kind) || kind == GateKind::CX) {
        throw ArityError(std::string(gate_name(kind)) + " is not a fixed single-qubit gate");
    }
    return Gate{kind, qubit, -1, std::nullopt};
}

Gate Gate::rotation(GateKind kind, int qubit, AngleExpr angle) {
    if (!is_parametric(kind)) {
        throw ArityError(std::string(gate_name(kind)) + " takes no angle");
    }
    return Gate{kind, qubit, -1, std::move(angle)};
}

Gate Gate::cx(int control, int target) {
    return Gate{GateKind::CX, control, target, std::nullopt};
}

Matrix2 gate_matrix(GateKind kind, double angle) {
    const double r = 1.0 / std::numbers::sqrt2;
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    switch (kind) {
    case GateKind::H: return {r, r, r, -r};
    case GateKind::X: return {0.0, 1.0, 1.0, 0.0};
    case GateKind::Y: return {0.0, -kI, kI, 0.0};
    case GateKind::Z: return {1.0, 0.0, 0.0, -1.0};
    case GateKind::S: return {1.0, 0.0, 0.0, kI};
    case GateKind::T: return {1.0, 0.0, 0.0, std::polar(1.0, kPi / 4.0)};
    case GateKind::RX: return {c, -kI * s, -kI * s, c};
    case GateKind::RY: return {c, -s, s, c};
    case GateKind::RZ: return {std::polar(1.0, -angle / 2.0), 0.0, 0.0, std::polar(1.0, angle / 2.0)};
    case GateKind::PHASE: return {1.0, 0.0, 0.0, std::polar(1.0, angle)};
    case GateKind::CX: break;
    }
    throw ArityError("CX has no single-qubit matrix");
}

ParamCircuit::ParamCircuit(int n_qubits, int data_slots, int weight_slots)
    : n_qubits_(n_qubits), data_slots_(data_slots), weight_slots_(weight_slots) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) {
        throw SizeError("n_qubits must be in [1, " + std::to_string(kMaxQubits) + "], got " +
                        std::to_string(n_qubits));
    }
    if (data_slots < 0 || weight_slots < 0) throw BindingError("negative slot count");
}

void ParamCircuit::check_gate(const Gate& gate) const {
    require_qubit(gate.q0, n_qubits_);
    if (gate.kind == GateKind::CX) {
        require_qubit(gate.q1, n_qubits_);
        if (gate.q0 == gate.q1) throw ArityError("CX control and target must differ");
        return;
    }
    if (is_parametric(gate.kind) != gate.angle.has_value()) {
        throw BindingError(std::string(gate_name(gate.kind)) +
                           (gate.angle ? " takes no angle" : " requires an angle"));
    }
    if (!gate.angle) return;
    const auto& e = *gate.angle;
    const int limit = e.source == AngleExpr::Source::Weight ? weight_slots_ : data_slots_;
    if (e.source != AngleExpr::Source::Fixed) {
        if (e.slots.empty()) throw BindingError("angle expression references no slot");
        for (int s : e.slots) {
            if (s < 0 || s >= limit) {
                throw BindingError("angle references slot " + std::to_string(s) +
                                   " but circuit has " + std::to_string(limit));
            }
        }
    }
}

ParamCircuit& ParamCircuit::add(Gate gate) {
    check_gate(gate);
    ops_.push_back(std::move(gate));
    return *this;
}

void ParamCircuit::set_data_slots(int n) {
    if (n < 0) throw BindingError("negative slot count");
    data_slots_ = n;
    for (const auto& g : ops_) check_gate(g);
}

void ParamCircuit::set_weight_slots(int n) {
    if (n < 0) throw BindingError("negative slot count");
    weight_slots_ = n;
    for (const auto& g : ops_) check_gate(g);
}

std::size_t ParamCircuit::parametric_op_count() const {
    std::size_t n = 0;
    for (const auto& g : ops_) {
        if (g.angle && g.angle->source != AngleExpr::Source::Fixed) ++n;
    }
    return n;
}

void apply_gate_inplace(StateVector& state, const Gate& gate, std::optional<double> bound_angle) {
    const int n = state.n_qubits();
    require_qubit(gate.q0, n);
    auto amps = state.amplitudes();
    const std::size_t dim = amps.size();

    if (gate.kind == GateKind::CX) {
        require_qubit(gate.q1, n);
        if (gate.q0 == gate.q1) throw ArityError("CX control and target must differ");
        const std::size_t cmask = std::size_t{1} << gate.q0;
        const std::size_t tmask = std::size_t{1} << gate.q1;
        for (std::size_t i = 0; i < dim; ++i) {
            if ((i & cmask) && !(i & tmask)) std::swap(amps[i], amps[i | tmask]);
        }
        return;
    }

    if (is_parametric(gate.kind) && !bound_angle) {
        throw BindingError(std::string(gate_name(gate.kind)) + " on qubit " +
                           std::to_string(gate.q0) + " needs a bound angle");
    }
    const Matrix2 m = gate_matrix(gate.kind, bound_angle.value_or(0.0));
    const std::size_t mask = std::size_t{1} << gate.q0;

    const bool diagonal = m[1] == 0.0 && m[2] == 0.0;
    if (diagonal) {
        for (std::size_t i = 0; i < dim; ++i) amps[i] *= (i & mask) ? m[3] : m[0];
        return;
    }
    for (std::size_t i = 0; i < dim; ++i) {
        if (i & mask) continue;
        const Complex a0 = amps[i];
        const Complex a1 = amps[i | mask];
        amps[i] = m[0] * a0 + m[1] * a1;
        amps[i | mask] = m[2] * a0 + m[3] * a1;
    }
}

StateVector apply_gate(StateVector state, const Gate& gate, std::optional<double> bound_angle) {
    apply_gate_inplace(state, gate, bound_angle);
    return state;
}

namespace {

void check_binding(const ParamCircuit& circuit, std::span<const double> data,
                   std::span<const double> weights) {
    if (data.size() != static_cast<std::size_t>(circuit.data_slots()) ||
        weights.size() != static_cast<std::size_t>(circuit.weight_slots())) {
        throw BindingError("circuit expects " + std::to_string(circuit.data_slots()) +
                           " data and " + std::to_string(circuit.weight_slots()) +
                           " weight values, got " + std::to_string(data.size()) + " and " +
                           std::to_string(weights.size()));
    }
}

} // namespace

std::vector<double> bind_angles(const ParamCircuit& circuit, std::span<const double> data,
                                std::span<const double> weights) {
    check_binding(circuit, data, weights);
    std::vector<double> angles(circuit.ops().size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < angles.size(); ++i) {
        const auto& g = circuit.ops()[i];
        if (g.angle) angles[i] = g.angle->evaluate(data, weights);
    }
    return angles;
}

StateVector run_bound(const ParamCircuit& circuit, std::span<const double> op_angles) {
    if (op_angles.size() != circuit.ops().size()) {
        throw BindingError("expected one angle per op");
    }
    auto state = StateVector::zero(circuit.n_qubits());
    for (std::size_t i = 0; i < op_angles.size(); ++i) {
        const auto& g = circuit.ops()[i];
        apply_gate_inplace(state, g, g.angle ? std::optional<double>(op_angles[i]) : std::nullopt);
    }
    return state;
}

StateVector run(const ParamCircuit& circuit, std::span<const double> data,
                std::span<const double> weights) {
    const auto angles = bind_angles(circuit, data, weights);
    return run_bound(circuit, angles);
}

DenseMatrix DenseMatrix::identity(std::size_t dim) {
    DenseMatrix m{dim, std::vector<Complex>(dim * dim)};
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::operator*(const DenseMatrix& rhs) const {
    if (dim != rhs.dim) throw SizeError("matrix dimension mismatch");
    DenseMatrix out{dim, std::vector<Complex>(dim * dim)};
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t k = 0; k < dim; ++k) {
            const Complex a = (*this)(r, k);
            if (a == 0.0) continue;
            for (std::size_t c = 0; c < dim; ++c) out(r, c) += a * rhs(k, c);
        }
    }
    return out;
}

DenseMatrix DenseMatrix::adjoint() const {
    DenseMatrix out{dim, std::vector<Complex>(dim * dim)};
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c) out(c, r) = std::conj((*this)(r, c));
    }
    return out;
}

std::vector<Complex> DenseMatrix::apply(std::span<const Complex> v) const {
    if (v.size() != dim) throw SizeError("vector length mismatch");
    std::vector<Complex> out(dim);
    for (std::size_t r = 0; r < dim; ++r) {
        Complex s = 0.0;
        for (std::size_t c = 0; c < dim; ++c) s += (*this)(r, c) * v[c];
        out[r] = s;
    }
    return out;
}

double DenseMatrix::max_abs_diff(const DenseMatrix& other) const {
    if (dim != other.dim) throw SizeError("matrix dimension mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) m = std::max(m, std::abs(data[i] - other.data[i]));
    return m;
}

DenseMatrix expand_gate(const Gate& gate, int n_qubits, double angle) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    DenseMatrix full{dim, std::vector<Complex>(dim * dim)};
    auto bit = [](std::size_t idx, int q) { return (idx >> q) & 1U; };

    if (gate.kind == GateKind::CX) {
        // Local 4x4 CNOT in |control target> order.
        static constexpr double cnot[4][4] = {
            {1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}};
        const std::size_t rest_mask = ~((std::size_t{1} << gate.q0) | (std::size_t{1} << gate.q1));
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c < dim; ++c) {
                if ((r & rest_mask) != (c & rest_mask)) continue;
                const auto lr = 2 * bit(r, gate.q0) + bit(r, gate.q1);
                const auto lc = 2 * bit(c, gate.q0) + bit(c, gate.q1);
                full(r, c) = cnot[lr][lc];
            }
        }
        return full;
    }

    const Matrix2 m = gate_matrix(gate.kind, angle);
    const std::size_t rest_mask = ~(std::size_t{1} << gate.q0);
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            if ((r & rest_mask) != (c & rest_mask)) continue;
            full(r, c) = m[2 * bit(r, gate.q0) + bit(c, gate.q0)];
        }
    }
    return full;
}

DenseMatrix dense_unitary(const ParamCircuit& circuit, std::span<const double> data,
                          std::span<const double> weights) {
    if (circuit.n_qubits() > kMaxOracleQubits) {
        throw SizeError("dense_unitary supports at most " + std::to_string(kMaxOracleQubits) +
                        " qubits, got " + std::to_string(circuit.n_qubits()));
    }
    const auto angles = bind_angles(circuit, data, weights);
    auto u = DenseMatrix::identity(std::size_t{1} << circuit.n_qubits());
    for (std::size_t i = 0; i < angles.size(); ++i) {
        const auto& g = circuit.ops()[i];
        u = expand_gate(g, circuit.n_qubits(), g.angle ? angles[i] : 0.0) * u;
    }
    return u;
}

} // namespace hqcnn::quantum
