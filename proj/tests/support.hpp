#pragma once
// Hand-rolled generators and numeric helpers shared by the test binaries.

#include "hqcnn/quantum.hpp"
#include "hqcnn/random.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace hqcnn::testing {

inline constexpr double kPi = std::numbers::pi;

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline quantum::GateKind random_kind(Rng& rng) {
    using quantum::GateKind;
    static constexpr GateKind kinds[] = {GateKind::H,  GateKind::X,  GateKind::Y,  GateKind::Z,
                                         GateKind::S,  GateKind::T,  GateKind::RX, GateKind::RY,
                                         GateKind::RZ, GateKind::PHASE, GateKind::CX};
    return kinds[rng.below(std::size(kinds))];
}

/// Random circuit over all gate kinds. Parametric gates draw their angle from
/// a fresh weight slot, so the weight count equals the parametric gate count.
inline quantum::ParamCircuit random_circuit(Rng& rng, int n_qubits, int n_gates) {
    using namespace quantum;
    ParamCircuit c(n_qubits, 0, 0);
    int slots = 0;
    for (int g = 0; g < n_gates; ++g) {
        auto kind = random_kind(rng);
        if (kind == GateKind::CX && n_qubits < 2) kind = GateKind::H;
        const int q = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_qubits)));
        if (kind == GateKind::CX) {
            int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_qubits - 1)));
            if (t >= q) ++t;
            c.add(Gate::cx(q, t));
        } else if (is_parametric(kind)) {
            c.set_weight_slots(slots + 1);
            c.add(Gate::rotation(kind, q, AngleExpr::weight(slots++)));
        } else {
            c.add(Gate::single(kind, q));
        }
    }
    return c;
}

/// Central difference of every output of f with respect to x[i].
inline std::vector<std::vector<double>> finite_jacobian(
    const std::function<std::vector<double>(const std::vector<double>&)>& f,
    std::vector<double> x, double h) {
    std::vector<std::vector<double>> cols;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const auto up = f(x);
        x[i] = keep - h;
        const auto dn = f(x);
        x[i] = keep;
        std::vector<double> col(up.size());
        for (std::size_t k = 0; k < up.size(); ++k) col[k] = (up[k] - dn[k]) / (2.0 * h);
        cols.push_back(std::move(col));
    }
    return cols;
}

inline bool close_abs_rel(double a, double b, double abs_tol, double rel_tol) {
    return std::abs(a - b) <= std::max(abs_tol, rel_tol * std::max(std::abs(a), std::abs(b)));
}

} // namespace hqcnn::testing
