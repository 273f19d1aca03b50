#pragma once

// Circuit builders for data encodings (feature maps) and the TwoLocal ansatz.
//
// Angle conventions: first-order terms rotate by PHASE(2 x_j); higher-order
// terms on a qubit subset S rotate by PHASE(2 prod_{j in S} (pi - x_j)).
// Basis changes are X -> H and Y -> RX(pi/2). Data slot j holds feature x_j
// and is shared by every repetition.

#include "hqcnn/quantum.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace hqcnn::encoding {

enum class Entanglement { Linear, Full };

std::string_view to_string(Entanglement e);

/// Qubit pairs for an entangling layer: (j, j+1) for linear, all j < k for full.
std::vector<std::pair<int, int>> entangling_pairs(int n_qubits, Entanglement e);

/// Ordered qubit tuples a Pauli string of the given length is placed on:
/// consecutive windows for linear, all strictly increasing tuples for full.
std::vector<std::vector<int>> placements(int n_qubits, int length, Entanglement e);

/// Nonempty word over {X, Y, Z}.
class PauliString {
public:
    explicit PauliString(std::string letters);

    const std::string& letters() const { return letters_; }
    int size() const { return static_cast<int>(letters_.size()); }

    bool operator==(const PauliString&) const = default;

private:
    std::string letters_;
};

enum class Family { Z, ZZ, Pauli };

struct FeatureMapSpec {
    Family family = Family::Z;
    int reps = 1;
    Entanglement entanglement = Entanglement::Linear;
    std::vector<PauliString> strings;

    /// Parses `family=zz reps=2 entanglement=linear` style text.
    /// Throws ConfigError on unknown keys or bad values.
    static FeatureMapSpec parse(std::string_view text);

    /// Canonical text form accepted by parse().
    std::string to_string() const;

    bool operator==(const FeatureMapSpec&) const = default;
};

/// The nine encoding configurations compared in the feature-map study,
/// under the names used in its result tables.
struct NamedFeatureMap {
    std::string name;
    FeatureMapSpec spec;
};
std::vector<NamedFeatureMap> study_feature_maps();

struct AnsatzSpec {
    int reps = 1;
};

quantum::ParamCircuit build_z_feature_map(int n_qubits, int reps);
quantum::ParamCircuit build_zz_feature_map(int n_qubits, int reps, Entanglement entanglement);
quantum::ParamCircuit build_pauli_feature_map(int n_qubits, const std::vector<PauliString>& strings,
                                              int reps, Entanglement entanglement);
quantum::ParamCircuit build_feature_map(const FeatureMapSpec& spec, int n_qubits);

/// RY layer, then reps x (linear CX ladder, RY layer). n_qubits * (reps + 1) weights.
quantum::ParamCircuit build_two_local(int n_qubits, int reps);

/// Feature map followed by ansatz. Data slots of both circuits are laid out
/// feature-map first, and likewise weight slots.
quantum::ParamCircuit compose(const quantum::ParamCircuit& feature_map,
                              const quantum::ParamCircuit& ansatz);

} // namespace hqcnn::encoding
