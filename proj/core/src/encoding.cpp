#include "hqcnn/encoding.hpp"

#include "hqcnn/error.hpp"

#include <algorithm>
#include <charconv>
#include <numbers>
#include <sstream>

namespace hqcnn::encoding {

using quantum::AngleExpr;
using quantum::Gate;
using quantum::GateKind;
using quantum::ParamCircuit;

std::string_view to_string(Entanglement e) {
    return e == Entanglement::Linear ? "linear" : "full";
}

std::vector<std::pair<int, int>> entangling_pairs(int n_qubits, Entanglement e) {
    std::vector<std::pair<int, int>> pairs;
    if (e == Entanglement::Linear) {
        for (int j = 0; j + 1 < n_qubits; ++j) pairs.emplace_back(j, j + 1);
    } else {
        for (int j = 0; j < n_qubits; ++j)
            for (int k = j + 1; k < n_qubits; ++k) pairs.emplace_back(j, k);
    }
    return pairs;
}

std::vector<std::vector<int>> placements(int n_qubits, int length, Entanglement e) {
    std::vector<std::vector<int>> out;
    if (length < 1 || length > n_qubits) return out;
    if (length == 1) {
        for (int j = 0; j < n_qubits; ++j) out.push_back({j});
        return out;
    }
    if (e == Entanglement::Linear) {
        for (int j = 0; j + length <= n_qubits; ++j) {
            std::vector<int> window(static_cast<std::size_t>(length));
            for (int i = 0; i < length; ++i) window[static_cast<std::size_t>(i)] = j + i;
            out.push_back(std::move(window));
        }
        return out;
    }
    // Lexicographic combinations of `length` indices out of n_qubits.
    std::vector<int> idx(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i) idx[static_cast<std::size_t>(i)] = i;
    while (true) {
        out.push_back(idx);
        int i = length - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == n_qubits - length + i) --i;
        if (i < 0) break;
        ++idx[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < length; ++k)
            idx[static_cast<std::size_t>(k)] = idx[static_cast<std::size_t>(k - 1)] + 1;
    }
    return out;
}

PauliString::PauliString(std::string letters) : letters_(std::move(letters)) {
    if (letters_.empty()) throw ValidationError("Pauli string must not be empty");
    for (char c : letters_) {
        if (c != 'X' && c != 'Y' && c != 'Z') {
            throw ValidationError("Pauli string '" + letters_ + "' may only contain X, Y, Z");
        }
    }
}

namespace {

int parse_positive(std::string_view key, std::string_view value) {
    int out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end || out < 1) {
        throw ConfigError("feature map: " + std::string(key) + " must be a positive integer, got '" +
                          std::string(value) + "'");
    }
    return out;
}

} // namespace

FeatureMapSpec FeatureMapSpec::parse(std::string_view text) {
    FeatureMapSpec spec;
    bool have_family = false;
    bool have_strings = false;
    bool have_entanglement = false;

    std::istringstream in{std::string(text)};
    std::string token;
    while (in >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError("feature map: expected key=value, got '" + token + "'");
        }
        const std::string key = token.substr(0, eq);
        const std::string value = token.substr(eq + 1);
        if (key == "family") {
            if (value == "z") spec.family = Family::Z;
            else if (value == "zz") spec.family = Family::ZZ;
            else if (value == "pauli") spec.family = Family::Pauli;
            else throw ConfigError("feature map: unknown family '" + value + "' (z, zz, pauli)");
            have_family = true;
        } else if (key == "reps") {
            spec.reps = parse_positive(key, value);
        } else if (key == "entanglement") {
            if (value == "linear") spec.entanglement = Entanglement::Linear;
            else if (value == "full") spec.entanglement = Entanglement::Full;
            else throw ConfigError("feature map: unknown entanglement '" + value + "' (linear, full)");
            have_entanglement = true;
        } else if (key == "strings") {
            spec.strings.clear();
            std::size_t start = 0;
            while (start <= value.size()) {
                const auto comma = value.find(',', start);
                const auto word = value.substr(start, comma == std::string::npos ? std::string::npos
                                                                                 : comma - start);
                try {
                    spec.strings.emplace_back(word);
                } catch (const ValidationError& e) {
                    throw ConfigError(std::string("feature map: ") + e.what());
                }
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
            have_strings = true;
        } else {
            throw ConfigError("feature map: unknown key '" + key + "'");
        }
    }
    if (!have_family) throw ConfigError("feature map: missing family=");
    if (spec.family == Family::Pauli && !have_strings) {
        throw ConfigError("feature map: family=pauli requires strings=");
    }
    if (spec.family != Family::Pauli && have_strings) {
        throw ConfigError("feature map: strings= only applies to family=pauli");
    }
    if (spec.family == Family::Z && have_entanglement) {
        throw ConfigError("feature map: entanglement= does not apply to family=z");
    }
    return spec;
}

std::string FeatureMapSpec::to_string() const {
    std::string out = "family=";
    switch (family) {
    case Family::Z: out += "z"; break;
    case Family::ZZ: out += "zz"; break;
    case Family::Pauli: out += "pauli"; break;
    }
    if (family == Family::Pauli) {
        out += " strings=";
        for (std::size_t i = 0; i < strings.size(); ++i) {
            if (i) out += ',';
            out += strings[i].letters();
        }
    }
    out += " reps=" + std::to_string(reps);
    if (family != Family::Z) out += " entanglement=" + std::string(encoding::to_string(entanglement));
    return out;
}

std::vector<NamedFeatureMap> study_feature_maps() {
    auto p = [](std::string_view s) { return FeatureMapSpec::parse(s); };
    return {
        {"zz_feature_map_reps_1_linear_entanglement", p("family=zz reps=1 entanglement=linear")},
        {"zz_feature_map_reps_2_linear", p("family=zz reps=2 entanglement=linear")},
        {"zz_feature_map_reps_3_full", p("family=zz reps=3 entanglement=full")},
        {"z_feature_map_reps_1", p("family=z reps=1")},
        {"z_feature_map_reps_2", p("family=z reps=2")},
        {"z_feature_map_reps_3", p("family=z reps=3")},
        {"pauli_xyz_1_rep", p("family=pauli strings=X,Y,Z reps=1 entanglement=linear")},
        {"pauli_z_yy_zxz_linear", p("family=pauli strings=Z,YY,ZXZ reps=1 entanglement=linear")},
        {"pauli_z_yy_zxz_rep_2", p("family=pauli strings=Z,YY,ZXZ reps=2 entanglement=linear")},
    };
}

namespace {

void require_reps(int reps) {
    if (reps < 1) throw ValidationError("reps must be >= 1, got " + std::to_string(reps));
}

void hadamard_layer(ParamCircuit& c) {
    for (int q = 0; q < c.n_qubits(); ++q) c.add(Gate::single(GateKind::H, q));
}

void basis_change(ParamCircuit& c, char letter, int qubit, bool inverse) {
    if (letter == 'X') {
        c.add(Gate::single(GateKind::H, qubit));
    } else if (letter == 'Y') {
        const double a = inverse ? -std::numbers::pi / 2 : std::numbers::pi / 2;
        c.add(Gate::rotation(GateKind::RX, qubit, AngleExpr::fixed(a)));
    }
}

/// exp(-i phi P) up to global phase for Pauli word P on `qubits`.
void pauli_evolution(ParamCircuit& c, const PauliString& word, const std::vector<int>& qubits) {
    const auto& letters = word.letters();
    for (std::size_t i = 0; i < qubits.size(); ++i) basis_change(c, letters[i], qubits[i], false);
    for (std::size_t i = 0; i + 1 < qubits.size(); ++i) c.add(Gate::cx(qubits[i], qubits[i + 1]));

    AngleExpr angle = qubits.size() == 1 ? AngleExpr::feature(qubits[0], 2.0)
                                         : AngleExpr::feature_product(qubits, 2.0);
    c.add(Gate::rotation(GateKind::PHASE, qubits.back(), std::move(angle)));

    for (std::size_t i = qubits.size() - 1; i-- > 0;) c.add(Gate::cx(qubits[i], qubits[i + 1]));
    for (std::size_t i = 0; i < qubits.size(); ++i) basis_change(c, letters[i], qubits[i], true);
}

} // namespace

ParamCircuit build_z_feature_map(int n_qubits, int reps) {
    require_reps(reps);
    ParamCircuit c(n_qubits, n_qubits, 0);
    for (int r = 0; r < reps; ++r) {
        hadamard_layer(c);
        for (int q = 0; q < n_qubits; ++q) {
            c.add(Gate::rotation(GateKind::PHASE, q, AngleExpr::feature(q, 2.0)));
        }
    }
    return c;
}

ParamCircuit build_pauli_feature_map(int n_qubits, const std::vector<PauliString>& strings, int reps,
                                     Entanglement entanglement) {
    require_reps(reps);
    if (strings.empty()) throw ValidationError("Pauli feature map needs at least one string");
    for (const auto& s : strings) {
        if (s.size() > n_qubits) {
            throw ArityError("Pauli string '" + s.letters() + "' is longer than the " +
                             std::to_string(n_qubits) + "-qubit register");
        }
    }
    ParamCircuit c(n_qubits, n_qubits, 0);
    for (int r = 0; r < reps; ++r) {
        hadamard_layer(c);
        for (const auto& s : strings) {
            for (const auto& qubits : placements(n_qubits, s.size(), entanglement)) {
                pauli_evolution(c, s, qubits);
            }
        }
    }
    return c;
}

ParamCircuit build_zz_feature_map(int n_qubits, int reps, Entanglement entanglement) {
    if (n_qubits < 2) {
        throw ArityError("ZZ feature map needs at least 2 qubits, got " + std::to_string(n_qubits));
    }
    return build_pauli_feature_map(n_qubits, {PauliString("Z"), PauliString("ZZ")}, reps,
                                   entanglement);
}

ParamCircuit build_feature_map(const FeatureMapSpec& spec, int n_qubits) {
    switch (spec.family) {
    case Family::Z: return build_z_feature_map(n_qubits, spec.reps);
    case Family::ZZ: return build_zz_feature_map(n_qubits, spec.reps, spec.entanglement);
    case Family::Pauli:
        return build_pauli_feature_map(n_qubits, spec.strings, spec.reps, spec.entanglement);
    }
    throw ValidationError("unknown feature-map family");
}

ParamCircuit build_two_local(int n_qubits, int reps) {
    require_reps(reps);
    ParamCircuit c(n_qubits, 0, n_qubits * (reps + 1));
    int slot = 0;
    auto rotation_layer = [&] {
        for (int q = 0; q < n_qubits; ++q) {
            c.add(Gate::rotation(GateKind::RY, q, AngleExpr::weight(slot++)));
        }
    };
    rotation_layer();
    for (int r = 0; r < reps; ++r) {
        for (int q = 0; q + 1 < n_qubits; ++q) c.add(Gate::cx(q, q + 1));
        rotation_layer();
    }
    return c;
}

ParamCircuit compose(const ParamCircuit& feature_map, const ParamCircuit& ansatz) {
    if (feature_map.n_qubits() != ansatz.n_qubits()) {
        throw ArityError("cannot compose circuits on " + std::to_string(feature_map.n_qubits()) +
                         " and " + std::to_string(ansatz.n_qubits()) + " qubits");
    }
    ParamCircuit out(feature_map.n_qubits(), feature_map.data_slots() + ansatz.data_slots(),
                     feature_map.weight_slots() + ansatz.weight_slots());
    for (const auto& g : feature_map.ops()) out.add(g);
    for (Gate g : ansatz.ops()) {
        if (g.angle) {
            const int offset = g.angle->source == AngleExpr::Source::Weight ? feature_map.weight_slots()
                             : g.angle->depends_on_data()                 ? feature_map.data_slots()
                                                                          : 0;
            for (int& s : g.angle->slots) s += offset;
        }
        out.add(std::move(g));
    }
    return out;
}

} // namespace hqcnn::encoding
