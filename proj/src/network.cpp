#include "trajkrotov/network.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace trajkrotov {

namespace {

using Triplet = Eigen::Triplet<cplx, Eigen::Index>;

Operator from_triplets(Eigen::Index dim, const std::vector<Triplet>& triplets, bool hermitian)
{
    SparseMat m(dim, dim);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return Operator(std::move(m), hermitian);
}

void require_node(const NetworkSpec& spec, int node)
{
    require(node >= 1 && node <= spec.n_nodes, "node index out of range");
}

}  // namespace

void NetworkSpec::validate() const
{
    require(n_nodes >= 1, "network.n_nodes must be >= 1");
    require(g > 0.0, "network.g must be > 0");
    require(delta > 0.0, "network.delta must be > 0");
    require(kappa > 0.0, "network.kappa must be > 0");
    require(duration > 0.0, "network.duration must be > 0");
    require(n_steps >= 2, "network.n_steps must be >= 2");
}

Basis build_basis(const NetworkSpec& spec)
{
    spec.validate();
    Basis basis;
    basis.labels.reserve(static_cast<std::size_t>(spec.dim()));
    basis.labels.emplace_back("vac");
    for (int i = 1; i <= spec.n_nodes; ++i) {
        basis.labels.push_back("atom" + std::to_string(i));
        basis.labels.push_back("cav" + std::to_string(i));
    }
    return basis;
}

Operator build_drift_hamiltonian(const NetworkSpec& spec)
{
    // i kappa a_i^dagger a_j + h.c. for every ordered pair i < j
    const cplx ik(0.0, spec.kappa);
    std::vector<Triplet> t;
    for (int i = 1; i <= spec.n_nodes; ++i)
        for (int j = i + 1; j <= spec.n_nodes; ++j) {
            t.emplace_back(Basis::cavity(i), Basis::cavity(j), ik);
            t.emplace_back(Basis::cavity(j), Basis::cavity(i), std::conj(ik));
        }
    return from_triplets(spec.dim(), t, true);
}

Operator build_control_operator(const NetworkSpec& spec, int node)
{
    require_node(spec, node);
    // -i g/(2 Delta) (sigma_eg a - sigma_ge a^dagger): |g,1> -> |e,0> with -i g/(2 Delta)
    const cplx c(0.0, -spec.g / (2.0 * spec.delta));
    std::vector<Triplet> t{{Basis::atom(node), Basis::cavity(node), c},
                           {Basis::cavity(node), Basis::atom(node), std::conj(c)}};
    return from_triplets(spec.dim(), t, true);
}

Operator build_hamiltonian(const NetworkSpec& spec, std::span<const double> omegas)
{
    spec.validate();
    if (static_cast<int>(omegas.size()) != spec.n_nodes)
        throw ContractError("build_hamiltonian: expected one drive amplitude per node");
    Operator h = build_drift_hamiltonian(spec);
    for (int i = 1; i <= spec.n_nodes; ++i) h = h + cplx(omegas[i - 1]) * build_control_operator(spec, i);
    return h;
}

Operator build_collective_lindblad(const NetworkSpec& spec)
{
    spec.validate();
    const double amp = std::sqrt(2.0 * spec.kappa);
    std::vector<Triplet> t;
    for (int i = 1; i <= spec.n_nodes; ++i) t.emplace_back(Basis::vacuum(), Basis::cavity(i), amp);
    return from_triplets(spec.dim(), t, false);
}

StateVector target_state(const NetworkSpec& spec)
{
    spec.validate();
    Vec v = Vec::Zero(spec.dim());
    const double a = 1.0 / std::sqrt(static_cast<double>(spec.n_nodes));
    for (int i = 1; i <= spec.n_nodes; ++i) v(Basis::atom(i)) = a;
    return StateVector(std::move(v));
}

StateVector initial_state(const NetworkSpec& spec)
{
    spec.validate();
    return StateVector::basis_state(spec.dim(), Basis::atom(1));
}

Operator atom_excitation_projector(const NetworkSpec& spec, int node)
{
    require_node(spec, node);
    return from_triplets(spec.dim(), {{Basis::atom(node), Basis::atom(node), 1.0}}, true);
}

Operator cavity_number_operator(const NetworkSpec& spec, int node)
{
    require_node(spec, node);
    return from_triplets(spec.dim(), {{Basis::cavity(node), Basis::cavity(node), 1.0}}, true);
}

Operator vacuum_projector(const NetworkSpec& spec)
{
    return from_triplets(spec.dim(), {{Basis::vacuum(), Basis::vacuum(), 1.0}}, true);
}

double blackman_window(double t, double duration)
{
    const double x = 2.0 * std::numbers::pi * t / duration;
    return 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
}

ControlField blackman_guess(const NetworkSpec& spec, double peak, int node)
{
    spec.validate();
    require(peak > 0.0, "blackman_guess: peak must be > 0");
    require_node(spec, node);
    ControlField field{node, spec.duration, std::vector<double>(static_cast<std::size_t>(spec.n_steps))};
    for (int j = 1; j <= spec.n_steps; ++j)
        field.values[j - 1] = peak * blackman_window(spec.interval_midpoint(j), spec.duration);
    return field;
}

std::vector<ControlField> blackman_guess_all(const NetworkSpec& spec, double peak)
{
    std::vector<ControlField> fields;
    for (int i = 1; i <= spec.n_nodes; ++i) fields.push_back(blackman_guess(spec, peak, i));
    return fields;
}

double flank_value(double t, double duration, double flank_fraction)
{
    require(flank_fraction > 0.0 && flank_fraction <= 0.5, "flank_fraction must be in (0, 0.5]");
    const double flank = flank_fraction * duration;
    if (t <= 0.0 || t >= duration) return 0.0;
    if (t < flank) return 0.5 * (1.0 - std::cos(std::numbers::pi * t / flank));
    if (t > duration - flank) return 0.5 * (1.0 - std::cos(std::numbers::pi * (duration - t) / flank));
    return 1.0;
}

ShapeFunction flanked_shape(const NetworkSpec& spec, double flank_fraction)
{
    spec.validate();
    ShapeFunction shape{std::vector<double>(static_cast<std::size_t>(spec.n_steps))};
    for (int j = 1; j <= spec.n_steps; ++j)
        shape.values[j - 1] = flank_value(spec.interval_midpoint(j), spec.duration, flank_fraction);
    return shape;
}

NetworkModel::NetworkModel(NetworkSpec spec) : spec_(spec)
{
    spec_.validate();
    drift_ = build_drift_hamiltonian(spec_);
    for (int i = 1; i <= spec_.n_nodes; ++i) controls_.push_back(build_control_operator(spec_, i));
    lindblads_.push_back(build_collective_lindblad(spec_));
    decay_ = Operator::zero(dim());
    for (const auto& l : lindblads_) decay_ = decay_ + l.adjoint() * l;
    decay_ = Operator(decay_.matrix(), true);
    initial_ = initial_state(spec_);
    target_ = target_state(spec_);

    // Entries stay structural (no pruning), so every x + 0 * pattern below
    // shares the pattern's storage order.
    SparseMat pattern = drift_.matrix().cwiseAbs().cast<cplx>() + decay_.matrix().cwiseAbs().cast<cplx>();
    for (const auto& c : controls_) pattern += c.matrix().cwiseAbs().cast<cplx>();
    pattern.makeCompressed();
    const SparseMat zero = cplx(0.0) * pattern;
    h_base_ = drift_.matrix() + zero;
    h_eff_base_ = SparseMat(drift_.matrix() - cplx(0.0, 0.5) * decay_.matrix()) + zero;
    h_base_.makeCompressed();
    h_eff_base_.makeCompressed();
    require(h_base_.nonZeros() == pattern.nonZeros() && h_eff_base_.nonZeros() == pattern.nonZeros(),
            "network model: inconsistent sparsity pattern");
    for (const auto& c : controls_) {
        std::vector<std::pair<Eigen::Index, cplx>> entries;
        for (Eigen::Index outer = 0; outer < pattern.outerSize(); ++outer) {
            SparseMat::InnerIterator p(pattern, outer);
            for (SparseMat::InnerIterator it(c.matrix(), outer); it; ++it) {
                while (p && p.index() != it.index()) ++p;
                require(static_cast<bool>(p), "network model: control entry outside the pattern");
                entries.emplace_back(&p.valueRef() - pattern.valuePtr(), it.value());
            }
        }
        control_entries_.push_back(std::move(entries));
    }

    auto touches_vacuum = [](const SparseMat& m) {
        for (Eigen::Index outer = 0; outer < m.outerSize(); ++outer)
            for (SparseMat::InnerIterator it(m, outer); it; ++it)
                if ((it.row() == 0 || it.col() == 0) && it.value() != 0.0) return true;
        return false;
    };
    bool structured = !touches_vacuum(h_eff_base_);
    for (const auto& c : controls_) structured = structured && !touches_vacuum(c.matrix());
    for (const auto& l : lindblads_)
        for (Eigen::Index outer = 0; outer < l.matrix().outerSize(); ++outer)
            for (SparseMat::InnerIterator it(l.matrix(), outer); it; ++it)
                if ((it.row() != 0 || it.col() == 0) && it.value() != 0.0) structured = false;
    decays_to_vacuum_ = structured;
}

SparseMat NetworkModel::assemble(const SparseMat& base, std::span<const double> omegas) const
{
    require(static_cast<int>(omegas.size()) == n_controls(), "hamiltonian: wrong number of controls");
    SparseMat h = base;
    cplx* values = h.valuePtr();
    for (std::size_t i = 0; i < control_entries_.size(); ++i)
        if (omegas[i] != 0.0)
            for (const auto& [k, v] : control_entries_[i]) values[k] += omegas[i] * v;
    return h;
}

SparseMat NetworkModel::hamiltonian(std::span<const double> omegas) const
{
    return assemble(h_base_, omegas);
}

SparseMat NetworkModel::effective_hamiltonian(std::span<const double> omegas) const
{
    return assemble(h_eff_base_, omegas);
}

std::vector<double> control_values(std::span<const ControlField> controls, int j)
{
    std::vector<double> out(controls.size());
    for (std::size_t i = 0; i < controls.size(); ++i) out[i] = controls[i].values[static_cast<std::size_t>(j - 1)];
    return out;
}

void check_controls(std::span<const ControlField> controls, const NetworkSpec& spec)
{
    if (static_cast<int>(controls.size()) != spec.n_nodes) {
        std::ostringstream msg;
        msg << "expected " << spec.n_nodes << " control fields, got " << controls.size();
        throw ContractError(msg.str());
    }
    for (const auto& c : controls) {
        if (c.n_steps() != spec.n_steps || std::abs(c.duration - spec.duration) > 1e-12 * spec.duration) {
            std::ostringstream msg;
            msg << "control grid mismatch for node " << c.node_index << ": expected n_t=" << spec.n_steps
                << ", T=" << spec.duration << "; got n_t=" << c.n_steps() << ", T=" << c.duration;
            throw ContractError(msg.str());
        }
    }
}

}  // namespace trajkrotov
