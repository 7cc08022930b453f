#pragma once

#include <span>
#include <string>
#include <vector>

#include "trajkrotov/core.hpp"

namespace trajkrotov {

/// Physical parameters of a cascaded cavity chain, in units where g = hbar = 1.
struct NetworkSpec {
    int n_nodes = 2;
    double g = 1.0;
    double delta = 100.0;
    double kappa = 1.0;
    double duration = 5.0;
    int n_steps = 1000;

    void validate() const;
    Eigen::Index dim() const { return 2 * n_nodes + 1; }
    double dt() const { return duration / n_steps; }
    /// t_j = j T / n_t, j = 0..n_t
    double grid_time(int j) const { return duration * j / n_steps; }
    /// Midpoint of interval j = 1..n_t, i.e. of [t_{j-1}, t_j).
    double interval_midpoint(int j) const { return duration * (j - 0.5) / n_steps; }
};

/// Ordered single-excitation basis: [vac, atom_1, cav_1, ..., atom_N, cav_N].
struct Basis {
    std::vector<std::string> labels;

    Eigen::Index dim() const { return static_cast<Eigen::Index>(labels.size()); }
    static constexpr Eigen::Index vacuum() { return 0; }
    /// Nodes are numbered from 1.
    static constexpr Eigen::Index atom(int node) { return 2 * node - 1; }
    static constexpr Eigen::Index cavity(int node) { return 2 * node; }
};

/// Piecewise-constant real control on the uniform grid; values[j-1] is the
/// amplitude on [t_{j-1}, t_j).
struct ControlField {
    int node_index = 1;
    double duration = 0.0;
    std::vector<double> values;

    int n_steps() const { return static_cast<int>(values.size()); }
    double dt() const { return duration / n_steps(); }
    double midpoint(int j) const { return duration * (j - 0.5) / n_steps(); }
};

/// Update weights S(t) in [0, 1], sampled at interval midpoints like the
/// controls they gate.
struct ShapeFunction {
    std::vector<double> values;
};

Basis build_basis(const NetworkSpec& spec);

/// Full Hamiltonian for the given per-node drive amplitudes.
Operator build_hamiltonian(const NetworkSpec& spec, std::span<const double> omegas);
/// Control-independent part: the field-mediated cavity-cavity couplings
/// (the Stark-compensated node drift vanishes on this basis).
Operator build_drift_hamiltonian(const NetworkSpec& spec);
/// dH/dOmega_i for node i (1-based).
Operator build_control_operator(const NetworkSpec& spec, int node);
/// L = sqrt(2 kappa) sum_i a_i on the truncated basis.
Operator build_collective_lindblad(const NetworkSpec& spec);

/// Equal superposition of single atomic excitations, 1/sqrt(N) on each atom_i.
StateVector target_state(const NetworkSpec& spec);
/// |e g ... g> with all cavities empty.
StateVector initial_state(const NetworkSpec& spec);

Operator atom_excitation_projector(const NetworkSpec& spec, int node);
Operator cavity_number_operator(const NetworkSpec& spec, int node);
Operator vacuum_projector(const NetworkSpec& spec);

/// Blackman window 0.42 - 0.5 cos(2 pi t/T) + 0.08 cos(4 pi t/T).
double blackman_window(double t, double duration);
/// Identical Blackman pulse for `node`, sampled at interval midpoints.
ControlField blackman_guess(const NetworkSpec& spec, double peak, int node = 1);
std::vector<ControlField> blackman_guess_all(const NetworkSpec& spec, double peak);

/// Raised-cosine switch-on over [0, f T], plateau 1, switch-off over [(1-f) T, T].
double flank_value(double t, double duration, double flank_fraction);
ShapeFunction flanked_shape(const NetworkSpec& spec, double flank_fraction);

/// Drift, control operators and jump operators for one network, built once.
class NetworkModel {
public:
    explicit NetworkModel(NetworkSpec spec);

    const NetworkSpec& spec() const { return spec_; }
    Eigen::Index dim() const { return spec_.dim(); }
    int n_controls() const { return spec_.n_nodes; }

    const Operator& drift() const { return drift_; }
    const std::vector<Operator>& control_operators() const { return controls_; }
    const std::vector<Operator>& lindblads() const { return lindblads_; }
    /// sum_l L_l^dagger L_l
    const Operator& decay_operator() const { return decay_; }

    /// H = H_drift + sum_i omega_i mu_i.
    SparseMat hamiltonian(std::span<const double> omegas) const;
    /// H_eff = H - (i/2) sum_l L_l^dagger L_l.
    SparseMat effective_hamiltonian(std::span<const double> omegas) const;

    const StateVector& initial() const { return initial_; }
    const StateVector& target() const { return target_; }

    /// True when H has no vacuum row or column and every jump operator maps
    /// into the vacuum only, so a jumped state never evolves or jumps again.
    bool decays_to_vacuum() const { return decays_to_vacuum_; }

private:
    SparseMat assemble(const SparseMat& base, std::span<const double> omegas) const;

    NetworkSpec spec_;
    Operator drift_;
    std::vector<Operator> controls_;
    std::vector<Operator> lindblads_;
    Operator decay_;
    StateVector initial_;
    StateVector target_;
    // H and H_eff at zero drive on the union sparsity pattern, and the
    // (value index, entry) pairs of every control operator on that pattern;
    // assembling a Hamiltonian is then a copy plus a few additions.
    SparseMat h_base_;
    SparseMat h_eff_base_;
    std::vector<std::vector<std::pair<Eigen::Index, cplx>>> control_entries_;
    bool decays_to_vacuum_ = false;
};

/// Control values of every field on interval j (1-based).
std::vector<double> control_values(std::span<const ControlField> controls, int j);

/// Throws ContractError unless there is one control per node on the spec grid.
void check_controls(std::span<const ControlField> controls, const NetworkSpec& spec);

}  // namespace trajkrotov
