#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trajkrotov/core.hpp"
#include "trajkrotov/network.hpp"
#include "trajkrotov/propagators.hpp"

namespace trajkrotov {

enum class Variant { density, independent, cross };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

struct KrotovConfig {
    /// Inverse step sizes, one per control.
    std::vector<double> lambdas;
    /// Update shape functions, one per control.
    std::vector<ShapeFunction> shapes;
    int n_iterations = 100;
    /// M; ignored by the density variant.
    int n_trajectories = 1;
    Variant variant = Variant::density;
    std::uint64_t base_seed = 0;
    /// Trajectory variants evaluate the exact (density-matrix) error every
    /// this many iterations and after the last one.
    int eval_exact_every = 10;
    /// Halve lambda when the relative pulse change stagnates below 1e-6;
    /// double it when the density-variant error increases.
    bool adapt_lambda = true;
    int workers = 1;
    DensityOptions density{};

    void validate(int n_controls, int n_steps) const;
};

struct IterationRecord {
    int iteration = 0;
    /// Value of the functional guiding the variant (trajectory average for
    /// the trajectory variants).
    double j_t_surrogate = 0.0;
    /// 1 - <<rho(T)|P_tgt>> from the exact master equation, when evaluated.
    std::optional<double> j_t_exact;
    /// sqrt(sum_i int |Delta u_i|^2 dt)
    double pulse_update_norm = 0.0;
    double wall_time = 0.0;
    /// Lambdas in effect after this iteration's adaptation.
    std::vector<double> lambdas;
    int n_jumps = 0;
};

/// 1 - Re tr[rho(T) P_tgt]
double functional_density(const DensityMatrix& rho_T, const StateVector& target);
/// 1 - (1/M) sum_k |<Psi_tgt|Psi_k(T)>|^2 on normalized final states; zero
/// (annihilated) finals contribute infidelity 1.
double functional_trajectories(std::span<const StateVector> final_states, const StateVector& target);

/// (s / (m lambda)) Im <chi|mu|psi>
double update_increment_traj(const StateVector& chi, const StateVector& psi, const Operator& mu, double s,
                             double lambda, int m);
/// (s / (M^2 lambda)) sum_{k,k'} Im[<xi_k|mu|psi_k'><psi_k'|xi_k>], explicit double sum.
double update_increment_cross(std::span<const StateVector> xis, std::span<const StateVector> psis, const Operator& mu,
                              double s, double lambda);
/// Same quantity as (s/lambda) Im tr[P mu rho] with P = (1/M) sum |xi_k><xi_k|
/// and rho = (1/M) sum |psi_k><psi_k|.
double update_increment_cross_trace(std::span<const StateVector> xis, std::span<const StateVector> psis,
                                    const Operator& mu, double s, double lambda);
/// (s / lambda) Im tr[P^dagger [mu, rho]]
double update_increment_density(const Mat& p, const Mat& rho, const Operator& mu, double s, double lambda);

/// Sequential Krotov optimizer for one network. Holds the current controls
/// and, for the trajectory variants, the forward trajectories of the last
/// pass (which are realizations under the current controls).
class KrotovOptimizer {
public:
    /// `start_iteration` offsets the iteration counter, which seeds the
    /// random streams of the trajectory variants.
    KrotovOptimizer(const NetworkModel& model, KrotovConfig config, std::vector<ControlField> guess,
                    int start_iteration = 0);

    /// One Krotov iteration: backward co-states under the current controls,
    /// then a forward pass updating the controls interval by interval.
    IterationRecord iterate();

    /// Exact error of the current controls via the master equation.
    double exact_error() const;

    const std::vector<ControlField>& controls() const { return controls_; }
    const std::vector<double>& lambdas() const { return lambdas_; }
    int iteration() const { return iteration_; }
    const KrotovConfig& config() const { return config_; }

    /// Updates computed in the most recent iteration, [control][interval].
    const std::vector<std::vector<double>>& last_update() const { return last_update_; }

private:
    void iterate_density(IterationRecord& rec);
    void iterate_trajectories(IterationRecord& rec);
    void forward_guess_trajectories();
    double update_norm() const;

    NetworkModel model_;
    KrotovConfig config_;
    std::vector<ControlField> controls_;
    std::vector<double> lambdas_;
    int iteration_ = 0;
    std::optional<double> previous_exact_;
    std::vector<StateVector> forward_finals_;
    std::vector<std::vector<double>> last_update_;
    // Manifold-integrator propagators of the last density forward sweep; they
    // belong to the current controls, so the next backward pass reuses them.
    std::vector<Mat> step_propagators_;
};

/// Stateless single iteration: builds an optimizer on `controls` positioned
/// at `iteration_index` and runs one iteration.
std::pair<std::vector<ControlField>, IterationRecord> krotov_iterate(const KrotovConfig& config,
                                                                     const std::vector<ControlField>& controls,
                                                                     const NetworkModel& model,
                                                                     int iteration_index = 0);

struct OptimizationResult {
    std::vector<ControlField> controls;
    std::vector<IterationRecord> records;
    double initial_error = 1.0;
    /// Non-empty if the run aborted; `records` then holds the partial log.
    std::string error;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

OptimizationResult optimize(const KrotovConfig& config, const std::vector<ControlField>& guess,
                            const NetworkModel& model, const IterationCallback& callback = {});

}  // namespace trajkrotov
