#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "trajkrotov/core.hpp"
#include "trajkrotov/network.hpp"

namespace trajkrotov {

/// H_eff = H - (i/2) sum_l L_l^dagger L_l
Operator effective_hamiltonian(const Operator& h, std::span<const Operator> lindblads);

/// exp(-i H_eff dt) psi. The squared norm is non-increasing for any
/// effective Hamiltonian whose anti-Hermitian part is negative semidefinite.
StateVector step_propagate_pure(const StateVector& psi, const Operator& h_eff, double dt);

enum class Direction : std::uint64_t { forward = 0, backward = 1 };

/// Deterministic uniform [0, 1) stream. The engine is mt19937_64 (fully
/// specified by the standard); doubles are formed from the top 53 bits so
/// the sequence does not depend on the standard library's distributions.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);
/// Per-trajectory stream seed: base ^ hash(iteration, trajectory, direction).
std::uint64_t stream_seed(std::uint64_t base_seed, std::uint64_t iteration, std::uint64_t trajectory,
                          Direction direction);

struct JumpRecord {
    double time;
    int operator_index;
};

/// One stochastic realization on the time grid. `states[j]` is the state at
/// t_j, stored normalized (or zero once annihilated); `norms[j]` is the
/// squared norm of the running, un-renormalized state at the same point.
struct Trajectory {
    std::vector<StateVector> states;
    std::vector<double> norms;
    std::vector<JumpRecord> jumps;
    std::uint64_t rng_seed = 0;

    const StateVector& final_state() const { return states.back(); }
};

/// Quantum-jump propagation of a single state across grid intervals. The
/// running state decays in norm under a non-Hermitian generator G (evolution
/// exp(-i G dt)); when its squared norm reaches the drawn threshold r, the
/// jump time is located by safeguarded regula falsi, a jump operator J_l is
/// chosen with probability proportional to |J_l psi|^2, the state is
/// renormalized and a new threshold is drawn. Several jumps per interval
/// are handled.
class JumpStepper {
public:
    JumpStepper(const StateVector& psi0, std::vector<SparseMat> jump_ops, RngStream rng);

    /// Advance by `dt` under generator `g`; `t_start` and `time_sign` only
    /// label jump times (time_sign = -1 for backward propagation).
    void advance(const SparseMat& g, double t_start, double dt, double time_sign = 1.0);

    /// Unit-norm current state (zero if annihilated).
    StateVector normalized_state() const;
    double running_norm_squared() const { return running_.squaredNorm(); }
    bool annihilated() const { return annihilated_; }
    const std::vector<JumpRecord>& jumps() const { return jumps_; }

private:
    void jump(double time);

    Vec running_;
    std::vector<SparseMat> jump_ops_;
    RngStream rng_;
    double threshold_;
    bool annihilated_ = false;
    std::vector<JumpRecord> jumps_;
};

/// Jump-time resolution tolerance (relative, on the squared norm) and
/// iteration cap.
inline constexpr double kJumpNormTol = 1e-10;
inline constexpr int kJumpMaxIterations = 200;

/// Forward quantum-jump trajectory from normalized psi0 under the controls.
Trajectory mcwf_propagate(const StateVector& psi0, std::span<const ControlField> controls,
                          const NetworkModel& model, RngStream rng);
Trajectory mcwf_propagate(const StateVector& psi0, std::span<const ControlField> controls, const NetworkSpec& spec,
                          RngStream rng);

/// Backward stochastic co-state propagation from T to 0 under H_eff^dagger
/// (chi(t - dt) = exp(i H_eff^dagger dt) chi(t)) with jump operators
/// L_l^dagger. Grid states are stored as unit vectors scaled by |chi_T|, so
/// the boundary magnitude is carried through; a zero boundary yields an
/// all-zero history. `states[j]` holds chi(t_j) in forward grid order.
Trajectory backward_mcwf(const StateVector& chi_T, std::span<const ControlField> controls,
                         const NetworkModel& model, RngStream rng);

/// `manifold` exploits the excitation/vacuum block structure of the network
/// (see NetworkModel::decays_to_vacuum): the excitation block evolves under a
/// dense exp(-i H_eff dt) and the vacuum population absorbs the lost trace.
/// `series` and `rk4` act on the full Liouvillian and need no structure.
enum class DensityIntegrator { manifold, series, rk4 };

struct DensityOptions {
    DensityIntegrator integrator = DensityIntegrator::manifold;
    int rk4_substeps = 10;
    /// Trace drift beyond this raises NumericalError.
    double trace_tolerance = 1e-6;
};

/// Master-equation solution rho(t_j), j = 0..n_t, with piecewise-constant H.
std::vector<DensityMatrix> density_propagate(const DensityMatrix& rho0, std::span<const ControlField> controls,
                                             const NetworkModel& model, const DensityOptions& options = {});

/// Single interval of the master equation under fixed control values.
Mat density_step(const Mat& rho, std::span<const double> omegas, const NetworkModel& model, double dt,
                 const DensityOptions& options = {});
/// Single interval of the adjoint equation, P(t_{j-1}) from P(t_j).
Mat adjoint_density_step(const Mat& p, std::span<const double> omegas, const NetworkModel& model, double dt,
                         const DensityOptions& options = {});

/// Building blocks of the manifold integrator, for callers that reuse one
/// interval's excitation-block propagator exp(-i H_eff dt) in both directions.
Mat manifold_propagator(std::span<const double> omegas, const NetworkModel& model, double dt);
Mat manifold_step(const Mat& rho, const Mat& u);
Mat manifold_adjoint_step(const Mat& p, const Mat& u, std::span<const double> omegas, const NetworkModel& model,
                          double dt);

/// Adjoint (Heisenberg-picture) propagation from P(T) back to 0; element j
/// of the result is P(t_j).
std::vector<Mat> backward_density_propagate(const Mat& p_T, std::span<const ControlField> controls,
                                            const NetworkModel& model, const DensityOptions& options = {});

}  // namespace trajkrotov
