#include "trajkrotov/propagators.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "trajkrotov/linalg.hpp"

namespace trajkrotov {

Operator effective_hamiltonian(const Operator& h, std::span<const Operator> lindblads)
{
    SparseMat h_eff = h.matrix();
    for (const auto& l : lindblads) {
        require(l.dim() == h.dim(), "effective_hamiltonian: dimension mismatch");
        h_eff -= cplx(0.0, 0.5) * SparseMat(l.matrix().adjoint() * l.matrix());
    }
    return Operator(std::move(h_eff), lindblads.empty() && h.is_hermitian());
}

StateVector step_propagate_pure(const StateVector& psi, const Operator& h_eff, double dt)
{
    require(dt > 0.0, "step_propagate_pure: dt must be > 0");
    require(psi.dim() == h_eff.dim(), "step_propagate_pure: dimension mismatch");
    return StateVector(expmv(h_eff.matrix(), psi.amplitudes(), dt));
}

std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t base_seed, std::uint64_t iteration, std::uint64_t trajectory,
                          Direction direction)
{
    const std::uint64_t h = mix64(mix64(mix64(iteration) ^ trajectory) ^ static_cast<std::uint64_t>(direction));
    return base_seed ^ h;
}

// --- jump stepper ----------------------------------------------------------

JumpStepper::JumpStepper(const StateVector& psi0, std::vector<SparseMat> jump_ops, RngStream rng)
    : running_(psi0.amplitudes()), jump_ops_(std::move(jump_ops)), rng_(rng)
{
    threshold_ = rng_.uniform();
    if (!(running_.squaredNorm() > 0.0)) annihilated_ = true;
}

StateVector JumpStepper::normalized_state() const
{
    if (annihilated_) return StateVector(Vec::Zero(running_.size()));
    return StateVector(Vec(running_ / running_.norm()));
}

void JumpStepper::jump(double time)
{
    std::vector<double> weights(jump_ops_.size());
    double total = 0.0;
    for (std::size_t l = 0; l < jump_ops_.size(); ++l) {
        weights[l] = (jump_ops_[l] * running_).squaredNorm();
        total += weights[l];
    }
    if (!(total > 0.0)) {
        annihilated_ = true;
        running_.setZero();
        jumps_.push_back({time, -1});
        return;
    }
    std::size_t chosen = 0;
    if (jump_ops_.size() > 1) {
        const double u = rng_.uniform() * total;
        double acc = 0.0;
        chosen = jump_ops_.size() - 1;
        for (std::size_t l = 0; l < jump_ops_.size(); ++l) {
            acc += weights[l];
            if (u < acc && weights[l] > 0.0) {
                chosen = l;
                break;
            }
        }
    }
    Vec next = jump_ops_[chosen] * running_;
    running_ = next / next.norm();
    jumps_.push_back({time, static_cast<int>(chosen)});
    threshold_ = rng_.uniform();
}

void JumpStepper::advance(const SparseMat& g, double t_start, double dt, double time_sign)
{
    double elapsed = 0.0;
    while (!annihilated_) {
        const double remaining = dt - elapsed;
        if (remaining <= 0.0) return;
        Vec end = expmv(g, running_, remaining);
        const double end_norm = end.squaredNorm();
        if (end_norm > threshold_) {
            running_ = std::move(end);
            return;
        }
        // Bracket [lo, hi] on the sub-interval length with n(lo) > r >= n(hi).
        // Regula falsi on log n(tau) (nearly linear for slowly varying decay
        // rates), with the Illinois modification and a bisection fallback.
        const double log_r = std::log(threshold_);
        double lo = 0.0, hi = remaining;
        double f_lo = std::log(running_.squaredNorm()) - log_r;
        double f_hi = end_norm > 0.0 ? std::log(end_norm) - log_r : -1e300;
        Vec at_root = end;
        double tau = hi;
        int side = 0;
        bool converged = std::abs(end_norm - threshold_) <= kJumpNormTol * threshold_;
        for (int it = 0; it < kJumpMaxIterations && !converged; ++it) {
            const bool use_secant = std::isfinite(f_hi) && f_hi > -1e299 && (f_lo - f_hi) > 0.0;
            tau = use_secant ? lo + (hi - lo) * f_lo / (f_lo - f_hi) : 0.5 * (lo + hi);
            if (!(tau > lo && tau < hi)) tau = 0.5 * (lo + hi);
            if (tau <= lo || tau >= hi) {
                // bracket collapsed to adjacent doubles
                converged = true;
                break;
            }
            at_root = expmv(g, running_, tau);
            const double n = at_root.squaredNorm();
            if (std::abs(n - threshold_) <= kJumpNormTol * threshold_) {
                converged = true;
                break;
            }
            const double f = std::log(n) - log_r;
            if (f > 0.0) {
                lo = tau;
                f_lo = f;
                if (side == +1) f_hi *= 0.5;
                side = +1;
            } else {
                hi = tau;
                f_hi = f;
                if (side == -1) f_lo *= 0.5;
                side = -1;
            }
        }
        if (!converged) {
            std::ostringstream msg;
            msg << "jump-time search did not converge after " << kJumpMaxIterations << " iterations (t = "
                << t_start << ", bracket [" << lo << ", " << hi << "], threshold " << threshold_ << ")";
            throw NumericalError(msg.str());
        }
        running_ = std::move(at_root);
        elapsed += tau;
        jump(t_start + time_sign * elapsed);
    }
}

// --- trajectories ------------------------------------------------------------

namespace {

std::vector<SparseMat> lindblad_matrices(const NetworkModel& model, bool adjoint)
{
    std::vector<SparseMat> out;
    for (const auto& l : model.lindblads()) out.push_back(adjoint ? SparseMat(l.matrix().adjoint()) : l.matrix());
    return out;
}

}  // namespace

Trajectory mcwf_propagate(const StateVector& psi0, std::span<const ControlField> controls,
                          const NetworkModel& model, RngStream rng)
{
    const auto& spec = model.spec();
    check_controls(controls, spec);
    require(psi0.dim() == model.dim(), "mcwf_propagate: dimension mismatch");
    require(psi0.is_normalized(1e-10), "mcwf_propagate: initial state must be normalized");

    Trajectory traj;
    traj.rng_seed = rng.seed();
    traj.states.reserve(static_cast<std::size_t>(spec.n_steps + 1));
    traj.norms.reserve(static_cast<std::size_t>(spec.n_steps + 1));

    JumpStepper stepper(psi0, lindblad_matrices(model, false), rng);
    traj.states.push_back(stepper.normalized_state());
    traj.norms.push_back(stepper.running_norm_squared());
    const double dt = spec.dt();
    for (int j = 1; j <= spec.n_steps; ++j) {
        const auto omegas = control_values(controls, j);
        stepper.advance(model.effective_hamiltonian(omegas), spec.grid_time(j - 1), dt);
        traj.states.push_back(stepper.normalized_state());
        traj.norms.push_back(stepper.running_norm_squared());
    }
    traj.jumps = stepper.jumps();
    return traj;
}

Trajectory mcwf_propagate(const StateVector& psi0, std::span<const ControlField> controls, const NetworkSpec& spec,
                          RngStream rng)
{
    return mcwf_propagate(psi0, controls, NetworkModel(spec), rng);
}

Trajectory backward_mcwf(const StateVector& chi_T, std::span<const ControlField> controls, const NetworkModel& model,
                         RngStream rng)
{
    const auto& spec = model.spec();
    check_controls(controls, spec);
    require(chi_T.dim() == model.dim(), "backward_mcwf: dimension mismatch");

    const auto n = static_cast<std::size_t>(spec.n_steps + 1);
    Trajectory traj;
    traj.rng_seed = rng.seed();
    traj.states.assign(n, StateVector(model.dim()));
    traj.norms.assign(n, 0.0);
    const double scale = chi_T.amplitudes().norm();
    if (scale == 0.0) return traj;

    JumpStepper stepper(StateVector(Vec(chi_T.amplitudes() / scale)), lindblad_matrices(model, true), rng);
    auto record = [&](int j) {
        traj.states[static_cast<std::size_t>(j)] = StateVector(Vec(stepper.normalized_state().amplitudes() * scale));
        traj.norms[static_cast<std::size_t>(j)] = stepper.running_norm_squared();
    };
    record(spec.n_steps);
    const double dt = spec.dt();
    for (int j = spec.n_steps; j >= 1; --j) {
        const auto omegas = control_values(controls, j);
        // chi(t_{j-1}) = exp(i H_eff^dagger dt) chi(t_j) = exp(-i G dt) chi(t_j), G = -H_eff^dagger
        const SparseMat g = -SparseMat(model.effective_hamiltonian(omegas).adjoint());
        stepper.advance(g, spec.grid_time(j), dt, -1.0);
        record(j - 1);
    }
    traj.jumps = stepper.jumps();
    return traj;
}

// --- density matrices --------------------------------------------------------

namespace {

Mat propagate_generator(const LindbladGenerator& gen, const Mat& x, double dt, const DensityOptions& options)
{
    return options.integrator == DensityIntegrator::series ? propagate_series(gen, x, dt)
                                                           : propagate_rk4(gen, x, dt, options.rk4_substeps);
}

}  // namespace

Mat manifold_propagator(std::span<const double> omegas, const NetworkModel& model, double dt)
{
    require(model.decays_to_vacuum(), "density: manifold integrator needs a model that decays to the vacuum");
    const Eigen::Index n = model.dim() - 1;
    const Mat he = Mat(model.effective_hamiltonian(omegas)).bottomRightCorner(n, n);
    return (cplx(0.0, -dt) * he).exp();
}

Mat manifold_step(const Mat& rho, const Mat& u)
{
    const Eigen::Index n = u.rows();
    require(rho.rows() == n + 1 && rho.cols() == n + 1, "manifold_step: dimension mismatch");
    Mat out(rho.rows(), rho.cols());
    out.bottomRightCorner(n, n) = u * rho.bottomRightCorner(n, n) * u.adjoint();
    out.bottomLeftCorner(n, 1) = u * rho.bottomLeftCorner(n, 1);
    out.topRightCorner(1, n) = rho.topRightCorner(1, n) * u.adjoint();
    // tr(L rho L^dag) = tr(L^dag L rho): the vacuum gains what the block loses.
    out(0, 0) = rho(0, 0) + rho.bottomRightCorner(n, n).trace() - out.bottomRightCorner(n, n).trace();
    return out;
}

Mat manifold_adjoint_step(const Mat& p, const Mat& u, std::span<const double> omegas, const NetworkModel& model,
                          double dt)
{
    const Eigen::Index n = u.rows();
    require(p.rows() == n + 1 && p.cols() == n + 1 && model.dim() == n + 1, "manifold_adjoint_step: dimension mismatch");
    Mat out(p.rows(), p.cols());
    out.bottomRightCorner(n, n) = u.adjoint() * p.bottomRightCorner(n, n) * u;
    out.bottomLeftCorner(n, 1) = u.adjoint() * p.bottomLeftCorner(n, 1);
    out.topRightCorner(1, n) = p.topRightCorner(1, n) * u;
    out(0, 0) = p(0, 0);
    if (p(0, 0) != 0.0) {
        // W = int_0^dt exp(F^dag s) Q exp(F s) ds with F = -i H_eff, Q = sum L^dag L,
        // from the block exponential of [[-F^dag, Q], [0, F]].
        const Mat f = cplx(0.0, -1.0) * Mat(model.effective_hamiltonian(omegas)).bottomRightCorner(n, n);
        Mat block = Mat::Zero(2 * n, 2 * n);
        block.topLeftCorner(n, n) = -f.adjoint();
        block.topRightCorner(n, n) = model.decay_operator().to_dense().bottomRightCorner(n, n);
        block.bottomRightCorner(n, n) = f;
        const Mat e = (dt * block).exp();
        out.bottomRightCorner(n, n) += p(0, 0) * (e.bottomRightCorner(n, n).adjoint() * e.topRightCorner(n, n));
    }
    return out;
}

Mat density_step(const Mat& rho, std::span<const double> omegas, const NetworkModel& model, double dt,
                 const DensityOptions& options)
{
    if (options.integrator == DensityIntegrator::manifold)
        return manifold_step(rho, manifold_propagator(omegas, model, dt));
    const LindbladGenerator gen(model.effective_hamiltonian(omegas), lindblad_matrices(model, false), false);
    return propagate_generator(gen, rho, dt, options);
}

Mat adjoint_density_step(const Mat& p, std::span<const double> omegas, const NetworkModel& model, double dt,
                         const DensityOptions& options)
{
    if (options.integrator == DensityIntegrator::manifold)
        return manifold_adjoint_step(p, manifold_propagator(omegas, model, dt), omegas, model, dt);
    const LindbladGenerator gen(model.effective_hamiltonian(omegas), lindblad_matrices(model, false), true);
    return propagate_generator(gen, p, dt, options);
}

std::vector<DensityMatrix> density_propagate(const DensityMatrix& rho0, std::span<const ControlField> controls,
                                             const NetworkModel& model, const DensityOptions& options)
{
    const auto& spec = model.spec();
    check_controls(controls, spec);
    require(rho0.dim() == model.dim(), "density_propagate: dimension mismatch");
    require(options.rk4_substeps >= 1, "density_propagate: rk4_substeps must be >= 1");

    std::vector<DensityMatrix> history;
    history.reserve(static_cast<std::size_t>(spec.n_steps + 1));
    history.push_back(rho0);
    const cplx trace0 = rho0.trace();
    Mat rho = rho0.matrix();
    const double dt = spec.dt();
    for (int j = 1; j <= spec.n_steps; ++j) {
        rho = density_step(rho, control_values(controls, j), model, dt, options);
        if (std::abs(rho.trace() - trace0) > options.trace_tolerance) {
            std::ostringstream msg;
            msg << "density_propagate: trace drift " << std::abs(rho.trace() - trace0) << " at step " << j
                << " exceeds " << options.trace_tolerance << "; reduce the step size";
            throw NumericalError(msg.str());
        }
        history.emplace_back(rho);
    }
    return history;
}

std::vector<Mat> backward_density_propagate(const Mat& p_T, std::span<const ControlField> controls,
                                            const NetworkModel& model, const DensityOptions& options)
{
    const auto& spec = model.spec();
    check_controls(controls, spec);
    require(p_T.rows() == model.dim() && p_T.cols() == model.dim(), "backward_density_propagate: dimension mismatch");
    require((p_T - p_T.adjoint()).cwiseAbs().maxCoeff() <= 1e-10, "backward_density_propagate: P(T) must be Hermitian");

    std::vector<Mat> history(static_cast<std::size_t>(spec.n_steps + 1));
    history.back() = p_T;
    const double dt = spec.dt();
    for (int j = spec.n_steps; j >= 1; --j)
        history[static_cast<std::size_t>(j - 1)] =
            adjoint_density_step(history[static_cast<std::size_t>(j)], control_values(controls, j), model, dt, options);
    return history;
}

}  // namespace trajkrotov
