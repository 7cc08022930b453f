#include "trajkrotov/krotov.hpp"
#include "trajkrotov/parallel.hpp"

#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

namespace trajkrotov {

namespace {

void check_finite(double du, int control, int interval)
{
    if (!std::isfinite(du)) {
        std::ostringstream msg;
        msg << "non-finite pulse update for control " << control << " on interval " << interval;
        throw NumericalError(msg.str());
    }
}

StateVector co_state_boundary(Variant variant, const StateVector& final_state, const StateVector& target)
{
    if (variant == Variant::cross) return target;
    // chi(T) = -dJ_T/d<Psi| = |Psi_tgt><Psi_tgt|Psi(T)>
    return StateVector(Vec(target.amplitudes() * overlap(target, final_state)));
}

}  // namespace

std::string to_string(Variant v)
{
    switch (v) {
    case Variant::density: return "density";
    case Variant::independent: return "independent";
    case Variant::cross: return "cross";
    }
    return "?";
}

Variant parse_variant(const std::string& name)
{
    if (name == "density") return Variant::density;
    if (name == "independent") return Variant::independent;
    if (name == "cross") return Variant::cross;
    throw ContractError("unknown variant '" + name + "' (expected density, independent or cross)");
}

void KrotovConfig::validate(int n_controls, int n_steps) const
{
    require(static_cast<int>(lambdas.size()) == n_controls, "krotov: need one lambda per control");
    for (double l : lambdas) require(l > 0.0 && std::isfinite(l), "krotov: lambda must be > 0");
    require(static_cast<int>(shapes.size()) == n_controls, "krotov: need one shape function per control");
    for (const auto& s : shapes) {
        require(static_cast<int>(s.values.size()) == n_steps, "krotov: shape function grid mismatch");
        for (double v : s.values) require(v >= 0.0 && v <= 1.0, "krotov: shape values must lie in [0, 1]");
    }
    require(n_iterations >= 0, "krotov: n_iterations must be >= 0");
    require(n_trajectories >= 1, "krotov: n_trajectories must be >= 1");
    if (variant == Variant::cross) require(n_trajectories >= 2, "krotov: the cross variant needs M >= 2");
    require(eval_exact_every >= 1, "krotov: eval_exact_every must be >= 1");
    require(workers >= 1, "krotov: workers must be >= 1");
}

double functional_density(const DensityMatrix& rho_T, const StateVector& target)
{
    require(rho_T.dim() == target.dim(), "functional_density: dimension mismatch");
    return 1.0 - hs_overlap(rho_T.matrix(), projector(target)).real();
}

double functional_trajectories(std::span<const StateVector> final_states, const StateVector& target)
{
    require(!final_states.empty(), "functional_trajectories: need at least one trajectory");
    double fidelity = 0.0;
    for (const auto& psi : final_states) {
        const double n2 = psi.norm_squared();
        if (n2 > 0.0) fidelity += std::norm(overlap(psi, target)) / n2;
    }
    return 1.0 - fidelity / static_cast<double>(final_states.size());
}

double update_increment_traj(const StateVector& chi, const StateVector& psi, const Operator& mu, double s,
                             double lambda, int m)
{
    require(lambda > 0.0, "update_increment_traj: lambda must be > 0");
    require(m >= 1, "update_increment_traj: m must be >= 1");
    if (s == 0.0) return 0.0;
    const cplx amp = chi.amplitudes().dot(mu.matrix() * psi.amplitudes());
    return s / (m * lambda) * amp.imag();
}

double update_increment_cross(std::span<const StateVector> xis, std::span<const StateVector> psis, const Operator& mu,
                              double s, double lambda)
{
    require(lambda > 0.0, "update_increment_cross: lambda must be > 0");
    require(xis.size() == psis.size() && !xis.empty(), "update_increment_cross: need equal, non-empty lists");
    const double m = static_cast<double>(xis.size());
    double sum = 0.0;
    for (const auto& xi : xis)
        for (const auto& psi : psis) {
            const cplx a = xi.amplitudes().dot(mu.matrix() * psi.amplitudes());
            const cplx b = psi.amplitudes().dot(xi.amplitudes());
            sum += (a * b).imag();
        }
    return s / (m * m * lambda) * sum;
}

double update_increment_cross_trace(std::span<const StateVector> xis, std::span<const StateVector> psis,
                                    const Operator& mu, double s, double lambda)
{
    require(lambda > 0.0, "update_increment_cross_trace: lambda must be > 0");
    require(xis.size() == psis.size() && !xis.empty(), "update_increment_cross_trace: need equal, non-empty lists");
    const Eigen::Index d = mu.dim();
    Mat p = Mat::Zero(d, d), rho = Mat::Zero(d, d);
    for (const auto& xi : xis) p += projector(xi);
    for (const auto& psi : psis) rho += projector(psi);
    const double m = static_cast<double>(xis.size());
    p /= m;
    rho /= m;
    return s / lambda * (p * (mu.matrix() * rho)).trace().imag();
}

double update_increment_density(const Mat& p, const Mat& rho, const Operator& mu, double s, double lambda)
{
    require(lambda > 0.0, "update_increment_density: lambda must be > 0");
    if (s == 0.0) return 0.0;
    const Mat mu_rho = mu.matrix() * rho;
    const Mat comm = mu_rho - Mat(rho * mu.matrix());
    return s / lambda * hs_overlap(p, comm).imag();
}

// --- optimizer ---------------------------------------------------------------

KrotovOptimizer::KrotovOptimizer(const NetworkModel& model, KrotovConfig config, std::vector<ControlField> guess,
                                 int start_iteration)
    : model_(model), config_(std::move(config)), controls_(std::move(guess)), iteration_(start_iteration)
{
    check_controls(controls_, model_.spec());
    config_.validate(model_.n_controls(), model_.spec().n_steps);
    require(start_iteration >= 0, "krotov: start iteration must be >= 0");
    lambdas_ = config_.lambdas;
    last_update_.assign(static_cast<std::size_t>(model_.n_controls()),
                        std::vector<double>(static_cast<std::size_t>(model_.spec().n_steps), 0.0));
}

double KrotovOptimizer::exact_error() const
{
    const auto history =
        density_propagate(DensityMatrix::from_state(model_.initial()), controls_, model_, config_.density);
    return functional_density(history.back(), model_.target());
}

double KrotovOptimizer::update_norm() const
{
    double sum = 0.0;
    for (const auto& du : last_update_)
        for (double v : du) sum += v * v;
    return std::sqrt(sum * model_.spec().dt());
}

IterationRecord KrotovOptimizer::iterate()
{
    const auto start = std::chrono::steady_clock::now();
    ++iteration_;
    IterationRecord rec;
    rec.iteration = iteration_;
    if (config_.variant == Variant::density)
        iterate_density(rec);
    else
        iterate_trajectories(rec);
    rec.pulse_update_norm = update_norm();

    if (config_.adapt_lambda) {
        double control_norm = 0.0;
        for (const auto& c : controls_)
            for (double v : c.values) control_norm += v * v;
        control_norm = std::sqrt(control_norm * model_.spec().dt());
        // an exactly zero update carries no information (all co-states annihilated)
        const bool stagnating =
            control_norm > 0.0 && rec.pulse_update_norm > 0.0 && rec.pulse_update_norm < 1e-6 * control_norm;
        const bool increased = config_.variant == Variant::density && previous_exact_ && rec.j_t_exact &&
                               *rec.j_t_exact > *previous_exact_;
        for (double& l : lambdas_) {
            if (stagnating) l *= 0.5;
            if (increased) l *= 2.0;
        }
    }
    if (rec.j_t_exact) previous_exact_ = rec.j_t_exact;
    rec.lambdas = lambdas_;
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

void KrotovOptimizer::iterate_density(IterationRecord& rec)
{
    const auto& spec = model_.spec();
    const auto& mus = model_.control_operators();
    const double dt = spec.dt();
    const bool manifold = config_.density.integrator == DensityIntegrator::manifold;
    std::vector<Mat> p;
    if (manifold && !step_propagators_.empty()) {
        p.resize(static_cast<std::size_t>(spec.n_steps + 1));
        p.back() = projector(model_.target());
        for (int j = spec.n_steps; j >= 1; --j) {
            const auto jj = static_cast<std::size_t>(j - 1);
            p[jj] = manifold_adjoint_step(p[jj + 1], step_propagators_[jj], control_values(controls_, j), model_, dt);
        }
    } else {
        p = backward_density_propagate(projector(model_.target()), controls_, model_, config_.density);
    }
    if (manifold) step_propagators_.resize(static_cast<std::size_t>(spec.n_steps));

    Mat rho = projector(model_.initial());
    std::vector<double> omegas(controls_.size());
    for (int j = 1; j <= spec.n_steps; ++j) {
        const auto jj = static_cast<std::size_t>(j - 1);
        for (std::size_t i = 0; i < controls_.size(); ++i) {
            const double du =
                update_increment_density(p[jj], rho, mus[i], config_.shapes[i].values[jj], lambdas_[i]);
            check_finite(du, static_cast<int>(i) + 1, j);
            controls_[i].values[jj] += du;
            last_update_[i][jj] = du;
            omegas[i] = controls_[i].values[jj];
        }
        if (manifold) {
            step_propagators_[jj] = manifold_propagator(omegas, model_, dt);
            rho = manifold_step(rho, step_propagators_[jj]);
        } else {
            rho = density_step(rho, omegas, model_, dt, config_.density);
        }
    }
    const double j_t = functional_density(DensityMatrix(rho), model_.target());
    rec.j_t_surrogate = j_t;
    rec.j_t_exact = j_t;
}

void KrotovOptimizer::forward_guess_trajectories()
{
    const int m = config_.n_trajectories;
    forward_finals_.assign(static_cast<std::size_t>(m), StateVector());
    parallel_for(m, config_.workers, [&](int k) {
        const RngStream rng(stream_seed(config_.base_seed, static_cast<std::uint64_t>(iteration_ - 1),
                                        static_cast<std::uint64_t>(k), Direction::forward));
        forward_finals_[static_cast<std::size_t>(k)] =
            mcwf_propagate(model_.initial(), controls_, model_, rng).final_state();
    });
}

void KrotovOptimizer::iterate_trajectories(IterationRecord& rec)
{
    const auto& spec = model_.spec();
    const auto& mus = model_.control_operators();
    const int m = config_.n_trajectories;
    const auto n_ctrl = controls_.size();
    const auto iter = static_cast<std::uint64_t>(iteration_);
    if (forward_finals_.empty()) forward_guess_trajectories();

    // Backward co-states under the guess controls.
    std::vector<Trajectory> backward(static_cast<std::size_t>(m));
    parallel_for(m, config_.workers, [&](int k) {
        const auto kk = static_cast<std::size_t>(k);
        const StateVector boundary = co_state_boundary(config_.variant, forward_finals_[kk], model_.target());
        backward[kk] = backward_mcwf(boundary, controls_, model_,
                                     RngStream(stream_seed(config_.base_seed, iter, kk, Direction::backward)));
    });

    // Sequential forward pass; the update on interval j is summed over all
    // trajectories in index order before any trajectory propagates interval j.
    std::vector<SparseMat> jump_ops;
    for (const auto& l : model_.lindblads()) jump_ops.push_back(l.matrix());
    std::vector<JumpStepper> steppers;
    steppers.reserve(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k)
        steppers.emplace_back(model_.initial(), jump_ops,
                              RngStream(stream_seed(config_.base_seed, iter, static_cast<std::uint64_t>(k),
                                                    Direction::forward)));

    std::vector<StateVector> psis(static_cast<std::size_t>(m));
    std::vector<StateVector> xis(static_cast<std::size_t>(m));
    std::vector<std::vector<double>> contrib(static_cast<std::size_t>(m), std::vector<double>(n_ctrl, 0.0));
    std::vector<double> omegas(n_ctrl);
    SparseMat h_eff;
    const double dt = spec.dt();

    auto collect = [&](int k, int j) {
        const auto kk = static_cast<std::size_t>(k);
        const auto jj = static_cast<std::size_t>(j - 1);
        psis[kk] = steppers[kk].normalized_state();
        xis[kk] = backward[kk].states[jj];
        if (config_.variant == Variant::independent)
            for (std::size_t i = 0; i < n_ctrl; ++i)
                contrib[kk][i] = update_increment_traj(xis[kk], psis[kk], mus[i], config_.shapes[i].values[jj],
                                                       lambdas_[i], m);
    };
    auto apply_update = [&](int j) {
        const auto jj = static_cast<std::size_t>(j - 1);
        for (std::size_t i = 0; i < n_ctrl; ++i) {
            double du = 0.0;
            if (config_.variant == Variant::independent) {
                for (int k = 0; k < m; ++k) du += contrib[static_cast<std::size_t>(k)][i];
            } else {
                const double s = config_.shapes[i].values[jj];
                if (s != 0.0) du = update_increment_cross_trace(xis, psis, mus[i], s, lambdas_[i]);
            }
            check_finite(du, static_cast<int>(i) + 1, j);
            controls_[i].values[jj] += du;
            last_update_[i][jj] = du;
            omegas[i] = controls_[i].values[jj];
        }
        h_eff = model_.effective_hamiltonian(omegas);
    };

    const int workers = std::min(config_.workers, m);
    if (workers <= 1) {
        for (int j = 1; j <= spec.n_steps; ++j) {
            for (int k = 0; k < m; ++k) collect(k, j);
            apply_update(j);
            for (auto& s : steppers) s.advance(h_eff, spec.grid_time(j - 1), dt);
        }
    } else {
        // Two barrier phases per interval: after collecting (completion applies
        // the summed update) and after propagating (completion advances the
        // interval and decides whether to stop). Only completions write the
        // shared loop state, so every worker sees the same decision.
        std::atomic<bool> failed{false};
        std::exception_ptr error;
        int current = 1;
        int phase = 0;
        bool stop = false;
        auto on_barrier = [&]() noexcept {
            if (phase == 0) {
                if (!failed.load()) {
                    try {
                        apply_update(current);
                    } catch (...) {
                        error = std::current_exception();
                        failed.store(true);
                    }
                }
                phase = 1;
            } else {
                ++current;
                stop = failed.load() || current > spec.n_steps;
                phase = 0;
            }
        };
        std::barrier sync(workers, on_barrier);
        std::vector<std::exception_ptr> worker_errors(static_cast<std::size_t>(workers));
        {
            std::vector<std::jthread> threads;
            for (int w = 0; w < workers; ++w)
                threads.emplace_back([&, w] {
                    auto guarded = [&](auto&& body) {
                        if (failed.load()) return;
                        try {
                            body();
                        } catch (...) {
                            worker_errors[static_cast<std::size_t>(w)] = std::current_exception();
                            failed.store(true);
                        }
                    };
                    while (true) {
                        const int j = current;
                        guarded([&] {
                            for (int k = w; k < m; k += workers) collect(k, j);
                        });
                        sync.arrive_and_wait();
                        guarded([&] {
                            for (int k = w; k < m; k += workers)
                                steppers[static_cast<std::size_t>(k)].advance(h_eff, spec.grid_time(j - 1), dt);
                        });
                        sync.arrive_and_wait();
                        if (stop) return;
                    }
                });
        }
        if (error) std::rethrow_exception(error);
        for (auto& e : worker_errors)
            if (e) std::rethrow_exception(e);
    }

    forward_finals_.clear();
    int jumps = 0;
    for (const auto& s : steppers) {
        forward_finals_.push_back(s.normalized_state());
        jumps += static_cast<int>(s.jumps().size());
    }
    rec.n_jumps = jumps;
    rec.j_t_surrogate = functional_trajectories(forward_finals_, model_.target());
    if (iteration_ % config_.eval_exact_every == 0 || iteration_ == config_.n_iterations)
        rec.j_t_exact = exact_error();
}

std::pair<std::vector<ControlField>, IterationRecord> krotov_iterate(const KrotovConfig& config,
                                                                     const std::vector<ControlField>& controls,
                                                                     const NetworkModel& model, int iteration_index)
{
    KrotovOptimizer opt(model, config, controls, iteration_index);
    IterationRecord rec = opt.iterate();
    return {opt.controls(), std::move(rec)};
}

OptimizationResult optimize(const KrotovConfig& config, const std::vector<ControlField>& guess,
                            const NetworkModel& model, const IterationCallback& callback)
{
    OptimizationResult result;
    KrotovOptimizer opt(model, config, guess);
    result.controls = guess;
    if (config.n_iterations == 0) {
        result.initial_error = opt.exact_error();
        return result;
    }
    try {
        result.initial_error = opt.exact_error();
        for (int n = 0; n < config.n_iterations; ++n) {
            IterationRecord rec = opt.iterate();
            if (callback) callback(rec);
            result.records.push_back(std::move(rec));
            result.controls = opt.controls();
        }
    } catch (const std::exception& e) {
        result.error = e.what();
    }
    return result;
}

}  // namespace trajkrotov
