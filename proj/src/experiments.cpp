#include "trajkrotov/experiments.hpp"
#include "trajkrotov/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>

namespace trajkrotov {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write " + path.string());
    return out;
}

void write_header(std::ostream& out, const RunConfig& config)
{
    out << "# config_hash: " << config.hash() << "\n";
}

std::string fmt(double v)
{
    return format_double(v);
}

void write_effective_config(const fs::path& path, const RunConfig& config)
{
    auto out = open_output(path);
    out << "# config_hash: " << config.hash() << "\n"
        << config.to_text() << "krotov.workers = " << config.workers << "\n"
        << "output.dir = " << config.output_dir.string() << "\n";
}

}  // namespace

RunConfig default_run_config()
{
    RunConfig config;
    if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) config.output_dir = dir;
    return config;
}

OptimizationResult run_optimize(const RunConfig& config, const fs::path& out_dir, std::ostream* log,
                                const std::optional<std::vector<ControlField>>& guess)
{
    const KrotovConfig kc = config.krotov_config();
    const NetworkModel model(config.network);
    const std::vector<ControlField> start = guess ? *guess : config.guess_controls();
    check_controls(start, config.network);

    fs::create_directories(out_dir);
    write_effective_config(out_dir / "effective.cfg", config);
    for (const auto& c : start)
        save_pulse(out_dir / ("guess_node" + std::to_string(c.node_index) + ".dat"), c, config.network);

    auto conv = open_output(out_dir / "convergence.csv");
    auto timing = open_output(out_dir / "timing.csv");
    write_header(conv, config);
    write_header(timing, config);
    conv << "# variant: " << to_string(kc.variant) << "\n"
         << "iteration,j_t_surrogate,j_t_exact,pulse_update_norm,n_jumps";
    for (int i = 1; i <= config.network.n_nodes; ++i) conv << ",lambda_" << i;
    conv << "\n";
    timing << "iteration,wall_time\n";

    auto write_row = [&](const IterationRecord& rec) {
        conv << rec.iteration << ',' << fmt(rec.j_t_surrogate) << ',' << (rec.j_t_exact ? fmt(*rec.j_t_exact) : "")
             << ',' << fmt(rec.pulse_update_norm) << ',' << rec.n_jumps;
        for (double l : rec.lambdas) conv << ',' << fmt(l);
        conv << "\n";
        conv.flush();
        timing << rec.iteration << ',' << fmt(rec.wall_time) << "\n";
        if (log && (rec.iteration % 10 == 0 || rec.iteration == kc.n_iterations || rec.iteration == 1)) {
            *log << "iteration " << rec.iteration << "  J_T=" << rec.j_t_surrogate;
            if (rec.j_t_exact) *log << "  exact=" << *rec.j_t_exact;
            *log << "  |du|=" << rec.pulse_update_norm << "\n";
            log->flush();
        }
    };

    OptimizationResult result;
    result.controls = start;
    try {
        KrotovOptimizer opt(model, kc, start);
        result.initial_error = opt.exact_error();
        conv << "0," << fmt(result.initial_error) << ',' << fmt(result.initial_error) << ",0,0";
        for (double l : kc.lambdas) conv << ',' << fmt(l);
        conv << "\n";
        for (int n = 0; n < kc.n_iterations; ++n) {
            IterationRecord rec = opt.iterate();
            write_row(rec);
            result.records.push_back(std::move(rec));
            result.controls = opt.controls();
        }
    } catch (const std::exception& e) {
        result.error = e.what();
    }

    for (const auto& c : result.controls) save_pulse(pulse_filename(out_dir, c.node_index), c, config.network);
    if (log && !result.error.empty()) *log << "optimization aborted: " << result.error << "\n";
    return result;
}

SimulationMethod parse_method(const std::string& name)
{
    if (name == "density") return SimulationMethod::density;
    if (name == "mcwf") return SimulationMethod::mcwf;
    throw ContractError("unknown simulation method '" + name + "' (expected density or mcwf)");
}

std::vector<ControlField> load_pulses(const fs::path& dir, const NetworkSpec& spec)
{
    std::vector<ControlField> out;
    for (int i = 1; i <= spec.n_nodes; ++i) {
        ControlField c = load_pulse(pulse_filename(dir, i), &spec);
        c.node_index = i;
        out.push_back(std::move(c));
    }
    return out;
}

namespace {

void write_dynamics(const fs::path& path, const DynamicsRecord& rec, const RunConfig& config,
                    const std::string& method)
{
    auto out = open_output(path);
    write_header(out, config);
    out << "# method: " << method << "\n" << "t";
    const auto n = rec.atom_excitation.size();
    for (std::size_t i = 1; i <= n; ++i) out << ",atom_" << i;
    for (std::size_t i = 1; i <= n; ++i) out << ",cavity_" << i;
    out << ",decay_rate,vacuum\n";
    for (std::size_t j = 0; j < rec.times.size(); ++j) {
        out << fmt(rec.times[j]);
        for (const auto& a : rec.atom_excitation) out << ',' << fmt(a[j]);
        for (const auto& c : rec.cavity_number) out << ',' << fmt(c[j]);
        out << ',' << fmt(rec.decay_rate[j]) << ',' << fmt(rec.vacuum_population[j]) << "\n";
    }
}

void write_trajectory(const fs::path& path, const Trajectory& traj, const NetworkSpec& spec, const RunConfig& config)
{
    auto out = open_output(path);
    write_header(out, config);
    out << "# rng_seed: " << traj.rng_seed << "\n" << "t";
    for (Eigen::Index b = 0; b < spec.dim(); ++b) out << ",re_" << b << ",im_" << b;
    out << ",norm_squared,jumps\n";
    std::size_t next_jump = 0;
    for (std::size_t j = 0; j < traj.states.size(); ++j) {
        const double t = spec.grid_time(static_cast<int>(j));
        while (next_jump < traj.jumps.size() && traj.jumps[next_jump].time <= t) ++next_jump;
        out << fmt(t);
        const Vec& psi = traj.states[j].amplitudes();
        for (Eigen::Index b = 0; b < psi.size(); ++b) out << ',' << fmt(psi(b).real()) << ',' << fmt(psi(b).imag());
        out << ',' << fmt(traj.norms[j]) << ',' << next_jump << "\n";
    }
}

void accumulate(DynamicsRecord& sum, const DynamicsRecord& rec)
{
    for (std::size_t i = 0; i < sum.atom_excitation.size(); ++i)
        for (std::size_t j = 0; j < sum.times.size(); ++j) {
            sum.atom_excitation[i][j] += rec.atom_excitation[i][j];
            sum.cavity_number[i][j] += rec.cavity_number[i][j];
        }
    for (std::size_t j = 0; j < sum.times.size(); ++j) {
        sum.decay_rate[j] += rec.decay_rate[j];
        sum.vacuum_population[j] += rec.vacuum_population[j];
    }
}

void scale(DynamicsRecord& rec, double s)
{
    for (auto& a : rec.atom_excitation)
        for (double& v : a) v *= s;
    for (auto& c : rec.cavity_number)
        for (double& v : c) v *= s;
    for (double& v : rec.decay_rate) v *= s;
    for (double& v : rec.vacuum_population) v *= s;
}

}  // namespace

SimulationSummary run_simulate(const RunConfig& config, const std::vector<ControlField>& pulses,
                               const SimulationOptions& options, const fs::path& out_dir)
{
    config.validate();
    check_controls(pulses, config.network);
    require(options.n_trajectories >= 1, "simulate: n_trajectories must be >= 1");
    const NetworkModel model(config.network);
    const auto& spec = model.spec();
    fs::create_directories(out_dir);

    SimulationSummary summary;
    std::string method;
    if (options.method == SimulationMethod::density) {
        method = "density";
        const auto history = density_propagate(DensityMatrix::from_state(model.initial()), pulses, model, config.density);
        summary.dynamics = dynamics_record(history, model);
        summary.final_error = functional_density(history.back(), model.target());
        if (spec.n_nodes >= 2) {
            std::size_t peak = 0;
            double best = -1.0;
            for (std::size_t j = 0; j < history.size(); ++j) {
                double total = 0.0;
                for (const auto& c : summary.dynamics.cavity_number) total += c[j];
                if (total > best) {
                    best = total;
                    peak = j;
                }
            }
            summary.peak_cavity_time = summary.dynamics.times[peak];
            if (best > 0.0) summary.phase_opposition = cavity_phase_opposition(history[peak].matrix(), spec);
        }
    } else {
        method = "mcwf";
        const int m = options.n_trajectories;
        const auto n_points = static_cast<std::size_t>(spec.n_steps + 1);
        DynamicsRecord sum;
        std::vector<StateVector> finals;
        auto jumps_out = open_output(out_dir / "jumps.csv");
        write_header(jumps_out, config);
        jumps_out << "trajectory,time,operator\n";
        // fixed-size blocks keep memory bounded; reduction is in trajectory order
        constexpr int block = 256;
        for (int start = 0; start < m; start += block) {
            const int count = std::min(block, m - start);
            std::vector<Trajectory> trajs(static_cast<std::size_t>(count));
            parallel_for(count, config.workers, [&](int b) {
                const auto k = static_cast<std::uint64_t>(start + b);
                trajs[static_cast<std::size_t>(b)] = mcwf_propagate(
                    model.initial(), pulses, model, RngStream(stream_seed(config.seed, 0, k, Direction::forward)));
            });
            for (int b = 0; b < count; ++b) {
                const auto& traj = trajs[static_cast<std::size_t>(b)];
                const int k = start + b;
                const auto rec = dynamics_record(traj, model);
                if (k == 0)
                    sum = rec;
                else
                    accumulate(sum, rec);
                finals.push_back(traj.final_state());
                summary.n_jumps += static_cast<int>(traj.jumps.size());
                for (const auto& jr : traj.jumps) jumps_out << k << ',' << fmt(jr.time) << ',' << jr.operator_index << "\n";
                if (k < options.export_trajectories)
                    write_trajectory(out_dir / ("trajectory_" + std::to_string(k) + ".csv"), traj, spec, config);
            }
        }
        require(sum.times.size() == n_points, "simulate: unexpected record length");
        scale(sum, 1.0 / m);
        summary.dynamics = std::move(sum);
        summary.final_error = functional_trajectories(finals, model.target());
    }

    summary.max_decay_rate = *std::max_element(summary.dynamics.decay_rate.begin(), summary.dynamics.decay_rate.end());
    for (const auto& a : summary.dynamics.atom_excitation) summary.final_atom_excitation.push_back(a.back());
    write_dynamics(out_dir / "dynamics.csv", summary.dynamics, config, method);

    auto out = open_output(out_dir / "summary.csv");
    write_header(out, config);
    out << "key,value\n" << "method," << method << "\n";
    if (options.method == SimulationMethod::mcwf) out << "n_trajectories," << options.n_trajectories << "\n";
    out << "final_error," << fmt(summary.final_error) << "\n"
        << "max_decay_rate," << fmt(summary.max_decay_rate) << "\n";
    for (std::size_t i = 0; i < summary.final_atom_excitation.size(); ++i)
        out << "final_atom_" << i + 1 << ',' << fmt(summary.final_atom_excitation[i]) << "\n";
    if (summary.peak_cavity_time) out << "peak_cavity_time," << fmt(*summary.peak_cavity_time) << "\n";
    if (summary.phase_opposition) out << "phase_opposition," << fmt(*summary.phase_opposition) << "\n";
    if (options.method == SimulationMethod::mcwf) out << "n_jumps," << summary.n_jumps << "\n";
    return summary;
}

NoiseScanResult run_noise_scan(const RunConfig& config, const std::vector<Variant>& variants, const fs::path& out_dir,
                               std::ostream* log)
{
    config.validate();
    require(config.noise.m_list.size() >= 3, "noise-scan: m-list needs at least three entries");
    require(!config.noise.seeds.empty(), "noise-scan: need at least one seed");
    require(!variants.empty(), "noise-scan: no variants");
    for (Variant v : variants) require(v != Variant::density, "noise-scan: trajectory variants only");
    fs::create_directories(out_dir);

    const int n_controls = config.network.n_nodes;
    NoiseScanResult result;
    for (Variant v : variants) {
        for (int m : config.noise.m_list) {
            if (v == Variant::cross && m < 2) continue;
            NoiseScanResult::Mean mean{v, m, std::vector<double>(static_cast<std::size_t>(n_controls), 0.0), 0.0};
            for (std::uint64_t seed : config.noise.seeds) {
                RunConfig run = config;
                run.variant = v;
                run.n_trajectories = m;
                run.seed = seed;
                const std::string name = to_string(v) + "_M" + std::to_string(m) + "_s" + std::to_string(seed);
                if (log) *log << "noise-scan: " << name << "\n";
                const auto opt = run_optimize(run, out_dir / "runs" / name, nullptr);
                if (!opt.error.empty()) throw NumericalError("noise-scan run " + name + " failed: " + opt.error);
                const auto report = noise_report(opt.controls, config.noise.window, config.noise.order);
                double final_error = opt.initial_error;
                for (const auto& rec : opt.records)
                    if (rec.j_t_exact) final_error = *rec.j_t_exact;
                result.runs.push_back({v, m, seed, report.nu, final_error});
                for (int i = 0; i < n_controls; ++i)
                    mean.nu[static_cast<std::size_t>(i)] += report.nu[static_cast<std::size_t>(i)];
                mean.final_error += final_error;
            }
            const double n_seeds = static_cast<double>(config.noise.seeds.size());
            for (double& x : mean.nu) x /= n_seeds;
            mean.final_error /= n_seeds;
            result.means.push_back(std::move(mean));
        }
        for (int i = 0; i < n_controls; ++i) {
            std::vector<double> ms, nus;
            for (const auto& mean : result.means)
                if (mean.variant == v) {
                    ms.push_back(mean.m);
                    nus.push_back(mean.nu[static_cast<std::size_t>(i)]);
                }
            if (ms.size() >= 3) result.fits.push_back({v, i + 1, fit_power_law(ms, nus)});
        }
    }

    auto runs = open_output(out_dir / "noise.csv");
    write_header(runs, config);
    runs << "# filter: savitzky-golay window " << config.noise.window << " order " << config.noise.order << "\n"
         << "variant,M,seed";
    for (int i = 1; i <= n_controls; ++i) runs << ",nu_" << i;
    runs << ",j_t_exact\n";
    for (const auto& r : result.runs) {
        runs << to_string(r.variant) << ',' << r.m << ',' << r.seed;
        for (double x : r.nu) runs << ',' << fmt(x);
        runs << ',' << fmt(r.final_error) << "\n";
    }

    auto means = open_output(out_dir / "noise_mean.csv");
    write_header(means, config);
    means << "variant,M";
    for (int i = 1; i <= n_controls; ++i) means << ",nu_" << i;
    means << ",j_t_exact\n";
    for (const auto& r : result.means) {
        means << to_string(r.variant) << ',' << r.m;
        for (double x : r.nu) means << ',' << fmt(x);
        means << ',' << fmt(r.final_error) << "\n";
    }

    auto fits = open_output(out_dir / "noise_fit.csv");
    write_header(fits, config);
    fits << "variant,control,exponent,prefactor,residual\n";
    for (const auto& f : result.fits)
        fits << to_string(f.variant) << ',' << f.control << ',' << fmt(f.fit.exponent) << ',' << fmt(f.fit.prefactor)
             << ',' << fmt(f.fit.residual) << "\n";
    return result;
}

}  // namespace trajkrotov
