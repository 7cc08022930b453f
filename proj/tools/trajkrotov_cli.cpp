// Command-line front end: simulate, optimize, noise-scan, validate.

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trajkrotov/experiments.hpp"

using namespace trajkrotov;
namespace fs = std::filesystem;

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::string> variant;
    std::optional<int> n_traj;
    std::optional<int> iterations;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> output_dir;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_variant = true)
{
    cmd->add_option("--config", o.config_path, "Configuration file (key = value lines)")->check(CLI::ExistingFile);
    if (with_variant) cmd->add_option("--variant", o.variant, "density, independent or cross");
    cmd->add_option("--n-traj", o.n_traj, "Number of trajectories M");
    cmd->add_option("--iterations", o.iterations, "Krotov iterations");
    cmd->add_option("--seed", o.seed, "Base random seed");
    cmd->add_option("--workers", o.workers, "Worker threads for trajectory propagation");
    cmd->add_option("--output-dir", o.output_dir, std::string("Output directory (default: config output.dir, $") +
                                                      kOutputDirEnv + ", or ./output)");
    cmd->add_option("--set", o.overrides, "Override any config key, as key=value")->take_all();
}

RunConfig resolve_config(const CommonOptions& o)
{
    RunConfig config = default_run_config();
    if (!o.config_path.empty()) config = load_config(o.config_path, config);
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ParseError("--set expects key=value, got '" + kv + "'");
        apply_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.variant) apply_config_value(config, "krotov.variant", *o.variant);
    if (o.n_traj) config.n_trajectories = *o.n_traj;
    if (o.iterations) config.n_iterations = *o.iterations;
    if (o.seed) config.seed = *o.seed;
    if (o.workers) config.workers = *o.workers;
    if (o.output_dir) config.output_dir = *o.output_dir;
    config.validate();
    return config;
}

std::vector<int> parse_int_list(const std::string& text)
{
    RunConfig scratch;
    apply_config_value(scratch, "noise.m_list", text);
    return scratch.noise.m_list;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text)
{
    RunConfig scratch;
    apply_config_value(scratch, "noise.seeds", text);
    return scratch.noise.seeds;
}

std::vector<Variant> parse_variant_list(const std::string& text)
{
    std::vector<Variant> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(parse_variant(item));
    return out;
}

int cmd_optimize(const CommonOptions& o)
{
    const RunConfig config = resolve_config(o);
    std::cout << "optimize: variant " << to_string(config.variant) << ", " << config.n_iterations
              << " iterations -> " << config.output_dir.string() << "\n";
    const auto result = run_optimize(config, config.output_dir, &std::cout);
    if (!result.error.empty()) {
        std::cerr << "error: " << result.error << " (partial outputs kept)\n";
        return 1;
    }
    double final_error = result.initial_error;
    for (const auto& rec : result.records)
        if (rec.j_t_exact) final_error = *rec.j_t_exact;
    std::cout << "initial error " << result.initial_error << ", final error " << final_error << "\n";
    return 0;
}

int cmd_simulate(const CommonOptions& o, const std::string& pulses_dir, const std::string& method, bool guess)
{
    const RunConfig config = resolve_config(o);
    SimulationOptions options;
    options.method = parse_method(method);
    if (o.n_traj) options.n_trajectories = *o.n_traj;
    std::vector<ControlField> pulses;
    if (guess)
        pulses = config.guess_controls();
    else
        pulses = load_pulses(pulses_dir.empty() ? config.output_dir : fs::path(pulses_dir), config.network);
    const fs::path out = config.output_dir / "simulate";
    const auto summary = run_simulate(config, pulses, options, out);
    std::cout << "simulate (" << method << ") -> " << out.string() << "\n"
              << "final error " << summary.final_error << ", max <L^dagger L> " << summary.max_decay_rate << "\n";
    for (std::size_t i = 0; i < summary.final_atom_excitation.size(); ++i)
        std::cout << "final <Pi_e(" << i + 1 << ")> " << summary.final_atom_excitation[i] << "\n";
    if (summary.phase_opposition)
        std::cout << "cavity phase opposition deviation " << *summary.phase_opposition << " at t = "
                  << *summary.peak_cavity_time << "\n";
    return 0;
}

int cmd_noise_scan(const CommonOptions& o, const std::string& m_list, const std::string& seeds,
                   const std::string& variants)
{
    RunConfig config = resolve_config(o);
    if (!m_list.empty()) config.noise.m_list = parse_int_list(m_list);
    if (!seeds.empty()) config.noise.seeds = parse_seed_list(seeds);
    config.validate();
    const auto result = run_noise_scan(config, parse_variant_list(variants), config.output_dir, &std::cout);
    for (const auto& f : result.fits)
        std::cout << to_string(f.variant) << " control " << f.control << ": nu ~ M^" << f.fit.exponent << "\n";
    return 0;
}

int cmd_validate(bool quick)
{
    const auto checks = run_oracles(quick);
    int failed = 0;
    for (const auto& c : checks) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.module << ": " << c.name << " (" << c.detail << ")\n";
        failed += c.passed ? 0 : 1;
    }
    std::cout << checks.size() - static_cast<std::size_t>(failed) << "/" << checks.size() << " checks passed\n";
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Trajectory-based Krotov optimal control for cascaded quantum networks"};
    app.require_subcommand(1);

    CommonOptions optimize_opts, simulate_opts, noise_opts;

    auto* optimize = app.add_subcommand("optimize", "Optimize the control pulses");
    add_common(optimize, optimize_opts);

    auto* simulate = app.add_subcommand("simulate", "Propagate under saved pulses and record the dynamics");
    add_common(simulate, simulate_opts, false);
    std::string pulses_dir, method = "density";
    bool use_guess = false;
    simulate->add_option("--pulses", pulses_dir, "Directory with pulse_node<i>.dat (default: output dir)");
    simulate->add_option("--method", method, "density or mcwf")->check(CLI::IsMember({"density", "mcwf"}));
    simulate->add_flag("--guess", use_guess, "Use the guess pulses instead of pulse files");

    auto* noise = app.add_subcommand("noise-scan", "Pulse noise against the number of trajectories");
    add_common(noise, noise_opts, false);
    std::string m_list, seeds, variants = "independent";
    noise->add_option("--m-list", m_list, "Comma-separated trajectory counts");
    noise->add_option("--seeds", seeds, "Comma-separated base seeds");
    noise->add_option("--variant", variants, "Comma-separated trajectory variants");

    auto* validate = app.add_subcommand("validate", "Run the numerical self-checks");
    bool quick = false;
    validate->add_flag("--quick", quick, "Smaller statistical samples");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*optimize) return cmd_optimize(optimize_opts);
        if (*simulate) return cmd_simulate(simulate_opts, pulses_dir, method, use_guess);
        if (*noise) return cmd_noise_scan(noise_opts, m_list, seeds, variants);
        if (*validate) return cmd_validate(quick);
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
