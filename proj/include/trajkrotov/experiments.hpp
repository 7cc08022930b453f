#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "trajkrotov/analysis.hpp"
#include "trajkrotov/config.hpp"
#include "trajkrotov/krotov.hpp"

namespace trajkrotov {

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "TRAJKROTOV_OUTPUT_DIR";

/// Built-in defaults with the output directory taken from the environment
/// when set.
RunConfig default_run_config();

/// Runs the optimizer and writes into `out_dir`:
///   guess_node<i>.dat, pulse_node<i>.dat  control pulses
///   convergence.csv                      per-iteration log (row 0 = guess)
///   timing.csv                           wall-clock time per iteration
///   effective.cfg                        resolved configuration
/// Outputs are written even if the optimizer aborts; the error is then
/// returned in the result. `guess` overrides the Blackman guess.
OptimizationResult run_optimize(const RunConfig& config, const std::filesystem::path& out_dir,
                                std::ostream* log = nullptr,
                                const std::optional<std::vector<ControlField>>& guess = std::nullopt);

enum class SimulationMethod { density, mcwf };
SimulationMethod parse_method(const std::string& name);

struct SimulationOptions {
    SimulationMethod method = SimulationMethod::density;
    int n_trajectories = 1000;
    /// Number of individual trajectories written as amplitude CSVs.
    int export_trajectories = 10;
};

struct SimulationSummary {
    DynamicsRecord dynamics;
    double max_decay_rate = 0.0;
    std::vector<double> final_atom_excitation;
    double final_error = 0.0;
    /// Time of maximal total cavity population and the phase-opposition
    /// deviation there (density method with at least two nodes).
    std::optional<double> peak_cavity_time;
    std::optional<double> phase_opposition;
    /// Total jumps over all trajectories (mcwf).
    int n_jumps = 0;
};

/// Propagates the initial state under `pulses` and writes dynamics.csv and
/// summary.csv; the mcwf method also writes jumps.csv and trajectory_<k>.csv.
SimulationSummary run_simulate(const RunConfig& config, const std::vector<ControlField>& pulses,
                               const SimulationOptions& options, const std::filesystem::path& out_dir);

/// Reads pulse_node<i>.dat from `dir`, rejecting files off the config grid.
std::vector<ControlField> load_pulses(const std::filesystem::path& dir, const NetworkSpec& spec);

struct NoiseRun {
    Variant variant;
    int m;
    std::uint64_t seed;
    std::vector<double> nu;
    double final_error;
};

struct NoiseFit {
    Variant variant;
    int control;
    PowerLawFit fit;
};

struct NoiseScanResult {
    std::vector<NoiseRun> runs;
    /// Seed-averaged nu, [variant][M][control] flattened in `runs` order of
    /// first appearance.
    struct Mean {
        Variant variant;
        int m;
        std::vector<double> nu;
        double final_error;
    };
    std::vector<Mean> means;
    std::vector<NoiseFit> fits;
};

/// For every variant, M in config.noise.m_list and seed in config.noise.seeds,
/// runs run_optimize (in <out_dir>/runs/<variant>_M<m>_s<seed>) and measures
/// the pulse noise. Power laws are fitted to the seed-averaged noise per
/// control. Writes noise.csv, noise_mean.csv and noise_fit.csv. The cross
/// variant skips M = 1.
NoiseScanResult run_noise_scan(const RunConfig& config, const std::vector<Variant>& variants,
                               const std::filesystem::path& out_dir, std::ostream* log = nullptr);

struct OracleCheck {
    std::string module;
    std::string name;
    bool passed;
    std::string detail;
};

/// Self-contained numerical checks of every module against independent
/// reference computations. `quick` reduces sample counts.
std::vector<OracleCheck> run_oracles(bool quick = false);

}  // namespace trajkrotov
