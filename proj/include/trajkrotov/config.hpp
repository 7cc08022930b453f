#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "trajkrotov/krotov.hpp"
#include "trajkrotov/network.hpp"

namespace trajkrotov {

/// Malformed configuration or data file. The message names the file, the
/// line (when known) and the offending key or field.
class ParseError : public ContractError {
public:
    using ContractError::ContractError;
};

struct GuessConfig {
    double peak = 200.0;
    std::string shape = "blackman";
};

struct NoiseConfig {
    int window = 5;
    int order = 3;
    std::vector<int> m_list{1, 2, 4, 8, 16, 32};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

/// Everything needed to reproduce one experiment. Text form is a flat list
/// of `section.key = value` lines; `#` starts a comment.
struct RunConfig {
    NetworkSpec network;
    GuessConfig guess;
    Variant variant = Variant::density;
    /// One value shared by all controls, or one per control.
    std::vector<double> lambdas{1e-2};
    double flank_fraction = 0.1;
    int n_iterations = 100;
    int n_trajectories = 1;
    int eval_exact_every = 10;
    bool adapt_lambda = true;
    int workers = 1;
    DensityOptions density{};
    NoiseConfig noise;
    std::filesystem::path output_dir = "output";
    std::uint64_t seed = 0;

    void validate() const;
    KrotovConfig krotov_config() const;
    std::vector<ControlField> guess_controls() const;

    /// Canonical text with every default resolved.
    std::string to_text() const;
    /// FNV-1a 64-bit hash of `to_text()`, as 16 hex digits.
    std::string hash() const;
};

/// Keys that must be present in every config file.
const std::vector<std::string>& required_config_keys();

/// Keys absent from the text keep their value from `base`.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>",
                       const RunConfig& base = RunConfig{});
RunConfig load_config(const std::filesystem::path& path, const RunConfig& base = RunConfig{});
/// Apply a single `key = value` override (as from a CLI flag).
void apply_config_value(RunConfig& config, const std::string& key, const std::string& value);

std::string fnv1a_hex(const std::string& text);
/// Hash of the network parameters only; ties pulse files to a grid.
std::string spec_hash(const NetworkSpec& spec);

/// 17 significant digits, which round-trips every double exactly.
std::string format_double(double v);

void save_pulse(const std::filesystem::path& path, const ControlField& pulse, const NetworkSpec& spec);
/// Load a pulse file; if `spec` is non-null the grid (row count, duration,
/// midpoint times) must match it.
ControlField load_pulse(const std::filesystem::path& path, const NetworkSpec* spec = nullptr);

std::filesystem::path pulse_filename(const std::filesystem::path& dir, int node);

}  // namespace trajkrotov
