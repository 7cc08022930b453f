#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "trajkrotov/experiments.hpp"

using namespace trajkrotov;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("trajkrotov_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string error_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const ContractError& e) {
        return e.what();
    }
    return "";
}

const char* kMinimal = "network.n_nodes = 2\n"
                       "network.duration = 5\n"
                       "network.n_steps = 200\n"
                       "krotov.variant = independent\n";

RunConfig small_config()
{
    RunConfig c = parse_config(kMinimal);
    c.n_trajectories = 2;
    c.n_iterations = 3;
    c.eval_exact_every = 2;
    c.seed = 9;
    return c;
}

}  // namespace

TEST_CASE("config text round trip")
{
    RunConfig c = parse_config(std::string(kMinimal) +
                               "network.kappa = 0.3\nkrotov.lambda = 0.1, 0.2\nnoise.m_list = 1,3,9\n"
                               "seed = 18446744073709551615\nguess.peak = 123.456789012345678\n");
    CHECK(c.network.kappa == 0.3);
    CHECK(c.lambdas == std::vector<double>{0.1, 0.2});
    CHECK(c.noise.m_list == std::vector<int>{1, 3, 9});
    CHECK(c.seed == 18446744073709551615ull);
    const RunConfig back = parse_config(c.to_text());
    CHECK(back.to_text() == c.to_text());
    CHECK(back.hash() == c.hash());
    CHECK(back.guess.peak == c.guess.peak);
    CHECK(c.hash().size() == 16);

    RunConfig other = c;
    other.network.kappa = 0.31;
    CHECK(other.hash() != c.hash());
    // worker count and output location do not change the experiment
    other = c;
    other.workers = 4;
    other.output_dir = "elsewhere";
    CHECK(other.hash() == c.hash());
}

TEST_CASE("config parse errors")
{
    CHECK(error_of([] { parse_config("network.n_nodes = 2\nnetwork.duration = 5\nkrotov.variant = density\n"); })
              .find("missing required field 'network.n_steps'") != std::string::npos);

    const std::string bad_value = error_of([] {
        parse_config(std::string(kMinimal) + "# comment\nnetwork.kappa = fast\n", "run.cfg");
    });
    CHECK(bad_value.find("run.cfg:6:") != std::string::npos);
    CHECK(bad_value.find("network.kappa") != std::string::npos);

    CHECK(error_of([] { parse_config(std::string(kMinimal) + "network.colour = red\n"); })
              .find(":5: unknown config key 'network.colour'") != std::string::npos);
    CHECK(error_of([] { parse_config(std::string(kMinimal) + "network.n_steps = 300\n"); })
              .find(":5: duplicate key 'network.n_steps'") != std::string::npos);
    CHECK(error_of([] { parse_config("network.n_nodes 2\n"); }).find(":1: expected 'key = value'") !=
          std::string::npos);
    CHECK_FALSE(error_of([] { parse_config(std::string(kMinimal) + "network.n_steps_typo = 1\n"); }).empty());
    // embedded constraints are re-validated on load
    CHECK_FALSE(error_of([] { parse_config(std::string(kMinimal) + "network.kappa = -1\n"); }).empty());
    CHECK_FALSE(error_of([] { parse_config(std::string(kMinimal) + "krotov.lambda = 0\n"); }).empty());
    CHECK_FALSE(error_of([] {
        parse_config("network.n_nodes = 2\nnetwork.duration = 5\nnetwork.n_steps = 200\nkrotov.variant = cross\n");
    }).empty());
    CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), ParseError);
}

TEST_CASE("presets load")
{
    const fs::path presets = fs::path(TRAJKROTOV_SOURCE_DIR) / "presets";
    const RunConfig two = load_config(presets / "two-node.cfg");
    CHECK(two.network.n_nodes == 2);
    CHECK(two.network.duration == 5.0);
    CHECK(two.network.n_steps == 1000);
    CHECK(two.n_iterations == 5000);
    const RunConfig twenty = load_config(presets / "twenty-node.cfg");
    CHECK(twenty.network.n_nodes == 20);
    CHECK(twenty.network.duration == 50.0);
    CHECK(twenty.network.dim() == 41);
}

TEST_CASE("pulse file round trip")
{
    const fs::path dir = scratch_dir("pulse");
    NetworkSpec spec;
    spec.n_steps = 333;
    const ControlField guess = blackman_guess(spec, 200.0, 2);
    save_pulse(pulse_filename(dir, 2), guess, spec);
    const ControlField back = load_pulse(pulse_filename(dir, 2), &spec);
    CHECK(back.node_index == 2);
    CHECK(back.duration == spec.duration);
    REQUIRE(back.values.size() == guess.values.size());
    double max_diff = 0.0;
    for (std::size_t j = 0; j < guess.values.size(); ++j)
        max_diff = std::max(max_diff, std::abs(back.values[j] - guess.values[j]));
    CHECK(max_diff == 0.0);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    ControlField random{1, spec.duration, std::vector<double>(333)};
    for (double& v : random.values) v = u(rng) * std::pow(10.0, static_cast<int>(u(rng)) % 20);
    save_pulse(pulse_filename(dir, 1), random, spec);
    CHECK(load_pulse(pulse_filename(dir, 1)).values == random.values);

    const std::string text = slurp(pulse_filename(dir, 1));
    CHECK(text.find("# spec_hash: " + spec_hash(spec)) != std::string::npos);
    CHECK(text.find("# node: 1") != std::string::npos);
}

TEST_CASE("pulse files off the grid are rejected")
{
    const fs::path dir = scratch_dir("grid");
    NetworkSpec spec;
    spec.n_steps = 100;
    NetworkSpec other = spec;
    other.n_steps = 120;
    save_pulse(dir / "p.dat", blackman_guess(other, 200.0), other);
    const std::string msg = error_of([&] { load_pulse(dir / "p.dat", &spec); });
    CHECK(msg.find("expected n_t=100") != std::string::npos);
    CHECK(msg.find("got n_t=120") != std::string::npos);

    {
        std::ofstream out(dir / "bad.dat");
        out << "# hand written\n0.025 1.0\n0.075 2.0 3.0\n";
    }
    CHECK(error_of([&] { load_pulse(dir / "bad.dat"); }).find(":3:") != std::string::npos);
    {
        std::ofstream out(dir / "order.dat");
        out << "0.075 1.0\n0.025 2.0\n";
    }
    CHECK(error_of([&] { load_pulse(dir / "order.dat"); }).find("strictly increasing") != std::string::npos);
    CHECK_THROWS_AS(load_pulses(dir, spec), ParseError);
}

TEST_CASE("zero iterations write the guess unchanged")
{
    const fs::path dir = scratch_dir("zero");
    RunConfig c = small_config();
    c.n_iterations = 0;
    const auto result = run_optimize(c, dir);
    CHECK(result.error.empty());
    CHECK(result.records.empty());
    for (int i = 1; i <= 2; ++i) {
        const std::string guess = slurp(dir / ("guess_node" + std::to_string(i) + ".dat"));
        CHECK(!guess.empty());
        CHECK(slurp(pulse_filename(dir, i)) == guess);
    }
}

TEST_CASE("optimize outputs are byte-identical on rerun")
{
    const fs::path a = scratch_dir("rerun_a"), b = scratch_dir("rerun_b");
    RunConfig c = small_config();
    run_optimize(c, a);
    c.workers = 2;
    run_optimize(c, b);
    for (const char* name : {"convergence.csv", "pulse_node1.dat", "pulse_node2.dat", "guess_node1.dat"})
        CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name);

    const std::string conv = slurp(a / "convergence.csv");
    CHECK(conv.rfind("# config_hash: " + c.hash() + "\n", 0) == 0);
    CHECK(conv.find("iteration,j_t_surrogate,j_t_exact,pulse_update_norm,n_jumps,lambda_1,lambda_2\n") !=
          std::string::npos);
    CHECK(conv.find("\n0,") != std::string::npos);
    CHECK(conv.find("\n3,") != std::string::npos);
    CHECK(slurp(a / "timing.csv").rfind("# config_hash: ", 0) == 0);

    // the effective config reproduces the run
    const RunConfig again = load_config(a / "effective.cfg");
    CHECK(again.hash() == c.hash());
}

TEST_CASE("output directory default from the environment")
{
    ::setenv(kOutputDirEnv, "/tmp/from_env", 1);
    CHECK(default_run_config().output_dir == fs::path("/tmp/from_env"));
    ::unsetenv(kOutputDirEnv);
    CHECK(default_run_config().output_dir == fs::path("output"));
}

TEST_CASE("simulate with zero pulses keeps the first atom excited")
{
    const fs::path dir = scratch_dir("simulate");
    RunConfig c = small_config();
    std::vector<ControlField> zero;
    for (int i = 1; i <= 2; ++i) zero.push_back(ControlField{i, 5.0, std::vector<double>(200, 0.0)});

    for (auto method : {SimulationMethod::density, SimulationMethod::mcwf}) {
        SimulationOptions options;
        options.method = method;
        options.n_trajectories = 20;
        options.export_trajectories = 2;
        const auto summary = run_simulate(c, zero, options, dir);
        for (double p : summary.dynamics.atom_excitation[0]) REQUIRE(std::abs(p - 1.0) <= 1e-12);
        for (double p : summary.dynamics.atom_excitation[1]) REQUIRE(std::abs(p) <= 1e-12);
        CHECK(summary.max_decay_rate <= 1e-24);
        CHECK(summary.n_jumps == 0);
        CHECK(summary.final_error == doctest::Approx(0.5).epsilon(1e-12));
    }
    for (const char* name : {"dynamics.csv", "summary.csv", "jumps.csv", "trajectory_0.csv", "trajectory_1.csv"}) {
        CHECK_MESSAGE(fs::exists(dir / name), name);
        CHECK(slurp(dir / name).rfind("# config_hash: " + c.hash(), 0) == 0);
    }
    CHECK_FALSE(fs::exists(dir / "trajectory_2.csv"));
    CHECK_THROWS_AS(parse_method("exact"), ContractError);
}

TEST_CASE("simulate under the guess matches between methods")
{
    const fs::path dir = scratch_dir("simulate_guess");
    RunConfig c = small_config();
    SimulationOptions options;
    const auto exact = run_simulate(c, c.guess_controls(), options, dir / "density");
    options.method = SimulationMethod::mcwf;
    options.n_trajectories = 400;
    const auto sampled = run_simulate(c, c.guess_controls(), options, dir / "mcwf");
    CHECK(sampled.n_jumps > 0);
    // population of atom 1 at the end, 4 sigma of a Bernoulli mean
    const double p = exact.final_atom_excitation[0];
    CHECK(std::abs(sampled.final_atom_excitation[0] - p) <= 4.0 * std::sqrt(0.25 / 400));
    CHECK(exact.phase_opposition.has_value());
}

TEST_CASE("noise scan bookkeeping")
{
    const fs::path dir = scratch_dir("noise");
    RunConfig c = small_config();
    c.n_iterations = 2;
    c.noise.m_list = {1, 2, 3};
    c.noise.seeds = {1, 2};
    const auto result = run_noise_scan(c, {Variant::independent, Variant::cross}, dir);
    CHECK(result.runs.size() == 3 * 2 + 2 * 2);
    CHECK(result.means.size() == 5);
    // cross skips M = 1 and has only two points left, too few for a fit
    CHECK(result.fits.size() == 2);
    for (const auto& r : result.runs) {
        CHECK(fs::exists(dir / "runs" / (to_string(r.variant) + "_M" + std::to_string(r.m) + "_s" +
                                         std::to_string(r.seed)) / "pulse_node1.dat"));
        for (double nu : r.nu) CHECK(nu >= 0.0);
    }
    for (const char* name : {"noise.csv", "noise_mean.csv", "noise_fit.csv"})
        CHECK(slurp(dir / name).rfind("# config_hash: " + c.hash(), 0) == 0);

    c.noise.m_list = {1, 2};
    CHECK_THROWS_AS(run_noise_scan(c, {Variant::independent}, dir), ContractError);
    c.noise.m_list = {1, 2, 4};
    CHECK_THROWS_AS(run_noise_scan(c, {Variant::density}, dir), ContractError);
}
