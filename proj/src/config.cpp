#include "trajkrotov/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace trajkrotov {

namespace {

const char* integrator_name(DensityIntegrator i)
{
    switch (i) {
    case DensityIntegrator::manifold: return "manifold";
    case DensityIntegrator::series: return "series";
    case DensityIntegrator::rk4: return "rk4";
    }
    return "?";
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& text)
{
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ParseError(key + ": expected a number, got '" + text + "'");
    return v;
}

std::int64_t parse_int(const std::string& key, const std::string& text)
{
    std::int64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ParseError(key + ": expected an integer, got '" + text + "'");
    return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& text)
{
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ParseError(key + ": expected a non-negative integer, got '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text)
{
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ParseError(key + ": expected true or false, got '" + text + "'");
}

int to_int(const std::string& key, const std::string& text)
{
    const auto v = parse_int(key, text);
    if (v < INT32_MIN || v > INT32_MAX) throw ParseError(key + ": integer out of range");
    return static_cast<int>(v);
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F&& fmt)
{
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        out += fmt(xs[i]);
    }
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"network.n_nodes", [](RunConfig& c, auto& k, auto& v) { c.network.n_nodes = to_int(k, v); }},
        {"network.g", [](RunConfig& c, auto& k, auto& v) { c.network.g = parse_double(k, v); }},
        {"network.delta", [](RunConfig& c, auto& k, auto& v) { c.network.delta = parse_double(k, v); }},
        {"network.kappa", [](RunConfig& c, auto& k, auto& v) { c.network.kappa = parse_double(k, v); }},
        {"network.duration", [](RunConfig& c, auto& k, auto& v) { c.network.duration = parse_double(k, v); }},
        {"network.n_steps", [](RunConfig& c, auto& k, auto& v) { c.network.n_steps = to_int(k, v); }},
        {"guess.peak", [](RunConfig& c, auto& k, auto& v) { c.guess.peak = parse_double(k, v); }},
        {"guess.shape", [](RunConfig& c, auto&, auto& v) { c.guess.shape = v; }},
        {"krotov.variant",
         [](RunConfig& c, auto& k, auto& v) {
             try {
                 c.variant = parse_variant(v);
             } catch (const ContractError& e) {
                 throw ParseError(k + ": " + e.what());
             }
         }},
        {"krotov.lambda",
         [](RunConfig& c, auto& k, auto& v) {
             c.lambdas.clear();
             for (const auto& item : split_list(v)) c.lambdas.push_back(parse_double(k, item));
             if (c.lambdas.empty()) throw ParseError(k + ": empty list");
         }},
        {"krotov.flank_fraction", [](RunConfig& c, auto& k, auto& v) { c.flank_fraction = parse_double(k, v); }},
        {"krotov.n_iterations", [](RunConfig& c, auto& k, auto& v) { c.n_iterations = to_int(k, v); }},
        {"krotov.n_trajectories", [](RunConfig& c, auto& k, auto& v) { c.n_trajectories = to_int(k, v); }},
        {"krotov.eval_exact_every", [](RunConfig& c, auto& k, auto& v) { c.eval_exact_every = to_int(k, v); }},
        {"krotov.adapt_lambda", [](RunConfig& c, auto& k, auto& v) { c.adapt_lambda = parse_bool(k, v); }},
        {"krotov.workers", [](RunConfig& c, auto& k, auto& v) { c.workers = to_int(k, v); }},
        {"density.integrator",
         [](RunConfig& c, auto& k, auto& v) {
             if (v == "manifold")
                 c.density.integrator = DensityIntegrator::manifold;
             else if (v == "series")
                 c.density.integrator = DensityIntegrator::series;
             else if (v == "rk4")
                 c.density.integrator = DensityIntegrator::rk4;
             else
                 throw ParseError(k + ": expected manifold, series or rk4, got '" + v + "'");
         }},
        {"density.rk4_substeps", [](RunConfig& c, auto& k, auto& v) { c.density.rk4_substeps = to_int(k, v); }},
        {"noise.window", [](RunConfig& c, auto& k, auto& v) { c.noise.window = to_int(k, v); }},
        {"noise.order", [](RunConfig& c, auto& k, auto& v) { c.noise.order = to_int(k, v); }},
        {"noise.m_list",
         [](RunConfig& c, auto& k, auto& v) {
             c.noise.m_list.clear();
             for (const auto& item : split_list(v)) c.noise.m_list.push_back(to_int(k, item));
         }},
        {"noise.seeds",
         [](RunConfig& c, auto& k, auto& v) {
             c.noise.seeds.clear();
             for (const auto& item : split_list(v)) c.noise.seeds.push_back(parse_uint(k, item));
         }},
        {"output.dir", [](RunConfig& c, auto&, auto& v) { c.output_dir = v; }},
        {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = parse_uint(k, v); }},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& required_config_keys()
{
    static const std::vector<std::string> keys = {"network.n_nodes", "network.duration", "network.n_steps",
                                                  "krotov.variant"};
    return keys;
}

void RunConfig::validate() const
{
    network.validate();
    require(guess.peak > 0.0, "guess.peak must be > 0");
    require(guess.shape == "blackman", "guess.shape must be 'blackman'");
    require(lambdas.size() == 1 || static_cast<int>(lambdas.size()) == network.n_nodes,
            "krotov.lambda: give one value or one per node");
    for (double l : lambdas) require(l > 0.0, "krotov.lambda must be > 0");
    require(flank_fraction > 0.0 && flank_fraction <= 0.5, "krotov.flank_fraction must be in (0, 0.5]");
    require(n_iterations >= 0, "krotov.n_iterations must be >= 0");
    require(n_trajectories >= 1, "krotov.n_trajectories must be >= 1");
    if (variant == Variant::cross) require(n_trajectories >= 2, "krotov.n_trajectories must be >= 2 for cross");
    require(eval_exact_every >= 1, "krotov.eval_exact_every must be >= 1");
    require(workers >= 1, "krotov.workers must be >= 1");
    require(density.rk4_substeps >= 1, "density.rk4_substeps must be >= 1");
    require(noise.window >= 1 && noise.window % 2 == 1, "noise.window must be odd");
    require(noise.order >= 0 && noise.order < noise.window, "noise.order must be < noise.window");
    for (int m : noise.m_list) require(m >= 1, "noise.m_list entries must be >= 1");
}

KrotovConfig RunConfig::krotov_config() const
{
    validate();
    KrotovConfig k;
    const auto n = static_cast<std::size_t>(network.n_nodes);
    k.lambdas = lambdas.size() == 1 ? std::vector<double>(n, lambdas.front()) : lambdas;
    k.shapes.assign(n, flanked_shape(network, flank_fraction));
    k.n_iterations = n_iterations;
    k.n_trajectories = n_trajectories;
    k.variant = variant;
    k.base_seed = seed;
    k.eval_exact_every = eval_exact_every;
    k.adapt_lambda = adapt_lambda;
    k.workers = workers;
    k.density = density;
    return k;
}

std::vector<ControlField> RunConfig::guess_controls() const
{
    validate();
    return blackman_guess_all(network, guess.peak);
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string RunConfig::to_text() const
{
    std::ostringstream out;
    out << "network.n_nodes = " << network.n_nodes << "\n"
        << "network.g = " << format_double(network.g) << "\n"
        << "network.delta = " << format_double(network.delta) << "\n"
        << "network.kappa = " << format_double(network.kappa) << "\n"
        << "network.duration = " << format_double(network.duration) << "\n"
        << "network.n_steps = " << network.n_steps << "\n"
        << "guess.shape = " << guess.shape << "\n"
        << "guess.peak = " << format_double(guess.peak) << "\n"
        << "krotov.variant = " << to_string(variant) << "\n"
        << "krotov.lambda = " << join(lambdas, format_double) << "\n"
        << "krotov.flank_fraction = " << format_double(flank_fraction) << "\n"
        << "krotov.n_iterations = " << n_iterations << "\n"
        << "krotov.n_trajectories = " << n_trajectories << "\n"
        << "krotov.eval_exact_every = " << eval_exact_every << "\n"
        << "krotov.adapt_lambda = " << (adapt_lambda ? "true" : "false") << "\n"
        << "density.integrator = " << integrator_name(density.integrator) << "\n"
        << "density.rk4_substeps = " << density.rk4_substeps << "\n"
        << "noise.window = " << noise.window << "\n"
        << "noise.order = " << noise.order << "\n"
        << "noise.m_list = " << join(noise.m_list, [](int m) { return std::to_string(m); }) << "\n"
        << "noise.seeds = " << join(noise.seeds, [](std::uint64_t s) { return std::to_string(s); }) << "\n"
        << "seed = " << seed << "\n";
    // output.dir and krotov.workers do not affect results and stay out of the hash
    return out.str();
}

std::string fnv1a_hex(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string RunConfig::hash() const
{
    return fnv1a_hex(to_text());
}

std::string spec_hash(const NetworkSpec& spec)
{
    std::ostringstream out;
    out << spec.n_nodes << ';' << format_double(spec.g) << ';' << format_double(spec.delta) << ';'
        << format_double(spec.kappa) << ';' << format_double(spec.duration) << ';' << spec.n_steps;
    return fnv1a_hex(out.str());
}

void apply_config_value(RunConfig& config, const std::string& key, const std::string& value)
{
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ParseError("unknown config key '" + key + "'");
    it->second(config, key, value);
}

RunConfig parse_config(const std::string& text, const std::string& source, const RunConfig& base)
{
    RunConfig config = base;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line.erase(hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = source + ":" + std::to_string(lineno) + ": ";
        if (eq == std::string::npos) throw ParseError(where + "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (value.empty()) throw ParseError(where + "missing value for '" + key + "'");
        if (!seen.insert(key).second) throw ParseError(where + "duplicate key '" + key + "'");
        try {
            apply_config_value(config, key, value);
        } catch (const ContractError& e) {
            throw ParseError(where + e.what());
        }
    }
    for (const auto& key : required_config_keys())
        if (!seen.count(key)) throw ParseError(source + ": missing required field '" + key + "'");
    try {
        config.validate();
    } catch (const ContractError& e) {
        throw ParseError(source + ": " + e.what());
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.string(), base);
}

std::filesystem::path pulse_filename(const std::filesystem::path& dir, int node)
{
    return dir / ("pulse_node" + std::to_string(node) + ".dat");
}

void save_pulse(const std::filesystem::path& path, const ControlField& pulse, const NetworkSpec& spec)
{
    check_controls(std::span<const ControlField>(&pulse, 1), [&] {
        NetworkSpec one = spec;
        one.n_nodes = 1;
        return one;
    }());
    std::ofstream out(path);
    if (!out) throw ContractError("cannot write pulse file " + path.string());
    out << "# trajkrotov pulse\n"
        << "# spec_hash: " << spec_hash(spec) << "\n"
        << "# node: " << pulse.node_index << "\n"
        << "# n_steps: " << pulse.n_steps() << "\n"
        << "# duration: " << format_double(pulse.duration) << "\n"
        << "# units: t in hbar/g (interval midpoints), omega in g; plots show omega/(2 delta)\n"
        << "# t_midpoint omega\n";
    for (int j = 1; j <= pulse.n_steps(); ++j)
        out << format_double(pulse.midpoint(j)) << ' ' << format_double(pulse.values[static_cast<std::size_t>(j - 1)])
            << '\n';
    if (!out) throw ContractError("error writing pulse file " + path.string());
}

ControlField load_pulse(const std::filesystem::path& path, const NetworkSpec* spec)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open pulse file " + path.string());
    ControlField pulse;
    std::vector<double> times;
    double duration = -1.0;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            const std::string body = trim(t.substr(1));
            try {
                if (body.rfind("node:", 0) == 0) pulse.node_index = to_int("node", trim(body.substr(5)));
                if (body.rfind("duration:", 0) == 0) duration = parse_double("duration", trim(body.substr(9)));
            } catch (const ContractError& e) {
                throw ParseError(where + e.what());
            }
            continue;
        }
        std::istringstream fields(t);
        std::string a, b, extra;
        if (!(fields >> a >> b) || (fields >> extra)) throw ParseError(where + "expected two columns 't omega'");
        double tv = 0.0, ov = 0.0;
        try {
            tv = parse_double("t", a);
            ov = parse_double("omega", b);
        } catch (const ContractError& e) {
            throw ParseError(where + e.what());
        }
        if (!times.empty() && !(tv > times.back())) throw ParseError(where + "times must be strictly increasing");
        times.push_back(tv);
        pulse.values.push_back(ov);
    }
    if (pulse.values.empty()) throw ParseError(path.string() + ": no data rows");
    if (duration <= 0.0) {
        // without a header the grid is inferred from the uniform midpoints
        duration = times.back() + times.front();
    }
    pulse.duration = duration;
    if (spec) {
        if (pulse.n_steps() != spec->n_steps || std::abs(duration - spec->duration) > 1e-12 * spec->duration) {
            std::ostringstream msg;
            msg << path.string() << ": grid mismatch: expected n_t=" << spec->n_steps << ", T="
                << format_double(spec->duration) << "; got n_t=" << pulse.n_steps() << ", T=" << format_double(duration);
            throw ParseError(msg.str());
        }
        for (int j = 1; j <= spec->n_steps; ++j)
            if (std::abs(times[static_cast<std::size_t>(j - 1)] - spec->interval_midpoint(j)) > 1e-9 * spec->duration)
                throw ParseError(path.string() + ": row " + std::to_string(j) + " is not on the interval midpoint grid");
    }
    return pulse;
}

}  // namespace trajkrotov
