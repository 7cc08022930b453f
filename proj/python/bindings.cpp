// Python bindings for the optimizer, propagators and analysis tools.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "trajkrotov/experiments.hpp"

namespace py = pybind11;
using namespace trajkrotov;

namespace {

std::vector<cplx> amplitudes(const StateVector& psi)
{
    const Vec& v = psi.amplitudes();
    return {v.data(), v.data() + v.size()};
}

py::dict dynamics_dict(const DynamicsRecord& d)
{
    py::dict out;
    out["times"] = d.times;
    out["atom_excitation"] = d.atom_excitation;
    out["cavity_number"] = d.cavity_number;
    out["decay_rate"] = d.decay_rate;
    out["vacuum_population"] = d.vacuum_population;
    return out;
}

}  // namespace

PYBIND11_MODULE(_trajkrotov, m)
{
    m.doc() = "Trajectory-based Krotov optimal control for cascaded cavity networks";

    py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

    py::class_<NetworkSpec>(m, "NetworkSpec")
        .def(py::init<>())
        .def(py::init([](int n_nodes, double g, double delta, double kappa, double duration, int n_steps) {
                 NetworkSpec s{n_nodes, g, delta, kappa, duration, n_steps};
                 s.validate();
                 return s;
             }),
             py::arg("n_nodes") = 2, py::arg("g") = 1.0, py::arg("delta") = 100.0, py::arg("kappa") = 1.0,
             py::arg("duration") = 5.0, py::arg("n_steps") = 1000)
        .def_readwrite("n_nodes", &NetworkSpec::n_nodes)
        .def_readwrite("g", &NetworkSpec::g)
        .def_readwrite("delta", &NetworkSpec::delta)
        .def_readwrite("kappa", &NetworkSpec::kappa)
        .def_readwrite("duration", &NetworkSpec::duration)
        .def_readwrite("n_steps", &NetworkSpec::n_steps)
        .def_property_readonly("dim", &NetworkSpec::dim)
        .def_property_readonly("dt", &NetworkSpec::dt)
        .def("validate", &NetworkSpec::validate);

    py::class_<ControlField>(m, "ControlField")
        .def(py::init([](int node, double duration, std::vector<double> values) {
                 return ControlField{node, duration, std::move(values)};
             }),
             py::arg("node_index"), py::arg("duration"), py::arg("values"))
        .def_readwrite("node_index", &ControlField::node_index)
        .def_readwrite("duration", &ControlField::duration)
        .def_readwrite("values", &ControlField::values)
        .def_property_readonly("n_steps", &ControlField::n_steps)
        .def("midpoint", &ControlField::midpoint);

    m.def("blackman_guess", [](const NetworkSpec& spec, double peak) { return blackman_guess_all(spec, peak); },
          py::arg("spec"), py::arg("peak") = 200.0, "Blackman-shaped guess pulse for every node");

    py::class_<NetworkModel>(m, "NetworkModel")
        .def(py::init<NetworkSpec>())
        .def_property_readonly("spec", &NetworkModel::spec)
        .def_property_readonly("dim", &NetworkModel::dim)
        .def_property_readonly("initial", [](const NetworkModel& nm) { return amplitudes(nm.initial()); })
        .def_property_readonly("target", [](const NetworkModel& nm) { return amplitudes(nm.target()); })
        .def("hamiltonian",
             [](const NetworkModel& nm, const std::vector<double>& omegas) { return Mat(nm.hamiltonian(omegas)); })
        .def("lindblad", [](const NetworkModel& nm) { return nm.lindblads().front().to_dense(); });

    m.def(
        "simulate_density",
        [](const NetworkModel& model, const std::vector<ControlField>& controls) {
            check_controls(controls, model.spec());
            const auto history = density_propagate(DensityMatrix::from_state(model.initial()), controls, model);
            py::dict out = dynamics_dict(dynamics_record(history, model));
            out["error"] = functional_density(history.back(), model.target());
            return out;
        },
        py::arg("model"), py::arg("controls"), "Master-equation dynamics from the initial state");

    m.def(
        "simulate_trajectory",
        [](const NetworkModel& model, const std::vector<ControlField>& controls, std::uint64_t seed) {
            check_controls(controls, model.spec());
            const auto traj = mcwf_propagate(model.initial(), controls, model,
                                             RngStream(stream_seed(seed, 0, 0, Direction::forward)));
            py::dict out = dynamics_dict(dynamics_record(traj, model));
            std::vector<double> times;
            for (const auto& j : traj.jumps) times.push_back(j.time);
            out["jump_times"] = times;
            out["final_state"] = amplitudes(traj.final_state());
            return out;
        },
        py::arg("model"), py::arg("controls"), py::arg("seed") = 0, "One quantum-jump trajectory");

    py::class_<IterationRecord>(m, "IterationRecord")
        .def_readonly("iteration", &IterationRecord::iteration)
        .def_readonly("j_t_surrogate", &IterationRecord::j_t_surrogate)
        .def_readonly("j_t_exact", &IterationRecord::j_t_exact)
        .def_readonly("pulse_update_norm", &IterationRecord::pulse_update_norm)
        .def_readonly("wall_time", &IterationRecord::wall_time)
        .def_readonly("lambdas", &IterationRecord::lambdas)
        .def_readonly("n_jumps", &IterationRecord::n_jumps);

    py::class_<OptimizationResult>(m, "OptimizationResult")
        .def_readonly("controls", &OptimizationResult::controls)
        .def_readonly("records", &OptimizationResult::records)
        .def_readonly("initial_error", &OptimizationResult::initial_error)
        .def_readonly("error", &OptimizationResult::error);

    m.def(
        "optimize",
        [](const NetworkModel& model, const std::vector<ControlField>& guess, const std::string& variant,
           double lambda, int n_iterations, int n_trajectories, std::uint64_t seed, double flank_fraction,
           int eval_exact_every, int workers) {
            KrotovConfig c;
            c.variant = parse_variant(variant);
            c.lambdas.assign(static_cast<std::size_t>(model.n_controls()), lambda);
            c.shapes.assign(static_cast<std::size_t>(model.n_controls()), flanked_shape(model.spec(), flank_fraction));
            c.n_iterations = n_iterations;
            c.n_trajectories = n_trajectories;
            c.base_seed = seed;
            c.eval_exact_every = eval_exact_every;
            c.workers = workers;
            py::gil_scoped_release release;
            return optimize(c, guess, model);
        },
        py::arg("model"), py::arg("guess"), py::arg("variant") = "density", py::arg("lambda_") = 1e-2,
        py::arg("n_iterations") = 100, py::arg("n_trajectories") = 1, py::arg("seed") = 0,
        py::arg("flank_fraction") = 0.1, py::arg("eval_exact_every") = 10, py::arg("workers") = 1,
        "Run Krotov iterations of the chosen variant");

    m.def("update_increment_cross",
          [](const std::vector<std::vector<cplx>>& xis, const std::vector<std::vector<cplx>>& psis, const Mat& mu,
             double s, double lambda) {
              auto states = [](const std::vector<std::vector<cplx>>& in) {
                  std::vector<StateVector> out;
                  for (const auto& v : in) out.emplace_back(Vec(Eigen::Map<const Vec>(v.data(), std::ssize(v))));
                  return out;
              };
              const auto op = Operator::from_dense(mu);
              return std::pair{update_increment_cross(states(xis), states(psis), op, s, lambda),
                               update_increment_cross_trace(states(xis), states(psis), op, s, lambda)};
          },
          py::arg("xis"), py::arg("psis"), py::arg("mu"), py::arg("s") = 1.0, py::arg("lambda_") = 1.0,
          "Cross-trajectory increment as (double sum, trace form)");

    m.def("savgol_smooth",
          [](const std::vector<double>& v, int window, int order) { return savgol_smooth(v, window, order); },
          py::arg("values"), py::arg("window") = 5, py::arg("order") = 3);
    m.def("savgol_weights", [](int window, int order, int offset) {
        const Eigen::VectorXd w = savgol_weights(window, order, offset);
        return std::vector<double>(w.data(), w.data() + w.size());
    }, py::arg("window") = 5, py::arg("order") = 3, py::arg("offset") = 0);
    m.def("noise_measure", py::overload_cast<const ControlField&, int, int>(&noise_measure), py::arg("pulse"),
          py::arg("window") = 5, py::arg("order") = 3);

    py::class_<PowerLawFit>(m, "PowerLawFit")
        .def_readonly("exponent", &PowerLawFit::exponent)
        .def_readonly("prefactor", &PowerLawFit::prefactor)
        .def_readonly("residual", &PowerLawFit::residual);
    m.def("fit_power_law",
          [](const std::vector<double>& ms, const std::vector<double>& nus) { return fit_power_law(ms, nus); },
          py::arg("ms"), py::arg("nus"));

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init(&default_run_config))
        .def("set", &apply_config_value, py::arg("key"), py::arg("value"))
        .def("to_text", &RunConfig::to_text)
        .def("hash", &RunConfig::hash)
        .def("validate", &RunConfig::validate)
        .def_readwrite("network", &RunConfig::network)
        .def_readwrite("n_iterations", &RunConfig::n_iterations)
        .def_readwrite("n_trajectories", &RunConfig::n_trajectories)
        .def_readwrite("seed", &RunConfig::seed)
        .def_readwrite("output_dir", &RunConfig::output_dir)
        .def("guess_controls", &RunConfig::guess_controls);
    m.def("parse_config", [](const std::string& text) { return parse_config(text, "<string>", default_run_config()); },
          py::arg("text"));
    m.def("load_config", [](const std::filesystem::path& p) { return load_config(p, default_run_config()); },
          py::arg("path"));
    m.def(
        "run_optimize",
        [](const RunConfig& config, const std::filesystem::path& out_dir) {
            py::gil_scoped_release release;
            return run_optimize(config, out_dir);
        },
        py::arg("config"), py::arg("output_dir"), "Optimize and write pulses and convergence.csv");

    py::class_<OracleCheck>(m, "OracleCheck")
        .def_readonly("module", &OracleCheck::module)
        .def_readonly("name", &OracleCheck::name)
        .def_readonly("passed", &OracleCheck::passed)
        .def_readonly("detail", &OracleCheck::detail);
    m.def("run_oracles", &run_oracles, py::arg("quick") = true);
}
