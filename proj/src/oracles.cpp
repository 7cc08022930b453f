#include "trajkrotov/experiments.hpp"
#include "trajkrotov/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <Eigen/LU>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace trajkrotov {

namespace {

std::string describe(double value, double tol)
{
    std::ostringstream out;
    out.precision(3);
    out << "value " << value << ", tolerance " << tol;
    return out.str();
}

OracleCheck within(std::string module, std::string name, double value, double tol)
{
    return {std::move(module), std::move(name), std::isfinite(value) && value <= tol, describe(value, tol)};
}

// Two-node model in the untruncated space: per node atom (g, e) x cavity
// (0, 1), ordered atom_1, cav_1, atom_2, cav_2.
struct FullSpace {
    Mat sigma_eg, pi_g, a, id2;

    FullSpace()
    {
        sigma_eg = Mat::Zero(2, 2);
        sigma_eg(1, 0) = 1.0;
        pi_g = Mat::Zero(2, 2);
        pi_g(0, 0) = 1.0;
        a = Mat::Zero(2, 2);
        a(0, 1) = 1.0;
        id2 = Mat::Identity(2, 2);
    }

    Mat embed(const Mat& atom1, const Mat& cav1, const Mat& atom2, const Mat& cav2) const
    {
        return Eigen::kroneckerProduct(Eigen::kroneckerProduct(atom1, cav1).eval(),
                                       Eigen::kroneckerProduct(atom2, cav2).eval())
            .eval();
    }

    /// Columns: full-space images of [vac, atom_1, cav_1, atom_2, cav_2].
    Mat isometry() const
    {
        auto index = [](int e1, int n1, int e2, int n2) { return ((e1 * 2 + n1) * 2 + e2) * 2 + n2; };
        Mat p = Mat::Zero(16, 5);
        p(index(0, 0, 0, 0), 0) = 1.0;
        p(index(1, 0, 0, 0), 1) = 1.0;
        p(index(0, 1, 0, 0), 2) = 1.0;
        p(index(0, 0, 1, 0), 3) = 1.0;
        p(index(0, 0, 0, 1), 4) = 1.0;
        return p;
    }
};

void network_oracles(std::vector<OracleCheck>& out)
{
    const std::string mod = "network-model";
    for (int n : {1, 2, 20}) {
        NetworkSpec spec;
        spec.n_nodes = n;
        out.push_back({mod, "basis dimension N=" + std::to_string(n), build_basis(spec).dim() == 2 * n + 1,
                       "dim " + std::to_string(build_basis(spec).dim())});
    }

    NetworkSpec spec;
    const FullSpace fs;
    const Mat p = fs.isometry();
    const double s = spec.g * spec.g / spec.delta;
    const Mat adag_a = fs.a.adjoint() * fs.a;
    const Mat h0 = -s * fs.embed(fs.id2, adag_a, fs.id2, fs.id2) + s * fs.embed(fs.pi_g, adag_a, fs.id2, fs.id2) -
                   s * fs.embed(fs.id2, fs.id2, fs.id2, adag_a) + s * fs.embed(fs.id2, fs.id2, fs.pi_g, adag_a);
    out.push_back(within(mod, "node drift vanishes on the single-excitation subspace",
                         (p.adjoint() * h0 * p).cwiseAbs().maxCoeff(), 1e-14));

    const std::vector<double> omegas{0.37, -1.9};
    const cplx c(0.0, -spec.g / (2.0 * spec.delta));
    const Mat jc1 = fs.embed(fs.sigma_eg, fs.a, fs.id2, fs.id2);
    const Mat jc2 = fs.embed(fs.id2, fs.id2, fs.sigma_eg, fs.a);
    const Mat a1 = fs.embed(fs.id2, fs.a, fs.id2, fs.id2);
    const Mat a2 = fs.embed(fs.id2, fs.id2, fs.id2, fs.a);
    const cplx ik(0.0, spec.kappa);
    Mat h_full = h0 + omegas[0] * c * (jc1 - jc1.adjoint()) + omegas[1] * c * (jc2 - jc2.adjoint());
    h_full += ik * a1.adjoint() * a2 - ik * a2.adjoint() * a1;
    const Mat h_model = build_hamiltonian(spec, omegas).to_dense();
    out.push_back(within(mod, "hamiltonian equals projected tensor-space hamiltonian",
                         (p.adjoint() * h_full * p - h_model).cwiseAbs().maxCoeff(), 1e-14));

    const Mat l_full = std::sqrt(2.0 * spec.kappa) * (a1 + a2);
    out.push_back(within(mod, "lindblad equals projected tensor-space operator",
                         (p.adjoint() * l_full * p - build_collective_lindblad(spec).to_dense()).cwiseAbs().maxCoeff(),
                         1e-14));

    NetworkSpec three;
    three.n_nodes = 3;
    const Mat l3 = build_collective_lindblad(three).to_dense();
    Eigen::FullPivLU<Mat> lu(l3);
    const auto nullity = l3.cols() - lu.rank();
    out.push_back({mod, "dark manifold dimension 2N (N=3)", nullity == 2 * three.n_nodes,
                   "nullity " + std::to_string(nullity)});

    const auto guess = blackman_guess(spec, 200.0);
    const double mid = guess.values[static_cast<std::size_t>(spec.n_steps / 2)];
    out.push_back(within(mod, "blackman guess near peak at T/2", std::abs(mid - 200.0) / 200.0, 1e-4));
    out.push_back(within(mod, "flank value at 0.05 T is one half", std::abs(flank_value(0.25, 5.0, 0.1) - 0.5), 1e-14));
}

void propagator_oracles(std::vector<OracleCheck>& out, bool quick)
{
    const std::string mod = "propagators";
    NetworkSpec spec;
    const NetworkModel model(spec);
    const std::vector<double> omegas{120.0, 80.0};
    const SparseMat h_eff = model.effective_hamiltonian(omegas);
    const double dt = spec.dt();
    const Mat u = (cplx(0.0, -dt) * Mat(h_eff)).exp();
    Vec psi = Vec::Zero(model.dim());
    psi(1) = 0.6;
    psi(2) = cplx(0.0, 0.8);
    const Vec ours = step_propagate_pure(StateVector(psi), Operator(h_eff), dt).amplitudes();
    out.push_back(within(mod, "pure step equals dense matrix exponential", (ours - u * psi).cwiseAbs().maxCoeff(), 1e-13));

    NetworkSpec single;
    single.n_nodes = 1;
    const NetworkModel one(single);
    const std::vector<ControlField> off{ControlField{1, single.duration, std::vector<double>(single.n_steps, 0.0)}};
    const auto cav = StateVector::basis_state(one.dim(), Basis::cavity(1));
    const auto hist = density_propagate(DensityMatrix::from_state(cav), off, one);
    double worst = 0.0;
    for (int j = 0; j <= single.n_steps; ++j) {
        const double exact = std::exp(-2.0 * single.kappa * single.grid_time(j));
        const double n = hist[static_cast<std::size_t>(j)].matrix()(Basis::cavity(1), Basis::cavity(1)).real();
        worst = std::max(worst, std::abs(n - exact) / exact);
    }
    out.push_back(within(mod, "single-cavity decay exp(-2 kappa t)", worst, 1e-6));

    const auto guess = blackman_guess_all(spec, 200.0);
    const auto rho = density_propagate(DensityMatrix::from_state(model.initial()), guess, model);
    const auto p = backward_density_propagate(projector(model.target()), guess, model);
    const double ref = hs_overlap(p.back(), rho.back().matrix()).real();
    double drift = 0.0;
    for (std::size_t j = 0; j < rho.size(); ++j)
        drift = std::max(drift, std::abs(hs_overlap(p[j], rho[j].matrix()).real() - ref));
    out.push_back(within(mod, "adjoint duality <<P(t)|rho(t)>> constant", drift, 1e-8));

    const auto p_id = backward_density_propagate(Mat::Identity(model.dim(), model.dim()), guess, model);
    out.push_back(within(mod, "identity is a fixed point of the adjoint",
                         (p_id.front() - Mat::Identity(model.dim(), model.dim())).cwiseAbs().maxCoeff(), 1e-10));

    // Waiting-time law of a single decaying cavity.
    const int n_ks = quick ? 2000 : 10000;
    std::vector<double> times;
    for (int k = 0; k < n_ks; ++k) {
        const auto traj = mcwf_propagate(cav, off, one, RngStream(stream_seed(2024, 0, k, Direction::forward)));
        if (!traj.jumps.empty()) times.push_back(traj.jumps.front().time);
    }
    std::sort(times.begin(), times.end());
    double d = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double f = 1.0 - std::exp(-2.0 * single.kappa * times[i]);
        d = std::max({d, std::abs(static_cast<double>(i + 1) / n_ks - f), std::abs(static_cast<double>(i) / n_ks - f)});
    }
    out.push_back(within(mod, "waiting times pass KS test at 1%", d, 1.6276 / std::sqrt(static_cast<double>(n_ks))));

    // Trajectory average against the master equation under the guess.
    const int m = quick ? 1000 : 10000;
    std::vector<Mat> avg(rho.size(), Mat::Zero(model.dim(), model.dim()));
    for (int k = 0; k < m; ++k) {
        const auto traj =
            mcwf_propagate(model.initial(), guess, model, RngStream(stream_seed(7, 0, k, Direction::forward)));
        for (std::size_t j = 0; j < avg.size(); ++j) {
            const Vec& v = traj.states[j].amplitudes();
            avg[j] += v * v.adjoint();
        }
    }
    double td = 0.0;
    for (std::size_t j = 0; j < avg.size(); ++j) td = std::max(td, trace_distance(avg[j] / m, rho[j].matrix()));
    out.push_back(within(mod, "trajectory average matches master equation (M=" + std::to_string(m) + ")", td,
                         quick ? 3.0 / std::sqrt(static_cast<double>(m)) : 0.02));
}

void krotov_oracles(std::vector<OracleCheck>& out)
{
    const std::string mod = "krotov";
    NetworkSpec spec;
    const NetworkModel model(spec);
    const auto& mu = model.control_operators().front();
    std::vector<StateVector> xis, psis;
    for (int k = 0; k < 4; ++k) {
        Vec x(model.dim()), y(model.dim());
        for (Eigen::Index b = 0; b < model.dim(); ++b) {
            x(b) = cplx(std::sin(1.3 * b + k), std::cos(0.7 * b * k + 0.2));
            y(b) = cplx(std::cos(2.1 * b - k), std::sin(0.4 * b + 1.1 * k));
        }
        xis.emplace_back(x);
        psis.emplace_back(y / y.norm());
    }
    const double sum = update_increment_cross(xis, psis, mu, 0.8, 0.01);
    const double trace = update_increment_cross_trace(xis, psis, mu, 0.8, 0.01);
    out.push_back(within(mod, "cross update double sum equals trace form",
                         std::abs(sum - trace) / std::max(1.0, std::abs(sum)), 1e-12));

    KrotovConfig config;
    config.lambdas = {1e-3, 1e-3};
    config.shapes.assign(2, flanked_shape(spec, 0.1));
    config.n_iterations = 5;
    const auto result = optimize(config, blackman_guess_all(spec, 200.0), model);
    double prev = result.initial_error, worst = 0.0;
    for (const auto& rec : result.records) {
        worst = std::max(worst, *rec.j_t_exact - prev);
        prev = *rec.j_t_exact;
    }
    out.push_back(within(mod, "density variant decreases the error monotonically", worst, 1e-10));
}

void analysis_oracles(std::vector<OracleCheck>& out)
{
    const std::string mod = "analysis";
    const Eigen::VectorXd w = savgol_weights(5, 3);
    Eigen::VectorXd ref(5);
    ref << -3.0, 12.0, 17.0, 12.0, -3.0;
    ref /= 35.0;
    out.push_back(within(mod, "Savitzky-Golay 5/3 weights", (w - ref).cwiseAbs().maxCoeff(), 1e-12));

    std::vector<double> cubic(50);
    for (std::size_t j = 0; j < cubic.size(); ++j) {
        const double x = 0.1 * static_cast<double>(j);
        cubic[j] = 1.0 - 2.0 * x + 0.5 * x * x - 0.3 * x * x * x;
    }
    const auto smooth = savgol_smooth(cubic, 5, 3);
    double err = 0.0;
    for (std::size_t j = 0; j < cubic.size(); ++j) err = std::max(err, std::abs(smooth[j] - cubic[j]));
    out.push_back(within(mod, "Savitzky-Golay reproduces cubics", err, 1e-9));

    const std::vector<double> ms{1, 2, 4, 8, 16, 32};
    std::vector<double> nus;
    for (double m : ms) nus.push_back(0.3 * std::pow(m, -0.5));
    const auto fit = fit_power_law(ms, nus);
    out.push_back(within(mod, "power-law fit recovers exponent", std::abs(fit.exponent + 0.5), 1e-12));
}

void harness_oracles(std::vector<OracleCheck>& out)
{
    const std::string mod = "cli-harness";
    RunConfig config;
    const auto reparsed = parse_config(config.to_text(), "<roundtrip>");
    out.push_back({mod, "config text round trip", reparsed.to_text() == config.to_text(), reparsed.hash()});

    const auto dir = std::filesystem::temp_directory_path() / ("trajkrotov-validate-" + config.hash());
    std::filesystem::create_directories(dir);
    const auto guess = blackman_guess(config.network, 200.0, 1);
    save_pulse(dir / "pulse.dat", guess, config.network);
    const auto loaded = load_pulse(dir / "pulse.dat", &config.network);
    double diff = 0.0;
    for (std::size_t j = 0; j < guess.values.size(); ++j)
        diff = std::max(diff, std::abs(guess.values[j] - loaded.values[j]));
    std::filesystem::remove_all(dir);
    out.push_back({mod, "pulse file round trip is exact", diff == 0.0, describe(diff, 0.0)});
}

}  // namespace

std::vector<OracleCheck> run_oracles(bool quick)
{
    std::vector<OracleCheck> out;
    auto guarded = [&](const std::string& module, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            out.push_back({module, "suite raised", false, e.what()});
        }
    };
    guarded("network-model", [&] { network_oracles(out); });
    guarded("propagators", [&] { propagator_oracles(out, quick); });
    guarded("krotov", [&] { krotov_oracles(out); });
    guarded("analysis", [&] { analysis_oracles(out); });
    guarded("cli-harness", [&] { harness_oracles(out); });
    return out;
}

}  // namespace trajkrotov
