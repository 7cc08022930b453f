#include "trajkrotov/analysis.hpp"

#include <cmath>

#include <Eigen/QR>

namespace trajkrotov {

namespace {

void check_filter(int window, int order)
{
    require(window >= 1 && window % 2 == 1, "savgol: window must be a positive odd integer");
    require(order >= 0 && order < window, "savgol: order must satisfy 0 <= order < window");
}

}  // namespace

Eigen::VectorXd savgol_weights(int window, int order, int offset)
{
    check_filter(window, order);
    const int half = window / 2;
    require(std::abs(offset) <= half, "savgol_weights: offset outside the window");
    Eigen::MatrixXd vandermonde(window, order + 1);
    for (int m = 0; m < window; ++m)
        for (int p = 0; p <= order; ++p) vandermonde(m, p) = std::pow(static_cast<double>(m - half), p);
    Eigen::VectorXd eval(order + 1);
    for (int p = 0; p <= order; ++p) eval(p) = std::pow(static_cast<double>(offset), p);
    const Eigen::MatrixXd pinv = vandermonde.completeOrthogonalDecomposition().pseudoInverse();
    return pinv.transpose() * eval;
}

std::vector<double> savgol_smooth(std::span<const double> values, int window, int order)
{
    check_filter(window, order);
    const int n = static_cast<int>(values.size());
    require(n >= window, "savgol: pulse shorter than the filter window");
    const int half = window / 2;

    std::vector<Eigen::VectorXd> weights;
    for (int o = -half; o <= half; ++o) weights.push_back(savgol_weights(window, order, o));
    auto apply = [&](int start, int offset) {
        const auto& w = weights[static_cast<std::size_t>(offset + half)];
        double acc = 0.0;
        for (int m = 0; m < window; ++m) acc += w(m) * values[static_cast<std::size_t>(start + m)];
        return acc;
    };

    std::vector<double> out(values.size());
    for (int j = 0; j < n; ++j) {
        if (j < half)
            out[static_cast<std::size_t>(j)] = apply(0, j - half);
        else if (j >= n - half)
            out[static_cast<std::size_t>(j)] = apply(n - window, j - (n - 1 - half));
        else
            out[static_cast<std::size_t>(j)] = apply(j - half, 0);
    }
    return out;
}

ControlField savgol_smooth(const ControlField& pulse, int window, int order)
{
    ControlField out = pulse;
    out.values = savgol_smooth(pulse.values, window, order);
    return out;
}

double noise_measure(const ControlField& pulse, int window, int order)
{
    const auto smooth = savgol_smooth(pulse.values, window, order);
    double nu = 0.0;
    for (std::size_t j = 0; j < smooth.size(); ++j) nu += std::abs(pulse.values[j] - smooth[j]);
    return nu * pulse.dt();
}

NoiseReport noise_report(std::span<const ControlField> pulses, int window, int order)
{
    NoiseReport report;
    report.filter_window = window;
    report.filter_order = order;
    for (const auto& p : pulses) report.nu.push_back(noise_measure(p, window, order));
    return report;
}

PowerLawFit fit_power_law(std::span<const double> ms, std::span<const double> nus)
{
    require(ms.size() == nus.size(), "fit_power_law: length mismatch");
    require(ms.size() >= 3, "fit_power_law: need at least three points");
    const auto n = static_cast<Eigen::Index>(ms.size());
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        require(ms[static_cast<std::size_t>(k)] >= 1.0, "fit_power_law: M must be >= 1");
        require(nus[static_cast<std::size_t>(k)] > 0.0, "fit_power_law: noise values must be > 0");
        a(k, 0) = std::log(ms[static_cast<std::size_t>(k)]);
        a(k, 1) = 1.0;
        b(k) = std::log(nus[static_cast<std::size_t>(k)]);
    }
    const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
    return {coef(0), std::exp(coef(1)), (a * coef - b).norm()};
}

namespace {

DynamicsRecord empty_record(const NetworkModel& model, std::size_t n)
{
    DynamicsRecord rec;
    const auto nodes = static_cast<std::size_t>(model.spec().n_nodes);
    rec.times.resize(n);
    for (std::size_t j = 0; j < n; ++j) rec.times[j] = model.spec().grid_time(static_cast<int>(j));
    rec.atom_excitation.assign(nodes, std::vector<double>(n));
    rec.cavity_number.assign(nodes, std::vector<double>(n));
    rec.decay_rate.resize(n);
    rec.vacuum_population.resize(n);
    return rec;
}

}  // namespace

DynamicsRecord dynamics_record(std::span<const DensityMatrix> history, const NetworkModel& model)
{
    require(!history.empty(), "dynamics_record: empty history");
    auto rec = empty_record(model, history.size());
    for (std::size_t j = 0; j < history.size(); ++j) {
        const Mat& rho = history[j].matrix();
        require(rho.rows() == model.dim(), "dynamics_record: dimension mismatch");
        for (int i = 1; i <= model.spec().n_nodes; ++i) {
            rec.atom_excitation[static_cast<std::size_t>(i - 1)][j] = rho(Basis::atom(i), Basis::atom(i)).real();
            rec.cavity_number[static_cast<std::size_t>(i - 1)][j] = rho(Basis::cavity(i), Basis::cavity(i)).real();
        }
        rec.decay_rate[j] = expectation(model.decay_operator(), history[j]).real();
        rec.vacuum_population[j] = rho(Basis::vacuum(), Basis::vacuum()).real();
    }
    return rec;
}

DynamicsRecord dynamics_record(const Trajectory& trajectory, const NetworkModel& model)
{
    require(!trajectory.states.empty(), "dynamics_record: empty trajectory");
    auto rec = empty_record(model, trajectory.states.size());
    for (std::size_t j = 0; j < trajectory.states.size(); ++j) {
        const Vec& psi = trajectory.states[j].amplitudes();
        require(psi.size() == model.dim(), "dynamics_record: dimension mismatch");
        for (int i = 1; i <= model.spec().n_nodes; ++i) {
            rec.atom_excitation[static_cast<std::size_t>(i - 1)][j] = std::norm(psi(Basis::atom(i)));
            rec.cavity_number[static_cast<std::size_t>(i - 1)][j] = std::norm(psi(Basis::cavity(i)));
        }
        rec.decay_rate[j] = expectation(model.decay_operator(), trajectory.states[j]).real();
        rec.vacuum_population[j] = std::norm(psi(Basis::vacuum()));
    }
    return rec;
}

double cavity_phase_opposition(const Mat& rho, const NetworkSpec& spec)
{
    require(spec.n_nodes >= 2, "cavity_phase_opposition: needs two nodes");
    const auto c1 = Basis::cavity(1), c2 = Basis::cavity(2);
    const double p1 = rho(c1, c1).real(), p2 = rho(c2, c2).real();
    require(std::max(p1, p2) > 0.0, "cavity_phase_opposition: both cavities empty");
    // With c_i c_k^* = rho_ik: |c_1 + c_2| |c_1| = |rho_11 + rho_21|.
    if (p1 >= p2) return std::abs(rho(c1, c1) + rho(c2, c1)) / p1;
    return std::abs(rho(c2, c2) + rho(c1, c2)) / p2;
}

}  // namespace trajkrotov
