#pragma once

#include <span>
#include <vector>

#include "trajkrotov/core.hpp"
#include "trajkrotov/network.hpp"
#include "trajkrotov/propagators.hpp"

namespace trajkrotov {

/// Weights w such that the fitted polynomial evaluated at `offset` (relative
/// to the window centre, |offset| <= window/2) equals sum_m w[m] y[m] over
/// the window samples.
Eigen::VectorXd savgol_weights(int window, int order, int offset = 0);

/// Savitzky-Golay smoothing: every sample is replaced by the value of the
/// least-squares polynomial of degree `order` fitted over a centred window.
/// Samples closer than window/2 to an edge take the value of the polynomial
/// fitted to the first (last) `window` samples, evaluated at their offset.
std::vector<double> savgol_smooth(std::span<const double> values, int window = 5, int order = 3);
ControlField savgol_smooth(const ControlField& pulse, int window = 5, int order = 3);

/// nu = sum_j |Omega_j - Omega_smooth_j| dt
double noise_measure(const ControlField& pulse, int window = 5, int order = 3);

struct NoiseReport {
    std::vector<double> nu;  ///< one per control
    int filter_window = 5;
    int filter_order = 3;
};

NoiseReport noise_report(std::span<const ControlField> pulses, int window = 5, int order = 3);

struct PowerLawFit {
    double exponent;
    double prefactor;
    /// Euclidean norm of the residuals of the log-log line fit.
    double residual;
};

/// Least-squares line through (log M, log nu).
PowerLawFit fit_power_law(std::span<const double> ms, std::span<const double> nus);

/// Expectation-value time series on the grid.
struct DynamicsRecord {
    std::vector<double> times;
    std::vector<std::vector<double>> atom_excitation;   ///< [node][j], <Pi_e^(i)>
    std::vector<std::vector<double>> cavity_number;     ///< [node][j], <a_i^dagger a_i>
    std::vector<double> decay_rate;                     ///< <L^dagger L>
    std::vector<double> vacuum_population;
};

DynamicsRecord dynamics_record(std::span<const DensityMatrix> history, const NetworkModel& model);
/// Single-realization expectations on the (normalized) trajectory states.
DynamicsRecord dynamics_record(const Trajectory& trajectory, const NetworkModel& model);

/// Relative deviation of the two cavity amplitudes from perfect phase
/// opposition, |c_1 + c_2| / max(|c_1|, |c_2|), read off the excitation
/// block of rho (which is rank one in this model since jumps only lead to
/// the vacuum). Requires at least two nodes.
double cavity_phase_opposition(const Mat& rho, const NetworkSpec& spec);

}  // namespace trajkrotov
