#pragma once

#include <cstdint>
#include <vector>

#include "agesched/error_curve.hpp"

namespace agesched {

/// Gaussian AR(p) source X_t = a_1 X_{t-1} + ... + a_p X_{t-p} + W_t with
/// observed target Y_t = X_t + N_t.
struct ARModel {
    std::vector<double> coefficients;        ///< a_1..a_p (p may be 0)
    double noise_variance = 1.0;             ///< Var(W_t), > 0
    double observation_noise_variance = 0.0; ///< Var(N_t), >= 0

    int order() const { return static_cast<int>(coefficients.size()); }

    /// Throws ValidationError unless the process is stationary (all roots of
    /// the characteristic polynomial strictly outside the unit circle) and
    /// the variances are admissible.
    void validate() const;
};

/// Stationary autocovariance r(0..max_lag): Yule-Walker solve for lags 0..p,
/// AR recursion beyond. Throws on non-stationary or numerically singular
/// systems.
std::vector<double> ar_autocovariance(const ARModel& model, int max_lag);

/// Quadratic-loss error of the best linear predictor of Y_t from X_{t-delta}:
/// h(delta) = r(0) + sigma_N^2 - r(delta)^2 / r(0), tabulated over
/// [1, delta_max].
ErrorCurve inference_error_curve(const ARModel& model, int delta_max);

/// Per-lag regression error measured on a simulated trajectory. Used as a
/// Monte Carlo cross-check of the analytic curve.
struct EmpiricalCurve {
    std::vector<double> mse;        ///< index k holds the lag-(k+1) estimate
    std::vector<double> std_error;  ///< batch-means standard errors
    std::int64_t samples = 0;
};

/// Simulates the source, fits the scalar least-squares predictor per lag and
/// returns the empirical MSE with batch-means standard errors. `jobs` bounds
/// the number of worker threads used for the per-lag accumulation.
EmpiricalCurve empirical_error_curve(const ARModel& model, int delta_max,
                                     std::int64_t n_samples, std::uint64_t seed,
                                     int jobs = 1);

}  // namespace agesched
