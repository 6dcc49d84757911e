#pragma once

#include <cstdint>
#include <vector>

#include "agesched/channel.hpp"
#include "agesched/error_curve.hpp"
#include "agesched/simulator.hpp"

namespace agesched {

struct SweepSettings {
    std::vector<double> alphas;
    int num_seeds = 10;
    std::uint64_t base_seed = 1;
    std::int64_t horizon = 1'000'000;
    std::int64_t warm_up = 10'000;
    int buffer_size = 64;
    int nu_max = -1;
    double solver_tol = -1.0;
    int jobs = 1;
};

struct SweepPoint {
    double alpha = 0.0;
    PolicyKind policy = PolicyKind::ZeroWait;
    double mean_cost = 0.0;        ///< over seeds
    double normalized_cost = 0.0;  ///< mean_cost / mean_cost(IidBaseline at same alpha)
    double std_error = 0.0;        ///< of mean_cost, over seeds
    int seeds = 0;
    double solved_threshold = 0.0;  ///< h_opt for the threshold policies, 0 for zero-wait
};

/// Rebuilds the symmetric two-state channel for every alpha, solves the
/// optimal policy on it and the baseline on its memoryless surrogate, and
/// simulates all three policies on the true channel. Runs for different
/// seeds share nothing; the same seed stream is reused across policies at a
/// given (alpha, seed index).
std::vector<SweepPoint> run_sweep(const ErrorCurve& curve, const std::vector<DelayPmf>& transmission,
                                  const std::vector<DelayPmf>& feedback, const SweepSettings& settings);

}  // namespace agesched
