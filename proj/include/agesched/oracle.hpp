#pragma once

#include <cstdint>
#include <vector>

#include "agesched/channel.hpp"
#include "agesched/error_curve.hpp"
#include "agesched/policy.hpp"

namespace agesched {

/// Brute-force average-cost formulation over decision states (age, state)
/// with actions (waiting time, buffer position). Ages are truncated at
/// age_cap, which must cover every reachable post-decision age.
struct TruncatedSmdp {
    int age_cap = 0;
    int wait_cap = 0;  ///< largest waiting action; <= 0 selects delta_max
    int buffer_size = 1;
    ChannelModel channel;
    ErrorCurve curve;

    TruncatedSmdp(int age_cap_, int wait_cap_, int buffer_size_, ChannelModel channel_,
                  ErrorCurve curve_);

    /// Convenience: wait_cap = delta_max, age_cap at the invariant bound.
    static TruncatedSmdp make_default(int buffer_size, const ChannelModel& channel,
                                      const ErrorCurve& curve, int wait_cap = -1);

    int state_count() const { return age_cap * channel.state_count(); }
};

struct RviResult {
    double average_cost = 0.0;
    std::vector<double> value;  ///< relative values, [age-1 + age_cap * state]
    struct GreedyAction {
        int wait = 0;
        int buffer = 0;
    };
    std::vector<GreedyAction> greedy;
    int iterations = 0;
    double span_residual = 0.0;
};

/// Relative value iteration on the uniformized (Schweitzer-transformed)
/// chain; stops when the span of successive differences drops below tol.
/// reference_state picks the normalization state (index into the flattened
/// state array).
RviResult relative_value_iteration(const TruncatedSmdp& smdp, double tol = 1e-10,
                                   std::int64_t max_iters = 1'000'000, int reference_state = 0);

/// Bellman action value of (wait, buffer) at (age, state) under the
/// converged relative values and average cost; smaller is better.
double bellman_action_value(const TruncatedSmdp& smdp, const RviResult& rvi, int age, int state,
                            int wait, int buffer);

struct MatchReport {
    struct Mismatch {
        int age = 0;
        int state = 0;
        int policy_wait = 0;
        int policy_buffer = 0;
        int greedy_wait = 0;
        int greedy_buffer = 0;
        double action_gap = 0.0;  ///< Bellman value of the policy action minus the best
    };
    int states_checked = 0;
    std::vector<Mismatch> mismatches;
    bool ok() const { return mismatches.empty(); }
};

/// Verifies, over every decision state reachable under the threshold policy,
/// that the policy's (waiting time, buffer) action is greedy for the
/// converged values up to the tie tolerance.
MatchReport greedy_matches_threshold(const TruncatedSmdp& smdp, const RviResult& rvi,
                                     const PolicyModel& model, const BufferMapping& psi_star,
                                     double h_opt, double tie_tol = 1e-8);

}  // namespace agesched
