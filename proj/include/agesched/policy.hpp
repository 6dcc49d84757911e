#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include "agesched/channel.hpp"
#include "agesched/error_curve.hpp"

namespace agesched {

/// Stationary rule mapping the previous epoch's channel state to the buffer
/// position submitted next. Positions index freshness: 0 is the newest
/// sample, buffer_size - 1 the oldest retained one.
struct BufferMapping {
    std::vector<int> positions;  ///< one entry per channel state
    int buffer_size = 1;

    int at(int c) const { return positions[static_cast<std::size_t>(c)]; }
    void validate(int state_count) const;
};

/// Index/threshold machinery for one (error curve, channel) pair.
///
/// The index of an age/state pair is the smallest achievable forward-looking
/// average of expected errors over a start-now-or-later window; it is
/// precomputed for every age up to delta_max + the largest round-trip delay
/// and saturates at h(delta_max) beyond. A policy transmits at the first
/// slot whose index reaches its threshold; the threshold itself is the root
/// of the epoch cost-gap functional and equals the policy's long-run
/// average error.
class PolicyModel {
  public:
    /// nu_max < 1 selects the default window cap (delta_max). If a queried
    /// age needs a longer window for an exact minimum the cap is raised
    /// internally and counted in window_cap_raises().
    PolicyModel(ErrorCurve curve, ChannelModel channel, int nu_max = -1);

    const ErrorCurve& curve() const { return curve_; }
    const ChannelModel& channel() const { return channel_; }
    int delta_max() const { return curve_.delta_max(); }
    int table_max() const { return table_max_; }
    int nu_max() const { return nu_max_; }

    /// E[h(delta + T' + k)] over the next epoch's state and transmission
    /// delay, conditioned on the current epoch state c.
    double expected_future_error(int delta, int c, int k) const;

    /// Index value gamma(delta, c); exact infimum over all window lengths.
    double index_value(int delta, int c) const;

    /// Smallest k >= 0 with index_value(delta + k, c) >= beta. Throws
    /// SolverError past the hard cap of 10 * delta_max.
    int waiting_time(int delta, int c, double beta) const;

    /// Expected (epoch cost - beta * epoch length) in steady state under
    /// mapping psi and the beta-threshold waiting rule.
    double epoch_cost_gap(double beta, const BufferMapping& psi) const;

    /// Unique root of the cost gap by bisection on [min h, h(delta_max)].
    /// tol <= 0 selects 1e-9 * (max h - min h). iterations_out, when given,
    /// receives the bisection step count.
    double solve_threshold(const BufferMapping& psi, double tol = -1.0,
                           int* iterations_out = nullptr) const;

    struct MappingSolution {
        BufferMapping mapping;
        double threshold = 0.0;
        /// thresholds per enumerated mapping, in lexicographic order;
        /// filled only when keep_all was requested.
        std::vector<double> all_thresholds;
    };

    /// Exhaustive search over every mapping state -> {0..buffer_size-1};
    /// ties resolved toward the lexicographically smallest mapping.
    MappingSolution optimize_mapping(int buffer_size, double tol = -1.0, int jobs = 1,
                                     bool keep_all = false) const;

    /// Diagnostic: table entries whose exact window minimum needed more
    /// than the configured nu_max.
    std::uint64_t window_cap_raises() const { return cap_raises_.load(std::memory_order_relaxed); }
    /// Diagnostic: index/expectation queries that touched the hold-last
    /// extension region.
    std::uint64_t extension_queries() const { return ext_queries_.load(std::memory_order_relaxed); }

  private:
    struct GapWorkspace {
        std::vector<std::vector<int>> first_crossing;  // per state, indexed by age
    };
    double gap_with_workspace(double beta, const BufferMapping& psi, GapWorkspace& ws) const;
    double solve_with_workspace(const BufferMapping& psi, double tol, int* iterations_out,
                                GapWorkspace& ws) const;
    double g_at(int c, int m) const;  // expected next-transmission error at age m

    ErrorCurve curve_;
    ChannelModel channel_;
    int nu_max_ = 0;
    int table_max_ = 0;
    std::vector<std::vector<double>> g_;      // [c][m-1], m in 1..table_max
    std::vector<std::vector<double>> gamma_;  // [c][delta-1], delta in 1..table_max
    std::vector<double> w_;                   // flattened [c][m-1]: E h-sum over next transmission
    std::vector<double> mean_round_trip_;     // per state: E[T' + F']
    std::vector<double> mean_next_tx_;        // per state: E[T']
    int ext_age_threshold_ = 0;               // queries above this touch the extension
    mutable std::atomic<std::uint64_t> cap_raises_{0};
    mutable std::atomic<std::uint64_t> ext_queries_{0};
};

/// Solved artifacts ready for simulation: mapping, threshold and the index
/// model the waiting rule consults.
struct ThresholdPolicy {
    BufferMapping mapping;
    double threshold = 0.0;
    std::shared_ptr<const PolicyModel> index_model;

    ThresholdPolicy(BufferMapping m, double beta, std::shared_ptr<const PolicyModel> model);
};

}  // namespace agesched
