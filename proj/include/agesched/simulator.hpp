#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agesched/channel.hpp"
#include "agesched/error_curve.hpp"
#include "agesched/policy.hpp"

namespace agesched {

enum class PolicyKind { OptimalThreshold, IidBaseline, ZeroWait };

std::string policy_kind_name(PolicyKind kind);

/// A runnable scheduling policy: either a solved threshold policy or the
/// generate-at-will zero-wait rule (always the freshest sample, submitted
/// at the ACK slot).
struct SchedulingPolicy {
    PolicyKind kind = PolicyKind::ZeroWait;
    std::optional<ThresholdPolicy> threshold;

    static SchedulingPolicy zero_wait() { return {}; }
    static SchedulingPolicy with_threshold(PolicyKind kind, ThresholdPolicy policy);

    int buffer_position(int prev_state) const;
    /// Slots to stay silent after an ACK at age `age` with revealed state c.
    int waiting_slots(int age, int prev_state) const;
};

/// Bookkeeping for one epoch [A_{i-1}, A_i): the packet submitted at S_i
/// with S_i < D_i < A_i, the delays it incurred and the channel state that
/// governed them. The next epoch's submission never precedes the ack.
struct EpochState {
    std::int64_t index = 0;      ///< i
    std::int64_t submit_at = 0;  ///< S_i
    std::int64_t deliver_at = 0; ///< D_i = S_i + T_i
    std::int64_t ack_at = 0;     ///< A_i = D_i + F_i
    int transmission_delay = 1;  ///< T_i
    int feedback_delay = 1;      ///< F_i
    int channel_state = 0;       ///< c_i
    int buffer_position = 0;     ///< b_i
};

/// One delivered packet: (delivery slot, transmission delay, buffer position).
struct Delivery {
    std::int64_t time = 0;
    int transmission_delay = 0;
    int buffer_position = 0;
};

/// Age transition for one slot: T_i + b_i on a delivery slot, previous
/// age + 1 otherwise. More than one delivery per slot violates the
/// single-in-flight invariant.
int step_aoi(int age_prev, std::int64_t t, std::span<const Delivery> deliveries);

struct SimConfig {
    std::int64_t horizon = 1'000'000;  ///< measured slots
    std::int64_t warm_up = 10'000;     ///< discarded slots (at least)
    int min_warm_epochs = 100;         ///< also wait for this many epochs
    std::uint64_t seed = 1;
    int initial_age = -1;              ///< <1 selects b_0 + 1
    int batches = 50;                  ///< batch count for the standard error
};

struct SimReport {
    double time_avg_cost = 0.0;
    std::int64_t measured_slots = 0;
    std::int64_t warmup_slots = 0;
    std::int64_t epochs = 0;
    double mean_epoch_cost = 0.0;
    double mean_epoch_length = 0.0;
    double std_error = 0.0;
    std::uint64_t seed = 0;
    std::int64_t extension_slots = 0;  ///< measured slots with age past delta_max
};

SimReport run_simulation(const SchedulingPolicy& policy, const ChannelModel& channel,
                         const ErrorCurve& curve, const SimConfig& config);

struct TraceRow {
    std::int64_t t = 0;
    int delta = 0;
    double cost = 0.0;
    std::string event;  ///< any of S (submit), D (deliver), A (ack), possibly "AS"
    int channel_state = 0;
    int buffer_position = 0;  ///< position of the most recent submission
};

/// Per-slot trace from t = 0 (no warm-up discard); used for invariant checks
/// and debugging.
std::vector<TraceRow> replay_trace(const SchedulingPolicy& policy, const ChannelModel& channel,
                                   const ErrorCurve& curve, std::uint64_t seed,
                                   std::int64_t horizon, int initial_age = -1);

}  // namespace agesched
