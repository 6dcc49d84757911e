#include "agesched/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "agesched/stats.hpp"

namespace agesched {

std::string policy_kind_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::OptimalThreshold: return "optimal";
        case PolicyKind::IidBaseline: return "iid_baseline";
        case PolicyKind::ZeroWait: return "zero_wait";
    }
    return "unknown";
}

SchedulingPolicy SchedulingPolicy::with_threshold(PolicyKind kind, ThresholdPolicy policy) {
    if (kind == PolicyKind::ZeroWait) {
        throw ValidationError("zero-wait policy takes no threshold artifacts");
    }
    SchedulingPolicy p;
    p.kind = kind;
    p.threshold = std::move(policy);
    return p;
}

int SchedulingPolicy::buffer_position(int prev_state) const {
    if (kind == PolicyKind::ZeroWait) return 0;
    return threshold->mapping.at(prev_state);
}

int SchedulingPolicy::waiting_slots(int age, int prev_state) const {
    if (kind == PolicyKind::ZeroWait) return 0;
    return threshold->index_model->waiting_time(age, prev_state, threshold->threshold);
}

int step_aoi(int age_prev, std::int64_t t, std::span<const Delivery> deliveries) {
    const Delivery* hit = nullptr;
    for (const Delivery& d : deliveries) {
        if (d.time == t) {
            if (hit != nullptr) {
                throw SolverError("step_aoi: two deliveries scheduled in slot " + std::to_string(t) +
                                  "; the single-in-flight rule is violated");
            }
            hit = &d;
        }
    }
    if (hit) return hit->transmission_delay + hit->buffer_position;
    return age_prev + 1;
}

namespace {

constexpr int kEventSubmit = 1;
constexpr int kEventDeliver = 2;
constexpr int kEventAck = 4;

/// Epoch state machine, one callback per slot:
///   on_slot(t, age, event_bits, epoch_state, last_submitted_buffer_pos).
/// The ack slot already belongs to the next epoch (epochs are the intervals
/// between consecutive acks), so the reported state switches there.
template <typename SlotFn>
void drive(const SchedulingPolicy& policy, const ChannelModel& channel, std::uint64_t seed,
           std::int64_t end_slot, int initial_age, SlotFn&& on_slot) {
    Rng rng(seed);

    // c_0 from the stationary law, b_0 from the policy's own mapping.
    int c_cur = channel.state_count() - 1;
    {
        const auto& pi = channel.stationary_distribution();
        const double u = rng.uniform01();
        double acc = 0.0;
        for (int c = 0; c < channel.state_count(); ++c) {
            acc += pi[static_cast<std::size_t>(c)];
            if (u < acc) {
                c_cur = c;
                break;
            }
        }
    }
    EpochState ep;  // epoch whose packet is pending or in flight
    ep.channel_state = c_cur;
    ep.buffer_position = policy.buffer_position(c_cur);
    {
        auto [t0, f0] = channel.sample_epoch_delays(c_cur, rng);
        ep.transmission_delay = t0;
        ep.feedback_delay = f0;
    }
    ep.submit_at = 0;
    ep.deliver_at = ep.transmission_delay;
    ep.ack_at = ep.deliver_at + ep.feedback_delay;
    int reported_buffer = ep.buffer_position;  // most recent actual submission
    int age = initial_age >= 1 ? initial_age : ep.buffer_position + 1;

    for (std::int64_t t = 0; t < end_slot; ++t) {
        int events = 0;
        if (t == ep.deliver_at) {
            events |= kEventDeliver;
            const Delivery d{ep.deliver_at, ep.transmission_delay, ep.buffer_position};
            age = step_aoi(age, t, std::span<const Delivery>(&d, 1));
        } else if (t > 0) {
            age = step_aoi(age, t, {});
        }

        if (t == ep.ack_at) {
            events |= kEventAck;
            // Decision slot: the scheduler now knows this epoch's state and
            // the age at the ack. The chain advances here as well, and the
            // next epoch is fully drawn: waiting, delays, state, position.
            EpochState next;
            next.index = ep.index + 1;
            next.buffer_position = policy.buffer_position(ep.channel_state);
            const int tau = policy.waiting_slots(age, ep.channel_state);
            next.channel_state = channel.sample_next_state(ep.channel_state, rng);
            auto [t_next, f_next] = channel.sample_epoch_delays(next.channel_state, rng);
            next.transmission_delay = t_next;
            next.feedback_delay = f_next;
            next.submit_at = t + tau;
            next.deliver_at = next.submit_at + t_next;
            next.ack_at = next.deliver_at + f_next;
            ep = next;
        }
        if (t == ep.submit_at) {
            events |= kEventSubmit;
            reported_buffer = ep.buffer_position;
        }
        on_slot(t, age, events, ep.channel_state, reported_buffer);
    }
}

}  // namespace

SimReport run_simulation(const SchedulingPolicy& policy, const ChannelModel& channel,
                         const ErrorCurve& curve, const SimConfig& config) {
    if (config.horizon <= 0) throw ValidationError("run_simulation: horizon must be > 0");
    if (config.warm_up < 0) throw ValidationError("run_simulation: warm_up must be >= 0");
    if (config.batches < 2) throw ValidationError("run_simulation: need at least 2 batches");

    const std::int64_t batch_len = std::max<std::int64_t>(1, config.horizon / config.batches);
    const std::int64_t measured_target = batch_len * config.batches;

    // loose bound on the total slots the warm-up phase may need
    const std::int64_t max_epoch_len = static_cast<std::int64_t>(channel.max_transmission_delay()) +
                                       channel.max_feedback_delay() + 10L * curve.delta_max() + 2;
    const std::int64_t hard_end = config.warm_up + measured_target +
                                  (static_cast<std::int64_t>(config.min_warm_epochs) + 4) * max_epoch_len;

    SimReport report;
    report.seed = config.seed;

    std::int64_t measure_start = -1;
    std::int64_t epochs_done = 0;
    double slot_sum = 0.0;
    std::int64_t measured = 0;
    std::vector<double> batch_means;
    double batch_sum = 0.0;
    std::int64_t batch_count = 0;

    double epoch_cost_acc = 0.0;
    std::int64_t epoch_start = -1;  // first slot of the current epoch inside the window
    double epoch_cost_sum = 0.0;
    std::int64_t epoch_len_sum = 0;
    std::int64_t epochs_measured = 0;

    const int dmax = curve.delta_max();

    drive(policy, channel, config.seed, hard_end, config.initial_age,
          [&](std::int64_t t, int age, int events, int /*state*/, int /*bpos*/) {
              if (events & kEventAck) {
                  ++epochs_done;
                  if (measure_start >= 0) {
                      // the epoch that just ended covered [epoch_start, t)
                      if (epoch_start >= 0 && t <= measure_start + measured_target) {
                          epoch_cost_sum += epoch_cost_acc;
                          epoch_len_sum += t - epoch_start;
                          ++epochs_measured;
                      }
                      epoch_start = t;
                      epoch_cost_acc = 0.0;
                  } else if (t >= config.warm_up && epochs_done >= config.min_warm_epochs) {
                      measure_start = t;
                      epoch_start = t;
                      epoch_cost_acc = 0.0;
                  }
              }
              if (measure_start >= 0 && measured < measured_target) {
                  const double cost = curve.at(age);
                  slot_sum += cost;
                  batch_sum += cost;
                  epoch_cost_acc += cost;
                  if (age > dmax) ++report.extension_slots;
                  ++measured;
                  if (++batch_count == batch_len) {
                      batch_means.push_back(batch_sum / static_cast<double>(batch_len));
                      batch_sum = 0.0;
                      batch_count = 0;
                  }
              }
          });

    if (measure_start < 0 || measured < measured_target) {
        throw SolverError("run_simulation: horizon bound exhausted before measurement finished");
    }

    report.measured_slots = measured;
    report.warmup_slots = measure_start;
    report.time_avg_cost = slot_sum / static_cast<double>(measured);
    report.std_error = batch_means_std_error(batch_means);
    report.epochs = epochs_measured;
    if (epochs_measured > 0) {
        report.mean_epoch_cost = epoch_cost_sum / static_cast<double>(epochs_measured);
        report.mean_epoch_length =
            static_cast<double>(epoch_len_sum) / static_cast<double>(epochs_measured);
    }

    const double eps = 1e-9 * std::max(1.0, curve.bound());
    if (report.time_avg_cost < curve.min_value() - eps ||
        report.time_avg_cost > curve.max_value() + eps) {
        throw SolverError("run_simulation: time-average cost left the error-curve range");
    }
    return report;
}

std::vector<TraceRow> replay_trace(const SchedulingPolicy& policy, const ChannelModel& channel,
                                   const ErrorCurve& curve, std::uint64_t seed,
                                   std::int64_t horizon, int initial_age) {
    std::vector<TraceRow> rows;
    rows.reserve(static_cast<std::size_t>(horizon));
    drive(policy, channel, seed, horizon, initial_age,
          [&](std::int64_t t, int age, int events, int state, int bpos) {
              TraceRow row;
              row.t = t;
              row.delta = age;
              row.cost = curve.at(age);
              row.channel_state = state;
              row.buffer_position = bpos;
              if (events & kEventAck) row.event += "A";
              if (events & kEventSubmit) row.event += "S";
              if (events & kEventDeliver) row.event += "D";
              rows.push_back(std::move(row));
          });
    return rows;
}

}  // namespace agesched
