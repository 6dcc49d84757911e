#include <doctest.h>

#include <cmath>
#include <map>
#include <memory>

#include "agesched/simulator.hpp"
#include "helpers.hpp"

using namespace agesched;
namespace at = agesched::testing;

namespace {

ErrorCurve identity_curve(int delta_max = 50) {
    std::vector<double> h(static_cast<std::size_t>(delta_max));
    for (int d = 1; d <= delta_max; ++d) h[static_cast<std::size_t>(d - 1)] = d;
    return ErrorCurve(std::move(h));
}

ChannelModel unit_channel() {
    return ChannelModel({{1.0}}, {DelayPmf({{1, 1.0}})}, {DelayPmf({{1, 1.0}})});
}

SchedulingPolicy solved_policy(std::shared_ptr<const PolicyModel> model, int buffer_size,
                               PolicyKind kind = PolicyKind::OptimalThreshold) {
    const auto sol = model->optimize_mapping(buffer_size);
    return SchedulingPolicy::with_threshold(kind,
                                            ThresholdPolicy(sol.mapping, sol.threshold, model));
}

}  // namespace

TEST_SUITE_BEGIN("simulator");

TEST_CASE("aoi step rule") {
    const Delivery d{10, 3, 0};
    CHECK(step_aoi(7, 10, std::span<const Delivery>(&d, 1)) == 3);
    CHECK(step_aoi(7, 9, std::span<const Delivery>(&d, 1)) == 8);  // not the delivery slot
    CHECK(step_aoi(7, 11, {}) == 8);
    const Delivery stale{10, 3, 5};
    CHECK(step_aoi(7, 10, std::span<const Delivery>(&stale, 1)) == 8);
    const Delivery both[2] = {{10, 3, 0}, {10, 4, 0}};
    CHECK_THROWS_AS(step_aoi(7, 10, std::span<const Delivery>(both, 2)), SolverError);
}

TEST_CASE("deterministic renewal runs at exactly 1.5 after warm-up") {
    const ErrorCurve h = identity_curve();
    const ChannelModel ch = unit_channel();

    SimConfig cfg;
    cfg.horizon = 10'000;
    cfg.warm_up = 500;
    cfg.seed = 4;

    SUBCASE("zero-wait") {
        const SimReport rep = run_simulation(SchedulingPolicy::zero_wait(), ch, h, cfg);
        CHECK(rep.time_avg_cost == 1.5);
        CHECK(rep.mean_epoch_length == 2.0);
        CHECK(rep.mean_epoch_cost == 3.0);
        CHECK(rep.std_error == 0.0);
        CHECK(rep.extension_slots == 0);
    }
    SUBCASE("solved threshold policy gives the same renewal") {
        auto model = std::make_shared<const PolicyModel>(h, ch);
        const SimReport rep = run_simulation(solved_policy(model, 1), ch, h, cfg);
        CHECK(rep.time_avg_cost == 1.5);
    }
}

TEST_CASE("constant curve costs the constant under any policy") {
    const ErrorCurve h(std::vector<double>(40, 5.0));
    Rng rng(17);
    const ChannelModel ch = at::random_channel(rng);
    SimConfig cfg;
    cfg.horizon = 20'000;
    cfg.warm_up = 1'000;
    cfg.seed = 5;
    const SimReport zw = run_simulation(SchedulingPolicy::zero_wait(), ch, h, cfg);
    CHECK(zw.time_avg_cost == 5.0);
    auto model = std::make_shared<const PolicyModel>(h, ch);
    const SimReport thr = run_simulation(solved_policy(model, 3), ch, h, cfg);
    CHECK(thr.time_avg_cost == 5.0);
}

TEST_CASE("traces satisfy the aoi recursion and the epoch ordering") {
    const ErrorCurve h = inference_error_curve(at::paper_ar_model(), 300);
    ChannelModel ch(symmetric_two_state_matrix(0.2), at::paper_transmission_pmfs(),
                    at::paper_feedback_pmfs());
    auto model = std::make_shared<const PolicyModel>(h, ch);
    const auto sol = model->optimize_mapping(64, -1.0, 2);
    const auto policy = SchedulingPolicy::with_threshold(
        PolicyKind::OptimalThreshold, ThresholdPolicy(sol.mapping, sol.threshold, model));

    const auto trace = replay_trace(policy, ch, h, 321, 6000);
    REQUIRE(trace.size() == 6000);

    std::int64_t last_submit = -1, last_deliver = -1, last_ack = -1;
    int last_submit_b = 0;
    std::int64_t delivered_submit = -1;  // S_i of the most recently delivered packet
    int delivered_b = 0;
    for (const auto& row : trace) {
        const bool is_ack = row.event.find('A') != std::string::npos;
        const bool is_submit = row.event.find('S') != std::string::npos;
        const bool is_deliver = row.event.find('D') != std::string::npos;
        if (is_ack) {
            // epoch ordering: S < D < A and acks strictly increase
            CHECK(last_submit < last_deliver);
            CHECK(last_deliver < row.t);
            CHECK(last_ack < row.t);
            last_ack = row.t;
        }
        if (is_submit) {
            CHECK(last_ack <= row.t);  // silence until the ack arrives
            last_submit = row.t;
            last_submit_b = row.buffer_position;
        }
        if (is_deliver) {
            // single packet in flight: the delivery belongs to the latest submission
            last_deliver = row.t;
            delivered_submit = last_submit;
            delivered_b = last_submit_b;
        }
        // aoi recursion on [D_i, D_{i+1})
        if (delivered_submit >= 0) {
            CHECK(row.delta == row.t - delivered_submit + delivered_b);
        }
    }
}

TEST_CASE("waiting slots sit strictly below the threshold") {
    // the scheduler conditions on the state it learned at the ack; recover
    // it as the trace state one slot before the ack
    const ErrorCurve h = inference_error_curve(at::paper_ar_model(), 300);
    ChannelModel ch(symmetric_two_state_matrix(0.3), at::paper_transmission_pmfs(),
                    at::paper_feedback_pmfs());
    auto model = std::make_shared<const PolicyModel>(h, ch);
    const auto sol = model->optimize_mapping(64, -1.0, 2);
    const auto policy = SchedulingPolicy::with_threshold(
        PolicyKind::OptimalThreshold, ThresholdPolicy(sol.mapping, sol.threshold, model));
    const auto trace = replay_trace(policy, ch, h, 55, 6000);

    int revealed_state = -1;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        const auto& row = trace[i];
        const bool is_ack = row.event.find('A') != std::string::npos;
        const bool is_submit = row.event.find('S') != std::string::npos;
        if (is_ack) revealed_state = trace[i - 1].channel_state;
        if (revealed_state < 0) continue;
        if (is_ack && !is_submit) {
            CHECK(model->index_value(row.delta, revealed_state) < sol.threshold);
        } else if (is_submit) {
            CHECK(model->index_value(row.delta, revealed_state) >= sol.threshold);
            revealed_state = -1;  // epoch handled
        } else if (revealed_state >= 0 && !is_ack) {
            // slots strictly between ack and submission
            if (trace[i - 1].event.find('S') == std::string::npos) {
                CHECK(model->index_value(row.delta, revealed_state) < sol.threshold);
            }
        }
    }
}

TEST_CASE("deterministic renewal trace has period two") {
    const ErrorCurve h = identity_curve();
    const ChannelModel ch = unit_channel();
    const auto trace = replay_trace(SchedulingPolicy::zero_wait(), ch, h, 1, 200);
    // t = 0: submit; t = 1: deliver; from t = 2 on: ack+submit / deliver alternate
    CHECK(trace[0].event == "S");
    CHECK(trace[1].event == "D");
    for (std::size_t i = 2; i < trace.size(); ++i) {
        if (i % 2 == 0) {
            CHECK(trace[i].event == "AS");
            CHECK(trace[i].delta == 2);
        } else {
            CHECK(trace[i].event == "D");
            CHECK(trace[i].delta == 1);
        }
    }
}

TEST_CASE("identical seeds replay bit-identical traces") {
    const ErrorCurve h = identity_curve(80);
    Rng rng(23);
    const ChannelModel ch = at::random_channel(rng);
    auto model = std::make_shared<const PolicyModel>(h, ch);
    const auto policy = solved_policy(model, 2);

    const auto t1 = replay_trace(policy, ch, h, 777, 3000);
    const auto t2 = replay_trace(policy, ch, h, 777, 3000);
    REQUIRE(t1.size() == t2.size());
    for (std::size_t i = 0; i < t1.size(); ++i) {
        CHECK(t1[i].delta == t2[i].delta);
        CHECK(t1[i].event == t2[i].event);
        CHECK(t1[i].channel_state == t2[i].channel_state);
    }
}

TEST_CASE("independently seeded runs agree within combined error bars") {
    const ErrorCurve h = inference_error_curve(at::paper_ar_model(), 300);
    ChannelModel ch(symmetric_two_state_matrix(0.4), at::paper_transmission_pmfs(),
                    at::paper_feedback_pmfs());
    SimConfig cfg;
    cfg.horizon = 300'000;
    cfg.warm_up = 5'000;
    cfg.seed = 1001;
    const SimReport a = run_simulation(SchedulingPolicy::zero_wait(), ch, h, cfg);
    cfg.seed = 2002;
    const SimReport b = run_simulation(SchedulingPolicy::zero_wait(), ch, h, cfg);
    const double combined = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
    CHECK(std::abs(a.time_avg_cost - b.time_avg_cost) <= 3.0 * combined);
}

TEST_CASE("simulated threshold policy reproduces its solved average") {
    Rng rng(29);
    for (int trial = 0; trial < 3; ++trial) {
        const ChannelModel ch = at::random_channel(rng);
        const ErrorCurve h = at::random_curve(rng, 30);
        auto model = std::make_shared<const PolicyModel>(h, ch);
        const auto sol = model->optimize_mapping(2);
        const auto policy = SchedulingPolicy::with_threshold(
            PolicyKind::OptimalThreshold, ThresholdPolicy(sol.mapping, sol.threshold, model));
        SimConfig cfg;
        cfg.horizon = 400'000;
        cfg.warm_up = 5'000;
        cfg.seed = 3000 + static_cast<std::uint64_t>(trial);
        const SimReport rep = run_simulation(policy, ch, h, cfg);
        CHECK(std::abs(rep.time_avg_cost - sol.threshold) <= 3.0 * rep.std_error);
    }
}

TEST_CASE("report bookkeeping") {
    const ErrorCurve h = identity_curve(60);
    Rng rng(83);
    const ChannelModel ch = at::random_channel(rng);
    SimConfig cfg;
    cfg.horizon = 50'000;
    cfg.warm_up = 2'000;
    cfg.seed = 9;
    const SimReport rep = run_simulation(SchedulingPolicy::zero_wait(), ch, h, cfg);
    CHECK(rep.measured_slots == 50'000);
    CHECK(rep.warmup_slots >= 2'000);
    CHECK(rep.epochs > 0);
    CHECK(rep.mean_epoch_length > 0.0);
    CHECK(rep.time_avg_cost >= h.min_value());
    CHECK(rep.time_avg_cost <= h.max_value());
    CHECK(rep.seed == 9);
}

TEST_SUITE_END();
