#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "agesched/policy.hpp"
#include "helpers.hpp"

using namespace agesched;
namespace at = agesched::testing;

namespace {

ErrorCurve constant_curve(double value, int delta_max = 50) {
    return ErrorCurve(std::vector<double>(static_cast<std::size_t>(delta_max), value));
}

ErrorCurve identity_curve(int delta_max = 100) {
    std::vector<double> h(static_cast<std::size_t>(delta_max));
    for (int d = 1; d <= delta_max; ++d) h[static_cast<std::size_t>(d - 1)] = d;
    return ErrorCurve(std::move(h));
}

/// Two states, (0.9, 0.1) out of state 0, deterministic delays Q0=3, Q1=20.
ChannelModel split_channel() {
    return ChannelModel({{0.9, 0.1}, {0.5, 0.5}},
                        {DelayPmf({{3, 1.0}}), DelayPmf({{20, 1.0}})},
                        {DelayPmf({{1, 1.0}}), DelayPmf({{1, 1.0}})});
}

ChannelModel unit_channel() {
    return ChannelModel({{1.0}}, {DelayPmf({{1, 1.0}})}, {DelayPmf({{1, 1.0}})});
}

BufferMapping mapping_of(std::vector<int> positions, int buffer_size) {
    BufferMapping m;
    m.positions = std::move(positions);
    m.buffer_size = buffer_size;
    return m;
}

}  // namespace

TEST_SUITE_BEGIN("policy");

TEST_CASE("expected future error") {
    SUBCASE("constant curve collapses to the constant") {
        PolicyModel pm(constant_curve(5.0), split_channel());
        for (int d : {1, 4, 30}) {
            for (int c : {0, 1}) {
                for (int k : {0, 2, 9}) CHECK(pm.expected_future_error(d, c, k) == 5.0);
            }
        }
    }
    SUBCASE("two-state split: 0.9*3 + 0.1*20 shifts the identity curve by 4.7") {
        PolicyModel pm(identity_curve(), split_channel());
        for (int d : {1, 5, 20}) {
            for (int k : {0, 1, 7}) {
                CHECK(pm.expected_future_error(d, 0, k) ==
                      doctest::Approx(d + k + 4.7).epsilon(1e-12));
            }
        }
    }
    SUBCASE("deterministic unit delay shifts by one") {
        PolicyModel pm(identity_curve(), unit_channel());
        for (int d : {1, 9}) {
            for (int k : {0, 3}) {
                CHECK(pm.expected_future_error(d, 0, k) == doctest::Approx(d + k + 1).epsilon(1e-12));
            }
        }
    }
    SUBCASE("argument validation") {
        PolicyModel pm(constant_curve(1.0), unit_channel());
        CHECK_THROWS_AS(pm.expected_future_error(0, 0, 0), ValidationError);
        CHECK_THROWS_AS(pm.expected_future_error(1, 1, 0), ValidationError);
        CHECK_THROWS_AS(pm.expected_future_error(1, 0, -1), ValidationError);
    }
}

TEST_CASE("index function") {
    SUBCASE("constant curve: every window averages to the constant") {
        PolicyModel pm(constant_curve(5.0), split_channel());
        for (int d : {1, 10, 49, 80}) {
            CHECK(pm.index_value(d, 0) == 5.0);
            CHECK(pm.index_value(d, 1) == 5.0);
        }
    }
    SUBCASE("nondecreasing curve: index equals the one-step expectation bitwise") {
        Rng rng(31);
        for (int trial = 0; trial < 8; ++trial) {
            const ChannelModel ch = at::random_channel(rng);
            const ErrorCurve h = at::random_curve(rng, 30, /*monotone=*/true);
            PolicyModel pm(h, ch);
            for (int d = 1; d <= pm.table_max(); ++d) {
                for (int c = 0; c < ch.state_count(); ++c) {
                    CHECK(pm.index_value(d, c) == pm.expected_future_error(d, c, 0));
                }
            }
        }
    }
    SUBCASE("split channel with identity curve: index is delta + 4.7") {
        PolicyModel pm(identity_curve(), split_channel());
        for (int d = 1; d <= 40; ++d) {
            CHECK(pm.index_value(d, 0) == doctest::Approx(d + 4.7).epsilon(1e-12));
        }
    }
    SUBCASE("index never exceeds the nu = 1 window") {
        Rng rng(37);
        for (int trial = 0; trial < 10; ++trial) {
            const ChannelModel ch = at::random_channel(rng);
            const ErrorCurve h = at::random_curve(rng, 25);
            PolicyModel pm(h, ch);
            for (int d = 1; d <= pm.table_max(); ++d) {
                for (int c = 0; c < ch.state_count(); ++c) {
                    CHECK(pm.index_value(d, c) <= pm.expected_future_error(d, c, 0) + 1e-15);
                }
            }
        }
    }
    SUBCASE("nondecreasing curve: index nondecreasing in delta") {
        Rng rng(41);
        const ChannelModel ch = at::random_channel(rng);
        const ErrorCurve h = at::random_curve(rng, 30, /*monotone=*/true);
        PolicyModel pm(h, ch);
        for (int c = 0; c < ch.state_count(); ++c) {
            for (int d = 1; d < pm.table_max(); ++d) {
                CHECK(pm.index_value(d, c) <= pm.index_value(d + 1, c) + 1e-15);
            }
        }
    }
}

TEST_CASE("waiting time") {
    PolicyModel pm(identity_curve(), split_channel());
    // index(delta, 0) = delta + 4.7; smallest k with 2 + k + 4.7 >= 10 is 4
    CHECK(pm.waiting_time(2, 0, 10.0) == 4);
    CHECK(pm.waiting_time(20, 0, 10.0) == 0);  // already above threshold

    PolicyModel flat(constant_curve(5.0), split_channel());
    CHECK(flat.waiting_time(3, 0, 5.0) == 0);
    CHECK(flat.waiting_time(3, 1, 5.0) == 0);
    // a threshold above the saturation value can never be crossed
    CHECK_THROWS_AS(flat.waiting_time(3, 0, 6.0), SolverError);
}

TEST_CASE("epoch cost gap") {
    SUBCASE("constant curve at beta equal to the constant vanishes") {
        PolicyModel pm(constant_curve(5.0), split_channel());
        const BufferMapping psi = mapping_of({0, 0}, 1);
        CHECK(pm.epoch_cost_gap(5.0, psi) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("deterministic renewal: gap(beta) = 3 - 2 beta while tau = 0") {
        PolicyModel pm(identity_curve(50), unit_channel());
        const BufferMapping psi = mapping_of({0}, 1);
        for (double beta : {1.0, 1.5, 2.0, 2.9}) {
            CHECK(pm.epoch_cost_gap(beta, psi) == doctest::Approx(3.0 - 2.0 * beta).epsilon(1e-12));
        }
    }
    SUBCASE("strictly decreasing and concave in beta with a single sign change") {
        Rng rng(53);
        for (int trial = 0; trial < 6; ++trial) {
            const ChannelModel ch = at::random_channel(rng);
            const ErrorCurve h = at::random_curve(rng, 30);
            PolicyModel pm(h, ch);
            BufferMapping psi = mapping_of({}, 3);
            for (int c = 0; c < ch.state_count(); ++c) {
                psi.positions.push_back(static_cast<int>(rng.uniform_below(3)));
            }
            const double lo = h.min_value(), hi = h.last();
            std::vector<double> gaps;
            for (int i = 0; i < 100; ++i) {
                const double beta = lo + (hi - lo) * i / 99.0;
                gaps.push_back(pm.epoch_cost_gap(beta, psi));
            }
            int sign_changes = 0;
            for (std::size_t i = 0; i + 1 < gaps.size(); ++i) {
                CHECK(gaps[i + 1] < gaps[i]);  // strictly decreasing
                if (gaps[i] > 0.0 && gaps[i + 1] <= 0.0) ++sign_changes;
            }
            for (std::size_t i = 0; i + 2 < gaps.size(); ++i) {
                CHECK(gaps[i + 2] - 2.0 * gaps[i + 1] + gaps[i] <= 1e-9);  // concave
            }
            if (gaps.front() > 0.0 && gaps.back() < 0.0) CHECK(sign_changes == 1);
        }
    }
}

TEST_CASE("threshold solve") {
    SUBCASE("constant curve solves to the constant") {
        PolicyModel pm(constant_curve(5.0), split_channel());
        const BufferMapping psi = mapping_of({0, 0}, 1);
        CHECK(pm.solve_threshold(psi) == doctest::Approx(5.0).epsilon(1e-12));
    }
    SUBCASE("deterministic renewal solves to 1.5") {
        PolicyModel pm(identity_curve(50), unit_channel());
        const BufferMapping psi = mapping_of({0}, 1);
        int iters = 0;
        const double beta = pm.solve_threshold(psi, -1.0, &iters);
        CHECK(std::abs(beta - 1.5) < 1e-7);
        CHECK(iters <= 60);
    }
    SUBCASE("root equals the gap's zero") {
        Rng rng(59);
        for (int trial = 0; trial < 5; ++trial) {
            const ChannelModel ch = at::random_channel(rng);
            const ErrorCurve h = at::random_curve(rng, 25);
            PolicyModel pm(h, ch);
            BufferMapping psi = mapping_of({}, 2);
            for (int c = 0; c < ch.state_count(); ++c) {
                psi.positions.push_back(static_cast<int>(rng.uniform_below(2)));
            }
            int iters = 0;
            const double beta = pm.solve_threshold(psi, -1.0, &iters);
            CHECK(iters <= 60);
            CHECK(pm.epoch_cost_gap(beta, psi) == doctest::Approx(0.0).epsilon(1e-5));
            // the threshold is the policy's own long-run average, so it
            // lies strictly inside the curve's range
            CHECK(beta >= h.min_value());
            CHECK(beta <= h.max_value());
        }
    }
    SUBCASE("curve decreasing into the extension region fails the bracket") {
        std::vector<double> values;
        for (int d = 0; d < 30; ++d) values.push_back(10.0 - 0.3 * d);
        PolicyModel pm(ErrorCurve(values), unit_channel());
        const BufferMapping psi = mapping_of({0}, 1);
        CHECK_THROWS_AS(pm.solve_threshold(psi), SolverError);
    }
}

TEST_CASE("mapping optimization") {
    SUBCASE("single buffer slot is forced") {
        PolicyModel pm(identity_curve(50), unit_channel());
        const auto sol = pm.optimize_mapping(1);
        CHECK(sol.mapping.positions == std::vector<int>{0});
        CHECK(std::abs(sol.threshold - 1.5) < 1e-7);
    }
    SUBCASE("nondecreasing curve prefers the freshest sample everywhere") {
        Rng rng(61);
        for (int trial = 0; trial < 5; ++trial) {
            const ChannelModel ch = at::random_channel(rng);
            const ErrorCurve h = at::random_curve(rng, 30, /*monotone=*/true);
            PolicyModel pm(h, ch);
            const auto sol = pm.optimize_mapping(5);
            for (int c = 0; c < ch.state_count(); ++c) CHECK(sol.mapping.at(c) == 0);
        }
    }
    SUBCASE("constant curve ties break to the lexicographically smallest mapping") {
        PolicyModel pm(constant_curve(5.0), split_channel());
        const auto sol = pm.optimize_mapping(3);
        CHECK(sol.mapping.positions == std::vector<int>{0, 0});
        CHECK(sol.threshold == doctest::Approx(5.0).epsilon(1e-12));
    }
    SUBCASE("optimum is the minimum over all enumerated thresholds") {
        Rng rng(67);
        const ChannelModel ch = at::random_channel(rng, 2);
        const ErrorCurve h = at::random_curve(rng, 25);
        PolicyModel pm(h, ch);
        const auto sol = pm.optimize_mapping(3, -1.0, 1, /*keep_all=*/true);
        for (double beta : sol.all_thresholds) CHECK(sol.threshold <= beta + 1e-12);
    }
    SUBCASE("parallel enumeration matches the serial result") {
        Rng rng(71);
        const ChannelModel ch = at::random_channel(rng, 2);
        const ErrorCurve h = at::random_curve(rng, 25);
        PolicyModel pm(h, ch);
        const auto serial = pm.optimize_mapping(4, -1.0, 1);
        const auto parallel = pm.optimize_mapping(4, -1.0, 4);
        CHECK(serial.mapping.positions == parallel.mapping.positions);
        CHECK(serial.threshold == parallel.threshold);
    }
    SUBCASE("enumeration guard") {
        PolicyModel pm(constant_curve(1.0), split_channel());
        CHECK_THROWS_AS(pm.optimize_mapping(1001), ValidationError);  // 1001^2 > 1e6
    }
}

TEST_CASE("undersized window cap is raised and counted") {
    PolicyModel pm(identity_curve(50), unit_channel(), /*nu_max=*/3);
    CHECK(pm.window_cap_raises() > 0);
    // the raise keeps the table exact: same values as the default cap
    PolicyModel full(identity_curve(50), unit_channel());
    for (int d = 1; d <= pm.table_max(); ++d) {
        CHECK(pm.index_value(d, 0) == full.index_value(d, 0));
    }
    CHECK(full.window_cap_raises() == 0);
}

TEST_CASE("paper configuration at alpha 0.2 exploits the stale dip") {
    const ErrorCurve h = inference_error_curve(at::paper_ar_model(), 500);
    ChannelModel ch(symmetric_two_state_matrix(0.2), at::paper_transmission_pmfs(),
                    at::paper_feedback_pmfs());
    PolicyModel pm(h, ch);
    const auto sol = pm.optimize_mapping(64, -1.0, 2);
    // frozen from the exhaustive enumeration (its own oracle): both states
    // submit stale samples so the delivered age lands in the error dip
    CHECK(sol.mapping.positions == std::vector<int>{46, 26});
    CHECK(sol.threshold == doctest::Approx(0.02752828).epsilon(1e-5));

    // ignoring the delay memory costs: the surrogate-channel solve lands on
    // a single stale position and a strictly larger threshold
    PolicyModel pm_sur(h, iid_surrogate(ch));
    const auto iid = pm_sur.optimize_mapping(64, -1.0, 2);
    CHECK(iid.mapping.at(0) == iid.mapping.at(1));
    CHECK(sol.threshold < iid.threshold);
}

TEST_SUITE_END();
