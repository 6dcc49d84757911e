#include "agesched/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace agesched {

namespace {

/// Joint outcome of one epoch transition out of a decision in state c:
/// next state, transmission and feedback delay with its probability.
struct Outcome {
    int next_state;
    int tx;
    int fb;
    double prob;
};

struct Tables {
    std::vector<std::vector<Outcome>> outcomes;  // per decision state
    std::vector<double> mean_round_trip;         // per decision state
    std::vector<std::vector<double>> tx_cost;    // [c][m-1]: E sum_{k<T} h(m+k)
    std::vector<std::vector<double>> fb_cost;    // [c][b]:   E sum_{k<F} h(b+T+k)
    int tx_cost_max = 0;
};

Tables build_tables(const TruncatedSmdp& smdp) {
    const int states = smdp.channel.state_count();
    Tables t;
    t.outcomes.resize(static_cast<std::size_t>(states));
    t.mean_round_trip.assign(static_cast<std::size_t>(states), 0.0);
    for (int c = 0; c < states; ++c) {
        const auto& row = smdp.channel.next_state_distribution(c);
        for (int cn = 0; cn < states; ++cn) {
            const double pc = row[static_cast<std::size_t>(cn)];
            if (pc == 0.0) continue;
            for (const auto& [q, pq] : smdp.channel.transmission_delay(cn).entries()) {
                for (const auto& [f, pf] : smdp.channel.feedback_delay(cn).entries()) {
                    t.outcomes[static_cast<std::size_t>(c)].push_back({cn, q, f, pc * pq * pf});
                }
            }
            t.mean_round_trip[static_cast<std::size_t>(c)] +=
                pc * (smdp.channel.transmission_delay(cn).mean() +
                      smdp.channel.feedback_delay(cn).mean());
        }
    }
    t.tx_cost_max = smdp.age_cap + smdp.wait_cap;
    t.tx_cost.assign(static_cast<std::size_t>(states),
                     std::vector<double>(static_cast<std::size_t>(t.tx_cost_max), 0.0));
    t.fb_cost.assign(static_cast<std::size_t>(states),
                     std::vector<double>(static_cast<std::size_t>(smdp.buffer_size), 0.0));
    for (int c = 0; c < states; ++c) {
        for (const Outcome& o : t.outcomes[static_cast<std::size_t>(c)]) {
            for (int m = 1; m <= t.tx_cost_max; ++m) {
                t.tx_cost[static_cast<std::size_t>(c)][static_cast<std::size_t>(m - 1)] +=
                    o.prob * smdp.curve.sum_range(m, o.tx);
            }
            for (int b = 0; b < smdp.buffer_size; ++b) {
                t.fb_cost[static_cast<std::size_t>(c)][static_cast<std::size_t>(b)] +=
                    o.prob * smdp.curve.sum_range(b + o.tx, o.fb);
            }
        }
    }
    return t;
}

double action_cost(const TruncatedSmdp& smdp, const Tables& t, int age, int c, int wait, int b) {
    return smdp.curve.sum_range(age, wait) +
           t.tx_cost[static_cast<std::size_t>(c)][static_cast<std::size_t>(age + wait - 1)] +
           t.fb_cost[static_cast<std::size_t>(c)][static_cast<std::size_t>(b)];
}

}  // namespace

TruncatedSmdp::TruncatedSmdp(int age_cap_, int wait_cap_, int buffer_size_, ChannelModel channel_,
                             ErrorCurve curve_)
    : age_cap(age_cap_),
      wait_cap(wait_cap_),
      buffer_size(buffer_size_),
      channel(std::move(channel_)),
      curve(std::move(curve_)) {
    if (buffer_size < 1) throw ValidationError("truncated smdp: buffer_size must be >= 1");
    if (wait_cap < 0) throw ValidationError("truncated smdp: wait_cap must be >= 0");
    const int needed = buffer_size - 1 + channel.max_transmission_delay() +
                       channel.max_feedback_delay() + wait_cap;
    if (age_cap < needed) {
        throw ValidationError("truncated smdp: age_cap " + std::to_string(age_cap) +
                              " below the reachability bound " + std::to_string(needed));
    }
}

TruncatedSmdp TruncatedSmdp::make_default(int buffer_size, const ChannelModel& channel,
                                          const ErrorCurve& curve, int wait_cap) {
    if (wait_cap < 0) wait_cap = curve.delta_max();
    const int age_cap = buffer_size - 1 + channel.max_transmission_delay() +
                        channel.max_feedback_delay() + wait_cap;
    return TruncatedSmdp(age_cap, wait_cap, buffer_size, channel, curve);
}

RviResult relative_value_iteration(const TruncatedSmdp& smdp, double tol, std::int64_t max_iters,
                                   int reference_state) {
    const int states = smdp.channel.state_count();
    const int n = smdp.state_count();
    if (reference_state < 0 || reference_state >= n) {
        throw ValidationError("relative_value_iteration: reference state out of range");
    }
    const Tables tab = build_tables(smdp);
    constexpr double kEta = 1.0;  // below every expected epoch length (>= 2)

    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    std::vector<double> v_next(static_cast<std::size_t>(n), 0.0);
    std::vector<double> best_b(static_cast<std::size_t>(states), 0.0);

    auto state_index = [&](int age, int c) {
        return static_cast<std::size_t>(age - 1) +
               static_cast<std::size_t>(smdp.age_cap) * static_cast<std::size_t>(c);
    };

    double g_lo = 0.0, g_hi = 0.0;
    std::int64_t it = 0;
    for (; it < max_iters; ++it) {
        // The buffer choice decouples from the age and the waiting time:
        // it only shifts the feedback-interval cost and the next state.
        for (int c = 0; c < states; ++c) {
            double best = std::numeric_limits<double>::infinity();
            for (int b = 0; b < smdp.buffer_size; ++b) {
                double ev = 0.0;
                for (const Outcome& o : tab.outcomes[static_cast<std::size_t>(c)]) {
                    ev += o.prob * v[state_index(b + o.tx + o.fb, o.next_state)];
                }
                best = std::min(best,
                                tab.fb_cost[static_cast<std::size_t>(c)][static_cast<std::size_t>(b)] +
                                    kEta * ev);
            }
            best_b[static_cast<std::size_t>(c)] = best;
        }

        double dmin = std::numeric_limits<double>::infinity();
        double dmax = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < states; ++c) {
            const double rt = tab.mean_round_trip[static_cast<std::size_t>(c)];
            const auto& txc = tab.tx_cost[static_cast<std::size_t>(c)];
            for (int age = 1; age <= smdp.age_cap; ++age) {
                const std::size_t s = state_index(age, c);
                const double vs = v[s];
                double best = std::numeric_limits<double>::infinity();
                double wait_sum = 0.0;
                for (int w = 0; w <= smdp.wait_cap; ++w) {
                    if (w > 0) wait_sum += smdp.curve.at(age + w - 1);
                    const double m = static_cast<double>(w) + rt;
                    const double numer = wait_sum + txc[static_cast<std::size_t>(age + w - 1)] +
                                         best_b[static_cast<std::size_t>(c)] - kEta * vs;
                    best = std::min(best, vs + numer / m);
                }
                v_next[s] = best;
                const double d = best - vs;
                dmin = std::min(dmin, d);
                dmax = std::max(dmax, d);
            }
        }
        g_lo = dmin;
        g_hi = dmax;
        const double offset = v_next[static_cast<std::size_t>(reference_state)];
        for (std::size_t s = 0; s < v.size(); ++s) v[s] = v_next[s] - offset;
        if (dmax - dmin < tol) {
            ++it;
            break;
        }
    }
    if (g_hi - g_lo >= tol) {
        throw SolverError("relative_value_iteration: no convergence in " +
                          std::to_string(max_iters) + " iterations (span residual " +
                          std::to_string(g_hi - g_lo) + ")");
    }

    RviResult out;
    out.average_cost = 0.5 * (g_lo + g_hi);
    out.iterations = static_cast<int>(it);
    out.span_residual = g_hi - g_lo;
    out.value = v;

    // greedy actions from the converged values, smallest (wait, buffer) wins ties
    const Tables& t = tab;
    out.greedy.resize(static_cast<std::size_t>(n));
    for (int c = 0; c < states; ++c) {
        for (int age = 1; age <= smdp.age_cap; ++age) {
            double best = std::numeric_limits<double>::infinity();
            RviResult::GreedyAction act{0, 0};
            for (int w = 0; w <= smdp.wait_cap; ++w) {
                for (int b = 0; b < smdp.buffer_size; ++b) {
                    double ev = 0.0;
                    for (const Outcome& o : t.outcomes[static_cast<std::size_t>(c)]) {
                        ev += o.prob * v[state_index(b + o.tx + o.fb, o.next_state)];
                    }
                    const double q = action_cost(smdp, t, age, c, w, b) -
                                     out.average_cost *
                                         (static_cast<double>(w) +
                                          t.mean_round_trip[static_cast<std::size_t>(c)]) +
                                     ev;
                    if (q < best) {
                        best = q;
                        act = {w, b};
                    }
                }
            }
            out.greedy[state_index(age, c)] = act;
        }
    }
    return out;
}

double bellman_action_value(const TruncatedSmdp& smdp, const RviResult& rvi, int age, int state,
                            int wait, int buffer) {
    if (age < 1 || age > smdp.age_cap) throw ValidationError("bellman_action_value: age out of range");
    if (wait < 0 || wait > smdp.wait_cap) {
        throw ValidationError("bellman_action_value: wait out of range");
    }
    if (buffer < 0 || buffer >= smdp.buffer_size) {
        throw ValidationError("bellman_action_value: buffer out of range");
    }
    const Tables t = build_tables(smdp);
    auto state_index = [&](int a, int c) {
        return static_cast<std::size_t>(a - 1) +
               static_cast<std::size_t>(smdp.age_cap) * static_cast<std::size_t>(c);
    };
    double ev = 0.0;
    for (const Outcome& o : t.outcomes[static_cast<std::size_t>(state)]) {
        ev += o.prob * rvi.value[state_index(buffer + o.tx + o.fb, o.next_state)];
    }
    return action_cost(smdp, t, age, state, wait, buffer) -
           rvi.average_cost *
               (static_cast<double>(wait) + t.mean_round_trip[static_cast<std::size_t>(state)]) +
           ev;
}

MatchReport greedy_matches_threshold(const TruncatedSmdp& smdp, const RviResult& rvi,
                                     const PolicyModel& model, const BufferMapping& psi_star,
                                     double h_opt, double tie_tol) {
    const int states = smdp.channel.state_count();
    psi_star.validate(states);
    const Tables t = build_tables(smdp);
    auto state_index = [&](int a, int c) {
        return static_cast<std::size_t>(a - 1) +
               static_cast<std::size_t>(smdp.age_cap) * static_cast<std::size_t>(c);
    };

    // decision states reachable when every epoch follows psi_star
    std::set<std::pair<int, int>> reachable;  // (age, state)
    for (int ci = 0; ci < states; ++ci) {
        const int b = psi_star.at(ci);
        for (const Outcome& o : t.outcomes[static_cast<std::size_t>(ci)]) {
            reachable.insert({b + o.tx + o.fb, o.next_state});
        }
    }

    MatchReport report;
    for (const auto& [age, c] : reachable) {
        ++report.states_checked;
        const int tau_pol = model.waiting_time(age, c, h_opt);
        const int b_pol = psi_star.at(c);

        double q_best = std::numeric_limits<double>::infinity();
        RviResult::GreedyAction best{0, 0};
        double q_pol = std::numeric_limits<double>::infinity();
        for (int w = 0; w <= smdp.wait_cap; ++w) {
            for (int b = 0; b < smdp.buffer_size; ++b) {
                double ev = 0.0;
                for (const Outcome& o : t.outcomes[static_cast<std::size_t>(c)]) {
                    ev += o.prob * rvi.value[state_index(b + o.tx + o.fb, o.next_state)];
                }
                const double q =
                    action_cost(smdp, t, age, c, w, b) -
                    rvi.average_cost *
                        (static_cast<double>(w) + t.mean_round_trip[static_cast<std::size_t>(c)]) +
                    ev;
                if (q < q_best) {
                    q_best = q;
                    best = {w, b};
                }
                if (w == tau_pol && b == b_pol) q_pol = q;
            }
        }
        if (tau_pol > smdp.wait_cap || q_pol - q_best > tie_tol) {
            report.mismatches.push_back({age, c, tau_pol, b_pol, best.wait, best.buffer,
                                         q_pol - q_best});
        }
    }
    return report;
}

}  // namespace agesched
