#include "agesched/policy.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace agesched {

void BufferMapping::validate(int state_count) const {
    if (buffer_size < 1) throw ValidationError("buffer mapping: buffer_size must be >= 1");
    if (static_cast<int>(positions.size()) != state_count) {
        throw ValidationError("buffer mapping: need one position per channel state");
    }
    for (int b : positions) {
        if (b < 0 || b >= buffer_size) {
            throw ValidationError("buffer mapping: position " + std::to_string(b) +
                                  " outside [0, " + std::to_string(buffer_size) + ")");
        }
    }
}

PolicyModel::PolicyModel(ErrorCurve curve, ChannelModel channel, int nu_max)
    : curve_(std::move(curve)), channel_(std::move(channel)) {
    const int dmax = curve_.delta_max();
    nu_max_ = nu_max >= 1 ? nu_max : dmax;
    table_max_ = dmax + channel_.max_transmission_delay() + channel_.max_feedback_delay();
    const int states = channel_.state_count();
    const double h_end = curve_.last();

    // g[c][m-1] = sum_{c'} P(c,c') E_{T~Q_{c'}}[h(m + T)]; constant h_end
    // once m reaches delta_max because of the hold-last extension.
    g_.assign(static_cast<std::size_t>(states), std::vector<double>(static_cast<std::size_t>(table_max_)));
    const auto& values = curve_.values();
    auto h_raw = [&](int d) { return d <= dmax ? values[static_cast<std::size_t>(d - 1)] : h_end; };
    for (int c = 0; c < states; ++c) {
        const auto& row = channel_.next_state_distribution(c);
        int min_q = channel_.max_transmission_delay();
        for (int cn = 0; cn < states; ++cn) {
            if (row[static_cast<std::size_t>(cn)] > 0.0) {
                min_q = std::min(min_q, channel_.transmission_delay(cn).min_delay());
            }
        }
        for (int m = 1; m <= table_max_; ++m) {
            if (m + min_q >= dmax) {
                // every summand sits in the hold-last region; keep the value
                // exact instead of re-rounding a convex combination
                g_[static_cast<std::size_t>(c)][static_cast<std::size_t>(m - 1)] = h_end;
                continue;
            }
            double s = 0.0;
            for (int cn = 0; cn < states; ++cn) {
                const double pc = row[static_cast<std::size_t>(cn)];
                if (pc == 0.0) continue;
                double e = 0.0;
                for (const auto& [q, pq] : channel_.transmission_delay(cn).entries()) {
                    e += pq * h_raw(m + q);
                }
                s += pc * e;
            }
            g_[static_cast<std::size_t>(c)][static_cast<std::size_t>(m - 1)] = s;
        }
    }
    ext_age_threshold_ = dmax - channel_.max_transmission_delay();

    // gamma[c][delta-1]: running minimum of the window averages
    // (1/nu) sum_{k<nu} g(c, delta+k). Past the window where the summands
    // turn constant the averages move monotonically toward h_end, so the
    // exact infimum is the scanned minimum capped below by h_end.
    gamma_.assign(static_cast<std::size_t>(states),
                  std::vector<double>(static_cast<std::size_t>(table_max_)));
    for (int c = 0; c < states; ++c) {
        const auto& gc = g_[static_cast<std::size_t>(c)];
        auto& row = gamma_[static_cast<std::size_t>(c)];
        for (int d = 1; d <= table_max_; ++d) {
            const int nu_tail = std::max(1, dmax - d + 1);
            if (nu_tail > nu_max_) cap_raises_.fetch_add(1, std::memory_order_relaxed);
            double acc = 0.0;
            double best = std::numeric_limits<double>::infinity();
            for (int nu = 1; nu <= nu_tail; ++nu) {
                acc += gc[static_cast<std::size_t>(d + nu - 2)];
                best = std::min(best, acc / static_cast<double>(nu));
            }
            row[static_cast<std::size_t>(d - 1)] = std::min(best, h_end);
        }
    }

    // W[c][m-1] = sum_{c'} P(c,c') E_T[ h(m) + ... + h(m+T-1) ]
    w_.assign(static_cast<std::size_t>(states) * static_cast<std::size_t>(table_max_), 0.0);
    for (int c = 0; c < states; ++c) {
        const auto& row = channel_.next_state_distribution(c);
        for (int m = 1; m <= table_max_; ++m) {
            double s = 0.0;
            for (int cn = 0; cn < states; ++cn) {
                const double pc = row[static_cast<std::size_t>(cn)];
                if (pc == 0.0) continue;
                double e = 0.0;
                for (const auto& [q, pq] : channel_.transmission_delay(cn).entries()) {
                    e += pq * curve_.sum_range(m, q);
                }
                s += pc * e;
            }
            w_[static_cast<std::size_t>(c) * static_cast<std::size_t>(table_max_) +
               static_cast<std::size_t>(m - 1)] = s;
        }
    }

    mean_round_trip_.assign(static_cast<std::size_t>(states), 0.0);
    mean_next_tx_.assign(static_cast<std::size_t>(states), 0.0);
    for (int c = 0; c < states; ++c) {
        const auto& row = channel_.next_state_distribution(c);
        double rt = 0.0, tx = 0.0;
        for (int cn = 0; cn < states; ++cn) {
            const double pc = row[static_cast<std::size_t>(cn)];
            tx += pc * channel_.transmission_delay(cn).mean();
            rt += pc * (channel_.transmission_delay(cn).mean() + channel_.feedback_delay(cn).mean());
        }
        mean_round_trip_[static_cast<std::size_t>(c)] = rt;
        mean_next_tx_[static_cast<std::size_t>(c)] = tx;
    }
}

double PolicyModel::g_at(int c, int m) const {
    if (m > table_max_) return curve_.last();
    return g_[static_cast<std::size_t>(c)][static_cast<std::size_t>(m - 1)];
}

double PolicyModel::expected_future_error(int delta, int c, int k) const {
    if (delta < 1) throw ValidationError("expected_future_error: delta must be >= 1");
    if (k < 0) throw ValidationError("expected_future_error: k must be >= 0");
    if (c < 0 || c >= channel_.state_count()) {
        throw ValidationError("expected_future_error: state out of range");
    }
    if (delta + k > ext_age_threshold_) ext_queries_.fetch_add(1, std::memory_order_relaxed);
    return g_at(c, delta + k);
}

double PolicyModel::index_value(int delta, int c) const {
    if (delta < 1) throw ValidationError("index_value: delta must be >= 1");
    if (c < 0 || c >= channel_.state_count()) throw ValidationError("index_value: state out of range");
    if (delta > table_max_) {
        ext_queries_.fetch_add(1, std::memory_order_relaxed);
        return curve_.last();
    }
    return gamma_[static_cast<std::size_t>(c)][static_cast<std::size_t>(delta - 1)];
}

int PolicyModel::waiting_time(int delta, int c, double beta) const {
    if (delta < 1) throw ValidationError("waiting_time: delta must be >= 1");
    const long cap = 10L * curve_.delta_max();
    int k = 0;
    while (index_value(delta + k, c) < beta) {
        ++k;
        if (k > cap) {
            throw SolverError("waiting_time: cap " + std::to_string(cap) +
                              " exceeded at delta=" + std::to_string(delta) +
                              ", state=" + std::to_string(c) + ", beta=" + std::to_string(beta) +
                              " (delta_max/nu_max likely too small for this threshold)");
        }
    }
    return k;
}

double PolicyModel::epoch_cost_gap(double beta, const BufferMapping& psi) const {
    GapWorkspace ws;
    return gap_with_workspace(beta, psi, ws);
}

double PolicyModel::gap_with_workspace(double beta, const BufferMapping& psi,
                                       GapWorkspace& ws) const {
    psi.validate(channel_.state_count());
    const int states = channel_.state_count();
    const int dmax = curve_.delta_max();
    const double h_end = curve_.last();
    if (beta > h_end + 1e-9 * std::max(1.0, curve_.bound())) {
        throw SolverError("epoch_cost_gap: beta=" + std::to_string(beta) +
                          " above the index saturation value h(delta_max)=" + std::to_string(h_end) +
                          "; waiting times are unbounded there");
    }

    // First-crossing table per state: fc[c][d] = smallest age m >= d with
    // gamma(m, c) >= beta. Ages at or past delta_max always cross.
    if (ws.first_crossing.empty()) {
        ws.first_crossing.assign(static_cast<std::size_t>(states),
                                 std::vector<int>(static_cast<std::size_t>(dmax) + 2, 0));
    }
    for (int c = 0; c < states; ++c) {
        auto& fc = ws.first_crossing[static_cast<std::size_t>(c)];
        fc[static_cast<std::size_t>(dmax)] = dmax;  // gamma(dmax, c) = h_end >= beta
        const auto& row = gamma_[static_cast<std::size_t>(c)];
        for (int d = dmax - 1; d >= 1; --d) {
            fc[static_cast<std::size_t>(d)] =
                row[static_cast<std::size_t>(d - 1)] >= beta ? d : fc[static_cast<std::size_t>(d) + 1];
        }
    }
    auto crossing_wait = [&](int d, int c) {
        if (d >= dmax) return 0;  // saturated index
        return ws.first_crossing[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] - d;
    };

    // feedback-interval term per deciding state: E[sum_{k<F'} h(psi(ci) + T' + k)]
    std::vector<double> fb_terms(static_cast<std::size_t>(states), 0.0);
    for (int ci = 0; ci < states; ++ci) {
        const auto& row_ci = channel_.next_state_distribution(ci);
        double fb = 0.0;
        for (int cn = 0; cn < states; ++cn) {
            const double pc = row_ci[static_cast<std::size_t>(cn)];
            if (pc == 0.0) continue;
            double e = 0.0;
            for (const auto& [q, pq] : channel_.transmission_delay(cn).entries()) {
                for (const auto& [f, pf] : channel_.feedback_delay(cn).entries()) {
                    e += pq * pf * curve_.sum_range(psi.at(ci) + q, f);
                }
            }
            fb += pc * e;
        }
        fb_terms[static_cast<std::size_t>(ci)] = fb;
    }

    const auto& pi = channel_.stationary_distribution();
    double gap = 0.0;
    for (int cm = 0; cm < states; ++cm) {
        const double p_cm = pi[static_cast<std::size_t>(cm)];
        if (p_cm == 0.0) continue;
        const auto& row_cm = channel_.next_state_distribution(cm);
        for (int ci = 0; ci < states; ++ci) {
            const double p1 = p_cm * row_cm[static_cast<std::size_t>(ci)];
            if (p1 == 0.0) continue;
            const double fb_term = fb_terms[static_cast<std::size_t>(ci)];

            for (const auto& [ti, pt] : channel_.transmission_delay(ci).entries()) {
                for (const auto& [fi, pf] : channel_.feedback_delay(ci).entries()) {
                    const double p2 = p1 * pt * pf;
                    const int age_ack = psi.at(cm) + ti + fi;
                    const int tau = crossing_wait(age_ack, ci);
                    const int m = age_ack + tau;
                    const double tx_term =
                        m <= table_max_
                            ? w_[static_cast<std::size_t>(ci) * static_cast<std::size_t>(table_max_) +
                                 static_cast<std::size_t>(m - 1)]
                            : h_end * mean_next_tx_[static_cast<std::size_t>(ci)];
                    const double cost = curve_.sum_range(age_ack, tau) + tx_term + fb_term;
                    const double len = static_cast<double>(tau) +
                                       mean_round_trip_[static_cast<std::size_t>(ci)];
                    gap += p2 * (cost - beta * len);
                }
            }
        }
    }
    return gap;
}

double PolicyModel::solve_threshold(const BufferMapping& psi, double tol,
                                    int* iterations_out) const {
    GapWorkspace ws;
    return solve_with_workspace(psi, tol, iterations_out, ws);
}

double PolicyModel::solve_with_workspace(const BufferMapping& psi, double tol,
                                         int* iterations_out, GapWorkspace& ws) const {
    double lo = curve_.min_value();
    double hi = curve_.last();
    if (tol <= 0.0) tol = 1e-9 * (curve_.max_value() - curve_.min_value());

    const double slack = 1e-12 * std::max(1.0, curve_.bound());
    const double gap_lo = gap_with_workspace(lo, psi, ws);
    const double gap_hi = gap_with_workspace(hi, psi, ws);
    if (gap_lo < -slack || gap_hi > slack) {
        throw SolverError("solve_threshold: cost gap has no sign change on [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "] (gap_lo=" + std::to_string(gap_lo) +
                          ", gap_hi=" + std::to_string(gap_hi) +
                          "); error curve or caps are misconfigured");
    }
    int iters = 0;
    while (hi - lo > tol && iters < 200) {
        const double mid = 0.5 * (lo + hi);
        if (gap_with_workspace(mid, psi, ws) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        ++iters;
    }
    if (hi - lo > tol) {
        throw SolverError("solve_threshold: bisection failed to reach tol=" + std::to_string(tol));
    }
    if (iterations_out) *iterations_out = iters;
    return 0.5 * (lo + hi);
}

PolicyModel::MappingSolution PolicyModel::optimize_mapping(int buffer_size, double tol, int jobs,
                                                           bool keep_all) const {
    const int states = channel_.state_count();
    if (buffer_size < 1) throw ValidationError("optimize_mapping: buffer_size must be >= 1");
    double combos = 1.0;
    for (int c = 0; c < states; ++c) combos *= static_cast<double>(buffer_size);
    if (combos > 1e6) {
        throw ValidationError("optimize_mapping: B^C = " + std::to_string(combos) +
                              " exceeds the enumeration guard of 1e6");
    }
    const std::int64_t total = static_cast<std::int64_t>(combos);
    jobs = static_cast<int>(std::max<std::int64_t>(1, std::min<std::int64_t>(jobs, total)));

    auto decode = [&](std::int64_t idx) {
        BufferMapping m;
        m.buffer_size = buffer_size;
        m.positions.assign(static_cast<std::size_t>(states), 0);
        for (int c = states - 1; c >= 0; --c) {
            m.positions[static_cast<std::size_t>(c)] = static_cast<int>(idx % buffer_size);
            idx /= buffer_size;
        }
        return m;
    };

    struct Best {
        double beta = std::numeric_limits<double>::infinity();
        std::int64_t idx = -1;
    };
    std::vector<Best> best(static_cast<std::size_t>(jobs));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    std::vector<double> all;
    if (keep_all) all.assign(static_cast<std::size_t>(total), 0.0);

    auto worker = [&](int w) {
        try {
            GapWorkspace ws;
            Best local;
            for (std::int64_t idx = w; idx < total; idx += jobs) {
                const BufferMapping m = decode(idx);
                const double beta = solve_with_workspace(m, tol, nullptr, ws);
                if (keep_all) all[static_cast<std::size_t>(idx)] = beta;
                if (beta < local.beta || (beta == local.beta && idx < local.idx)) {
                    local.beta = beta;
                    local.idx = idx;
                }
            }
            best[static_cast<std::size_t>(w)] = local;
        } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
    };

    if (jobs == 1) {
        worker(0);
    } else {
        std::vector<std::thread> threads;
        for (int w = 0; w < jobs; ++w) threads.emplace_back(worker, w);
        for (auto& t : threads) t.join();
    }
    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }

    Best global;
    for (const Best& b : best) {
        if (b.beta < global.beta || (b.beta == global.beta && b.idx < global.idx)) global = b;
    }
    MappingSolution out;
    out.mapping = decode(global.idx);
    out.threshold = global.beta;
    out.all_thresholds = std::move(all);
    return out;
}

ThresholdPolicy::ThresholdPolicy(BufferMapping m, double beta,
                                 std::shared_ptr<const PolicyModel> model)
    : mapping(std::move(m)), threshold(beta), index_model(std::move(model)) {
    if (!index_model) throw ValidationError("threshold policy: missing index model");
    mapping.validate(index_model->channel().state_count());
    const auto& h = index_model->curve();
    const double eps = 1e-9 * std::max(1.0, h.bound());
    if (threshold < h.min_value() - eps || threshold > h.max_value() + eps) {
        throw ValidationError("threshold policy: threshold " + std::to_string(threshold) +
                              " outside the error-curve range [" + std::to_string(h.min_value()) +
                              ", " + std::to_string(h.max_value()) + "]");
    }
}

}  // namespace agesched
