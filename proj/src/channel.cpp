#include "agesched/channel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace agesched {

namespace {
constexpr double kProbTol = 1e-12;

bool strongly_connected(const std::vector<std::vector<double>>& p) {
    const int n = static_cast<int>(p.size());
    auto reach = [&](bool transpose) {
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < n; ++v) {
                const double w = transpose ? p[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)]
                                           : p[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)];
                if (w > 0.0 && !seen[static_cast<std::size_t>(v)]) {
                    seen[static_cast<std::size_t>(v)] = 1;
                    stack.push_back(v);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    };
    return reach(false) && reach(true);
}

/// Period of a strongly connected chain: gcd over edges (u,v) of
/// level(u) + 1 - level(v), with BFS levels from state 0.
int chain_period(const std::vector<std::vector<double>>& p) {
    const int n = static_cast<int>(p.size());
    std::vector<int> level(static_cast<std::size_t>(n), -1);
    std::queue<int> q;
    level[0] = 0;
    q.push(0);
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v = 0; v < n; ++v) {
            if (p[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] > 0.0 &&
                level[static_cast<std::size_t>(v)] < 0) {
                level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
                q.push(v);
            }
        }
    }
    int g = 0;
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            if (p[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] > 0.0) {
                g = std::gcd(g, level[static_cast<std::size_t>(u)] + 1 - level[static_cast<std::size_t>(v)]);
            }
        }
    }
    return std::abs(g);
}

std::vector<double> solve_stationary(const std::vector<std::vector<double>>& p) {
    const int n = static_cast<int>(p.size());
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            a(i, j) = p[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
        }
        a(i, i) -= 1.0;
    }
    for (int j = 0; j < n; ++j) a(n - 1, j) = 1.0;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    Eigen::VectorXd pi = a.partialPivLu().solve(b);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = pi(i);
    return out;
}
}  // namespace

DelayPmf::DelayPmf(std::vector<std::pair<int, double>> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw ValidationError("delay pmf: empty support");
    std::sort(entries_.begin(), entries_.end());
    double total = 0.0;
    int prev = 0;
    for (const auto& [d, pr] : entries_) {
        if (d < 1) throw ValidationError("delay pmf: delay " + std::to_string(d) + " below one slot");
        if (d == prev) throw ValidationError("delay pmf: duplicate support value " + std::to_string(d));
        if (!(pr >= 0.0) || !std::isfinite(pr)) {
            throw ValidationError("delay pmf: negative or non-finite probability");
        }
        total += pr;
        prev = d;
    }
    if (std::abs(total - 1.0) > kProbTol) {
        throw ValidationError("delay pmf: probabilities sum to " + std::to_string(total) +
                              ", expected 1 within 1e-12");
    }
    cdf_.reserve(entries_.size());
    double acc = 0.0;
    for (const auto& [d, pr] : entries_) {
        acc += pr;
        cdf_.push_back(acc);
        mean_ += static_cast<double>(d) * pr;
    }
    cdf_.back() = 1.0;
}

int DelayPmf::sample(Rng& rng) const {
    const double u = rng.uniform01();
    for (std::size_t i = 0; i < cdf_.size(); ++i) {
        if (u < cdf_[i]) return entries_[i].first;
    }
    return entries_.back().first;
}

ChannelModel::ChannelModel(std::vector<std::vector<double>> transition,
                           std::vector<DelayPmf> transmission, std::vector<DelayPmf> feedback)
    : transition_(std::move(transition)),
      transmission_(std::move(transmission)),
      feedback_(std::move(feedback)) {
    const std::size_t c = transition_.size();
    if (c == 0) throw ValidationError("channel: need at least one state");
    if (transmission_.size() != c || feedback_.size() != c) {
        throw ValidationError("channel: delay pmf count does not match state count");
    }
    for (std::size_t i = 0; i < c; ++i) {
        if (transition_[i].size() != c) {
            throw ValidationError("channel: transition matrix row " + std::to_string(i) +
                                  " has wrong length");
        }
        double total = 0.0;
        for (double p : transition_[i]) {
            if (!(p >= 0.0) || !std::isfinite(p)) {
                throw ValidationError("channel: negative or non-finite transition probability");
            }
            total += p;
        }
        if (std::abs(total - 1.0) > kProbTol) {
            throw ValidationError("channel: transition row " + std::to_string(i) + " sums to " +
                                  std::to_string(total) + ", expected 1 within 1e-12");
        }
    }
    if (!strongly_connected(transition_)) {
        throw ValidationError("channel: chain is not irreducible");
    }
    if (chain_period(transition_) != 1) {
        throw ValidationError("channel: chain is periodic");
    }
    stationary_ = solve_stationary(transition_);
    for (double p : stationary_) {
        if (!(p > 0.0)) throw ValidationError("channel: stationary solve failed");
    }

    transition_cdf_.resize(c);
    for (std::size_t i = 0; i < c; ++i) {
        double acc = 0.0;
        transition_cdf_[i].resize(c);
        for (std::size_t j = 0; j < c; ++j) {
            acc += transition_[i][j];
            transition_cdf_[i][j] = acc;
        }
        transition_cdf_[i].back() = 1.0;
    }
    for (const auto& pmf : transmission_) max_tx_ = std::max(max_tx_, pmf.max_delay());
    for (const auto& pmf : feedback_) max_fb_ = std::max(max_fb_, pmf.max_delay());
}

void ChannelModel::check_state(int c) const {
    if (c < 0 || c >= state_count()) {
        throw ValidationError("channel: state index " + std::to_string(c) + " out of range [0, " +
                              std::to_string(state_count()) + ")");
    }
}

const std::vector<double>& ChannelModel::next_state_distribution(int c) const {
    check_state(c);
    return transition_[static_cast<std::size_t>(c)];
}

const DelayPmf& ChannelModel::transmission_delay(int c) const {
    check_state(c);
    return transmission_[static_cast<std::size_t>(c)];
}

const DelayPmf& ChannelModel::feedback_delay(int c) const {
    check_state(c);
    return feedback_[static_cast<std::size_t>(c)];
}

int ChannelModel::sample_next_state(int c, Rng& rng) const {
    check_state(c);
    const auto& cdf = transition_cdf_[static_cast<std::size_t>(c)];
    const double u = rng.uniform01();
    for (std::size_t j = 0; j < cdf.size(); ++j) {
        if (u < cdf[j]) return static_cast<int>(j);
    }
    return state_count() - 1;
}

std::pair<int, int> ChannelModel::sample_epoch_delays(int c_next, Rng& rng) const {
    check_state(c_next);
    const int t = transmission_[static_cast<std::size_t>(c_next)].sample(rng);
    const int f = feedback_[static_cast<std::size_t>(c_next)].sample(rng);
    return {t, f};
}

ChannelModel iid_surrogate(const ChannelModel& model) {
    const auto& pi = model.stationary_distribution();
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(model.state_count()), pi);
    std::vector<DelayPmf> tx, fb;
    for (int c = 0; c < model.state_count(); ++c) {
        tx.push_back(model.transmission_delay(c));
        fb.push_back(model.feedback_delay(c));
    }
    return ChannelModel(std::move(rows), std::move(tx), std::move(fb));
}

std::vector<std::vector<double>> symmetric_two_state_matrix(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 2.0)) {
        throw ValidationError("alpha must lie in (0, 2), got " + std::to_string(alpha));
    }
    const double q = alpha / 2.0;
    return {{1.0 - q, q}, {q, 1.0 - q}};
}

}  // namespace agesched
