#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "agesched/common.hpp"

namespace agesched {

/// Finite-support delay distribution on integers >= 1 slot.
class DelayPmf {
  public:
    /// entries: (delay, probability) pairs; probabilities must sum to 1
    /// within 1e-12, every delay >= 1, no duplicates.
    explicit DelayPmf(std::vector<std::pair<int, double>> entries);

    const std::vector<std::pair<int, double>>& entries() const { return entries_; }
    double mean() const { return mean_; }
    int min_delay() const { return entries_.front().first; }
    int max_delay() const { return entries_.back().first; }

    /// Inverse-CDF sample; one uniform draw per call.
    int sample(Rng& rng) const;

  private:
    std::vector<std::pair<int, double>> entries_;  // sorted by delay
    std::vector<double> cdf_;
    double mean_ = 0.0;
};

/// Two-way channel: a finite ergodic Markov chain over delay conditions,
/// with per-state transmission and feedback delay distributions. The chain
/// advances exactly once per epoch.
class ChannelModel {
  public:
    ChannelModel(std::vector<std::vector<double>> transition,
                 std::vector<DelayPmf> transmission, std::vector<DelayPmf> feedback);

    int state_count() const { return static_cast<int>(transmission_.size()); }
    const std::vector<std::vector<double>>& transition_matrix() const { return transition_; }

    /// Row c of the transition matrix.
    const std::vector<double>& next_state_distribution(int c) const;

    const DelayPmf& transmission_delay(int c) const;
    const DelayPmf& feedback_delay(int c) const;

    int max_transmission_delay() const { return max_tx_; }
    int max_feedback_delay() const { return max_fb_; }

    /// Unique stationary distribution (exists by the ergodicity check).
    const std::vector<double>& stationary_distribution() const { return stationary_; }

    int sample_next_state(int c, Rng& rng) const;

    /// Draws (transmission, feedback) delays for an epoch whose channel
    /// state is c_next.
    std::pair<int, int> sample_epoch_delays(int c_next, Rng& rng) const;

  private:
    void check_state(int c) const;

    std::vector<std::vector<double>> transition_;
    std::vector<std::vector<double>> transition_cdf_;
    std::vector<DelayPmf> transmission_;
    std::vector<DelayPmf> feedback_;
    std::vector<double> stationary_;
    int max_tx_ = 0;
    int max_fb_ = 0;
};

/// Channel that keeps the delay distributions but forgets the memory: every
/// transition row is replaced by the stationary distribution of `model`.
ChannelModel iid_surrogate(const ChannelModel& model);

/// Symmetric two-state chain with p01 = p10 = alpha/2, alpha in (0, 2).
std::vector<std::vector<double>> symmetric_two_state_matrix(double alpha);

}  // namespace agesched
