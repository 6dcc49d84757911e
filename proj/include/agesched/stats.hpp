#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace agesched {

/// Incremental mean/variance (Welford).
class RunningStat {
  public:
    void push(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::int64_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double std_dev() const { return std::sqrt(variance()); }
    double std_error() const { return n_ > 0 ? std_dev() / std::sqrt(static_cast<double>(n_)) : 0.0; }

  private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Standard error of a time average from batch means.
inline double batch_means_std_error(const std::vector<double>& batch_means) {
    RunningStat s;
    for (double b : batch_means) s.push(b);
    return s.std_error();
}

/// Pearson chi-squared statistic for observed counts vs expected probabilities.
inline double chi_squared_statistic(const std::vector<std::int64_t>& observed,
                                    const std::vector<double>& expected_prob) {
    std::int64_t total = 0;
    for (auto o : observed) total += o;
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = expected_prob[i] * static_cast<double>(total);
        const double d = static_cast<double>(observed[i]) - e;
        stat += d * d / e;
    }
    return stat;
}

}  // namespace agesched
