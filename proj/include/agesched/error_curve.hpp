#pragma once

#include <atomic>
#include <cstdint>
#include <vector>

namespace agesched {

/// Tabulated inference-error-vs-age function h(delta) for delta in
/// [1, delta_max]. Ages past delta_max hold the last value, so h is bounded
/// on all of Z+; a diagnostic counter tracks how often the extension region
/// is touched.
class ErrorCurve {
  public:
    /// values[k] is h(k+1); must be non-empty, all entries finite.
    explicit ErrorCurve(std::vector<double> values);

    ErrorCurve(const ErrorCurve& other);
    ErrorCurve& operator=(const ErrorCurve& other);

    int delta_max() const { return static_cast<int>(values_.size()); }

    /// h(delta) with hold-last extension; delta >= 1.
    double at(int delta) const {
        if (delta > delta_max()) {
            extension_hits_.fetch_add(1, std::memory_order_relaxed);
            return values_.back();
        }
        return values_[static_cast<std::size_t>(delta - 1)];
    }

    /// Value in the extension region, h(delta_max).
    double last() const { return values_.back(); }

    double min_value() const { return min_; }
    double max_value() const { return max_; }
    /// Bound with |h(delta)| < bound() + 1 for all delta.
    double bound() const { return abs_max_; }

    /// Sum of h(first_age) + ... + h(first_age + count - 1); first_age >= 1.
    double sum_range(int first_age, std::int64_t count) const;

    const std::vector<double>& values() const { return values_; }

    /// Number of lookups that fell past delta_max since construction.
    std::uint64_t extension_hits() const { return extension_hits_.load(std::memory_order_relaxed); }

  private:
    double prefix(std::int64_t m) const;  // sum of h(1..m), extension-aware

    std::vector<double> values_;
    std::vector<double> prefix_;  // prefix_[k] = sum h(1..k)
    double min_ = 0.0;
    double max_ = 0.0;
    double abs_max_ = 0.0;
    mutable std::atomic<std::uint64_t> extension_hits_{0};
};

}  // namespace agesched
