#include "agesched/error_curve.hpp"

#include <algorithm>
#include <cmath>

#include "agesched/common.hpp"

namespace agesched {

ErrorCurve::ErrorCurve(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) {
        throw ValidationError("error curve: need at least one value (delta_max >= 1)");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw ValidationError("error curve: non-finite value at delta=" + std::to_string(i + 1));
        }
    }
    min_ = *std::min_element(values_.begin(), values_.end());
    max_ = *std::max_element(values_.begin(), values_.end());
    abs_max_ = std::max(std::abs(min_), std::abs(max_));
    prefix_.resize(values_.size() + 1, 0.0);
    for (std::size_t k = 0; k < values_.size(); ++k) prefix_[k + 1] = prefix_[k] + values_[k];
}

ErrorCurve::ErrorCurve(const ErrorCurve& other)
    : values_(other.values_),
      prefix_(other.prefix_),
      min_(other.min_),
      max_(other.max_),
      abs_max_(other.abs_max_),
      extension_hits_(other.extension_hits_.load(std::memory_order_relaxed)) {}

ErrorCurve& ErrorCurve::operator=(const ErrorCurve& other) {
    if (this != &other) {
        values_ = other.values_;
        prefix_ = other.prefix_;
        min_ = other.min_;
        max_ = other.max_;
        abs_max_ = other.abs_max_;
        extension_hits_.store(other.extension_hits_.load(std::memory_order_relaxed),
                              std::memory_order_relaxed);
    }
    return *this;
}

double ErrorCurve::prefix(std::int64_t m) const {
    if (m <= 0) return 0.0;
    const auto n = static_cast<std::int64_t>(values_.size());
    if (m <= n) return prefix_[static_cast<std::size_t>(m)];
    return prefix_.back() + static_cast<double>(m - n) * values_.back();
}

double ErrorCurve::sum_range(int first_age, std::int64_t count) const {
    if (count <= 0) return 0.0;
    if (first_age + count - 1 > delta_max()) {
        extension_hits_.fetch_add(1, std::memory_order_relaxed);
    }
    return prefix(first_age + count - 1) - prefix(first_age - 1);
}

}  // namespace agesched
