#include "recur/step_function.hpp"

#include <algorithm>
#include <cmath>

namespace recur {

StepFunction::StepFunction(Vec knots, Vec values, double value_before)
    : knots_(std::move(knots)), values_(std::move(values)), value_before_(value_before) {
    if (knots_.size() != values_.size())
        throw NumericError("StepFunction: knots and values differ in length");
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
        if (!(knots_[i] < knots_[i + 1]))
            throw NumericError("StepFunction: knots must be strictly increasing");
    for (double k : knots_)
        if (!std::isfinite(k)) throw NumericError("StepFunction: non-finite knot");
}

double StepFunction::value_at(double t) const {
    // first knot > t, step back one
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    if (it == knots_.begin()) return value_before_;
    return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
    auto it = std::lower_bound(knots_.begin(), knots_.end(), t);
    if (it == knots_.begin()) return value_before_;
    return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
}

bool StepFunction::is_nondecreasing() const {
    double prev = value_before_;
    for (double v : values_) {
        if (v < prev) return false;
        prev = v;
    }
    return true;
}

StepFunction StepFunction::scaled(double time_factor, double value_factor) const {
    Vec k = knots_;
    Vec v = values_;
    for (double& x : k) x *= time_factor;
    for (double& x : v) x *= value_factor;
    return StepFunction(std::move(k), std::move(v), value_before_ * value_factor);
}

} // namespace recur
