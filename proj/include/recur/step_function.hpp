#ifndef RECUR_STEP_FUNCTION_HPP
#define RECUR_STEP_FUNCTION_HPP

#include <cstddef>

#include "recur/common.hpp"

namespace recur {

// Right-continuous step function: value_at(t) is the value attached to the
// largest knot <= t, or value_before_first_knot for t below every knot.
// Estimators whose defining formula includes the jump point itself (the
// exponential-form baseline) evaluate through left_limit instead.
class StepFunction {
public:
    StepFunction() = default;
    StepFunction(Vec knots, Vec values, double value_before = 0.0);

    double value_at(double t) const;

    // Limit from the left: value of the largest knot strictly below t.
    double left_limit(double t) const;

    const Vec& knots() const { return knots_; }
    const Vec& values() const { return values_; }
    double value_before_first_knot() const { return value_before_; }
    std::size_t size() const { return knots_.size(); }
    bool empty() const { return knots_.empty(); }

    bool is_nondecreasing() const;

    // New step function with knots scaled by time_factor and all values
    // (including the pre-knot value) scaled by value_factor.
    StepFunction scaled(double time_factor, double value_factor) const;

private:
    Vec knots_;
    Vec values_;
    double value_before_ = 0.0;
};

} // namespace recur

#endif
