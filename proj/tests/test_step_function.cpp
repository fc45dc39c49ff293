#include <doctest.h>

#include "recur/step_function.hpp"

using recur::StepFunction;
using recur::Vec;

TEST_CASE("right-continuous evaluation") {
    StepFunction s(Vec{1.0, 2.0, 3.0}, Vec{0.1, 0.5, 1.0}, 0.0);
    CHECK(s.value_at(0.5) == 0.0);
    CHECK(s.value_at(1.0) == 0.1);
    CHECK(s.value_at(1.5) == 0.1);
    CHECK(s.value_at(2.0) == 0.5);
    CHECK(s.value_at(3.0) == 1.0);
    CHECK(s.value_at(10.0) == 1.0);
}

TEST_CASE("left limits pick the pre-jump value") {
    StepFunction s(Vec{1.0, 2.0}, Vec{0.4, 1.0}, 0.2);
    CHECK(s.left_limit(0.5) == 0.2);
    CHECK(s.left_limit(1.0) == 0.2);
    CHECK(s.left_limit(1.5) == 0.4);
    CHECK(s.left_limit(2.0) == 0.4);
    CHECK(s.left_limit(2.5) == 1.0);
}

TEST_CASE("knots must strictly increase") {
    CHECK_THROWS_AS(StepFunction(Vec{1.0, 1.0}, Vec{0.0, 1.0}, 0.0), recur::NumericError);
    CHECK_THROWS_AS(StepFunction(Vec{2.0, 1.0}, Vec{0.0, 1.0}, 0.0), recur::NumericError);
}

TEST_CASE("scaling acts on both axes") {
    StepFunction s(Vec{1.0, 2.0}, Vec{0.5, 1.0}, 0.0);
    StepFunction t = s.scaled(2.0, 3.0);
    CHECK(t.knots()[0] == 2.0);
    CHECK(t.knots()[1] == 4.0);
    CHECK(t.values()[0] == 1.5);
    CHECK(t.values()[1] == 3.0);
    CHECK(t.is_nondecreasing());
}

TEST_CASE("empty function evaluates to the default value") {
    StepFunction s;
    CHECK(s.value_at(1.0) == 0.0);
    CHECK(s.left_limit(1.0) == 0.0);
    CHECK(s.is_nondecreasing());
}
