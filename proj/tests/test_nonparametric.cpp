#include <doctest.h>

#include <cmath>

#include "recur/nonparametric.hpp"
#include "recur/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace recur;

TEST_CASE("Nelson-Aalen on toy3, adjusted risk set") {
    const McfCurve c = nelson_aalen_mcf(testutil::toy3(), true);
    REQUIRE(c.estimate.knots() == Vec{1.0, 2.0, 3.0});
    CHECK(c.estimate.values()[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(c.estimate.values()[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(c.estimate.values()[2] == doctest::Approx(7.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("cumulative sample mean on toy3") {
    const McfCurve c = nelson_aalen_mcf(testutil::toy3(), false);
    CHECK(c.estimate.values()[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(c.estimate.values()[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(c.estimate.values()[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero events give the flat zero curve") {
    RecurrentDataset ds;
    ds.subjects.push_back(testutil::make_subject("a", {}, 2.0, false));
    ds.tau = 2.0;
    const McfCurve c = nelson_aalen_mcf(ds, true);
    CHECK(c.estimate.empty());
    CHECK(c.estimate.value_at(1.0) == 0.0);
    CHECK_THROWS_AS(nelson_aalen_mcf(RecurrentDataset{}, true), DataError);
}

TEST_CASE("adjusted equals unadjusted when every follow-up covers all events") {
    RecurrentDataset ds;
    ds.subjects.push_back(testutil::make_subject("a", {1.0, 2.0}, 6.0, false));
    ds.subjects.push_back(testutil::make_subject("b", {3.0}, 6.0, true));
    ds.subjects.push_back(testutil::make_subject("c", {}, 6.0, false));
    ds.tau = 6.0;
    const McfCurve adj = nelson_aalen_mcf(ds, true);
    const McfCurve raw = nelson_aalen_mcf(ds, false);
    REQUIRE(adj.estimate.knots() == raw.estimate.knots());
    for (std::size_t k = 0; k < adj.estimate.size(); ++k)
        CHECK(adj.estimate.values()[k] == doctest::Approx(raw.estimate.values()[k]).epsilon(1e-15));
}

TEST_CASE("NPMLE shape on toy3 matches the hand product") {
    auto [shape, table] = npmle_shape(testutil::toy3());
    CHECK(table.s == Vec{1.0, 2.0, 3.0});
    CHECK(table.d == std::vector<int>{1, 1, 1});
    CHECK(table.r == std::vector<int>{1, 2, 3});
    CHECK(shape.value_before_first_knot() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(shape.value_at(0.5) == 0.0);
    CHECK(shape.value_at(1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(shape.value_at(2.7) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(shape.value_at(3.0) == 1.0);
    CHECK(shape.value_at(100.0) == 1.0);
    CHECK(shape.is_nondecreasing());
}

TEST_CASE("NPMLE handles one subject and forced ties") {
    RecurrentDataset single;
    single.subjects.push_back(testutil::make_subject("a", {1.0}, 2.0, false));
    single.tau = 2.0;
    auto [shape, table] = npmle_shape(single);
    CHECK(shape.value_at(0.999) == 0.0);
    CHECK(shape.value_at(1.0) == 1.0);

    RecurrentDataset tie;
    tie.subjects.push_back(testutil::make_subject("a", {4.0}, 6.0, false));
    tie.subjects.push_back(testutil::make_subject("b", {4.0}, 7.0, false));
    tie.tau = 7.0;
    auto [shape2, table2] = npmle_shape(tie);
    CHECK(table2.s == Vec{4.0});
    CHECK(table2.d == std::vector<int>{2});
    CHECK(table2.r == std::vector<int>{2});
    CHECK(shape2.value_at(3.9) == 0.0);
    CHECK(shape2.value_at(4.0) == 1.0);

    RecurrentDataset no_events;
    no_events.subjects.push_back(testutil::make_subject("a", {}, 2.0, true));
    no_events.tau = 2.0;
    CHECK_THROWS_AS(npmle_shape(no_events), DataError);
}

TEST_CASE("NPMLE agrees with the brute-force double loop on random data") {
    Rng rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        RecurrentDataset ds;
        const std::size_t n = 1 + rng.next_below(5);
        bool any_event = false;
        for (std::size_t i = 0; i < n; ++i) {
            const double y = 0.5 + 4.0 * rng.uniform01();
            Vec events;
            const std::size_t m = rng.next_below(4);
            for (std::size_t k = 0; k < m && events.size() < 6; ++k) {
                // coarse grid makes cross-subject ties likely
                const double t = std::ceil(rng.uniform01() * 8.0) / 8.0 * y;
                if (t > 0.0) events.push_back(t);
            }
            std::sort(events.begin(), events.end());
            events.erase(std::unique(events.begin(), events.end()), events.end());
            any_event = any_event || !events.empty();
            ds.subjects.push_back(
                testutil::make_subject("s" + std::to_string(i), events, y, rng.bernoulli(0.4)));
        }
        ds.tau = 10.0;
        if (!any_event) continue;
        auto [shape, table] = npmle_shape(ds);
        const oracle::NaiveShape ref = oracle::naive_npmle(ds);
        REQUIRE(shape.knots().size() == ref.knots.size());
        for (std::size_t l = 0; l < ref.knots.size(); ++l) {
            CHECK(shape.knots()[l] == ref.knots[l]);
            CHECK(shape.values()[l] == doctest::Approx(ref.values[l]).epsilon(1e-12));
        }
        CHECK(shape.value_before_first_knot() ==
              doctest::Approx(ref.value_before).epsilon(1e-12));
    }
}

TEST_CASE("frailty mean estimator on toy data") {
    auto [shape3, t3] = npmle_shape(testutil::toy3());
    CHECK(estimate_mu_z(testutil::toy3(), shape3) == doctest::Approx(1.0).epsilon(1e-12));

    auto [shape2, t2] = npmle_shape(testutil::toy2());
    CHECK(estimate_mu_z(testutil::toy2(), shape2) == doctest::Approx(1.5).epsilon(1e-12));

    // all m = 0 against a unit shape
    RecurrentDataset quiet;
    quiet.subjects.push_back(testutil::make_subject("a", {}, 2.0, false));
    quiet.tau = 2.0;
    const StepFunction one(Vec{}, Vec{}, 1.0);
    CHECK(estimate_mu_z(quiet, one) == 0.0);

    // events where the shape vanishes
    const StepFunction zero(Vec{}, Vec{}, 0.0);
    CHECK_THROWS_AS(estimate_mu_z(testutil::toy3(), zero), DataError);
}

TEST_CASE("bootstrap bands: structure, clipping, determinism") {
    const RecurrentDataset ds = testutil::toy3();
    const McfCurve c = bootstrap_mcf_ci(ds, McfEstimator::nelson_aalen, 200, 0.95, 11);
    REQUIRE(c.lower.has_value());
    REQUIRE(c.upper.has_value());
    CHECK(c.n_boot == 200);
    for (double t : c.lower->knots()) {
        CHECK(c.lower->value_at(t) >= 0.0);
        CHECK(c.lower->value_at(t) <= c.estimate.value_at(t) + 1e-12);
        CHECK(c.upper->value_at(t) >= c.estimate.value_at(t) - 1e-12);
    }
    const McfCurve c2 = bootstrap_mcf_ci(ds, McfEstimator::nelson_aalen, 200, 0.95, 11);
    CHECK(c.lower->values() == c2.lower->values());
    CHECK(c.upper->values() == c2.upper->values());
}

TEST_CASE("bootstrap bands collapse for identical subjects") {
    RecurrentDataset ds;
    for (int i = 0; i < 5; ++i)
        ds.subjects.push_back(testutil::make_subject("s" + std::to_string(i), {1.0}, 3.0, false));
    ds.tau = 3.0;
    const McfCurve c = bootstrap_mcf_ci(ds, McfEstimator::cumulative_sample_mean, 50, 0.95, 3);
    for (std::size_t k = 0; k < c.lower->size(); ++k) {
        const double t = c.lower->knots()[k];
        CHECK(c.lower->value_at(t) == doctest::Approx(c.estimate.value_at(t)).epsilon(1e-12));
        CHECK(c.upper->value_at(t) == doctest::Approx(c.estimate.value_at(t)).epsilon(1e-12));
    }
}

TEST_CASE("bootstrap results do not depend on the worker count") {
    const RecurrentDataset ds = testutil::toy3();
    const McfCurve a = bootstrap_mcf_ci(ds, McfEstimator::npmle, 64, 0.9, 5, 1);
    const McfCurve b = bootstrap_mcf_ci(ds, McfEstimator::npmle, 64, 0.9, 5, 4);
    CHECK(a.lower->values() == b.lower->values());
    CHECK(a.upper->values() == b.upper->values());
    CHECK(a.n_boot == b.n_boot);
}

TEST_CASE("curve serialization") {
    McfCurve c = nelson_aalen_mcf(testutil::toy3(), true);
    c.label = "toy";
    const std::string csv = curves_to_csv({c});
    CHECK(csv.rfind("time,estimate,lower,upper,label\n", 0) == 0);
    CHECK(testutil::count_occurrences(csv, "\n") == 4);  // header + 3 knots
    CHECK(csv.find(",toy") != std::string::npos);

    const std::string json = curve_to_json(c);
    CHECK(json.find("\"label\": \"toy\"") != std::string::npos);
    CHECK(json.find("\"estimate\"") != std::string::npos);
}
