#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "recur/simulator.hpp"
#include "recur/stats.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace recur;

TEST_CASE("defaults pin the documented generator") {
    const SimConfig c = default_config(200, 1);
    CHECK(c.tau == 60.0);
    CHECK(c.origin == 0.0);
    CHECK(c.alpha == Vec{0.0, 0.0});
    CHECK(c.beta == Vec{-1.0, -1.0});
    CHECK(c.eta == Vec{0.0, 0.0});
    CHECK(c.theta == Vec{1.0, 1.0});
    CHECK(c.frailty_variance == 0.25);  // gamma with unit mean
    // default cumulative baselines: 2 log(1+t) and log(1+t)/5
    CHECK(cumulative_rate_at(c, Vec{0.0, 0.0}, 1.0, std::exp(1.0) - 1.0) ==
          doctest::Approx(2.0).epsilon(1e-12));
    CHECK(cumulative_hazard_at(c, Vec{0.0, 0.0}, 1.0, std::exp(1.0) - 1.0) ==
          doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("display preset reproduces the displayed rate and hazard") {
    const SimConfig c = paper_display_preset(200, 1);
    CHECK(c.alpha == Vec{-1.0, -1.0});
    CHECK(c.beta == Vec{0.0, 0.0});
    CHECK(c.eta == Vec{1.0, 1.0});
    CHECK(c.theta == Vec{0.0, 0.0});
    // rate at x = 0, z = 1, t = 1 is 2 / (1 + 1) = 1
    CHECK(rate_at(c, Vec{0.0, 0.0}, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-5));
    // hazard at x = 0, z = 1, t = 0 is 1/5
    CHECK(hazard_at(c, Vec{0.0, 0.0}, 1.0, 0.0) == doctest::Approx(0.2).epsilon(1e-5));
    // covariates shift the time scale as displayed: rate 2z/(1 + t e^{-x1-x2})
    const Vec x{1.0, 0.5};
    const double t = 2.0;
    const double want = 2.0 * 1.3 / (1.0 + t * std::exp(-1.5));
    CHECK(rate_at(c, x, 1.3, t) == doctest::Approx(want).epsilon(1e-4));
}

TEST_CASE("n = 0 gives an empty dataset with named covariates") {
    auto [ds, truth] = simulate_gsc(default_config(0, 1));
    CHECK(ds.n() == 0);
    CHECK(ds.covariate_names == std::vector<std::string>{"x1", "x2"});
    CHECK(truth.id.empty());
}

TEST_CASE("seed determinism and stream independence") {
    const SimConfig a = default_config(40, 5);
    auto [d1, t1] = simulate_gsc(a);
    auto [d2, t2] = simulate_gsc(a);
    REQUIRE(d1.n() == d2.n());
    for (std::size_t i = 0; i < d1.n(); ++i) {
        CHECK(d1.subjects[i].follow_up() == d2.subjects[i].follow_up());
        CHECK(d1.subjects[i].event_count() == d2.subjects[i].event_count());
        CHECK(t1.z[i] == t2.z[i]);
    }
    SimConfig b = a;
    b.workers = 2;
    auto [d3, t3] = simulate_gsc(b);
    for (std::size_t i = 0; i < d1.n(); ++i) {
        CHECK(d1.subjects[i].follow_up() == d3.subjects[i].follow_up());
        CHECK(t1.c[i] == t3.c[i]);
    }
    SimConfig c = a;
    c.seed = 6;
    auto [d4, t4] = simulate_gsc(c);
    bool any_diff = false;
    for (std::size_t i = 0; i < d1.n(); ++i)
        any_diff = any_diff || d1.subjects[i].follow_up() != d4.subjects[i].follow_up();
    CHECK(any_diff);
}

TEST_CASE("generated subjects satisfy the dataset invariants") {
    auto [ds, truth] = simulate_gsc(default_config(300, 7));
    auto [checked, report] = validate(ds, CheckMode::hard);
    CHECK_FALSE(report.has_errors());
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const SubjectRecord& s = ds.subjects[i];
        const double y = s.follow_up();
        CHECK(y > 0.0);
        CHECK(y <= 60.0 + 1e-12);
        for (double t : s.event_times()) {
            CHECK(t > 0.0);
            CHECK(t <= y);
        }
        // terminal indicator means D fired before censoring and tau
        const bool want_terminal = truth.d[i] <= std::min(truth.c[i], 60.0);
        CHECK(s.terminal() == want_terminal);
        CHECK(y == doctest::Approx(std::min(std::min(truth.d[i], truth.c[i]), 60.0)));
    }
}

TEST_CASE("doubling a constant frailty doubles the event count in expectation") {
    SimConfig base = default_config(10000, 11);
    base.alpha = base.eta = {0.0, 0.0};
    base.beta = base.theta = {0.0, 0.0};
    base.censoring = SimConfig::Censoring::uniform;  // independent of Z
    base.haz0 = [](double) { return 0.0; };          // no terminal events
    base.haz0_default = false;
    base.frailty = SimConfig::Frailty::constant;
    base.frailty_constant = 1.0;

    auto [d1, t1] = simulate_gsc(base);
    SimConfig doubled = base;
    doubled.frailty_constant = 2.0;
    auto [d2, t2] = simulate_gsc(doubled);

    const double m1 = summarize(d1).mean_events_per_subject;
    const double m2 = summarize(d2).mean_events_per_subject;
    CHECK(m2 == doctest::Approx(2.0 * m1).epsilon(0.05));
}

TEST_CASE("gap probability-integral transform is uniform for the Poisson case") {
    // constant frailty 1, all parameters zero, censoring fixed at tau:
    // conditionally on the window, each completed gap of the transformed
    // process is a truncated unit exponential
    SimConfig cfg = default_config(4000, 13);
    cfg.alpha = cfg.eta = {0.0, 0.0};
    cfg.beta = cfg.theta = {0.0, 0.0};
    cfg.frailty = SimConfig::Frailty::constant;
    cfg.frailty_constant = 1.0;
    cfg.censoring = SimConfig::Censoring::explicit_values;
    cfg.censoring_values.assign(cfg.n, cfg.tau);

    auto [ds, truth] = simulate_gsc(cfg);
    auto lam0 = [](double t) { return 2.0 * std::log1p(t); };

    Vec unit;
    for (const auto& s : ds.subjects) {
        const double budget = lam0(s.follow_up());
        double prev = 0.0;
        for (double t : s.event_times()) {
            const double gap = lam0(t) - prev;
            const double remaining = budget - prev;
            // PIT of an Exp(1) truncated at the remaining budget
            const double u = -std::expm1(-gap) / -std::expm1(-remaining);
            unit.push_back(u);
            prev = lam0(t);
        }
    }
    REQUIRE(unit.size() > 10000);
    if (unit.size() > 10000) unit.resize(10000);
    std::sort(unit.begin(), unit.end());
    const double ks = ks_statistic_from_cdf_values(unit);
    const double crit1pct = 1.6276 / std::sqrt(static_cast<double>(unit.size()));
    CHECK(ks < crit1pct);
}

TEST_CASE("summary moments match the independent Poisson-count recipe") {
    const std::size_t n = 600000;
    auto [ds, truth] = simulate_gsc(default_config(n, 17));
    const DatasetSummary s = summarize(ds);

    SimConfig oracle_cfg = default_config(n, 0);
    auto [mean_events, terminal_prop] = oracle::poisson_recipe_moments(oracle_cfg, 555);

    CHECK(s.mean_events_per_subject ==
          doctest::Approx(mean_events).epsilon(0.01));
    CHECK(s.terminal_proportion == doctest::Approx(terminal_prop).epsilon(0.01));
}

TEST_CASE("display preset is deterministic and produces valid data") {
    auto [d1, t1] = simulate_gsc(paper_display_preset(100, 3));
    auto [d2, t2] = simulate_gsc(paper_display_preset(100, 3));
    REQUIRE(d1.n() == 100);
    for (std::size_t i = 0; i < d1.n(); ++i) {
        CHECK(d1.subjects[i].follow_up() == d2.subjects[i].follow_up());
        CHECK(d1.subjects[i].event_count() == d2.subjects[i].event_count());
    }
    auto [checked, report] = validate(d1, CheckMode::hard);
    CHECK_FALSE(report.has_errors());
}

TEST_CASE("explicit covariates, frailty and censoring vectors") {
    SimConfig cfg = default_config(3, 19);
    cfg.covariates = SimConfig::Covariates::explicit_matrix;
    cfg.xmat = Matrix(3, 2);
    cfg.xmat(0, 0) = 1.0;
    cfg.xmat(1, 1) = -0.5;
    cfg.frailty = SimConfig::Frailty::explicit_values;
    cfg.frailty_values = {1.0, 0.5, 2.0};
    cfg.censoring = SimConfig::Censoring::explicit_values;
    cfg.censoring_values = {10.0, 20.0, 30.0};
    auto [ds, truth] = simulate_gsc(cfg);
    REQUIRE(ds.n() == 3);
    CHECK(ds.subjects[0].covariates[0] == 1.0);
    CHECK(ds.subjects[1].covariates[1] == -0.5);
    CHECK(truth.z == Vec{1.0, 0.5, 2.0});
    CHECK(truth.c == Vec{10.0, 20.0, 30.0});
    for (std::size_t i = 0; i < 3; ++i) CHECK(ds.subjects[i].follow_up() <= truth.c[i]);
}

TEST_CASE("per-subject origins shift the file-time coordinates only") {
    SimConfig cfg = default_config(4, 23);
    cfg.origins = {0.0, 5.0, 10.0, 2.5};
    auto [ds, truth] = simulate_gsc(cfg);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(ds.subjects[i].origin == cfg.origins[i]);
        CHECK(ds.subjects[i].intervals.front().start == cfg.origins[i]);
    }
}

TEST_CASE("configuration validation and the power-law lint") {
    SimConfig bad = default_config(5, 1);
    bad.lam0 = [](double t) { return t <= 1.0 ? t : 2.0 - t; };  // decreasing
    bad.lam0_default = false;
    CHECK_THROWS_AS(simulate_gsc(bad), DataError);

    SimConfig off0 = default_config(5, 1);
    off0.haz0 = [](double t) { return 1.0 + t; };  // f(0) != 0
    off0.haz0_default = false;
    CHECK_THROWS_AS(simulate_gsc(off0), DataError);

    SimConfig power = default_config(5, 1);
    power.lam0 = [](double t) { return t * t; };
    power.lam0_default = false;
    const std::vector<std::string> warnings = lint_config(power);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("power law") != std::string::npos);
    CHECK(lint_config(default_config(5, 1)).empty());
}

TEST_CASE("custom baseline uses bisection inversion") {
    SimConfig cfg = default_config(400, 29);
    cfg.alpha = cfg.eta = {0.0, 0.0};
    cfg.beta = cfg.theta = {0.0, 0.0};
    cfg.frailty = SimConfig::Frailty::constant;
    cfg.frailty_constant = 1.0;
    cfg.censoring = SimConfig::Censoring::explicit_values;
    cfg.censoring_values.assign(cfg.n, 60.0);
    // same law as the default, but through the generic bisection path
    cfg.lam0 = [](double t) { return 2.0 * std::log1p(t); };
    cfg.lam0_default = false;
    auto [ds, truth] = simulate_gsc(cfg);

    SimConfig ref = cfg;
    ref.lam0 = BaselineFn{};
    ref.lam0_default = true;
    auto [ds2, truth2] = simulate_gsc(ref);

    // identical draws: the bisection agrees with the analytic inverse
    for (std::size_t i = 0; i < ds.n(); ++i) {
        REQUIRE(ds.subjects[i].event_count() == ds2.subjects[i].event_count());
        const Vec a = ds.subjects[i].event_times();
        const Vec b = ds2.subjects[i].event_times();
        for (std::size_t k = 0; k < a.size(); ++k)
            CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-8));
    }
}

TEST_CASE("truth sidecar serializes") {
    auto [ds, truth] = simulate_gsc(default_config(5, 31));
    const std::string csv = truth_to_csv(truth);
    CHECK(csv.rfind("id,Z,C,D\n", 0) == 0);
    CHECK(testutil::count_occurrences(csv, "\n") == 6);
}
