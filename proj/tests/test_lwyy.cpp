#include <doctest.h>

#include <cmath>

#include "recur/lwyy.hpp"
#include "recur/rng.hpp"
#include "recur/simulator.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace recur;

TEST_CASE("single-interval data reduces to the right-censored Cox fit") {
    Rng rng(301);
    RecurrentDataset ds;
    ds.covariate_names = {"x1", "x2"};
    std::size_t events = 0;
    for (int i = 0; i < 80; ++i) {
        const Vec x{rng.bernoulli(0.5) ? 1.0 : 0.0, rng.normal()};
        const double y = 0.2 + 3.0 * rng.uniform01();
        const bool event = rng.bernoulli(0.5);
        SubjectRecord s;
        s.id = "s" + std::to_string(i);
        s.covariates = x;
        s.intervals.push_back(Interval{0.0, y, event ? 1 : 0, false});
        ds.subjects.push_back(std::move(s));
        events += event;
    }
    REQUIRE(events > 10);
    ds.tau = 4.0;

    const LwyyFit fit = fit_lwyy(ds);

    const FlatData f = flatten(ds);
    std::vector<int> status(f.n);
    for (std::size_t i = 0; i < f.n; ++i) status[i] = f.m[i] > 0 ? 1 : 0;
    const Vec ones(f.n, 1.0);
    const Vec oracle_beta = oracle::newton_cox(f.y, status, f.x, ones);

    for (std::size_t j = 0; j < 2; ++j)
        CHECK(fit.coef[j] == doctest::Approx(oracle_beta[j]).epsilon(1e-6));
    CHECK(fit.score_norm <= 1e-8);
}

TEST_CASE("robust covariance is symmetric and positive semidefinite") {
    SimConfig cfg = default_config(150, 311);
    auto [ds, truth] = simulate_gsc(cfg);
    const LwyyFit fit = fit_lwyy(ds);
    CHECK(fit.score_norm <= 1e-8);
    CHECK(fit.robust_cov(0, 1) == doctest::Approx(fit.robust_cov(1, 0)).epsilon(1e-12));
    Matrix v;
    const Vec eig = sym_eigen(fit.robust_cov, v);
    for (double e : eig) CHECK(e >= -1e-12);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(fit.se_robust[j] > 0.0);
        CHECK(fit.se_naive[j] > 0.0);
    }
}

TEST_CASE("permuted covariates give null estimates within three robust SEs") {
    SimConfig cfg = default_config(400, 313);
    auto [ds, truth] = simulate_gsc(cfg);
    // permute covariates across subjects, breaking any real association
    Rng rng(77);
    RecurrentDataset perm = ds;
    for (std::size_t i = perm.n(); i > 1; --i) {
        const std::size_t j = rng.next_below(i);
        std::swap(perm.subjects[i - 1].covariates, perm.subjects[j].covariates);
    }
    const LwyyFit fit = fit_lwyy(perm);
    for (std::size_t j = 0; j < 2; ++j)
        CHECK(std::fabs(fit.coef[j]) <= 3.0 * fit.se_robust[j]);
}

TEST_CASE("recurrent-event data with within-subject correlation widens robust SEs") {
    SimConfig cfg = default_config(250, 331);
    cfg.frailty_variance = 1.0;  // strong shared frailty
    auto [ds, truth] = simulate_gsc(cfg);
    const LwyyFit fit = fit_lwyy(ds);
    // frailty-induced overdispersion: the sandwich dominates the naive se
    CHECK(fit.se_robust[0] > fit.se_naive[0]);
    CHECK(fit.se_robust[1] > fit.se_naive[1]);
}

TEST_CASE("error paths: no events, constant covariate") {
    RecurrentDataset quiet;
    quiet.covariate_names = {"x1"};
    quiet.subjects.push_back(testutil::make_subject("a", {}, 2.0, true, Vec{1.0}));
    quiet.tau = 2.0;
    CHECK_THROWS_AS(fit_lwyy(quiet), DataError);

    RecurrentDataset constx = testutil::toy3(true);
    for (auto& s : constx.subjects) s.covariates[0] = 2.0;
    CHECK_THROWS_AS(fit_lwyy(constx), DataError);
}

TEST_CASE("summary text prints the coefficient panel") {
    SimConfig cfg = default_config(100, 337);
    auto [ds, truth] = simulate_gsc(cfg);
    const LwyyFit fit = fit_lwyy(ds);
    const std::string text = fit.summary_text({"x1", "x2"});
    CHECK(text.find("Recurrent event process:") != std::string::npos);
    CHECK(text.find("x1") != std::string::npos);
    CHECK(text.find("StdErr") != std::string::npos);
}
