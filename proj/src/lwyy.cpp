#include "recur/lwyy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "recur/stats.hpp"

namespace recur {

namespace {

struct AgData {
    std::size_t p = 0;
    std::size_t n_subjects = 0;
    // one entry per interval
    Vec start, stop;
    std::vector<int> event;
    std::vector<std::size_t> subject;
    Matrix x;  // per subject
    Vec event_times;  // distinct, ascending
    std::vector<int> event_count;  // per distinct time
};

AgData build(const RecurrentDataset& dataset) {
    AgData d;
    d.p = dataset.covariate_dim();
    d.n_subjects = dataset.n();
    d.x = Matrix(d.n_subjects, d.p);
    Vec raw_event_times;
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        const SubjectRecord& s = dataset.subjects[i];
        for (std::size_t j = 0; j < d.p; ++j) d.x(i, j) = s.covariates[j];
        for (const auto& iv : s.intervals) {
            d.start.push_back(iv.start - s.origin);
            d.stop.push_back(iv.stop - s.origin);
            d.event.push_back(iv.event_type >= 1 ? 1 : 0);
            d.subject.push_back(i);
            if (iv.event_type >= 1) raw_event_times.push_back(iv.stop - s.origin);
        }
    }
    std::sort(raw_event_times.begin(), raw_event_times.end());
    for (double t : raw_event_times) {
        if (!d.event_times.empty() && d.event_times.back() == t) {
            ++d.event_count.back();
        } else {
            d.event_times.push_back(t);
            d.event_count.push_back(1);
        }
    }
    return d;
}

struct Pass {
    double loglik = 0.0;
    Vec score;
    Matrix info;
    Vec s0_at_event;       // per distinct event time
    std::vector<Vec> xbar_at_event;
};

double interval_lp(const AgData& d, std::size_t r, const Vec& beta) {
    double s = 0.0;
    const std::size_t i = d.subject[r];
    for (std::size_t j = 0; j < d.p; ++j) s += d.x(i, j) * beta[j];
    return s;
}

Pass evaluate(const AgData& d, const Vec& beta, bool want_detail) {
    const std::size_t p = d.p;
    const std::size_t m = d.start.size();
    const std::size_t K = d.event_times.size();

    std::vector<std::size_t> by_start(m), by_stop(m);
    std::iota(by_start.begin(), by_start.end(), 0);
    by_stop = by_start;
    std::sort(by_start.begin(), by_start.end(),
              [&](std::size_t a, std::size_t b) { return d.start[a] < d.start[b]; });
    std::sort(by_stop.begin(), by_stop.end(),
              [&](std::size_t a, std::size_t b) { return d.stop[a] < d.stop[b]; });

    Vec w(m);
    for (std::size_t r = 0; r < m; ++r) w[r] = std::exp(interval_lp(d, r, beta));

    // events grouped by distinct time for the per-case sums
    // (event rows sorted by stop time; rows with event flag only)
    std::vector<std::size_t> event_rows;
    for (std::size_t r = 0; r < m; ++r)
        if (d.event[r]) event_rows.push_back(r);
    std::sort(event_rows.begin(), event_rows.end(),
              [&](std::size_t a, std::size_t b) { return d.stop[a] < d.stop[b]; });

    Pass out;
    out.score.assign(p, 0.0);
    out.info = Matrix(p, p);
    if (want_detail) {
        out.s0_at_event.assign(K, 0.0);
        out.xbar_at_event.assign(K, Vec(p, 0.0));
    }

    // Risk sums as differences of two prefix accumulations (entries by
    // start, exits by stop).  Pure additions keep the score floor near
    // machine precision; a running add/remove sweep drifts enough to stall
    // the Newton iteration around 1e-8.
    const std::size_t stride = 1 + p + p * p;
    Vec pref_start((m + 1) * stride, 0.0), pref_stop((m + 1) * stride, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        for (int which = 0; which < 2; ++which) {
            Vec& pref = which == 0 ? pref_start : pref_stop;
            const std::size_t r = which == 0 ? by_start[k] : by_stop[k];
            const std::size_t i = d.subject[r];
            const double* prev = &pref[k * stride];
            double* cur = &pref[(k + 1) * stride];
            cur[0] = prev[0] + w[r];
            for (std::size_t a = 0; a < p; ++a) {
                cur[1 + a] = prev[1 + a] + w[r] * d.x(i, a);
                for (std::size_t b = 0; b < p; ++b)
                    cur[1 + p + a * p + b] = prev[1 + p + a * p + b] + w[r] * d.x(i, a) * d.x(i, b);
            }
        }
    }

    std::size_t add_ptr = 0, drop_ptr = 0, case_ptr = 0;
    std::set<std::size_t> active;
    Vec s1(p, 0.0);
    Matrix s2(p, p);

    for (std::size_t k = 0; k < K; ++k) {
        const double u = d.event_times[k];
        while (add_ptr < m && d.start[by_start[add_ptr]] < u) active.insert(by_start[add_ptr++]);
        while (drop_ptr < m && d.stop[by_stop[drop_ptr]] < u) active.erase(by_stop[drop_ptr++]);
        double s0;
        if (active.size() <= 128) {
            // small risk sets lose all precision to prefix cancellation;
            // sum the members directly
            s0 = 0.0;
            std::fill(s1.begin(), s1.end(), 0.0);
            s2 = Matrix(p, p);
            for (std::size_t r : active) {
                const std::size_t i = d.subject[r];
                s0 += w[r];
                for (std::size_t a = 0; a < p; ++a) {
                    s1[a] += w[r] * d.x(i, a);
                    for (std::size_t b = 0; b < p; ++b)
                        s2(a, b) += w[r] * d.x(i, a) * d.x(i, b);
                }
            }
        } else {
            const double* entered = &pref_start[add_ptr * stride];
            const double* gone = &pref_stop[drop_ptr * stride];
            s0 = entered[0] - gone[0];
            for (std::size_t a = 0; a < p; ++a) {
                s1[a] = entered[1 + a] - gone[1 + a];
                for (std::size_t b = 0; b < p; ++b)
                    s2(a, b) = entered[1 + p + a * p + b] - gone[1 + p + a * p + b];
            }
        }
        const int dk = d.event_count[k];
        if (!(s0 > 0.0)) throw NumericError("fit_lwyy: empty risk set at an event time");

        Vec xbar(p);
        for (std::size_t a = 0; a < p; ++a) xbar[a] = s1[a] / s0;
        if (want_detail) {
            out.s0_at_event[k] = s0;
            out.xbar_at_event[k] = xbar;
        }
        // per-case contributions at this time
        for (; case_ptr < event_rows.size() && d.stop[event_rows[case_ptr]] == u; ++case_ptr) {
            const std::size_t r = event_rows[case_ptr];
            const std::size_t i = d.subject[r];
            out.loglik += interval_lp(d, r, beta);
            for (std::size_t a = 0; a < p; ++a) out.score[a] += d.x(i, a) - xbar[a];
        }
        out.loglik -= dk * std::log(s0);
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b)
                out.info(a, b) += dk * (s2(a, b) / s0 - xbar[a] * xbar[b]);
    }
    return out;
}

} // namespace

LwyyFit fit_lwyy(const RecurrentDataset& dataset) {
    const AgData d = build(dataset);
    if (d.event_times.empty()) throw DataError("fit_lwyy: no recurrent events");
    if (d.p == 0) throw DataError("fit_lwyy: model needs at least one covariate");
    for (std::size_t j = 0; j < d.p; ++j) {
        double lo = d.x(0, j), hi = d.x(0, j);
        for (std::size_t i = 1; i < d.n_subjects; ++i) {
            lo = std::min(lo, d.x(i, j));
            hi = std::max(hi, d.x(i, j));
        }
        if (lo == hi) throw DataError("fit_lwyy: covariate " + std::to_string(j + 1) + " is constant");
    }

    Vec beta(d.p, 0.0);
    Pass cur = evaluate(d, beta, false);
    std::size_t iters = 0;
    bool converged = false;
    for (; iters < 100; ++iters) {
        if (norm_inf(cur.score) <= 1e-9) {
            converged = true;
            break;
        }
        Vec step = solve_linear(cur.info, cur.score);
        double scale = 1.0;
        bool moved = false;
        // near the optimum the quadratic gain drops below the rounding
        // noise of the log likelihood sum, so the slack must follow its
        // magnitude; a score-halving step is always progress
        const double slack = 1e-11 * (1.0 + std::fabs(cur.loglik));
        for (int h = 0; h < 30; ++h, scale *= 0.5) {
            Vec trial(d.p);
            for (std::size_t j = 0; j < d.p; ++j) trial[j] = beta[j] + scale * step[j];
            Pass next = evaluate(d, trial, false);
            if (next.loglik > cur.loglik - slack ||
                norm_inf(next.score) < 0.5 * norm_inf(cur.score)) {
                beta = std::move(trial);
                cur = std::move(next);
                moved = true;
                break;
            }
        }
        if (!moved) break;
        if (norm_inf(beta) > 50.0)
            throw ConvergenceError(
                "fit_lwyy: estimates diverge (monotone likelihood / separation)");
    }
    if (!converged && norm_inf(cur.score) > 1e-8)
        throw ConvergenceError("fit_lwyy: Newton iteration did not converge");

    // exact detail pass at the solution
    Pass fin = evaluate(d, beta, true);

    LwyyFit fit;
    fit.coef = beta;
    fit.loglik = fin.loglik;
    fit.score_norm = norm_inf(fin.score);
    fit.iterations = iters;

    // naive covariance: inverse information, column by column
    fit.naive_cov = Matrix(d.p, d.p);
    for (std::size_t c = 0; c < d.p; ++c) {
        Vec e(d.p, 0.0);
        e[c] = 1.0;
        Vec col = solve_linear(fin.info, e);
        for (std::size_t r = 0; r < d.p; ++r) fit.naive_cov(r, c) = col[r];
    }
    fit.naive_cov.symmetrize();

    // per-subject summed score residuals:
    //   U_i = sum_{events of i} (x_i - xbar(u))
    //       - sum_{event times u with i at risk} e^{x_i'b} (d_u/S0(u)) (x_i - xbar(u))
    const std::size_t K = d.event_times.size();
    Vec pref_g0(K + 1, 0.0);              // cumulative d/S0
    Vec pref_g1((K + 1) * d.p, 0.0);      // cumulative (d/S0) xbar
    for (std::size_t k = 0; k < K; ++k) {
        const double g = d.event_count[k] / fin.s0_at_event[k];
        pref_g0[k + 1] = pref_g0[k] + g;
        for (std::size_t a = 0; a < d.p; ++a)
            pref_g1[(k + 1) * d.p + a] = pref_g1[k * d.p + a] + g * fin.xbar_at_event[k][a];
    }
    std::vector<Vec> u_subj(d.n_subjects, Vec(d.p, 0.0));
    for (std::size_t r = 0; r < d.start.size(); ++r) {
        const std::size_t i = d.subject[r];
        // window (start, stop]: event-time indices in (idx(start), idx(stop)]
        const auto lo = std::upper_bound(d.event_times.begin(), d.event_times.end(), d.start[r]) -
                        d.event_times.begin();
        const auto hi = std::upper_bound(d.event_times.begin(), d.event_times.end(), d.stop[r]) -
                        d.event_times.begin();
        const double wr = std::exp(interval_lp(d, r, beta));
        for (std::size_t a = 0; a < d.p; ++a) {
            const double g1 = pref_g1[static_cast<std::size_t>(hi) * d.p + a] -
                              pref_g1[static_cast<std::size_t>(lo) * d.p + a];
            u_subj[i][a] -= wr * (d.x(i, a) * (pref_g0[hi] - pref_g0[lo]) - g1);
        }
        if (d.event[r]) {
            const auto k = std::lower_bound(d.event_times.begin(), d.event_times.end(),
                                            d.stop[r]) -
                           d.event_times.begin();
            for (std::size_t a = 0; a < d.p; ++a)
                u_subj[i][a] += d.x(i, a) - fin.xbar_at_event[static_cast<std::size_t>(k)][a];
        }
    }
    Matrix b_mat(d.p, d.p);
    for (const auto& u : u_subj)
        for (std::size_t a = 0; a < d.p; ++a)
            for (std::size_t b = 0; b < d.p; ++b) b_mat(a, b) += u[a] * u[b];

    fit.robust_cov = Matrix(d.p, d.p);
    // A^{-1} B A^{-1} with A^{-1} = naive_cov
    for (std::size_t a = 0; a < d.p; ++a)
        for (std::size_t b = 0; b < d.p; ++b) {
            double s = 0.0;
            for (std::size_t q = 0; q < d.p; ++q)
                for (std::size_t r2 = 0; r2 < d.p; ++r2)
                    s += fit.naive_cov(a, q) * b_mat(q, r2) * fit.naive_cov(r2, b);
            fit.robust_cov(a, b) = s;
        }
    fit.robust_cov.symmetrize();

    fit.se_naive.resize(d.p);
    fit.se_robust.resize(d.p);
    for (std::size_t j = 0; j < d.p; ++j) {
        fit.se_naive[j] = std::sqrt(std::max(fit.naive_cov(j, j), 0.0));
        fit.se_robust[j] = std::sqrt(std::max(fit.robust_cov(j, j), 0.0));
    }
    return fit;
}

std::string LwyyFit::summary_text(const std::vector<std::string>& names) const {
    std::string out = "Fitted with the proportional rates model, robust variance:\n";
    out += "Recurrent event process:\n";
    out += "     Estimate  StdErr z.value p.value\n";
    char line[200];
    for (std::size_t j = 0; j < coef.size(); ++j) {
        const std::string name = j < names.size() ? names[j] : "x" + std::to_string(j + 1);
        const double z = se_robust[j] > 0.0 ? coef[j] / se_robust[j] : 0.0;
        const double p = se_robust[j] > 0.0 ? normal_two_sided_p(z) : 1.0;
        char pbuf[32];
        if (p < 1e-12) std::snprintf(pbuf, sizeof pbuf, "0");
        else if (p < 1e-3) std::snprintf(pbuf, sizeof pbuf, "%.2g", p);
        else std::snprintf(pbuf, sizeof pbuf, "%.4f", p);
        std::snprintf(line, sizeof line, "%-4s %8.5f %7.5f %7.4f %7s\n", name.c_str(), coef[j],
                      se_robust[j], z, pbuf);
        out += line;
    }
    return out;
}

} // namespace recur
