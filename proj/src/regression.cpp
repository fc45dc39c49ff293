#include "recur/regression.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "recur/parallel.hpp"
#include "recur/rng.hpp"
#include "recur/stats.hpp"

namespace recur {

namespace {

constexpr double kExpClamp = 300.0;

double safe_exp(double x) {
    if (x > kExpClamp) x = kExpClamp;
    if (x < -kExpClamp) x = -kExpClamp;
    return std::exp(x);
}

double row_dot(const Matrix& x, std::size_t i, const Vec& coef) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) s += x(i, j) * coef[j];
    return s;
}

// Per-subject e^{x_i'a}
Vec subject_scale(const FlatData& f, const Vec& a) {
    Vec e(f.n);
    for (std::size_t i = 0; i < f.n; ++i) e[i] = safe_exp(row_dot(f.x, i, a));
    return e;
}

void require_varying_covariates(const FlatData& f, const char* what) {
    if (f.p == 0) throw DataError(std::string(what) + ": model needs at least one covariate");
    for (std::size_t j = 0; j < f.p; ++j) {
        double lo = f.x(0, j), hi = f.x(0, j);
        for (std::size_t i = 1; i < f.n; ++i) {
            lo = std::min(lo, f.x(i, j));
            hi = std::max(hi, f.x(i, j));
        }
        if (lo == hi)
            throw DataError(std::string(what) + ": covariate " + std::to_string(j + 1) +
                            " is constant");
    }
}

// Event pairs on the transformed scale: entry times u_e = t_e e^{x'a} and
// exit times v_e = Y e^{x'a}, with prefix covariate sums for O(log E) risk
// queries.  A pair is at risk for t in [u_e, v_e], closed on both ends.
struct PairRisk {
    std::size_t n_events = 0;
    std::size_t p = 0;
    Vec u;                 // per event, unsorted (event order of FlatData)
    Vec u_sorted;
    Vec v_sorted;
    Vec xsum_u;            // (E+1) x p prefix sums in u order
    Vec xsum_v;            // (E+1) x p prefix sums in v order

    void query(double t, double& count, Vec& xsum) const {
        const std::size_t entered = static_cast<std::size_t>(
            std::upper_bound(u_sorted.begin(), u_sorted.end(), t) - u_sorted.begin());
        const std::size_t gone = static_cast<std::size_t>(
            std::lower_bound(v_sorted.begin(), v_sorted.end(), t) - v_sorted.begin());
        count = static_cast<double>(entered) - static_cast<double>(gone);
        for (std::size_t c = 0; c < p; ++c)
            xsum[c] = xsum_u[entered * p + c] - xsum_v[gone * p + c];
    }
};

PairRisk build_pair_risk(const FlatData& f, const Vec& scale) {
    PairRisk r;
    r.n_events = f.events.size();
    r.p = f.p;
    const std::size_t e_count = r.n_events;
    r.u.resize(e_count);
    Vec v(e_count);
    for (std::size_t e = 0; e < e_count; ++e) {
        const std::size_t i = f.events[e].subject;
        r.u[e] = f.events[e].time * scale[i];
        v[e] = f.y[i] * scale[i];
    }
    std::vector<std::size_t> by_u(e_count), by_v(e_count);
    std::iota(by_u.begin(), by_u.end(), 0);
    by_v = by_u;
    std::sort(by_u.begin(), by_u.end(), [&](std::size_t a, std::size_t b) { return r.u[a] < r.u[b]; });
    std::sort(by_v.begin(), by_v.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

    r.u_sorted.resize(e_count);
    r.v_sorted.resize(e_count);
    r.xsum_u.assign((e_count + 1) * r.p, 0.0);
    r.xsum_v.assign((e_count + 1) * r.p, 0.0);
    for (std::size_t k = 0; k < e_count; ++k) {
        r.u_sorted[k] = r.u[by_u[k]];
        r.v_sorted[k] = v[by_v[k]];
        const std::size_t iu = f.events[by_u[k]].subject;
        const std::size_t iv = f.events[by_v[k]].subject;
        for (std::size_t c = 0; c < r.p; ++c) {
            r.xsum_u[(k + 1) * r.p + c] = r.xsum_u[k * r.p + c] + f.x(iu, c);
            r.xsum_v[(k + 1) * r.p + c] = r.xsum_v[k * r.p + c] + f.x(iv, c);
        }
    }
    return r;
}

Vec s1n_core(const FlatData& f, const Vec& alpha, EqType eq_type, std::size_t* empty_terms) {
    if (f.events.empty()) throw DataError("s1n: no recurrent events");
    const Vec scale = subject_scale(f, alpha);
    const PairRisk risk = build_pair_risk(f, scale);

    Vec out(f.p, 0.0);
    Vec xsum(f.p);
    std::size_t empties = 0;
    const double n = static_cast<double>(f.n);
    for (std::size_t e = 0; e < f.events.size(); ++e) {
        double count;
        risk.query(risk.u[e], count, xsum);
        if (count <= 0.0) {
            ++empties;
            continue;
        }
        const double weight = eq_type == EqType::logrank ? 1.0 : count / n;
        const std::size_t i = f.events[e].subject;
        for (std::size_t c = 0; c < f.p; ++c)
            out[c] += weight * (f.x(i, c) - xsum[c] / count);
    }
    for (double& o : out) o /= n;
    if (empty_terms) *empty_terms = empties;
    return out;
}

StepFunction baseline_rate_core(const FlatData& f, const Vec& alpha) {
    if (f.events.empty()) throw DataError("baseline_rate_gsc: no recurrent events");
    const Vec scale = subject_scale(f, alpha);
    const PairRisk risk = build_pair_risk(f, scale);

    // distinct transformed event times with multiplicities
    Vec u_sorted = risk.u_sorted;
    Vec s;
    std::vector<int> d;
    for (double t : u_sorted) {
        if (!s.empty() && s.back() == t) {
            ++d.back();
        } else {
            s.push_back(t);
            d.push_back(1);
        }
    }
    Vec xsum(f.p);
    Vec term(s.size());
    for (std::size_t l = 0; l < s.size(); ++l) {
        double count;
        risk.query(s[l], count, xsum);
        term[l] = static_cast<double>(d[l]) / count;  // count >= d_l >= 1
    }
    // value at knot s_l excludes events at or below s_l: suffix sums over l+1..
    Vec values(s.size());
    double suffix = 0.0;
    for (std::size_t l = s.size(); l-- > 0;) {
        values[l] = std::exp(-suffix);
        suffix += term[l];
    }
    const double before = std::exp(-suffix);
    return StepFunction(std::move(s), std::move(values), before);
}

// Per-subject baseline value at the transformed follow-up.
Vec rate_baseline_at_followups(const FlatData& f, const StepFunction& baseline, bool exp_form,
                               const Vec& scale) {
    Vec lam(f.n);
    for (std::size_t i = 0; i < f.n; ++i) {
        const double t = f.y[i] * scale[i];
        lam[i] = exp_form ? baseline.left_limit(t) : baseline.value_at(t);
    }
    return lam;
}

// m_i / lam_i with zero-event subjects contributing zero.
Vec event_ratios(const FlatData& f, const Vec& lam) {
    Vec r(f.n, 0.0);
    for (std::size_t i = 0; i < f.n; ++i) {
        if (f.m[i] == 0) continue;
        if (!(lam[i] > 0.0))
            throw DataError("rate baseline vanishes at a follow-up with observed events");
        r[i] = static_cast<double>(f.m[i]) / lam[i];
    }
    return r;
}

Vec s2n_core(const FlatData& f, const Vec& ratios, const Vec& psi) {
    Vec out(f.p + 1, 0.0);
    for (std::size_t i = 0; i < f.n; ++i) {
        double lin = psi[0];
        for (std::size_t j = 0; j < f.p; ++j) lin += f.x(i, j) * psi[j + 1];
        const double resid = ratios[i] - safe_exp(lin);
        out[0] += resid;
        for (std::size_t j = 0; j < f.p; ++j) out[j + 1] += f.x(i, j) * resid;
    }
    for (double& o : out) o /= static_cast<double>(f.n);
    return out;
}

std::pair<Vec, std::vector<SolverResult>> solve_ladder(const VectorFn& fn,
                                                       const SolverConfig& base,
                                                       const Vec& init) {
    std::vector<SolverResult> diag;
    SolverConfig cfg = base;
    cfg.init = init;

    cfg.method = SolveMethod::spectral;
    diag.push_back(solve_root(fn, cfg));
    if (!diag.back().converged) {
        cfg.method = SolveMethod::spectral_multistart;
        diag.push_back(solve_root(fn, cfg));
    }
    if (!diag.back().converged) {
        cfg.init = diag[0].residual_norm <= diag[1].residual_norm ? diag[0].solution
                                                                  : diag[1].solution;
        diag.push_back(minimize_norm(fn, cfg));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < diag.size(); ++i)
        if (diag[i].residual_norm < diag[best].residual_norm) best = i;
    return {diag[best].solution, std::move(diag)};
}

Vec zeros_or(const Vec& given, std::size_t size, const char* what) {
    if (given.empty()) return Vec(size, 0.0);
    if (given.size() != size)
        throw DataError(std::string("initial value for ") + what + " has wrong length");
    return given;
}

} // namespace

std::string rate_form_name(RateForm f) {
    switch (f) {
        case RateForm::cox: return "cox";
        case RateForm::ar: return "ar";
        case RateForm::am: return "am";
        default: return "gsc";
    }
}

std::string hazard_form_name(HazardForm f) {
    switch (f) {
        case HazardForm::none: return "none";
        case HazardForm::cox: return "cox";
        case HazardForm::ar: return "ar";
        case HazardForm::am: return "am";
        default: return "gsc";
    }
}

std::string ModelSpec::model_string() const {
    std::string s = rate_form_name(rate_form);
    if (hazard_form != HazardForm::none) s += "|" + hazard_form_name(hazard_form);
    return s;
}

ParsedModel parse_model_string(const std::string& model) {
    ParsedModel out;
    if (model == "cox.LWYY") {
        out.lwyy = true;
        return out;
    }
    auto rate_of = [&](const std::string& s) -> RateForm {
        if (s == "cox") return RateForm::cox;
        if (s == "ar") return RateForm::ar;
        if (s == "am") return RateForm::am;
        if (s == "gsc") return RateForm::gsc;
        throw DataError("unknown model string '" + model +
                        "'; valid: cox, ar, am, gsc, rate|hazard pairs of those, cox.LWYY");
    };
    const auto bar = model.find('|');
    if (bar == std::string::npos) {
        out.rate = rate_of(model);
        out.hazard = HazardForm::none;
        return out;
    }
    out.rate = rate_of(model.substr(0, bar));
    const std::string h = model.substr(bar + 1);
    if (h == "cox") out.hazard = HazardForm::cox;
    else if (h == "ar") out.hazard = HazardForm::ar;
    else if (h == "am") out.hazard = HazardForm::am;
    else if (h == "gsc") out.hazard = HazardForm::gsc;
    else throw DataError("unknown hazard form '" + h + "' in model string '" + model + "'");
    return out;
}

TransformedTimes transform_times(const RecurrentDataset& dataset, const Vec& a) {
    TransformedTimes out;
    out.event_times.reserve(dataset.n());
    out.followup.reserve(dataset.n());
    for (const auto& subj : dataset.subjects) {
        double lin = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) lin += subj.covariates[j] * a[j];
        const double e = safe_exp(lin);
        Vec times = subj.event_times();
        for (double& t : times) t *= e;
        out.event_times.push_back(std::move(times));
        out.followup.push_back(subj.follow_up() * e);
    }
    return out;
}

Vec s1n(const FlatData& data, const Vec& alpha, EqType eq_type) {
    return s1n_core(data, alpha, eq_type, nullptr);
}

Vec s1n(const RecurrentDataset& dataset, const Vec& alpha, EqType eq_type) {
    const FlatData f = flatten(dataset);
    return s1n_core(f, alpha, eq_type, nullptr);
}

StepFunction baseline_rate_gsc(const FlatData& data, const Vec& alpha) {
    return baseline_rate_core(data, alpha);
}

StepFunction baseline_rate_gsc(const RecurrentDataset& dataset, const Vec& alpha) {
    const FlatData f = flatten(dataset);
    return baseline_rate_core(f, alpha);
}

Vec s2n(const RecurrentDataset& dataset, const Vec& alpha, const Vec& psi) {
    const FlatData f = flatten(dataset);
    if (psi.size() != f.p + 1) throw DataError("s2n: psi must have length p + 1");
    const bool alpha_zero = std::all_of(alpha.begin(), alpha.end(), [](double a) { return a == 0.0; });
    Vec lam;
    const Vec scale = subject_scale(f, alpha);
    if (alpha_zero) {
        const StepFunction shape = npmle_shape(dataset).first;
        lam = rate_baseline_at_followups(f, shape, false, scale);
    } else {
        const StepFunction shape = baseline_rate_core(f, alpha);
        lam = rate_baseline_at_followups(f, shape, true, scale);
    }
    return s2n_core(f, event_ratios(f, lam), psi);
}

RateFit estimate_rate(const RecurrentDataset& dataset, const ModelSpec& spec) {
    const FlatData f = flatten(dataset);
    if (f.events.empty()) throw DataError("estimate_rate: no recurrent events");
    const std::size_t p = f.p;

    RateFit fit;
    fit.alpha.assign(p, 0.0);
    fit.beta.assign(p, 0.0);
    fit.gamma.assign(p, 0.0);

    const Vec init_alpha = zeros_or(spec.init_alpha, p, "alpha");
    const Vec init_beta = zeros_or(spec.init_beta, p, "beta");

    auto solve_psi = [&](const Vec& ratios) {
        Vec psi0(p + 1, 0.0);
        for (std::size_t j = 0; j < p; ++j) psi0[j + 1] = init_beta[j] - init_alpha[j];
        auto fn = [&](const Vec& psi) { return s2n_core(f, ratios, psi); };
        auto [psi, diag] = solve_ladder(fn, spec.solver, psi0);
        for (auto& d : diag) fit.diagnostics.push_back(d);
        return psi;
    };

    switch (spec.rate_form) {
        case RateForm::cox: {
            fit.baseline = npmle_shape(dataset).first;
            fit.baseline_exp_form = false;
            const Vec scale(f.n, 1.0);
            const Vec lam = rate_baseline_at_followups(f, fit.baseline, false, scale);
            const Vec psi = solve_psi(event_ratios(f, lam));
            fit.log_mu_z = psi[0];
            for (std::size_t j = 0; j < p; ++j) {
                fit.gamma[j] = psi[j + 1];
                fit.beta[j] = psi[j + 1];
            }
            break;
        }
        case RateForm::ar: {
            require_varying_covariates(f, "estimate_rate(ar)");
            auto fn = [&](const Vec& a) { return s1n_core(f, a, spec.eq_type, nullptr); };
            auto [alpha, diag] = solve_ladder(fn, spec.solver, init_alpha);
            fit.diagnostics = std::move(diag);
            fit.alpha = alpha;
            for (std::size_t j = 0; j < p; ++j) fit.gamma[j] = -alpha[j];
            fit.baseline = baseline_rate_core(f, alpha);
            fit.baseline_exp_form = true;
            const Vec lam =
                rate_baseline_at_followups(f, fit.baseline, true, subject_scale(f, alpha));
            const Vec r = event_ratios(f, lam);
            double mu = 0.0;
            for (double v : r) mu += v;
            fit.log_mu_z = std::log(mu / static_cast<double>(f.n));
            break;
        }
        case RateForm::am: {
            require_varying_covariates(f, "estimate_rate(am)");
            auto fn = [&](const Vec& a) {
                const StepFunction base = baseline_rate_core(f, a);
                const Vec lam = rate_baseline_at_followups(f, base, true, subject_scale(f, a));
                const Vec r = event_ratios(f, lam);
                double mu = 0.0;
                for (double v : r) mu += v;
                mu /= static_cast<double>(f.n);
                Vec out(p, 0.0);
                for (std::size_t i = 0; i < f.n; ++i)
                    for (std::size_t j = 0; j < p; ++j) out[j] += f.x(i, j) * (r[i] - mu);
                for (double& o : out) o /= static_cast<double>(f.n);
                return out;
            };
            auto [alpha, diag] = solve_ladder(fn, spec.solver, init_alpha);
            fit.diagnostics = std::move(diag);
            fit.alpha = alpha;
            fit.beta = alpha;
            fit.baseline = baseline_rate_core(f, alpha);
            fit.baseline_exp_form = true;
            const Vec lam =
                rate_baseline_at_followups(f, fit.baseline, true, subject_scale(f, alpha));
            const Vec r = event_ratios(f, lam);
            double mu = 0.0;
            for (double v : r) mu += v;
            fit.log_mu_z = std::log(mu / static_cast<double>(f.n));
            break;
        }
        case RateForm::gsc: {
            require_varying_covariates(f, "estimate_rate(gsc)");
            auto fn = [&](const Vec& a) { return s1n_core(f, a, spec.eq_type, nullptr); };
            auto [alpha, diag] = solve_ladder(fn, spec.solver, init_alpha);
            fit.diagnostics = std::move(diag);
            fit.alpha = alpha;
            s1n_core(f, alpha, spec.eq_type, &fit.empty_riskset_terms);
            const bool alpha_zero =
                std::all_of(alpha.begin(), alpha.end(), [](double a) { return a == 0.0; });
            if (alpha_zero) {
                // degenerate shape solution: the product-limit estimator is
                // the sharper baseline at alpha = 0
                fit.baseline = npmle_shape(dataset).first;
                fit.baseline_exp_form = false;
            } else {
                fit.baseline = baseline_rate_core(f, alpha);
                fit.baseline_exp_form = true;
            }
            const Vec lam = rate_baseline_at_followups(f, fit.baseline, fit.baseline_exp_form,
                                                       subject_scale(f, alpha));
            const Vec psi = solve_psi(event_ratios(f, lam));
            fit.log_mu_z = psi[0];
            for (std::size_t j = 0; j < p; ++j) {
                fit.gamma[j] = psi[j + 1];
                fit.beta[j] = fit.alpha[j] + psi[j + 1];
            }
            break;
        }
    }
    return fit;
}

Vec estimate_frailties(const RecurrentDataset& dataset, const RateFit& rate, double epsilon) {
    if (epsilon < 0.0) throw DataError("estimate_frailties: epsilon must be nonnegative");
    const FlatData f = flatten(dataset);
    const Vec scale = subject_scale(f, rate.alpha);
    const Vec lam = rate_baseline_at_followups(f, rate.baseline, rate.baseline_exp_form, scale);
    Vec z(f.n);
    for (std::size_t i = 0; i < f.n; ++i) {
        const double denom = lam[i] * safe_exp(row_dot(f.x, i, rate.gamma));
        if (epsilon == 0.0 && denom == 0.0)
            throw DataError("estimate_frailties: zero denominator for subject " +
                            dataset.subjects[i].id + " with epsilon = 0");
        z[i] = (static_cast<double>(f.m[i]) + epsilon) / (denom + epsilon);
    }
    return z;
}

namespace {

// Sorted transformed follow-ups with suffix sums of the frailty weights,
// for the hazard-model risk sets {j : Y*_j >= t}.
struct HazardSweep {
    Vec ys_sorted;
    Vec suffix_w;        // (n+1)
    Vec suffix_wx;       // (n+1) x p
    Vec suffix_wxy;      // (n+1) x p, weights times x times Y*
    std::size_t p = 0;

    std::size_t at_risk_from(double t) const {
        return static_cast<std::size_t>(
            std::lower_bound(ys_sorted.begin(), ys_sorted.end(), t) - ys_sorted.begin());
    }
};

HazardSweep build_hazard_sweep(const FlatData& f, const Vec& zhat, const Vec& eta,
                               const Vec& theta, Vec& ys_out) {
    const std::size_t n = f.n;
    Vec diff(f.p);
    for (std::size_t j = 0; j < f.p; ++j) diff[j] = theta[j] - eta[j];
    ys_out.resize(n);
    Vec w(n);
    for (std::size_t i = 0; i < n; ++i) {
        ys_out[i] = f.y[i] * safe_exp(row_dot(f.x, i, eta));
        w[i] = zhat[i] * safe_exp(row_dot(f.x, i, diff));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ys_out[a] < ys_out[b]; });

    HazardSweep s;
    s.p = f.p;
    s.ys_sorted.resize(n);
    s.suffix_w.assign(n + 1, 0.0);
    s.suffix_wx.assign((n + 1) * f.p, 0.0);
    s.suffix_wxy.assign((n + 1) * f.p, 0.0);
    for (std::size_t k = 0; k < n; ++k) s.ys_sorted[k] = ys_out[order[k]];
    for (std::size_t k = n; k-- > 0;) {
        const std::size_t i = order[k];
        s.suffix_w[k] = s.suffix_w[k + 1] + w[i];
        for (std::size_t c = 0; c < f.p; ++c) {
            s.suffix_wx[k * f.p + c] = s.suffix_wx[(k + 1) * f.p + c] + w[i] * f.x(i, c);
            s.suffix_wxy[k * f.p + c] =
                s.suffix_wxy[(k + 1) * f.p + c] + w[i] * f.x(i, c) * ys_out[i];
        }
    }
    return s;
}

Vec s34_core(const FlatData& f, const Vec& zhat, const Vec& eta, const Vec& theta,
             EqType eq_type, bool fourth, std::size_t* empty_terms) {
    if (zhat.size() != f.n) throw DataError("hazard equations: zhat has wrong length");
    Vec ys;
    const HazardSweep sweep = build_hazard_sweep(f, zhat, eta, theta, ys);
    Vec out(f.p, 0.0);
    std::size_t empties = 0;
    for (std::size_t i = 0; i < f.n; ++i) {
        if (!f.delta[i]) continue;
        const std::size_t k = sweep.at_risk_from(ys[i]);
        const double denom = sweep.suffix_w[k];
        if (!(denom > 0.0)) {
            ++empties;
            continue;
        }
        const double weight = eq_type == EqType::logrank ? 1.0 : denom;
        for (std::size_t c = 0; c < f.p; ++c) {
            const double bracket =
                fourth ? f.x(i, c) * ys[i] - sweep.suffix_wxy[k * f.p + c] / denom
                       : f.x(i, c) - sweep.suffix_wx[k * f.p + c] / denom;
            out[c] += weight * bracket;
        }
    }
    if (empty_terms) *empty_terms = empties;
    return out;
}

} // namespace

Vec s3n(const FlatData& data, const Vec& zhat, const Vec& eta, const Vec& theta, EqType eq_type) {
    return s34_core(data, zhat, eta, theta, eq_type, false, nullptr);
}

Vec s4n(const FlatData& data, const Vec& zhat, const Vec& eta, const Vec& theta, EqType eq_type) {
    return s34_core(data, zhat, eta, theta, eq_type, true, nullptr);
}

Vec s3n(const RecurrentDataset& dataset, const Vec& zhat, const Vec& eta, const Vec& theta,
        EqType eq_type) {
    return s3n(flatten(dataset), zhat, eta, theta, eq_type);
}

Vec s4n(const RecurrentDataset& dataset, const Vec& zhat, const Vec& eta, const Vec& theta,
        EqType eq_type) {
    return s4n(flatten(dataset), zhat, eta, theta, eq_type);
}

StepFunction baseline_hazard(const RecurrentDataset& dataset, const Vec& zhat, const Vec& eta,
                             const Vec& theta) {
    const FlatData f = flatten(dataset);
    if (f.total_terminal() == 0) throw DataError("baseline_hazard: no terminal events");
    Vec ys;
    const HazardSweep sweep = build_hazard_sweep(f, zhat, eta, theta, ys);

    std::vector<std::size_t> terminals;
    for (std::size_t i = 0; i < f.n; ++i)
        if (f.delta[i]) terminals.push_back(i);
    std::sort(terminals.begin(), terminals.end(),
              [&](std::size_t a, std::size_t b) { return ys[a] < ys[b]; });

    Vec knots, values;
    double cum = 0.0;
    for (std::size_t idx = 0; idx < terminals.size(); ++idx) {
        const std::size_t i = terminals[idx];
        const double denom = sweep.suffix_w[sweep.at_risk_from(ys[i])];
        if (!(denom > 0.0)) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%g", ys[i]);
            throw DataError(std::string("baseline_hazard: zero frailty-weighted risk set at "
                                        "time ") + buf);
        }
        cum += 1.0 / denom;
        if (!knots.empty() && knots.back() == ys[i]) {
            values.back() = cum;
        } else {
            knots.push_back(ys[i]);
            values.push_back(cum);
        }
    }
    return StepFunction(std::move(knots), std::move(values), 0.0);
}

HazardFit estimate_hazard(const RecurrentDataset& dataset, const Vec& zhat, HazardForm form,
                          const ModelSpec& spec) {
    if (form == HazardForm::none) throw DataError("estimate_hazard: hazard form is none");
    const FlatData f = flatten(dataset);
    if (f.total_terminal() == 0) throw DataError("estimate_hazard: no terminal events");
    require_varying_covariates(f, "estimate_hazard");
    const std::size_t p = f.p;

    const Vec init_eta = zeros_or(spec.init_eta, p, "eta");
    const Vec init_theta = zeros_or(spec.init_theta, p, "theta");
    const Vec zero(p, 0.0);
    const double n = static_cast<double>(f.n);

    HazardFit fit;
    fit.form = form;
    switch (form) {
        case HazardForm::cox: {
            auto fn = [&](const Vec& theta) {
                Vec v = s34_core(f, zhat, zero, theta, spec.eq_type, false, nullptr);
                for (double& e : v) e /= n;
                return v;
            };
            auto [theta, diag] = solve_ladder(fn, spec.solver, init_theta);
            fit.eta = zero;
            fit.theta = theta;
            fit.diagnostics = std::move(diag);
            break;
        }
        case HazardForm::ar: {
            auto fn = [&](const Vec& eta) {
                Vec v = s34_core(f, zhat, eta, zero, spec.eq_type, false, nullptr);
                for (double& e : v) e /= n;
                return v;
            };
            auto [eta, diag] = solve_ladder(fn, spec.solver, init_eta);
            fit.eta = eta;
            fit.theta = zero;
            fit.diagnostics = std::move(diag);
            break;
        }
        case HazardForm::am: {
            auto fn = [&](const Vec& eta) {
                Vec v = s34_core(f, zhat, eta, eta, spec.eq_type, false, nullptr);
                for (double& e : v) e /= n;
                return v;
            };
            auto [eta, diag] = solve_ladder(fn, spec.solver, init_eta);
            fit.eta = eta;
            fit.theta = eta;
            fit.diagnostics = std::move(diag);
            break;
        }
        default: {  // gsc: stack S3n and S4n over (eta, theta)
            auto fn = [&](const Vec& par) {
                Vec eta(par.begin(), par.begin() + static_cast<long>(p));
                Vec theta(par.begin() + static_cast<long>(p), par.end());
                Vec v3 = s34_core(f, zhat, eta, theta, spec.eq_type, false, nullptr);
                Vec v4 = s34_core(f, zhat, eta, theta, spec.eq_type, true, nullptr);
                Vec out(2 * p);
                for (std::size_t j = 0; j < p; ++j) {
                    out[j] = v3[j] / n;
                    out[p + j] = v4[j] / n;
                }
                return out;
            };
            Vec init(2 * p);
            for (std::size_t j = 0; j < p; ++j) {
                init[j] = init_eta[j];
                init[p + j] = init_theta[j];
            }
            auto [par, diag] = solve_ladder(fn, spec.solver, init);
            fit.eta.assign(par.begin(), par.begin() + static_cast<long>(p));
            fit.theta.assign(par.begin() + static_cast<long>(p), par.end());
            fit.diagnostics = std::move(diag);
            break;
        }
    }
    s34_core(f, zhat, fit.eta, fit.theta, spec.eq_type, false, &fit.empty_riskset_terms);
    fit.baseline = baseline_hazard(dataset, zhat, fit.eta, fit.theta);
    return fit;
}

namespace {

// Hazard step shared by the point fit and every bootstrap replicate: a
// cox-form pre-fit seeds the gsc solve when the warm start is requested.
HazardFit fit_hazard_step(const RecurrentDataset& dataset, const Vec& zhat,
                          const ModelSpec& spec) {
    ModelSpec hspec = spec;
    if (spec.hazard_warm_start && spec.hazard_form == HazardForm::gsc) {
        HazardFit warm = estimate_hazard(dataset, zhat, HazardForm::cox, spec);
        hspec.init_eta.assign(dataset.covariate_dim(), 0.0);
        hspec.init_theta = warm.theta;
    }
    return estimate_hazard(dataset, zhat, spec.hazard_form, hspec);
}

} // namespace

JointFit fit_joint(const RecurrentDataset& dataset, const ModelSpec& spec, std::uint64_t seed) {
    JointFit fit;
    fit.spec = spec;
    fit.covariate_names = dataset.covariate_names;
    fit.rate = estimate_rate(dataset, spec);
    fit.zhat = estimate_frailties(dataset, fit.rate, spec.epsilon);
    if (spec.hazard_form != HazardForm::none)
        fit.hazard = fit_hazard_step(dataset, fit.zhat, spec);
    if (spec.boot >= 2) {
        fit.vcov = bootstrap_covariance(dataset, spec, seed);
        if (fit.vcov.boot_failed * 10 > spec.boot) {
            char buf[120];
            std::snprintf(buf, sizeof buf,
                          "%zu of %zu bootstrap replicates failed (more than 10%%)",
                          fit.vcov.boot_failed, spec.boot);
            fit.warnings.push_back(buf);
        }
    }
    return fit;
}

namespace {

Matrix sample_covariance(const std::vector<Vec>& rows) {
    const std::size_t used = rows.size();
    if (used < 2) return Matrix();
    const std::size_t p = rows.front().size();
    Vec mean(p, 0.0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < p; ++j) mean[j] += r[j];
    for (double& m : mean) m /= static_cast<double>(used);
    Matrix cov(p, p);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = 0; k < p; ++k)
                cov(j, k) += (r[j] - mean[j]) * (r[k] - mean[k]);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < p; ++k) cov(j, k) /= static_cast<double>(used - 1);
    cov.symmetrize();
    return cov;
}

} // namespace

CovarianceBlocks bootstrap_covariance(const RecurrentDataset& dataset, const ModelSpec& spec,
                                      std::uint64_t seed) {
    if (spec.boot < 2) throw DataError("bootstrap_covariance: need boot >= 2");
    const std::size_t B = spec.boot;
    ModelSpec point = spec;
    point.boot = 0;

    struct Draw {
        Vec alpha, beta, gamma, eta, theta;
    };
    std::vector<std::optional<Draw>> draws(B);
    const Rng root(seed);
    unsigned workers = 1;
    if (spec.parallel) workers = spec.workers ? spec.workers : default_worker_count();

    parallel_for(B, workers, [&](std::size_t b) {
        Rng sub = root.substream(b);
        try {
            const RecurrentDataset resampled = resample_clusters(dataset, sub.next_u64());
            Draw d;
            const RateFit rate = estimate_rate(resampled, point);
            d.alpha = rate.alpha;
            d.beta = rate.beta;
            d.gamma = rate.gamma;
            if (point.hazard_form != HazardForm::none) {
                const Vec z = estimate_frailties(resampled, rate, point.epsilon);
                const HazardFit hz = fit_hazard_step(resampled, z, point);
                d.eta = hz.eta;
                d.theta = hz.theta;
            }
            draws[b] = std::move(d);
        } catch (const Error&) {
            draws[b] = std::nullopt;
        }
    });

    std::vector<Vec> alphas, betas, gammas, etas, thetas;
    for (const auto& d : draws) {
        if (!d) continue;
        alphas.push_back(d->alpha);
        betas.push_back(d->beta);
        gammas.push_back(d->gamma);
        if (spec.hazard_form != HazardForm::none) {
            etas.push_back(d->eta);
            thetas.push_back(d->theta);
        }
    }
    CovarianceBlocks out;
    out.boot_used = alphas.size();
    out.boot_failed = B - out.boot_used;
    if (out.boot_used < 2)
        throw ConvergenceError("bootstrap_covariance: fewer than 2 replicates succeeded");
    out.alpha = sample_covariance(alphas);
    out.beta = sample_covariance(betas);
    out.gamma = sample_covariance(gammas);
    if (spec.hazard_form != HazardForm::none) {
        out.eta = sample_covariance(etas);
        out.theta = sample_covariance(thetas);
    }
    return out;
}

TestResult wald_test(const std::string& name, const Vec& estimate, const Matrix& cov) {
    if (cov.rows() != estimate.size() || cov.cols() != estimate.size())
        throw NumericError("wald_test: dimension mismatch");
    TestResult t;
    t.name = name;
    t.df = static_cast<unsigned>(estimate.size());
    t.statistic = quadratic_form_inv(cov, estimate, &t.used_pseudo_inverse);
    t.p_value = chisq_upper_tail(t.statistic, t.df);
    return t;
}

std::vector<TestResult> submodel_tests(const JointFit& fit) {
    if (!fit.vcov.present())
        throw DataError("submodel_tests: bootstrap covariance required (fit with boot >= 2)");
    std::vector<TestResult> tests;
    tests.push_back(wald_test("cox_shape_zero", fit.rate.alpha, fit.vcov.alpha));
    tests.push_back(wald_test("am_gamma_zero", fit.rate.gamma, fit.vcov.gamma));
    tests.push_back(wald_test("ar_beta_zero", fit.rate.beta, fit.vcov.beta));
    return tests;
}

PredictedCurves predict_cumulative(const JointFit& fit, const Vec& x,
                                   std::optional<double> frailty) {
    const std::size_t p = fit.rate.alpha.size();
    if (x.size() != p) throw DataError("predict_cumulative: covariate vector has wrong length");
    const double z = frailty ? *frailty : std::exp(fit.rate.log_mu_z);

    const double lin_alpha = dot(x, fit.rate.alpha);
    const double lin_gamma = dot(x, fit.rate.gamma);
    PredictedCurves out;
    {
        StepFunction sf =
            fit.rate.baseline.scaled(safe_exp(-lin_alpha), z * safe_exp(lin_gamma));
        // cumulative curves start at zero; drop the pre-jump plateau
        out.rate.estimate = StepFunction(sf.knots(), sf.values(), 0.0);
        out.rate.label = "predicted rate";
    }
    if (fit.hazard) {
        const double lin_eta = dot(x, fit.hazard->eta);
        double lin_diff = 0.0;
        for (std::size_t j = 0; j < p; ++j) lin_diff += x[j] * (fit.hazard->theta[j] - fit.hazard->eta[j]);
        StepFunction sf =
            fit.hazard->baseline.scaled(safe_exp(-lin_eta), z * safe_exp(lin_diff));
        McfCurve hc;
        hc.estimate = StepFunction(sf.knots(), sf.values(), 0.0);
        hc.label = "predicted hazard";
        out.hazard = std::move(hc);
    }
    return out;
}

namespace {

const char* pvalue_string(double p, char* buf, std::size_t len) {
    if (p < 1e-12) return "0";
    if (p < 1e-3) {
        std::snprintf(buf, len, "%.2g", p);
        return buf;
    }
    std::snprintf(buf, len, "%.4f", p);
    return buf;
}

nlohmann::json coefficient_block(const std::vector<std::string>& names, const Vec& est,
                                 const Matrix& cov) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t j = 0; j < est.size(); ++j) {
        nlohmann::json row;
        row["name"] = j < names.size() ? names[j] : "x" + std::to_string(j + 1);
        row["estimate"] = est[j];
        if (!cov.empty()) {
            const double se = std::sqrt(std::max(cov(j, j), 0.0));
            row["stderr"] = se;
            if (se > 0.0) {
                const double z = est[j] / se;
                row["z"] = z;
                row["p"] = normal_two_sided_p(z);
            }
        }
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json step_json(const StepFunction& s) {
    return {{"time", s.knots()}, {"value", s.values()},
            {"value_before", s.value_before_first_knot()}};
}

nlohmann::json solver_json(const std::vector<SolverResult>& diag) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : diag)
        arr.push_back({{"method", solve_method_name(d.method_used)},
                       {"iterations", d.iterations},
                       {"residual_norm", d.residual_norm},
                       {"converged", d.converged}});
    return arr;
}

std::string test_label(const TestResult& t) {
    if (t.name == "cox_shape_zero") return "Ho: shape = 0 (Cox-type model)";
    if (t.name == "am_gamma_zero") return "Ho: shape = size (Accelerated mean model)";
    return "Ho: size = 0 (Accelerated rate model)";
}

void append_panel(std::string& out, const std::string& title,
                  const std::vector<std::string>& names, const Vec& est, const Matrix& cov) {
    out += title + "\n";
    const bool have_se = !cov.empty();
    char line[200];
    if (have_se)
        out += "     Estimate  StdErr z.value p.value\n";
    else
        out += "     Estimate\n";
    for (std::size_t j = 0; j < est.size(); ++j) {
        const std::string name = j < names.size() ? names[j] : "x" + std::to_string(j + 1);
        if (have_se) {
            const double se = std::sqrt(std::max(cov(j, j), 0.0));
            const double z = se > 0.0 ? est[j] / se : 0.0;
            char pbuf[32];
            std::snprintf(line, sizeof line, "%-4s %8.5f %7.5f %7.4f %7s\n", name.c_str(), est[j],
                          se, z, pvalue_string(se > 0.0 ? normal_two_sided_p(z) : 1.0, pbuf,
                                               sizeof pbuf));
        } else {
            std::snprintf(line, sizeof line, "%-4s %8.5f\n", name.c_str(), est[j]);
        }
        out += line;
    }
}

} // namespace

std::string fit_to_json(const JointFit& fit, const std::vector<TestResult>* tests) {
    nlohmann::json j;
    j["model"] = fit.spec.model_string();
    j["eq_type"] = fit.spec.eq_type == EqType::logrank ? "logrank" : "gehan";
    j["epsilon"] = fit.spec.epsilon;

    std::vector<std::string> names = fit.covariate_names;
    for (std::size_t k = names.size(); k < fit.rate.alpha.size(); ++k)
        names.push_back("x" + std::to_string(k + 1));

    nlohmann::json rate;
    rate["form"] = rate_form_name(fit.spec.rate_form);
    rate["alpha"] = coefficient_block(names, fit.rate.alpha, fit.vcov.alpha);
    rate["beta"] = coefficient_block(names, fit.rate.beta, fit.vcov.beta);
    rate["gamma"] = coefficient_block(names, fit.rate.gamma, fit.vcov.gamma);
    rate["log_mu_z"] = fit.rate.log_mu_z;
    rate["mu_z"] = std::exp(fit.rate.log_mu_z);
    rate["baseline"] = step_json(fit.rate.baseline);
    rate["diagnostics"] = solver_json(fit.rate.diagnostics);
    rate["empty_riskset_terms"] = fit.rate.empty_riskset_terms;
    j["rate"] = rate;

    if (fit.hazard) {
        nlohmann::json hz;
        hz["form"] = hazard_form_name(fit.hazard->form);
        hz["eta"] = coefficient_block(names, fit.hazard->eta, fit.vcov.eta);
        hz["theta"] = coefficient_block(names, fit.hazard->theta, fit.vcov.theta);
        hz["baseline"] = step_json(fit.hazard->baseline);
        hz["diagnostics"] = solver_json(fit.hazard->diagnostics);
        hz["empty_riskset_terms"] = fit.hazard->empty_riskset_terms;
        j["hazard"] = hz;
    }
    j["zhat"] = fit.zhat;
    j["boot"] = {{"requested", fit.spec.boot},
                 {"used", fit.vcov.boot_used},
                 {"failed", fit.vcov.boot_failed}};
    if (tests) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& t : *tests)
            arr.push_back({{"name", t.name},
                           {"label", test_label(t)},
                           {"statistic", t.statistic},
                           {"df", t.df},
                           {"p_value", t.p_value},
                           {"pseudo_inverse", t.used_pseudo_inverse}});
        j["tests"] = arr;
    }
    if (!fit.warnings.empty()) j["warnings"] = fit.warnings;
    return j.dump(2);
}

std::string fit_summary_text(const JointFit& fit, const std::string& call_line,
                             const std::vector<TestResult>* tests) {
    std::string out;
    if (!call_line.empty()) out += "Call:\n" + call_line + "\n\n";

    std::vector<std::string> names = fit.covariate_names;
    for (std::size_t k = names.size(); k < fit.rate.alpha.size(); ++k)
        names.push_back("x" + std::to_string(k + 1));

    switch (fit.spec.rate_form) {
        case RateForm::cox:
            append_panel(out, "Recurrent event process:", names, fit.rate.beta, fit.vcov.beta);
            break;
        case RateForm::ar:
            append_panel(out, "Recurrent event process (shape):", names, fit.rate.alpha,
                         fit.vcov.alpha);
            break;
        case RateForm::am:
            append_panel(out, "Recurrent event process (shape = size):", names, fit.rate.alpha,
                         fit.vcov.alpha);
            break;
        case RateForm::gsc:
            append_panel(out, "Recurrent event process (shape):", names, fit.rate.alpha,
                         fit.vcov.alpha);
            append_panel(out, "Recurrent event process (size):", names, fit.rate.beta,
                         fit.vcov.beta);
            break;
    }
    if (fit.hazard) {
        switch (fit.hazard->form) {
            case HazardForm::cox:
                append_panel(out, "Terminal event:", names, fit.hazard->theta, fit.vcov.theta);
                break;
            case HazardForm::ar:
                append_panel(out, "Terminal event (shape):", names, fit.hazard->eta,
                             fit.vcov.eta);
                break;
            case HazardForm::am:
                append_panel(out, "Terminal event (shape = size):", names, fit.hazard->eta,
                             fit.vcov.eta);
                break;
            default:
                append_panel(out, "Terminal event (shape):", names, fit.hazard->eta,
                             fit.vcov.eta);
                append_panel(out, "Terminal event (size):", names, fit.hazard->theta,
                             fit.vcov.theta);
                break;
        }
    }
    if (tests && !tests->empty()) {
        out += "Hypothesis tests:\n";
        char line[160], pbuf[32];
        for (const auto& t : *tests) {
            std::snprintf(line, sizeof line, "%s:\n  X-squared = %.4g, df = %u, p-value = %s\n",
                          test_label(t).c_str(), t.statistic, t.df,
                          pvalue_string(t.p_value, pbuf, sizeof pbuf));
            out += line;
        }
    }
    for (const auto& w : fit.warnings) out += "warning: " + w + "\n";
    return out;
}

} // namespace recur
