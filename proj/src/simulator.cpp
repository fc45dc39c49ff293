#include "recur/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "recur/parallel.hpp"
#include "recur/rng.hpp"

namespace recur {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBracketHi = 1e12;

double default_lam0(double t) { return 2.0 * std::log1p(t); }
double default_haz0(double t) { return std::log1p(t) / 5.0; }

double clamp_exp(double x) {
    if (x > 300.0) x = 300.0;
    if (x < -300.0) x = -300.0;
    return std::exp(x);
}

// Smallest t with f(t) >= target; +inf when the baseline never reaches the
// target inside the bracket.  Analytic for the default logarithmic
// baselines, bisection to 1e-10 otherwise.
double invert_baseline(const BaselineFn& f, bool is_default, bool rate, double target) {
    if (target <= 0.0) return 0.0;
    if (is_default) return rate ? std::expm1(0.5 * target) : std::expm1(5.0 * target);
    double hi_val = f(kBracketHi);
    if (!std::isfinite(hi_val)) throw NumericError("simulate_gsc: baseline is not finite");
    if (hi_val < target) return kInf;
    double lo = 0.0, hi = kBracketHi;
    for (int iter = 0; iter < 200 && hi - lo > 1e-10 * (1.0 + hi); ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) >= target) hi = mid;
        else lo = mid;
    }
    return hi;
}

double eval_baseline(const BaselineFn& f, bool is_default, bool rate, double t) {
    if (is_default) return rate ? default_lam0(t) : default_haz0(t);
    const double v = f(t);
    if (!std::isfinite(v) || v < 0.0)
        throw NumericError("simulate_gsc: baseline returned an invalid value");
    return v;
}

void probe_baseline(const BaselineFn& f, double upto, const char* what) {
    if (!f) throw DataError(std::string("simulate_gsc: missing ") + what);
    double prev = f(0.0);
    if (!std::isfinite(prev) || std::fabs(prev) > 1e-12)
        throw DataError(std::string("simulate_gsc: ") + what + " must satisfy f(0) = 0");
    for (int k = 1; k <= 128; ++k) {
        const double t = upto * k / 128.0;
        const double v = f(t);
        if (!std::isfinite(v)) throw DataError(std::string("simulate_gsc: ") + what +
                                               " is not finite on the sampling range");
        if (v < prev - 1e-12)
            throw DataError(std::string("simulate_gsc: ") + what + " is decreasing near t = " +
                            std::to_string(t));
        prev = v;
    }
}

double lin(const Vec& coef, const Vec& x) {
    double s = 0.0;
    for (std::size_t j = 0; j < coef.size(); ++j) s += coef[j] * x[j];
    return s;
}

} // namespace

SimConfig default_config(std::size_t n, std::uint64_t seed) {
    SimConfig c;
    c.n = n;
    c.seed = seed;
    return c;
}

SimConfig paper_display_preset(std::size_t n, std::uint64_t seed) {
    SimConfig c;
    c.n = n;
    c.seed = seed;
    c.alpha = {-1.0, -1.0};
    c.beta = {0.0, 0.0};
    c.eta = {1.0, 1.0};
    c.theta = {0.0, 0.0};
    return c;
}

std::vector<std::string> lint_config(const SimConfig& config) {
    std::vector<std::string> warnings;
    auto looks_power_law = [&](const BaselineFn& f) {
        // log f linear in log t to machine precision marks c * t^q
        Vec logt, logf;
        for (int k = 1; k <= 6; ++k) {
            const double t = config.tau * k / 6.0;
            const double v = f(t);
            if (!(v > 0.0) || !std::isfinite(v)) return false;
            logt.push_back(std::log(t));
            logf.push_back(std::log(v));
        }
        double mt = 0, mf = 0;
        for (std::size_t i = 0; i < logt.size(); ++i) {
            mt += logt[i];
            mf += logf[i];
        }
        mt /= logt.size();
        mf /= logf.size();
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < logt.size(); ++i) {
            sxx += (logt[i] - mt) * (logt[i] - mt);
            sxy += (logt[i] - mt) * (logf[i] - mf);
        }
        const double slope = sxy / sxx;
        for (std::size_t i = 0; i < logt.size(); ++i)
            if (std::fabs(logf[i] - (mf + slope * (logt[i] - mt))) > 1e-9) return false;
        return true;
    };
    if (!config.lam0_default && config.lam0 && looks_power_law(config.lam0))
        warnings.push_back("cumulative rate baseline looks like a power law; "
                           "shape parameters are not identifiable under it");
    if (!config.haz0_default && config.haz0 && looks_power_law(config.haz0))
        warnings.push_back("cumulative hazard baseline looks like a power law; "
                           "shape parameters are not identifiable under it");
    return warnings;
}

std::pair<RecurrentDataset, SimTruth> simulate_gsc(const SimConfig& config) {
    const std::size_t n = config.n;
    const std::size_t p = config.p();
    if (config.beta.size() != p || config.eta.size() != p || config.theta.size() != p)
        throw DataError("simulate_gsc: regression parameter vectors differ in length");
    if (!(config.tau > 0.0)) throw DataError("simulate_gsc: tau must be positive");
    if (config.covariates == SimConfig::Covariates::explicit_matrix &&
        (config.xmat.rows() != n || config.xmat.cols() != p))
        throw DataError("simulate_gsc: explicit covariate matrix has wrong shape");
    if (config.censoring == SimConfig::Censoring::explicit_values &&
        config.censoring_values.size() != n)
        throw DataError("simulate_gsc: explicit censoring vector has wrong length");
    if (config.frailty == SimConfig::Frailty::explicit_values &&
        config.frailty_values.size() != n)
        throw DataError("simulate_gsc: explicit frailty vector has wrong length");
    if (!config.origins.empty() && config.origins.size() != n)
        throw DataError("simulate_gsc: per-subject origins have wrong length");

    if (!config.lam0_default) probe_baseline(config.lam0, config.tau * 100.0, "Lam0");
    if (!config.haz0_default) probe_baseline(config.haz0, config.tau * 100.0, "Haz0");

    RecurrentDataset dataset;
    dataset.tau = config.tau;
    for (std::size_t j = 0; j < p; ++j)
        dataset.covariate_names.push_back("x" + std::to_string(j + 1));
    dataset.subjects.resize(n);

    SimTruth truth;
    truth.id.resize(n);
    truth.z.resize(n);
    truth.c.resize(n);
    truth.d.resize(n);

    // an informative-censoring draw needs the default covariate design
    const bool informative = config.censoring == SimConfig::Censoring::informative &&
                             config.covariates == SimConfig::Covariates::bernoulli_normal;

    const Rng root(config.seed);
    unsigned workers = config.workers ? config.workers : default_worker_count();
    parallel_for(n, workers, [&](std::size_t i) {
        Rng rng = root.substream(i);
        Vec x(p, 0.0);
        if (config.covariates == SimConfig::Covariates::bernoulli_normal) {
            if (p >= 1) x[0] = rng.bernoulli(0.5) ? 1.0 : 0.0;
            if (p >= 2) x[1] = rng.normal();
            for (std::size_t j = 2; j < p; ++j) x[j] = rng.normal();
        } else {
            for (std::size_t j = 0; j < p; ++j) x[j] = config.xmat(i, j);
        }

        double z;
        switch (config.frailty) {
            case SimConfig::Frailty::gamma_unit_mean: {
                const double v = config.frailty_variance;
                z = v > 0.0 ? rng.gamma(1.0 / v, v) : 1.0;
                break;
            }
            case SimConfig::Frailty::constant: z = config.frailty_constant; break;
            default: z = config.frailty_values[i]; break;
        }
        if (!(z >= 0.0)) throw DataError("simulate_gsc: negative frailty");

        double c;
        switch (config.censoring) {
            case SimConfig::Censoring::informative:
                if (informative) {
                    const double bound = 2.0 * config.tau * x[0] +
                                         2.0 * z * z * config.tau * (1.0 - x[0]);
                    do { c = rng.uniform(0.0, bound); } while (!(c > 0.0));
                } else {
                    do { c = rng.uniform(0.0, 2.0 * config.tau); } while (!(c > 0.0));
                }
                break;
            case SimConfig::Censoring::uniform:
                do { c = rng.uniform(0.0, 2.0 * config.tau); } while (!(c > 0.0));
                break;
            default: c = config.censoring_values[i]; break;
        }

        // terminal time: H(t) = Z e^{x'(theta-eta)} H0(t e^{x'eta})
        const double eta_scale = clamp_exp(lin(config.eta, x));
        const double theta_diff = clamp_exp(lin(config.theta, x) - lin(config.eta, x));
        double dtime = kInf;
        if (z > 0.0) {
            const double target = rng.exponential() / (z * theta_diff);
            const double s = invert_baseline(config.haz0, config.haz0_default, false, target);
            dtime = s / eta_scale;
        }

        const double y = std::min(std::min(dtime, c), config.tau);
        const bool terminal = dtime <= std::min(c, config.tau);
        if (!(y > 0.0)) throw DataError("simulate_gsc: nonpositive follow-up drawn");

        // recurrent events by sequential inversion of the cumulative rate
        // Lam(t) = Z e^{x'(beta-alpha)} Lam0(t e^{x'alpha})
        const double alpha_scale = clamp_exp(lin(config.alpha, x));
        const double gamma_scale = clamp_exp(lin(config.beta, x) - lin(config.alpha, x));
        Vec events;
        if (z > 0.0) {
            double level = eval_baseline(config.lam0, config.lam0_default, true, 0.0);
            for (std::size_t guard = 0; guard < 1000000; ++guard) {
                level += rng.exponential() / (z * gamma_scale);
                const double s =
                    invert_baseline(config.lam0, config.lam0_default, true, level) / alpha_scale;
                if (!(s < y)) break;
                // resync the level with the realized jump time under
                // non-analytic inversion
                if (!config.lam0_default)
                    level = eval_baseline(config.lam0, false, true, s * alpha_scale);
                // a discontinuous baseline can map several levels to one
                // time; zero-length intervals are invalid, so collapse them
                if (!events.empty() && s <= events.back()) continue;
                events.push_back(s);
            }
        }

        const double origin = config.origins.empty() ? config.origin : config.origins[i];
        SubjectRecord subj;
        subj.id = std::to_string(i + 1);
        subj.origin = origin;
        subj.covariates = x;
        double prev = 0.0;
        for (double t : events) {
            subj.intervals.push_back(Interval{origin + prev, origin + t, 1, false});
            prev = t;
        }
        subj.intervals.push_back(Interval{origin + prev, origin + y, 0, terminal});

        dataset.subjects[i] = std::move(subj);
        truth.id[i] = std::to_string(i + 1);
        truth.z[i] = z;
        truth.c[i] = c;
        truth.d[i] = dtime;
    });

    // generated data must satisfy the dataset invariants
    auto [checked, report] = validate(std::move(dataset), CheckMode::hard);
    if (report.has_errors())
        throw NumericError("simulate_gsc: generated data failed validation:\n" +
                           report.to_text());
    return {std::move(checked), std::move(truth)};
}

double cumulative_rate_at(const SimConfig& config, const Vec& x, double z, double t) {
    const double a = clamp_exp(lin(config.alpha, x));
    const double g = clamp_exp(lin(config.beta, x) - lin(config.alpha, x));
    return z * g * eval_baseline(config.lam0, config.lam0_default, true, t * a);
}

double cumulative_hazard_at(const SimConfig& config, const Vec& x, double z, double t) {
    const double e = clamp_exp(lin(config.eta, x));
    const double g = clamp_exp(lin(config.theta, x) - lin(config.eta, x));
    return z * g * eval_baseline(config.haz0, config.haz0_default, false, t * e);
}

double rate_at(const SimConfig& config, const Vec& x, double z, double t) {
    const double h = 1e-6 * (1.0 + t);
    const double lo = t > h ? t - h : 0.0;
    return (cumulative_rate_at(config, x, z, t + h) - cumulative_rate_at(config, x, z, lo)) /
           (t + h - lo);
}

double hazard_at(const SimConfig& config, const Vec& x, double z, double t) {
    const double h = 1e-6 * (1.0 + t);
    const double lo = t > h ? t - h : 0.0;
    return (cumulative_hazard_at(config, x, z, t + h) - cumulative_hazard_at(config, x, z, lo)) /
           (t + h - lo);
}

std::string truth_to_csv(const SimTruth& truth) {
    std::string out = "id,Z,C,D\n";
    char buf[140];
    for (std::size_t i = 0; i < truth.id.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g\n", truth.id[i].c_str(), truth.z[i],
                      truth.c[i], truth.d[i]);
        out += buf;
    }
    return out;
}

} // namespace recur
