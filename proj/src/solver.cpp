#include "recur/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "recur/linalg.hpp"

namespace recur {

std::string solve_method_name(SolveMethod m) {
    switch (m) {
        case SolveMethod::spectral: return "spectral";
        case SolveMethod::spectral_multistart: return "spectral_multistart";
        default: return "norm_minimize";
    }
}

namespace {

Vec eval_checked(const VectorFn& f, const Vec& x) {
    Vec v = f(x);
    for (double e : v)
        if (!std::isfinite(e)) throw NumericError("solver: non-finite equation value");
    return v;
}

struct Best {
    Vec x;
    double res_inf = std::numeric_limits<double>::infinity();
    void offer(const Vec& xc, double r) {
        if (r < res_inf) {
            res_inf = r;
            x = xc;
        }
    }
};

SolverResult spectral_run(const VectorFn& f, const SolverConfig& config, const Vec& start) {
    const double gamma = 1e-4;
    const std::size_t memory = std::max<std::size_t>(config.nonmonotone_memory, 1);

    Vec x = start;
    Vec fx = eval_checked(f, x);
    double merit = norm2_squared(fx);
    const double merit0 = merit;
    Best best;
    best.offer(x, norm_inf(fx));

    std::deque<double> recent{merit};
    double sigma = 1.0;
    std::size_t iter = 0;
    std::size_t stale = 0;  // iterations without improving the best residual

    for (; iter < config.max_iters; ++iter) {
        if (norm_inf(fx) <= config.tol) break;
        const double best_before = best.res_inf;

        const double eta = merit0 / ((1.0 + iter) * (1.0 + iter) * 100.0);
        const double fmax = *std::max_element(recent.begin(), recent.end());

        Vec x_new, f_new;
        double merit_new = 0.0;
        bool accepted = false;
        double lambda = 1.0;
        for (int h = 0; h <= 20 && !accepted; ++h, lambda *= 0.5) {
            for (int dir = 0; dir < 2 && !accepted; ++dir) {
                const double step = (dir == 0 ? -1.0 : 1.0) * lambda * sigma;
                Vec trial(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + step * fx[i];
                Vec ft = eval_checked(f, trial);
                const double mt = norm2_squared(ft);
                best.offer(trial, norm_inf(ft));
                if (mt <= fmax + eta - gamma * lambda * lambda * merit) {
                    x_new = std::move(trial);
                    f_new = std::move(ft);
                    merit_new = mt;
                    accepted = true;
                }
            }
        }
        if (!accepted) break;  // stagnation: no acceptable step left

        // Barzilai-Borwein steplength from the accepted move
        Vec s(x.size()), yv(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            s[i] = x_new[i] - x[i];
            yv[i] = f_new[i] - fx[i];
        }
        const double sts = dot(s, s);
        const double sty = dot(s, yv);
        if (sty != 0.0 && std::isfinite(sts / sty)) {
            sigma = sts / sty;
            const double mag = std::fabs(sigma);
            if (mag < 1e-10) sigma = (sigma < 0 ? -1e-10 : 1e-10);
            if (mag > 1e10) sigma = (sigma < 0 ? -1e10 : 1e10);
        } else {
            sigma = 1.0;
        }

        x = std::move(x_new);
        fx = std::move(f_new);
        merit = merit_new;
        recent.push_back(merit);
        if (recent.size() > memory) recent.pop_front();

        // piecewise-constant equations make the iteration wander between
        // plateaus; cut the run once it stops finding better residuals
        if (best.res_inf < best_before * (1.0 - 1e-10)) {
            stale = 0;
        } else if (++stale >= 50) {
            break;
        }
    }

    SolverResult r;
    r.method_used = SolveMethod::spectral;
    r.iterations = iter;
    const double final_res = norm_inf(fx);
    if (final_res <= best.res_inf) {
        r.solution = x;
        r.residual_norm = final_res;
    } else {
        r.solution = best.x;
        r.residual_norm = best.res_inf;
    }
    r.converged = r.residual_norm <= config.tol;
    return r;
}

SolverResult multistart_run(const VectorFn& f, const SolverConfig& config) {
    const std::size_t p = config.init.size();
    SolverResult best;
    best.residual_norm = std::numeric_limits<double>::infinity();
    std::size_t total_iters = 0;
    for (std::size_t attempt = 0; attempt < 2 * p + 1; ++attempt) {
        Vec start = config.init;
        if (attempt > 0) {
            const std::size_t coord = (attempt - 1) / 2;
            start[coord] += (attempt % 2 == 1) ? 0.5 : -0.5;
        }
        SolverResult r = spectral_run(f, config, start);
        total_iters += r.iterations;
        if (r.residual_norm < best.residual_norm) best = r;
        if (best.converged) break;
    }
    best.method_used = SolveMethod::spectral_multistart;
    best.iterations = total_iters;
    return best;
}

// Nelder-Mead on |f|^2 with the classic coefficients; a few deterministic
// restarts with a shrinking initial simplex help on piecewise-constant
// objectives.
SolverResult nelder_mead_run(const VectorFn& f, const SolverConfig& config) {
    const std::size_t p = config.init.size();
    auto g = [&](const Vec& x) { return norm2_squared(eval_checked(f, x)); };

    Vec center = config.init;
    double center_val = g(center);
    std::size_t total_iters = 0;

    const double scales[] = {0.5, 0.1, 0.02};
    for (double scale : scales) {
        std::vector<Vec> simplex;
        simplex.push_back(center);
        for (std::size_t i = 0; i < p; ++i) {
            Vec v = center;
            v[i] += scale;
            simplex.push_back(v);
        }
        Vec vals(simplex.size());
        for (std::size_t i = 0; i < simplex.size(); ++i) vals[i] = g(simplex[i]);

        const std::size_t budget = std::max<std::size_t>(300 * (p + 1), config.max_iters);
        for (std::size_t it = 0; it < budget; ++it, ++total_iters) {
            // order vertices
            std::vector<std::size_t> ord(simplex.size());
            for (std::size_t i = 0; i < ord.size(); ++i) ord[i] = i;
            std::sort(ord.begin(), ord.end(),
                      [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
            const std::size_t lo = ord.front(), hi = ord.back();
            const std::size_t second_hi = ord[ord.size() - 2];

            double diameter = 0.0;
            for (std::size_t i = 1; i < simplex.size(); ++i) {
                double d2 = 0.0;
                for (std::size_t j = 0; j < p; ++j) {
                    const double d = simplex[ord[i]][j] - simplex[lo][j];
                    d2 += d * d;
                }
                diameter = std::max(diameter, std::sqrt(d2));
            }
            if (diameter < config.tol) break;

            Vec centroid(p, 0.0);
            for (std::size_t i = 0; i < simplex.size(); ++i) {
                if (i == hi) continue;
                for (std::size_t j = 0; j < p; ++j) centroid[j] += simplex[i][j];
            }
            const double inv = 1.0 / static_cast<double>(simplex.size() - 1);
            for (double& c : centroid) c *= inv;

            auto blend = [&](double coef) {
                Vec v(p);
                for (std::size_t j = 0; j < p; ++j)
                    v[j] = centroid[j] + coef * (centroid[j] - simplex[hi][j]);
                return v;
            };

            Vec refl = blend(1.0);
            const double refl_val = g(refl);
            if (refl_val < vals[lo]) {
                Vec expa = blend(2.0);
                const double expa_val = g(expa);
                if (expa_val < refl_val) {
                    simplex[hi] = std::move(expa);
                    vals[hi] = expa_val;
                } else {
                    simplex[hi] = std::move(refl);
                    vals[hi] = refl_val;
                }
                continue;
            }
            if (refl_val < vals[second_hi]) {
                simplex[hi] = std::move(refl);
                vals[hi] = refl_val;
                continue;
            }
            Vec contr = blend(refl_val < vals[hi] ? 0.5 : -0.5);
            const double contr_val = g(contr);
            if (contr_val < std::min(refl_val, vals[hi])) {
                simplex[hi] = std::move(contr);
                vals[hi] = contr_val;
                continue;
            }
            // shrink toward the best vertex
            for (std::size_t i = 0; i < simplex.size(); ++i) {
                if (i == lo) continue;
                for (std::size_t j = 0; j < p; ++j)
                    simplex[i][j] = simplex[lo][j] + 0.5 * (simplex[i][j] - simplex[lo][j]);
                vals[i] = g(simplex[i]);
            }
        }
        std::size_t lo = 0;
        for (std::size_t i = 1; i < simplex.size(); ++i)
            if (vals[i] < vals[lo]) lo = i;
        if (vals[lo] < center_val) {
            center = simplex[lo];
            center_val = vals[lo];
        }
    }

    SolverResult r;
    r.method_used = SolveMethod::norm_minimize;
    r.solution = center;
    r.residual_norm = norm_inf(eval_checked(f, center));
    r.converged = r.residual_norm <= config.tol;
    r.iterations = total_iters;
    return r;
}

} // namespace

SolverResult solve_root(const VectorFn& f, const SolverConfig& config) {
    if (config.init.empty()) {
        // zero-dimensional system: nothing to solve
        SolverResult r;
        r.converged = true;
        r.method_used = config.method;
        return r;
    }
    switch (config.method) {
        case SolveMethod::spectral: return spectral_run(f, config, config.init);
        case SolveMethod::spectral_multistart: return multistart_run(f, config);
        default: return nelder_mead_run(f, config);
    }
}

SolverResult minimize_norm(const VectorFn& f, const SolverConfig& config) {
    SolverConfig c = config;
    c.method = SolveMethod::norm_minimize;
    return solve_root(f, c);
}

} // namespace recur
