#include "recur/nonparametric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "recur/parallel.hpp"
#include "recur/rng.hpp"
#include "recur/stats.hpp"

namespace recur {

namespace {

// (time, multiplicity) for the distinct sorted values of `times`
std::pair<Vec, std::vector<int>> distinct_with_counts(Vec times) {
    std::sort(times.begin(), times.end());
    Vec s;
    std::vector<int> d;
    for (double t : times) {
        if (!s.empty() && s.back() == t) {
            ++d.back();
        } else {
            s.push_back(t);
            d.push_back(1);
        }
    }
    return {std::move(s), std::move(d)};
}

} // namespace

McfCurve nelson_aalen_mcf(const RecurrentDataset& dataset, bool adjust_riskset) {
    if (dataset.n() == 0) throw DataError("nelson_aalen_mcf: empty dataset");
    const FlatData f = flatten(dataset);

    Vec event_times;
    event_times.reserve(f.events.size());
    for (const auto& e : f.events) event_times.push_back(e.time);
    auto [s, d] = distinct_with_counts(std::move(event_times));

    Vec y_sorted = f.y;
    std::sort(y_sorted.begin(), y_sorted.end());

    Vec values(s.size());
    double cum = 0.0;
    for (std::size_t l = 0; l < s.size(); ++l) {
        double denom;
        if (adjust_riskset) {
            // #{j : Y_j >= s_l}
            const auto it = std::lower_bound(y_sorted.begin(), y_sorted.end(), s[l]);
            denom = static_cast<double>(y_sorted.end() - it);
        } else {
            denom = static_cast<double>(f.n);
        }
        cum += static_cast<double>(d[l]) / denom;
        values[l] = cum;
    }

    McfCurve curve;
    curve.estimate = StepFunction(std::move(s), std::move(values), 0.0);
    curve.label = adjust_riskset ? "Nelson-Aalen MCF" : "cumulative sample mean";
    return curve;
}

std::pair<StepFunction, NpmleTable> npmle_shape(const RecurrentDataset& dataset) {
    const FlatData f = flatten(dataset);
    if (f.events.empty())
        throw DataError("npmle_shape: no recurrent events; the shape estimator is undefined");

    Vec event_times;
    Vec event_followups;  // Y of the subject owning each event
    event_times.reserve(f.events.size());
    event_followups.reserve(f.events.size());
    for (const auto& e : f.events) {
        event_times.push_back(e.time);
        event_followups.push_back(f.y[e.subject]);
    }
    auto [s, d] = distinct_with_counts(event_times);

    Vec t_sorted = event_times;
    std::sort(t_sorted.begin(), t_sorted.end());
    Vec yf_sorted = event_followups;
    std::sort(yf_sorted.begin(), yf_sorted.end());

    NpmleTable table;
    table.s = s;
    table.d = d;
    table.r.resize(s.size());
    for (std::size_t l = 0; l < s.size(); ++l) {
        // pairs with t_ik <= s_l minus pairs whose Y_i < s_l
        const auto entered =
            std::upper_bound(t_sorted.begin(), t_sorted.end(), s[l]) - t_sorted.begin();
        const auto gone =
            std::lower_bound(yf_sorted.begin(), yf_sorted.end(), s[l]) - yf_sorted.begin();
        table.r[l] = static_cast<int>(entered - gone);
    }

    // suffix products of (1 - d/R): value at knot s_j includes only factors
    // with s_l > s_j, making the function right-continuous
    Vec values(s.size());
    double prod = 1.0;
    for (std::size_t l = s.size(); l-- > 0;) {
        values[l] = prod;
        prod *= 1.0 - static_cast<double>(table.d[l]) / static_cast<double>(table.r[l]);
    }
    const double before = prod;

    return {StepFunction(std::move(s), std::move(values), before), std::move(table)};
}

double estimate_mu_z(const RecurrentDataset& dataset, const StepFunction& shape) {
    const std::size_t n = dataset.n();
    if (n == 0) throw DataError("estimate_mu_z: empty dataset");
    double sum = 0.0;
    for (const auto& subj : dataset.subjects) {
        const int m = subj.event_count();
        if (m == 0) continue;
        const double denom = shape.value_at(subj.follow_up());
        if (!(denom > 0.0))
            throw DataError("estimate_mu_z: shape vanishes at the follow-up of subject " +
                            subj.id + " which has recurrent events");
        sum += static_cast<double>(m) / denom;
    }
    return sum / static_cast<double>(n);
}

namespace {

McfCurve run_estimator(const RecurrentDataset& dataset, McfEstimator which) {
    switch (which) {
        case McfEstimator::nelson_aalen: return nelson_aalen_mcf(dataset, true);
        case McfEstimator::cumulative_sample_mean: return nelson_aalen_mcf(dataset, false);
        default: {
            McfCurve c;
            c.estimate = npmle_shape(dataset).first;
            c.label = "NPMLE";
            return c;
        }
    }
}

} // namespace

McfCurve bootstrap_mcf_ci(const RecurrentDataset& dataset, McfEstimator estimator,
                          std::size_t n_boot, double level, std::uint64_t seed,
                          unsigned workers) {
    if (n_boot < 2) throw DataError("bootstrap_mcf_ci: need at least 2 replicates");
    if (!(level > 0.0 && level < 1.0)) throw DataError("bootstrap_mcf_ci: level outside (0,1)");

    McfCurve base = run_estimator(dataset, estimator);

    std::vector<std::optional<StepFunction>> replicates(n_boot);
    const Rng root(seed);
    if (workers == 0) workers = default_worker_count();
    parallel_for(n_boot, workers, [&](std::size_t b) {
        Rng sub = root.substream(b);
        const RecurrentDataset resampled = resample_clusters(dataset, sub.next_u64());
        try {
            replicates[b] = run_estimator(resampled, estimator).estimate;
        } catch (const Error&) {
            replicates[b] = std::nullopt;  // counted below
        }
    });

    std::size_t used = 0;
    Vec grid = base.estimate.knots();
    for (const auto& rep : replicates) {
        if (!rep) continue;
        ++used;
        grid.insert(grid.end(), rep->knots().begin(), rep->knots().end());
    }
    if (used < 2) throw DataError("bootstrap_mcf_ci: fewer than 2 replicates succeeded");
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    const double z = normal_quantile(0.5 * (1.0 + level));
    Vec lower(grid.size()), upper(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double mean = 0.0;
        for (const auto& rep : replicates)
            if (rep) mean += rep->value_at(grid[g]);
        mean /= static_cast<double>(used);
        double ss = 0.0;
        for (const auto& rep : replicates) {
            if (!rep) continue;
            const double dv = rep->value_at(grid[g]) - mean;
            ss += dv * dv;
        }
        const double sd = std::sqrt(ss / static_cast<double>(used - 1));
        const double est = base.estimate.value_at(grid[g]);
        lower[g] = std::max(0.0, est - z * sd);
        upper[g] = est + z * sd;
    }

    base.lower = StepFunction(grid, std::move(lower), 0.0);
    base.upper = StepFunction(grid, std::move(upper), 0.0);
    base.level = level;
    base.n_boot = used;
    const std::size_t failed = n_boot - used;
    if (failed > 0) {
        char buf[120];
        std::snprintf(buf, sizeof buf, "%zu of %zu bootstrap replicates failed%s", failed, n_boot,
                      failed * 10 > n_boot ? " (more than 10%)" : "");
        base.warnings.push_back(buf);
    }
    return base;
}

std::string curves_to_csv(const std::vector<McfCurve>& curves) {
    std::string out = "time,estimate,lower,upper,label\n";
    char buf[160];
    for (const auto& c : curves) {
        Vec grid = c.estimate.knots();
        if (c.lower) {
            grid.insert(grid.end(), c.lower->knots().begin(), c.lower->knots().end());
            std::sort(grid.begin(), grid.end());
            grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
        }
        for (double t : grid) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g", t, c.estimate.value_at(t));
            out += buf;
            if (c.lower && c.upper) {
                std::snprintf(buf, sizeof buf, ",%.17g,%.17g", c.lower->value_at(t),
                              c.upper->value_at(t));
                out += buf;
            } else {
                out += ",,";
            }
            out += "," + c.label + "\n";
        }
    }
    return out;
}

namespace {

nlohmann::json curve_json_object(const McfCurve& c) {
    nlohmann::json j;
    j["label"] = c.label;
    j["time_unit"] = c.time_unit;
    j["value_before"] = c.estimate.value_before_first_knot();
    j["time"] = c.estimate.knots();
    j["estimate"] = c.estimate.values();
    if (c.lower && c.upper) {
        j["level"] = c.level;
        j["n_boot"] = c.n_boot;
        j["band_time"] = c.lower->knots();
        j["lower"] = c.lower->values();
        j["upper"] = c.upper->values();
    }
    if (!c.warnings.empty()) j["warnings"] = c.warnings;
    return j;
}

} // namespace

std::string curve_to_json(const McfCurve& curve) { return curve_json_object(curve).dump(2); }

std::string curves_to_json(const std::vector<McfCurve>& curves) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& c : curves) j.push_back(curve_json_object(c));
    return j.dump(2);
}

namespace {

McfCurve curve_from_json_object(const nlohmann::json& j) {
    McfCurve c;
    c.label = j.value("label", std::string{});
    c.time_unit = j.value("time_unit", std::string{"time"});
    const Vec knots = j.at("time").get<Vec>();
    const Vec values = j.at("estimate").get<Vec>();
    c.estimate = StepFunction(knots, values, j.value("value_before", 0.0));
    if (j.contains("lower") && j.contains("upper")) {
        const Vec grid = j.contains("band_time") ? j.at("band_time").get<Vec>() : knots;
        c.lower = StepFunction(grid, j.at("lower").get<Vec>(), 0.0);
        c.upper = StepFunction(grid, j.at("upper").get<Vec>(), 0.0);
        c.level = j.value("level", 0.95);
        c.n_boot = j.value("n_boot", std::size_t{0});
    }
    return c;
}

} // namespace

std::vector<McfCurve> curves_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("cannot parse curve JSON: ") + e.what());
    }
    std::vector<McfCurve> out;
    try {
        if (j.is_array()) {
            for (const auto& item : j) out.push_back(curve_from_json_object(item));
        } else {
            out.push_back(curve_from_json_object(j));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("curve JSON lacks a required field: ") + e.what());
    }
    return out;
}

} // namespace recur
