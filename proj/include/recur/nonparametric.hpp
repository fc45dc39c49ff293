#ifndef RECUR_NONPARAMETRIC_HPP
#define RECUR_NONPARAMETRIC_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "recur/dataset.hpp"
#include "recur/step_function.hpp"

namespace recur {

// Ordered distinct recurrent event times with multiplicities and risk-pair
// counts: r[l] counts event pairs (i,k) with t_ik <= s[l] <= Y_i, both
// comparisons closed.
struct NpmleTable {
    Vec s;
    std::vector<int> d;
    std::vector<int> r;
};

struct McfCurve {
    StepFunction estimate;
    std::optional<StepFunction> lower;
    std::optional<StepFunction> upper;
    double level = 0.95;
    std::size_t n_boot = 0;
    std::string label;
    std::string time_unit = "time";
    std::vector<std::string> warnings;
};

// Cumulative rate of the recurrent event process under independent
// censoring: jump (events at u) / #{j : Y_j >= u} at every observed event
// time.  adjust_riskset=false divides by n instead, giving the cumulative
// sample mean function.
McfCurve nelson_aalen_mcf(const RecurrentDataset& dataset, bool adjust_riskset = true);

// Product-limit estimator of the normalized baseline shape under
// informative censoring; right-continuous, 0 below the first event time
// and 1 at the largest.  Throws DataError when no recurrent events exist.
std::pair<StepFunction, NpmleTable> npmle_shape(const RecurrentDataset& dataset);

// Frailty mean: n^{-1} sum_i m_i / shape(Y_i).  Subjects with m_i = 0
// contribute zero even where the shape vanishes.
double estimate_mu_z(const RecurrentDataset& dataset, const StepFunction& shape);

enum class McfEstimator { nelson_aalen, cumulative_sample_mean, npmle };

// Pointwise normal-approximation confidence bands from the cluster
// bootstrap, evaluated on the union of replicate knots and clipped below
// at zero.  Deterministic given the seed for any worker count.
McfCurve bootstrap_mcf_ci(const RecurrentDataset& dataset, McfEstimator estimator,
                          std::size_t n_boot, double level, std::uint64_t seed,
                          unsigned workers = 0);

// Shared curve serialization (columns: time, estimate, lower, upper, label).
std::string curves_to_csv(const std::vector<McfCurve>& curves);
std::string curve_to_json(const McfCurve& curve);
std::string curves_to_json(const std::vector<McfCurve>& curves);

// Accepts a single curve object or an array of them.
std::vector<McfCurve> curves_from_json(const std::string& text);

} // namespace recur

#endif
