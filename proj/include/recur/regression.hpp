#ifndef RECUR_REGRESSION_HPP
#define RECUR_REGRESSION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "recur/dataset.hpp"
#include "recur/linalg.hpp"
#include "recur/nonparametric.hpp"
#include "recur/solver.hpp"
#include "recur/step_function.hpp"

namespace recur {

// Submodels of the joint frailty scale-change family.  The canonical form
// pairs a rate lambda(t) = Z lambda0(t e^{x'alpha}) e^{x'beta} with a
// hazard h(t) = Z h0(t e^{x'eta}) e^{x'theta}; cox fixes the shape at zero,
// ar fixes the size at zero, am ties them together, gsc frees both.
enum class RateForm { cox, ar, am, gsc };
enum class HazardForm { none, cox, ar, am, gsc };
enum class EqType { logrank, gehan };

std::string rate_form_name(RateForm f);
std::string hazard_form_name(HazardForm f);

struct ModelSpec {
    RateForm rate_form = RateForm::cox;
    HazardForm hazard_form = HazardForm::none;
    EqType eq_type = EqType::logrank;
    SolverConfig solver;
    Vec init_alpha;   // empty means zeros
    Vec init_beta;
    Vec init_eta;
    Vec init_theta;
    double epsilon = 0.001;
    std::size_t boot = 0;
    bool parallel = true;
    unsigned workers = 0;          // 0 = half the cores
    bool hazard_warm_start = false;

    std::string model_string() const;
};

// "cox", "gsc", "cox|ar", "cox.LWYY", ...
struct ParsedModel {
    bool lwyy = false;
    RateForm rate = RateForm::cox;
    HazardForm hazard = HazardForm::none;
};
ParsedModel parse_model_string(const std::string& model);

struct RateFit {
    Vec alpha;
    Vec beta;
    Vec gamma;                     // beta - alpha
    double log_mu_z = 0.0;
    StepFunction baseline;         // normalized cumulative rate, ends at 1
    bool baseline_exp_form = false;  // true: evaluate by left limit
    std::vector<SolverResult> diagnostics;
    std::size_t empty_riskset_terms = 0;
};

struct HazardFit {
    HazardForm form = HazardForm::cox;
    Vec eta;
    Vec theta;
    StepFunction baseline;         // cumulative hazard on the transformed scale
    std::vector<SolverResult> diagnostics;
    std::size_t empty_riskset_terms = 0;
};

struct CovarianceBlocks {
    Matrix alpha, beta, gamma, eta, theta;
    std::size_t boot_used = 0;
    std::size_t boot_failed = 0;
    bool present() const { return boot_used >= 2; }
};

struct TestResult {
    std::string name;              // cox_shape_zero | am_gamma_zero | ar_beta_zero
    double statistic = 0.0;
    unsigned df = 0;
    double p_value = 1.0;
    bool used_pseudo_inverse = false;
};

struct JointFit {
    ModelSpec spec;
    std::vector<std::string> covariate_names;
    RateFit rate;
    std::optional<HazardFit> hazard;
    Vec zhat;
    CovarianceBlocks vcov;
    std::vector<std::string> warnings;
};

// Per-subject transformed times t e^{x'a} and Y e^{x'a}; within-subject
// order is preserved.
struct TransformedTimes {
    std::vector<Vec> event_times;
    Vec followup;
};
TransformedTimes transform_times(const RecurrentDataset& dataset, const Vec& a);

// Rank-based estimating equation for the rate shape parameter; pairwise
// risk-set comparisons are closed on both ends and empty-denominator terms
// contribute zero.
Vec s1n(const FlatData& data, const Vec& alpha, EqType eq_type);
Vec s1n(const RecurrentDataset& dataset, const Vec& alpha, EqType eq_type);

// Exponential-form baseline cumulative rate at a given shape value.  The
// defining sum includes events at the evaluation point, so consumers read
// it through StepFunction::left_limit.
StepFunction baseline_rate_gsc(const FlatData& data, const Vec& alpha);
StepFunction baseline_rate_gsc(const RecurrentDataset& dataset, const Vec& alpha);

// Size-parameter estimating equation in psi = (log mu_Z, gamma').  The
// baseline is the product-limit estimator when alpha is identically zero
// and the exponential form otherwise.
Vec s2n(const RecurrentDataset& dataset, const Vec& alpha, const Vec& psi);

RateFit estimate_rate(const RecurrentDataset& dataset, const ModelSpec& spec);

// Zhat_i = (m_i + eps) / (baseline{Y*_i} e^{x_i'gamma} + eps).
Vec estimate_frailties(const RecurrentDataset& dataset, const RateFit& rate, double epsilon);

// Hazard-model estimating equations with frailty weights, as raw sums over
// terminal events (no 1/n factor).
Vec s3n(const FlatData& data, const Vec& zhat, const Vec& eta, const Vec& theta, EqType eq_type);
Vec s4n(const FlatData& data, const Vec& zhat, const Vec& eta, const Vec& theta, EqType eq_type);
Vec s3n(const RecurrentDataset& dataset, const Vec& zhat, const Vec& eta, const Vec& theta,
        EqType eq_type);
Vec s4n(const RecurrentDataset& dataset, const Vec& zhat, const Vec& eta, const Vec& theta,
        EqType eq_type);

HazardFit estimate_hazard(const RecurrentDataset& dataset, const Vec& zhat, HazardForm form,
                          const ModelSpec& spec);

StepFunction baseline_hazard(const RecurrentDataset& dataset, const Vec& zhat, const Vec& eta,
                             const Vec& theta);

JointFit fit_joint(const RecurrentDataset& dataset, const ModelSpec& spec, std::uint64_t seed = 0);

// Cluster bootstrap with a full refit per replicate; failed replicates are
// discarded and counted.
CovarianceBlocks bootstrap_covariance(const RecurrentDataset& dataset, const ModelSpec& spec,
                                      std::uint64_t seed);

TestResult wald_test(const std::string& name, const Vec& estimate, const Matrix& cov);

// The three submodel tests (shape = 0, shape = size, size = 0); requires
// bootstrap covariance blocks.
std::vector<TestResult> submodel_tests(const JointFit& fit);

struct PredictedCurves {
    McfCurve rate;
    std::optional<McfCurve> hazard;
};

// Cumulative rate z e^{x'gamma} L0(t e^{x'alpha}) and hazard
// z e^{x'(theta-eta)} H0(t e^{x'eta}); z defaults to mu_Z.  Curves are
// anchored at zero before their first jump.
PredictedCurves predict_cumulative(const JointFit& fit, const Vec& x,
                                   std::optional<double> frailty = std::nullopt);

std::string fit_to_json(const JointFit& fit, const std::vector<TestResult>* tests = nullptr);
std::string fit_summary_text(const JointFit& fit, const std::string& call_line,
                             const std::vector<TestResult>* tests = nullptr);

} // namespace recur

#endif
