// recurreg: command-line toolkit for recurrent event data - validation,
// summaries, event/MCF plots, joint frailty scale-change fits, simulation
// and prediction.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "recur/dataset.hpp"
#include "recur/dataset_io.hpp"
#include "recur/lwyy.hpp"
#include "recur/nonparametric.hpp"
#include "recur/parallel.hpp"
#include "recur/regression.hpp"
#include "recur/simulator.hpp"
#include "recur/viz.hpp"

using namespace recur;

namespace {

// usage problems that CLI11 cannot see (flag interactions, bad values)
class UsageError : public Error {
public:
    explicit UsageError(const std::string& msg) : Error(msg) {}
};

struct InputOptions {
    std::string path;
    std::string fixture;
    std::string col_id, col_stop, col_event, col_status;
    std::string col_start = "\x01";  // sentinel: option not given
    std::string delimiter;
    std::string check = "hard";
};

void add_input_options(CLI::App* cmd, InputOptions& in) {
    cmd->add_option("-i,--input", in.path, "delimited dataset (comma or tab, header row)");
    cmd->add_option("--fixture", in.fixture,
                    "named bundled dataset; 'simdat' resolves $RECURREG_SIMDAT or data/simdat.csv");
    cmd->add_option("--col-id", in.col_id, "id column name");
    cmd->add_option("--col-start", in.col_start, "interval start column ('' for single-stop files)");
    cmd->add_option("--col-stop", in.col_stop, "interval stop column");
    cmd->add_option("--col-event", in.col_event, "event type column");
    cmd->add_option("--col-status", in.col_status, "terminal status column");
    cmd->add_option("--delimiter", in.delimiter, "comma or tab (default: sniff the header)");
    cmd->add_option("--check", in.check, "validation mode: hard, soft, none")
        ->check(CLI::IsMember({"hard", "soft", "none"}));
}

std::string resolve_fixture(const std::string& name) {
    if (name != "simdat") throw UsageError("unknown fixture '" + name + "' (expected: simdat)");
    if (const char* env = std::getenv("RECURREG_SIMDAT")) {
        std::ifstream probe(env);
        if (probe) return env;
    }
    {
        std::ifstream probe("data/simdat.csv");
        if (probe) return "data/simdat.csv";
    }
    throw DataError("fixture not vendored: place the reference export at data/simdat.csv "
                    "or point RECURREG_SIMDAT at it");
}

ColumnSchema make_schema(const InputOptions& in) {
    ColumnSchema s;
    if (!in.col_id.empty()) s.id = in.col_id;
    // an explicit empty --col-start forces single-stop chaining
    if (in.col_start != "\x01") s.start = in.col_start;
    if (!in.col_stop.empty()) s.stop = in.col_stop;
    if (!in.col_event.empty()) s.event = in.col_event;
    if (!in.col_status.empty()) s.status = in.col_status;
    if (in.delimiter == "comma") s.delimiter = ',';
    else if (in.delimiter == "tab") s.delimiter = '\t';
    else if (!in.delimiter.empty()) throw UsageError("delimiter must be comma or tab");
    return s;
}

ParseResult load_dataset(const InputOptions& in) {
    const CheckMode mode = parse_check_mode(in.check);
    if (!in.fixture.empty()) return parse_dataset_file(resolve_fixture(in.fixture), make_schema(in), mode);
    if (in.path.empty()) throw UsageError("an --input file (or --fixture) is required");
    if (in.path == "-") {
        return parse_dataset(std::cin, make_schema(in), mode);
    }
    return parse_dataset_file(in.path, make_schema(in), mode);
}

void emit(const std::string& path, const std::string& content) {
    if (path.empty()) return;
    if (path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << content;
}

Vec parse_vector(const std::string& text) {
    Vec out;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, ',')) {
        try {
            out.push_back(std::stod(cur));
        } catch (const std::exception&) {
            throw UsageError("cannot parse number '" + cur + "' in vector option");
        }
    }
    return out;
}

std::string format_level_label(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

unsigned resolve_workers(unsigned requested) {
    if (const char* env = std::getenv("RECUR_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return requested;
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
    InputOptions in;
    std::string mode = "hard";
    std::string json_path;
};

int run_validate(const ValidateArgs& a) {
    InputOptions in = a.in;
    in.check = "none";  // parse leniently, then apply the requested mode
    auto [dataset, parse_report] = load_dataset(in);
    auto [checked, report] = validate(std::move(dataset), parse_check_mode(a.mode));
    std::cout << report.to_text();
    emit(a.json_path, report_to_json(report));
    return report.has_errors() ? 2 : 0;
}

// ----------------------------------------------------------------- summary

struct SummaryArgs {
    InputOptions in;
    std::string json_path;
};

int run_summary(const SummaryArgs& a) {
    auto [dataset, report] = load_dataset(a.in);
    if (dataset.n() == 0) throw DataError("empty dataset");
    const DatasetSummary s = summarize(dataset);
    std::cout << s.to_text();
    if (!a.json_path.empty()) {
        nlohmann::json j;
        j["n"] = s.n;
        j["total_events"] = s.total_events;
        j["mean_events_per_subject"] = s.mean_events_per_subject;
        j["terminal_proportion"] = s.terminal_proportion;
        if (s.median_followup) j["median_followup"] = *s.median_followup;
        if (s.median_time_to_terminal) j["median_time_to_terminal"] = *s.median_time_to_terminal;
        emit(a.json_path, j.dump(2) + "\n");
    }
    return 0;
}

// ------------------------------------------------------------- plot-events

struct PlotEventsArgs {
    InputOptions in;
    std::string group;
    std::string order = "increasing";
    bool calendar = false;
    std::string svg_path;
    std::string json_path;
};

int run_plot_events(const PlotEventsArgs& a) {
    auto [dataset, report] = load_dataset(a.in);
    const std::optional<std::string> group =
        a.group.empty() ? std::nullopt : std::optional<std::string>(a.group);
    const EventPlotData data =
        event_plot_data(dataset, group, parse_event_order(a.order), a.calendar);
    const std::string svg_path = a.svg_path.empty() && a.json_path.empty() ? "-" : a.svg_path;
    if (!svg_path.empty()) emit(svg_path, render_event_plot_svg(data));
    emit(a.json_path, event_plot_to_json(data) + "\n");
    return 0;
}

// --------------------------------------------------------------------- mcf

struct McfArgs {
    InputOptions in;
    bool npmle = false;
    bool adjust_riskset = true;
    std::string group;
    std::size_t boot = 0;
    double level = 0.95;
    std::uint64_t seed = 0;
    std::string svg_path, csv_path, json_path;
};

int run_mcf(const McfArgs& a) {
    auto [dataset, report] = load_dataset(a.in);
    const McfEstimator which = a.npmle ? McfEstimator::npmle
                               : a.adjust_riskset ? McfEstimator::nelson_aalen
                                                  : McfEstimator::cumulative_sample_mean;
    auto one_curve = [&](const RecurrentDataset& ds, const std::string& label) {
        McfCurve c;
        if (a.boot >= 2) {
            c = bootstrap_mcf_ci(ds, which, a.boot, a.level, a.seed);
        } else {
            switch (which) {
                case McfEstimator::nelson_aalen: c = nelson_aalen_mcf(ds, true); break;
                case McfEstimator::cumulative_sample_mean: c = nelson_aalen_mcf(ds, false); break;
                default:
                    c.estimate = npmle_shape(ds).first;
                    c.label = "NPMLE";
            }
        }
        if (!label.empty()) c.label = label;
        return c;
    };

    std::vector<McfCurve> curves;
    std::string legend_title;
    if (a.group.empty()) {
        curves.push_back(one_curve(dataset, ""));
    } else {
        legend_title = a.group;
        for (const auto& [level_value, part] : stratify(dataset, a.group))
            curves.push_back(one_curve(part, format_level_label(level_value)));
    }
    const CurveSet set = combine_curves(curves, legend_title);

    const std::string csv = curves_to_csv(set.curves);
    const bool any_output = !a.svg_path.empty() || !a.csv_path.empty() || !a.json_path.empty();
    if (!any_output) {
        std::cout << csv;
    } else {
        emit(a.csv_path, csv);
        emit(a.json_path, curves_to_json(set.curves) + "\n");
        if (!a.svg_path.empty()) emit(a.svg_path, render_curves_svg(set));
    }
    for (const auto& c : set.curves)
        for (const auto& w : c.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

// --------------------------------------------------------------------- fit

struct FitArgs {
    InputOptions in;
    std::string model = "cox";
    std::string eq_type = "logrank";
    std::size_t boot = 0;
    std::uint64_t seed = 0;
    bool parallel = true;
    unsigned workers = 0;
    std::string init_alpha, init_beta, init_eta, init_theta;
    double epsilon = 0.001;
    bool warm_start = false;
    bool tests = false;
    double tol = 1e-7;
    std::string json_path, text_path, svg_path;
    std::string argv_line;
};

ModelSpec make_spec(const FitArgs& a, const ParsedModel& model) {
    ModelSpec spec;
    spec.rate_form = model.rate;
    spec.hazard_form = model.hazard;
    spec.eq_type = a.eq_type == "gehan" ? EqType::gehan : EqType::logrank;
    spec.solver.tol = a.tol;
    spec.boot = a.boot;
    spec.parallel = a.parallel;
    spec.workers = resolve_workers(a.workers);
    spec.epsilon = a.epsilon;
    spec.hazard_warm_start = a.warm_start;
    if (!a.init_alpha.empty()) spec.init_alpha = parse_vector(a.init_alpha);
    if (!a.init_beta.empty()) spec.init_beta = parse_vector(a.init_beta);
    if (!a.init_eta.empty()) spec.init_eta = parse_vector(a.init_eta);
    if (!a.init_theta.empty()) spec.init_theta = parse_vector(a.init_theta);
    return spec;
}

ParsedModel parse_model_or_usage(const std::string& text) {
    try {
        return parse_model_string(text);
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
}

int run_fit(const FitArgs& a) {
    auto [dataset, report] = load_dataset(a.in);
    const ParsedModel model = parse_model_or_usage(a.model);

    if (model.lwyy) {
        if (a.tests) throw UsageError("--test applies to the gsc rate model only");
        const LwyyFit fit = fit_lwyy(dataset);
        std::string text = "Call:\n" + a.argv_line + "\n\n" +
                           fit.summary_text(dataset.covariate_names);
        if (a.text_path.empty() && a.json_path.empty()) std::cout << text;
        emit(a.text_path, text);
        if (!a.json_path.empty()) {
            nlohmann::json j;
            j["model"] = "cox.LWYY";
            nlohmann::json rows = nlohmann::json::array();
            for (std::size_t k = 0; k < fit.coef.size(); ++k)
                rows.push_back({{"name", dataset.covariate_names[k]},
                                {"estimate", fit.coef[k]},
                                {"stderr", fit.se_naive[k]},
                                {"robust_stderr", fit.se_robust[k]}});
            j["coefficients"] = rows;
            j["loglik"] = fit.loglik;
            j["score_norm"] = fit.score_norm;
            emit(a.json_path, j.dump(2) + "\n");
        }
        return 0;
    }

    if (a.tests && model.rate != RateForm::gsc)
        throw UsageError("--test applies to the gsc rate model only");
    if (a.tests && a.boot < 2)
        throw UsageError("--test needs bootstrap covariance; pass --boot >= 2");

    const ModelSpec spec = make_spec(a, model);
    const JointFit fit = fit_joint(dataset, spec, a.seed);
    std::vector<TestResult> tests;
    if (a.tests) tests = submodel_tests(fit);
    const std::vector<TestResult>* tests_ptr = a.tests ? &tests : nullptr;

    const std::string text = fit_summary_text(fit, a.argv_line, tests_ptr);
    if (a.text_path.empty() && a.json_path.empty()) std::cout << text;
    emit(a.text_path, text);
    if (!a.json_path.empty()) emit(a.json_path, fit_to_json(fit, tests_ptr) + "\n");

    if (!a.svg_path.empty()) {
        // baseline cumulative functions scaled by the frailty mean
        const PredictedCurves curves =
            predict_cumulative(fit, Vec(dataset.covariate_dim(), 0.0));
        std::vector<McfCurve> plot{curves.rate};
        plot.back().label = "cumulative rate";
        if (curves.hazard) {
            plot.push_back(*curves.hazard);
            plot.back().label = "cumulative hazard";
        }
        emit(a.svg_path, render_curves_svg(combine_curves(plot)));
    }
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::size_t n = 0;
    std::string preset = "default";
    std::uint64_t seed = 0;
    double tau = -1.0;
    std::string alpha, beta, eta, theta;
    double frailty_constant = -1.0;
    double frailty_variance = -1.0;
    bool censor_uniform = false;
    double origin = 0.0;
    std::string out_path = "-";
    std::string truth_path;
    bool summary = false;
    unsigned workers = 0;
};

int run_simulate(const SimulateArgs& a) {
    SimConfig cfg;
    if (a.preset == "default") cfg = default_config(a.n, a.seed);
    else if (a.preset == "paper-display") cfg = paper_display_preset(a.n, a.seed);
    else throw UsageError("unknown preset '" + a.preset + "' (default, paper-display)");
    if (a.tau > 0.0) cfg.tau = a.tau;
    if (!a.alpha.empty()) cfg.alpha = parse_vector(a.alpha);
    if (!a.beta.empty()) cfg.beta = parse_vector(a.beta);
    if (!a.eta.empty()) cfg.eta = parse_vector(a.eta);
    if (!a.theta.empty()) cfg.theta = parse_vector(a.theta);
    if (a.frailty_constant >= 0.0) {
        cfg.frailty = SimConfig::Frailty::constant;
        cfg.frailty_constant = a.frailty_constant;
    }
    if (a.frailty_variance >= 0.0) cfg.frailty_variance = a.frailty_variance;
    if (a.censor_uniform) cfg.censoring = SimConfig::Censoring::uniform;
    cfg.origin = a.origin;
    cfg.workers = resolve_workers(a.workers);

    for (const auto& w : lint_config(cfg)) std::cerr << "warning: " << w << "\n";
    auto [dataset, truth] = simulate_gsc(cfg);

    std::ostringstream out;
    write_dataset(out, dataset);
    emit(a.out_path, out.str());
    emit(a.truth_path, truth_to_csv(truth));
    if (a.summary && dataset.n() > 0) std::cerr << summarize(dataset).to_text();
    return 0;
}

// ----------------------------------------------------------------- predict

struct PredictArgs {
    FitArgs fit;
    std::string newdata_path;
    double frailty = -1.0;
    std::string csv_path, json_path, svg_path;
};

int run_predict(const PredictArgs& a) {
    auto [dataset, report] = load_dataset(a.fit.in);
    const ParsedModel model = parse_model_or_usage(a.fit.model);
    if (model.lwyy) throw UsageError("predict needs a scale-change model, not cox.LWYY");
    ModelSpec spec = make_spec(a.fit, model);
    spec.boot = 0;
    const JointFit fit = fit_joint(dataset, spec, a.fit.seed);

    // newdata: header row naming covariates, one row per profile
    std::vector<Vec> profiles;
    std::vector<std::string> labels;
    if (a.newdata_path.empty()) {
        profiles.push_back(Vec(dataset.covariate_dim(), 0.0));
        labels.push_back("baseline");
    } else {
        std::ifstream in(a.newdata_path);
        if (!in) throw DataError("cannot open " + a.newdata_path);
        std::string header;
        if (!std::getline(in, header)) throw DataError("empty newdata file");
        const char delim = header.find('\t') != std::string::npos ? '\t' : ',';
        std::vector<std::string> names;
        {
            std::istringstream hs(header);
            std::string f;
            while (std::getline(hs, f, delim)) {
                while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
                names.push_back(f);
            }
        }
        std::vector<std::size_t> order;
        for (const auto& want : dataset.covariate_names) {
            auto it = std::find(names.begin(), names.end(), want);
            if (it == names.end()) throw DataError("newdata lacks covariate " + want);
            order.push_back(static_cast<std::size_t>(it - names.begin()));
        }
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string f;
            Vec row;
            while (std::getline(ls, f, delim)) row.push_back(std::stod(f));
            Vec x;
            for (std::size_t idx : order) x.push_back(row.at(idx));
            profiles.push_back(x);
            labels.push_back("profile " + std::to_string(profiles.size()));
        }
    }

    std::vector<McfCurve> curves;
    const std::optional<double> frailty =
        a.frailty >= 0.0 ? std::optional<double>(a.frailty) : std::nullopt;
    for (std::size_t k = 0; k < profiles.size(); ++k) {
        PredictedCurves pred = predict_cumulative(fit, profiles[k], frailty);
        pred.rate.label = labels[k] + " rate";
        curves.push_back(pred.rate);
        if (pred.hazard) {
            pred.hazard->label = labels[k] + " hazard";
            curves.push_back(*pred.hazard);
        }
    }
    const std::string csv = curves_to_csv(curves);
    const bool any = !a.csv_path.empty() || !a.json_path.empty() || !a.svg_path.empty();
    if (!any) std::cout << csv;
    emit(a.csv_path, csv);
    emit(a.json_path, curves_to_json(curves) + "\n");
    if (!a.svg_path.empty()) emit(a.svg_path, render_curves_svg(combine_curves(curves)));
    return 0;
}

// ----------------------------------------------------------- combine-curves

struct CombineArgs {
    std::vector<std::string> curve_files;
    std::string legend_title;
    std::string legend_labels;
    std::string svg_path, json_path, csv_path;
};

int run_combine(const CombineArgs& a) {
    std::vector<McfCurve> curves;
    for (const auto& path : a.curve_files) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        for (auto& c : curves_from_json(buf.str())) curves.push_back(std::move(c));
    }
    std::vector<std::string> labels;
    if (!a.legend_labels.empty()) {
        std::istringstream ls(a.legend_labels);
        std::string f;
        while (std::getline(ls, f, ',')) labels.push_back(f);
    }
    const CurveSet set = combine_curves(std::move(curves), a.legend_title, labels);
    const bool any = !a.svg_path.empty() || !a.json_path.empty() || !a.csv_path.empty();
    if (!any || !a.svg_path.empty()) emit(a.svg_path.empty() ? "-" : a.svg_path,
                                          render_curves_svg(set));
    emit(a.json_path, curves_to_json(set.curves) + "\n");
    emit(a.csv_path, curves_to_csv(set.curves));
    return 0;
}

std::string join_argv(int argc, char** argv) {
    std::string line;
    for (int i = 0; i < argc; ++i) {
        if (i) line += ' ';
        line += argv[i];
    }
    return line;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"recurreg: regression toolkit for recurrent events with a terminal event"};
    app.require_subcommand(1);
    bool error_json = false;
    app.add_flag("--error-json", error_json, "emit errors as JSON on stderr");

    ValidateArgs va;
    CLI::App* validate_cmd = app.add_subcommand("validate", "check a dataset and report findings");
    add_input_options(validate_cmd, va.in);
    validate_cmd->add_option("--mode", va.mode, "validation mode to apply")
        ->check(CLI::IsMember({"hard", "soft", "none"}));
    validate_cmd->add_option("--json", va.json_path, "write the report as JSON");

    SummaryArgs sa;
    CLI::App* summary_cmd = app.add_subcommand("summary", "descriptive statistics");
    add_input_options(summary_cmd, sa.in);
    summary_cmd->add_option("--json", sa.json_path, "write the summary as JSON");

    PlotEventsArgs pa;
    CLI::App* plot_cmd = app.add_subcommand("plot-events", "event plot as SVG / plot JSON");
    add_input_options(plot_cmd, pa.in);
    plot_cmd->add_option("--group", pa.group, "stratify panels by a covariate");
    plot_cmd->add_option("--order", pa.order, "increasing, decreasing, none")
        ->check(CLI::IsMember({"increasing", "decreasing", "none"}));
    plot_cmd->add_flag("--calendar", pa.calendar, "calendar-time axis");
    plot_cmd->add_option("--svg", pa.svg_path, "SVG output path ('-' for stdout)");
    plot_cmd->add_option("--json", pa.json_path, "plot-data JSON output path");

    McfArgs ma;
    CLI::App* mcf_cmd = app.add_subcommand("mcf", "mean cumulative function curves");
    add_input_options(mcf_cmd, ma.in);
    mcf_cmd->add_flag("--npmle", ma.npmle, "informative-censoring shape estimator");
    mcf_cmd->add_flag("--adjust-riskset,!--no-adjust-riskset", ma.adjust_riskset,
                      "divide by the at-risk count (default) or by n");
    mcf_cmd->add_option("--group", ma.group, "one curve per covariate level");
    mcf_cmd->add_option("--boot", ma.boot, "bootstrap replicates for confidence bands");
    mcf_cmd->add_option("--level", ma.level, "confidence level")->check(CLI::Range(0.0, 1.0));
    mcf_cmd->add_option("--seed", ma.seed, "bootstrap seed");
    mcf_cmd->add_option("--svg", ma.svg_path, "SVG output path");
    mcf_cmd->add_option("--csv", ma.csv_path, "curve CSV output path");
    mcf_cmd->add_option("--json", ma.json_path, "curve JSON output path");

    FitArgs fa;
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit a joint frailty scale-change model");
    add_input_options(fit_cmd, fa.in);
    fit_cmd->add_option("--model", fa.model,
                        "cox, ar, am, gsc, rate|hazard pairs, or cox.LWYY");
    fit_cmd->add_option("--eq-type", fa.eq_type, "logrank or gehan weights")
        ->check(CLI::IsMember({"logrank", "gehan"}));
    fit_cmd->add_option("--boot", fa.boot, "bootstrap replicates for covariance");
    fit_cmd->add_option("--seed", fa.seed, "bootstrap seed");
    fit_cmd->add_flag("--parallel,!--no-parallel", fa.parallel, "parallel bootstrap");
    fit_cmd->add_option("--workers", fa.workers, "worker threads (0 = half the cores)");
    fit_cmd->add_option("--init-alpha", fa.init_alpha, "comma-separated initial values");
    fit_cmd->add_option("--init-beta", fa.init_beta, "comma-separated initial values");
    fit_cmd->add_option("--init-eta", fa.init_eta, "comma-separated initial values");
    fit_cmd->add_option("--init-theta", fa.init_theta, "comma-separated initial values");
    fit_cmd->add_option("--epsilon", fa.epsilon, "frailty stabilization constant");
    fit_cmd->add_flag("--warm-start", fa.warm_start, "seed gsc hazard solves from a cox fit");
    fit_cmd->add_flag("--test", fa.tests, "submodel hypothesis tests (gsc rate, needs --boot)");
    fit_cmd->add_option("--tol", fa.tol, "solver tolerance");
    fit_cmd->add_option("--json", fa.json_path, "fit JSON output path");
    fit_cmd->add_option("--text", fa.text_path, "text summary output path");
    fit_cmd->add_option("--svg", fa.svg_path, "baseline cumulative function plot");

    SimulateArgs sm;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "generate data from the joint model");
    sim_cmd->add_option("--n", sm.n, "number of subjects")->required();
    sim_cmd->add_option("--preset", sm.preset, "default or paper-display");
    sim_cmd->add_option("--seed", sm.seed, "generator seed");
    sim_cmd->add_option("--tau", sm.tau, "maximum follow-up");
    sim_cmd->add_option("--alpha", sm.alpha, "rate shape parameters (comma separated)");
    sim_cmd->add_option("--beta", sm.beta, "rate size parameters");
    sim_cmd->add_option("--eta", sm.eta, "hazard shape parameters");
    sim_cmd->add_option("--theta", sm.theta, "hazard size parameters");
    sim_cmd->add_option("--frailty-constant", sm.frailty_constant, "degenerate frailty value");
    sim_cmd->add_option("--frailty-variance", sm.frailty_variance, "gamma frailty variance");
    sim_cmd->add_flag("--censor-uniform", sm.censor_uniform, "uniform censoring on [0, 2 tau]");
    sim_cmd->add_option("--origin", sm.origin, "time origin");
    sim_cmd->add_option("-o,--out", sm.out_path, "dataset output ('-' for stdout)");
    sim_cmd->add_option("--truth", sm.truth_path, "latent-value sidecar output");
    sim_cmd->add_flag("--summary", sm.summary, "print descriptive statistics to stderr");
    sim_cmd->add_option("--workers", sm.workers, "worker threads");

    PredictArgs pr;
    CLI::App* predict_cmd = app.add_subcommand("predict", "predicted cumulative curves");
    add_input_options(predict_cmd, pr.fit.in);
    predict_cmd->add_option("--model", pr.fit.model, "model string");
    predict_cmd->add_option("--eq-type", pr.fit.eq_type, "logrank or gehan")
        ->check(CLI::IsMember({"logrank", "gehan"}));
    predict_cmd->add_option("--epsilon", pr.fit.epsilon, "frailty stabilization constant");
    predict_cmd->add_option("--newdata", pr.newdata_path, "covariate profiles CSV");
    predict_cmd->add_option("--frailty", pr.frailty, "frailty value (default: estimated mean)");
    predict_cmd->add_option("--csv", pr.csv_path, "curve CSV output");
    predict_cmd->add_option("--json", pr.json_path, "curve JSON output");
    predict_cmd->add_option("--svg", pr.svg_path, "curve SVG output");

    CombineArgs ca;
    CLI::App* combine_cmd = app.add_subcommand("combine-curves", "merge curve JSON files");
    combine_cmd->add_option("--curves", ca.curve_files, "curve JSON files")->required();
    combine_cmd->add_option("--legend-title", ca.legend_title, "legend title");
    combine_cmd->add_option("--legend-labels", ca.legend_labels, "comma-separated labels");
    combine_cmd->add_option("--svg", ca.svg_path, "SVG output path");
    combine_cmd->add_option("--json", ca.json_path, "curve JSON output path");
    combine_cmd->add_option("--csv", ca.csv_path, "curve CSV output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    fa.argv_line = join_argv(argc, argv);
    pr.fit.argv_line = fa.argv_line;

    try {
        if (validate_cmd->parsed()) return run_validate(va);
        if (summary_cmd->parsed()) return run_summary(sa);
        if (plot_cmd->parsed()) return run_plot_events(pa);
        if (mcf_cmd->parsed()) return run_mcf(ma);
        if (fit_cmd->parsed()) return run_fit(fa);
        if (sim_cmd->parsed()) return run_simulate(sm);
        if (predict_cmd->parsed()) return run_predict(pr);
        if (combine_cmd->parsed()) return run_combine(ca);
    } catch (const UsageError& e) {
        if (error_json)
            std::cerr << nlohmann::json({{"error", "usage"}, {"message", e.what()}}).dump() << "\n";
        else
            std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const ConvergenceError& e) {
        if (error_json)
            std::cerr << nlohmann::json({{"error", "convergence"}, {"message", e.what()}}).dump()
                      << "\n";
        else
            std::cerr << "convergence error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        if (error_json)
            std::cerr << nlohmann::json({{"error", "data"}, {"message", e.what()}}).dump() << "\n";
        else
            std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        if (error_json)
            std::cerr << nlohmann::json({{"error", "internal"}, {"message", e.what()}}).dump()
                      << "\n";
        else
            std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
