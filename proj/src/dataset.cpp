#include "recur/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "recur/rng.hpp"
#include "recur/stats.hpp"

namespace recur {

int SubjectRecord::event_count() const {
    int m = 0;
    for (const auto& iv : intervals)
        if (iv.event_type >= 1) ++m;
    return m;
}

Vec SubjectRecord::event_times() const {
    Vec t;
    for (const auto& iv : intervals)
        if (iv.event_type >= 1) t.push_back(iv.stop - origin);
    std::sort(t.begin(), t.end());
    return t;
}

double RecurrentDataset::max_follow_up() const {
    double m = 0.0;
    for (const auto& s : subjects) m = std::max(m, s.follow_up());
    return m;
}

CheckMode parse_check_mode(const std::string& name) {
    if (name == "hard") return CheckMode::hard;
    if (name == "soft") return CheckMode::soft;
    if (name == "none") return CheckMode::none;
    throw DataError("unknown check mode: " + name);
}

std::string check_mode_name(CheckMode mode) {
    switch (mode) {
        case CheckMode::hard: return "hard";
        case CheckMode::soft: return "soft";
        default: return "none";
    }
}

bool ValidationReport::has_errors() const {
    for (const auto& f : findings)
        if (f.is_error) return true;
    return false;
}

std::string ValidationReport::to_text() const {
    std::string out = "check mode: " + check_mode_name(mode) + "\n";
    if (findings.empty()) {
        out += "no findings\n";
        return out;
    }
    for (const auto& f : findings) {
        out += (f.is_error ? "error" : "note");
        out += " [" + f.rule + "] subject " + f.subject_id + ": " + f.message;
        if (!f.action.empty()) out += " (" + f.action + ")";
        out += "\n";
    }
    return out;
}

namespace {

void add_finding(ValidationReport& report, const std::string& id, const std::string& rule,
                 const std::string& message, const std::string& action, bool is_error) {
    report.findings.push_back(Finding{id, rule, message, action, is_error});
}

void check_subject(const SubjectRecord& s, std::size_t p, ValidationReport& report,
                   bool reject_action) {
    const std::string action = reject_action ? "rejected" : "";
    if (s.intervals.empty()) {
        add_finding(report, s.id, "empty", "subject has no intervals", action, true);
        return;
    }
    if (s.covariates.size() != p)
        add_finding(report, s.id, "covariate_dim", "covariate vector has wrong length", action, true);
    for (std::size_t k = 0; k < s.intervals.size(); ++k) {
        const Interval& iv = s.intervals[k];
        const bool final_row = (k + 1 == s.intervals.size());
        if (!(iv.start < iv.stop))
            add_finding(report, s.id, "interval_length",
                        "interval has start >= stop (zero-length intervals are invalid)", action, true);
        if (!final_row && s.intervals[k + 1].start != iv.stop)
            add_finding(report, s.id, "contiguity", "non-contiguous intervals", action, true);
        if (!final_row && iv.event_type == 0)
            add_finding(report, s.id, "midstream_censoring",
                        "non-final interval carries no recurrent event", action, true);
        if (!final_row && iv.terminal_mark)
            add_finding(report, s.id, "terminal_position",
                        "terminal event marked on a non-final interval", action, true);
        if (iv.event_type >= 1 && iv.terminal_mark)
            add_finding(report, s.id, "event_terminal_conflict",
                        "recurrent event and terminal event marked on the same record", action, true);
        if (iv.event_type < 0)
            add_finding(report, s.id, "event_type", "negative event type", action, true);
    }
    if (!(s.follow_up() > 0.0))
        add_finding(report, s.id, "followup", "follow-up time is not positive", action, true);
}

} // namespace

std::pair<RecurrentDataset, ValidationReport> validate(RecurrentDataset dataset, CheckMode mode) {
    ValidationReport report;
    report.mode = mode;
    if (mode == CheckMode::none) return {std::move(dataset), report};

    if (mode == CheckMode::soft) {
        for (auto& s : dataset.subjects) {
            bool sorted = std::is_sorted(s.intervals.begin(), s.intervals.end(),
                                         [](const Interval& a, const Interval& b) {
                                             return a.start < b.start;
                                         });
            if (!sorted) {
                std::stable_sort(s.intervals.begin(), s.intervals.end(),
                                 [](const Interval& a, const Interval& b) {
                                     return a.start < b.start;
                                 });
                add_finding(report, s.id, "order", "intervals were out of order", "repaired", false);
            }
            auto dup = [](const Interval& a, const Interval& b) {
                return a.start == b.start && a.stop == b.stop && a.event_type == b.event_type;
            };
            auto last = std::unique(s.intervals.begin(), s.intervals.end(), dup);
            if (last != s.intervals.end()) {
                s.intervals.erase(last, s.intervals.end());
                add_finding(report, s.id, "duplicate", "duplicate dropped", "repaired", false);
            }
            for (std::size_t k = 0; k + 1 < s.intervals.size(); ++k) {
                if (s.intervals[k].terminal_mark && s.intervals[k].event_type == 0) {
                    s.intervals[k].terminal_mark = false;
                    s.intervals.back().terminal_mark = true;
                    add_finding(report, s.id, "terminal_position",
                                "terminal flag moved to the final interval", "repaired", false);
                }
            }
        }
    }

    std::set<std::string> seen;
    for (const auto& s : dataset.subjects) {
        if (!seen.insert(s.id).second)
            add_finding(report, s.id, "duplicate_id", "subject id is not unique", "", true);
        check_subject(s, dataset.covariate_dim(), report, mode == CheckMode::hard);
    }
    if (dataset.n() > 0 && dataset.tau < dataset.max_follow_up())
        add_finding(report, "-", "tau", "tau is below the longest follow-up", "", true);

    return {std::move(dataset), report};
}

DatasetSummary summarize(const RecurrentDataset& dataset) {
    DatasetSummary s;
    s.n = dataset.n();
    if (s.n == 0) return s;
    Vec followups;
    Vec terminal_times;
    std::size_t events = 0;
    std::size_t terminals = 0;
    for (const auto& subj : dataset.subjects) {
        events += static_cast<std::size_t>(subj.event_count());
        followups.push_back(subj.follow_up());
        if (subj.terminal()) {
            ++terminals;
            terminal_times.push_back(subj.follow_up());
        }
    }
    s.total_events = events;
    s.mean_events_per_subject = static_cast<double>(events) / static_cast<double>(s.n);
    s.terminal_proportion = static_cast<double>(terminals) / static_cast<double>(s.n);
    s.median_followup = median(followups);
    if (!terminal_times.empty()) s.median_time_to_terminal = median(terminal_times);
    return s;
}

std::string DatasetSummary::to_text() const {
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof buf, "Sample size:                                  %zu\n", n);
    out += buf;
    std::snprintf(buf, sizeof buf, "Number of recurrent event observed:           %zu\n", total_events);
    out += buf;
    std::snprintf(buf, sizeof buf, "Average number of recurrent event per subject: %g\n",
                  mean_events_per_subject);
    out += buf;
    std::snprintf(buf, sizeof buf, "Proportion of subjects with a terminal event:  %g\n",
                  terminal_proportion);
    out += buf;
    if (median_followup) {
        std::snprintf(buf, sizeof buf, "Median follow-up time:                        %g\n",
                      *median_followup);
        out += buf;
    }
    if (median_time_to_terminal) {
        std::snprintf(buf, sizeof buf, "Median time-to-terminal event:                %g\n",
                      *median_time_to_terminal);
        out += buf;
    }
    return out;
}

RecurrentDataset resample_clusters(const RecurrentDataset& dataset, std::uint64_t seed) {
    const std::size_t n = dataset.n();
    if (n == 0) throw DataError("resample_clusters: empty dataset");
    Rng rng(seed);
    RecurrentDataset out;
    out.covariate_names = dataset.covariate_names;
    out.tau = dataset.tau;
    out.calendar_anchor = dataset.calendar_anchor;
    out.subjects.reserve(n);
    std::map<std::string, int> picked;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = static_cast<std::size_t>(rng.next_below(n));
        SubjectRecord s = dataset.subjects[idx];
        const int dup = picked[s.id]++;
        if (dup > 0) s.id += "+" + std::to_string(dup);
        out.subjects.push_back(std::move(s));
    }
    return out;
}

std::size_t covariate_index(const RecurrentDataset& dataset, const std::string& name) {
    for (std::size_t j = 0; j < dataset.covariate_names.size(); ++j)
        if (dataset.covariate_names[j] == name) return j;
    throw DataError("unknown covariate: " + name);
}

std::map<double, RecurrentDataset> stratify(const RecurrentDataset& dataset,
                                            const std::string& covariate,
                                            std::size_t level_cap) {
    const std::size_t j = covariate_index(dataset, covariate);
    std::map<double, RecurrentDataset> parts;
    for (const auto& s : dataset.subjects) {
        const double level = s.covariates[j];
        auto it = parts.find(level);
        if (it == parts.end()) {
            if (parts.size() >= level_cap)
                throw DataError("stratify: more than " + std::to_string(level_cap) +
                                " distinct levels of " + covariate);
            RecurrentDataset part;
            part.covariate_names = dataset.covariate_names;
            part.tau = dataset.tau;
            part.calendar_anchor = dataset.calendar_anchor;
            it = parts.emplace(level, std::move(part)).first;
        }
        it->second.subjects.push_back(s);
    }
    return parts;
}

std::size_t FlatData::total_terminal() const {
    std::size_t t = 0;
    for (int d : delta) t += static_cast<std::size_t>(d);
    return t;
}

FlatData flatten(const RecurrentDataset& dataset) {
    FlatData f;
    f.n = dataset.n();
    f.p = dataset.covariate_dim();
    f.tau = dataset.tau;
    f.y.resize(f.n);
    f.delta.resize(f.n);
    f.m.resize(f.n);
    f.x = Matrix(f.n, f.p);
    for (std::size_t i = 0; i < f.n; ++i) {
        const SubjectRecord& s = dataset.subjects[i];
        f.y[i] = s.follow_up();
        f.delta[i] = s.terminal() ? 1 : 0;
        const Vec times = s.event_times();
        f.m[i] = static_cast<int>(times.size());
        for (double t : times) f.events.push_back(FlatData::Event{i, t});
        for (std::size_t j = 0; j < f.p; ++j) f.x(i, j) = s.covariates[j];
    }
    return f;
}

} // namespace recur
