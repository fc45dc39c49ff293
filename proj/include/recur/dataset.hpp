#ifndef RECUR_DATASET_HPP
#define RECUR_DATASET_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "recur/common.hpp"
#include "recur/linalg.hpp"

namespace recur {

// One observation interval (start, stop], open on the left and closed on
// the right.  event_type 0 means nothing happened at stop; k >= 1 marks a
// recurrent event of type k.  terminal_mark mirrors the status column and
// may legitimately be set only on a subject's final interval.
struct Interval {
    double start = 0.0;
    double stop = 0.0;
    int event_type = 0;
    bool terminal_mark = false;
};

struct SubjectRecord {
    std::string id;
    double origin = 0.0;                // file-time coordinate of person-time zero
    std::vector<Interval> intervals;    // file-time coordinates, contiguous
    Vec covariates;

    bool terminal() const { return !intervals.empty() && intervals.back().terminal_mark; }
    double follow_up() const { return intervals.empty() ? 0.0 : intervals.back().stop - origin; }
    int event_count() const;
    Vec event_times() const;            // person time, sorted
};

struct RecurrentDataset {
    std::vector<SubjectRecord> subjects;
    std::vector<std::string> covariate_names;
    double tau = 0.0;                   // maximum follow-up window
    // Serial day (days since 1970-01-01) of file time zero when the source
    // carried calendar dates; used only by calendar-axis plots.
    std::optional<double> calendar_anchor;

    std::size_t n() const { return subjects.size(); }
    std::size_t covariate_dim() const { return covariate_names.size(); }
    double max_follow_up() const;
};

enum class CheckMode { hard, soft, none };

CheckMode parse_check_mode(const std::string& name);
std::string check_mode_name(CheckMode mode);

struct Finding {
    std::string subject_id;
    std::string rule;
    std::string message;
    std::string action;   // "rejected", "repaired", "warning"
    bool is_error = false;
};

struct ValidationReport {
    CheckMode mode = CheckMode::hard;
    std::vector<Finding> findings;

    bool has_errors() const;
    std::string to_text() const;
};

struct DatasetSummary {
    std::size_t n = 0;
    std::size_t total_events = 0;
    double mean_events_per_subject = 0.0;
    double terminal_proportion = 0.0;
    std::optional<double> median_followup;
    std::optional<double> median_time_to_terminal;

    std::string to_text() const;
};

// Checks (and in soft mode repairs) a dataset.  Soft repairs are limited to
// interval ordering, dropping exact duplicate rows, and relocating a
// misplaced terminal flag to the final interval; everything else stays an
// error finding in every mode.
std::pair<RecurrentDataset, ValidationReport> validate(RecurrentDataset dataset, CheckMode mode);

DatasetSummary summarize(const RecurrentDataset& dataset);

// Cluster bootstrap draw: n subjects iid uniform with replacement;
// duplicated subjects get distinct synthetic ids.
RecurrentDataset resample_clusters(const RecurrentDataset& dataset, std::uint64_t seed);

// Partition by the distinct values of one covariate (at most level_cap of
// them).  Keys are the covariate values.
std::map<double, RecurrentDataset> stratify(const RecurrentDataset& dataset,
                                            const std::string& covariate,
                                            std::size_t level_cap = 20);

std::size_t covariate_index(const RecurrentDataset& dataset, const std::string& name);

// Person-time view consumed by every estimator.  Multi-type events are
// collapsed to "any recurrent event"; plots keep the types.
struct FlatData {
    std::size_t n = 0;
    std::size_t p = 0;
    Vec y;                      // follow-up times
    std::vector<int> delta;     // terminal indicators
    std::vector<int> m;         // recurrent event counts
    Matrix x;                   // n x p covariates
    struct Event {
        std::size_t subject;
        double time;            // person time
    };
    std::vector<Event> events;
    double tau = 0.0;

    std::size_t total_events() const { return events.size(); }
    std::size_t total_terminal() const;
};

FlatData flatten(const RecurrentDataset& dataset);

} // namespace recur

#endif
