#ifndef RECUR_TEST_UTIL_HPP
#define RECUR_TEST_UTIL_HPP

#include <string>
#include <vector>

#include "recur/dataset.hpp"

namespace testutil {

inline recur::SubjectRecord make_subject(const std::string& id, const recur::Vec& events,
                                         double followup, bool terminal,
                                         const recur::Vec& covariates = {}) {
    recur::SubjectRecord s;
    s.id = id;
    s.covariates = covariates;
    double prev = 0.0;
    for (double t : events) {
        s.intervals.push_back(recur::Interval{prev, t, 1, false});
        prev = t;
    }
    s.intervals.push_back(recur::Interval{prev, followup, 0, terminal});
    return s;
}

// A: events {1,3}, Y=4, terminal; B: event {2}, Y=5; C: no events, Y=2.5.
inline recur::RecurrentDataset toy3(bool with_covariate = false) {
    recur::RecurrentDataset ds;
    const recur::Vec xa = with_covariate ? recur::Vec{0.0} : recur::Vec{};
    const recur::Vec xb = with_covariate ? recur::Vec{1.0} : recur::Vec{};
    const recur::Vec xc = with_covariate ? recur::Vec{0.0} : recur::Vec{};
    ds.subjects.push_back(make_subject("A", {1.0, 3.0}, 4.0, true, xa));
    ds.subjects.push_back(make_subject("B", {2.0}, 5.0, false, xb));
    ds.subjects.push_back(make_subject("C", {}, 2.5, false, xc));
    if (with_covariate) ds.covariate_names = {"x1"};
    ds.tau = 5.0;
    return ds;
}

inline recur::RecurrentDataset toy2(bool with_covariate = false) {
    recur::RecurrentDataset ds = toy3(with_covariate);
    ds.subjects.pop_back();
    return ds;
}

// Minimal XML well-formedness check: declarations, balanced tags, quoted
// attributes, escaped text.  Returns an empty string when the document is
// well formed, otherwise a description of the first problem.
std::string xml_check(const std::string& doc);

inline std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = hay.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

} // namespace testutil

#endif
