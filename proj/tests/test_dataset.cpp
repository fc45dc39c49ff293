#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "recur/dataset.hpp"
#include "recur/dataset_io.hpp"
#include "test_util.hpp"

using namespace recur;

namespace {

const char* kSimDatRows =
    "id,t.start,t.stop,event,status,x1,x2\n"
    "5,0.0000000,1.1695164,0,1,1,0.6570011\n"
    "7,0.0000000,0.4690579,1,0,0,-0.2149894\n"
    "7,0.4690579,0.8320469,0,1,0,-0.2149894\n"
    "12,0.0000000,3.2220999,1,0,1,-0.2862713\n"
    "12,3.2220999,13.5607302,1,0,1,-0.2862713\n"
    "12,13.5607302,60.0000000,0,0,1,-0.2862713\n";

} // namespace

TEST_CASE("parse the interval layout") {
    std::istringstream in(kSimDatRows);
    auto [ds, report] = parse_dataset(in);
    CHECK(report.findings.empty());
    REQUIRE(ds.n() == 3);
    CHECK(ds.covariate_names == std::vector<std::string>{"x1", "x2"});

    const SubjectRecord& s5 = ds.subjects[0];
    CHECK(s5.id == "5");
    CHECK(s5.event_count() == 0);
    CHECK(s5.terminal());
    CHECK(s5.follow_up() == doctest::Approx(1.1695164).epsilon(1e-12));

    const SubjectRecord& s7 = ds.subjects[1];
    CHECK(s7.event_count() == 1);
    CHECK(s7.event_times()[0] == doctest::Approx(0.4690579).epsilon(1e-12));
    CHECK(s7.terminal());
    CHECK(s7.follow_up() == doctest::Approx(0.8320469).epsilon(1e-12));

    const SubjectRecord& s12 = ds.subjects[2];
    CHECK(s12.event_count() == 2);
    CHECK(s12.event_times()[0] == doctest::Approx(3.2220999).epsilon(1e-12));
    CHECK(s12.event_times()[1] == doctest::Approx(13.5607302).epsilon(1e-12));
    CHECK_FALSE(s12.terminal());
    CHECK(s12.follow_up() == 60.0);
}

TEST_CASE("empty stream gives an empty dataset with no findings") {
    std::istringstream in("");
    auto [ds, report] = parse_dataset(in);
    CHECK(ds.n() == 0);
    CHECK(report.findings.empty());
}

TEST_CASE("non-contiguous intervals fail hard validation") {
    std::istringstream in(
        "id,t.start,t.stop,event,status\n"
        "a,0,2,1,0\n"
        "a,1,3,0,0\n");
    CHECK_THROWS_WITH_AS(parse_dataset(in), doctest::Contains("non-contiguous"), DataError);
}

TEST_CASE("single stop column chains intervals per subject") {
    std::istringstream in(
        "id,t.stop,event,status\n"
        "a,2,1,0\n"
        "a,5,0,1\n"
        "b,3,0,0\n");
    auto [ds, report] = parse_dataset(in);
    REQUIRE(ds.n() == 2);
    CHECK(ds.subjects[0].intervals[0].start == 0.0);
    CHECK(ds.subjects[0].intervals[1].start == 2.0);
    CHECK(ds.subjects[0].follow_up() == 5.0);
    CHECK(ds.subjects[0].terminal());
    CHECK(ds.subjects[1].follow_up() == 3.0);
}

TEST_CASE("ISO dates convert to fractional days with per-subject origins") {
    std::istringstream in(
        "id,t.start,t.stop,event,status\n"
        "a,2020-01-05,2020-01-08,1,0\n"
        "a,2020-01-08,2020-01-20,0,1\n"
        "b,2020-01-01,2020-01-11,0,0\n");
    auto [ds, report] = parse_dataset(in);
    REQUIRE(ds.n() == 2);
    CHECK(ds.calendar_anchor.has_value());
    // subject a starts 4 days after the file minimum
    CHECK(ds.subjects[0].origin == 4.0);
    CHECK(ds.subjects[0].follow_up() == 15.0);
    CHECK(ds.subjects[0].event_times()[0] == 3.0);
    CHECK(ds.subjects[1].origin == 0.0);
    CHECK(ds.subjects[1].follow_up() == 10.0);
}

TEST_CASE("unknown schema column and bad covariates are rejected") {
    {
        std::istringstream in("id,t.start,t.stop,event,status\na,0,1,0,0\n");
        ColumnSchema schema;
        schema.stop = "finish";
        CHECK_THROWS_AS(parse_dataset(in, schema), DataError);
    }
    {
        std::istringstream in("id,t.start,t.stop,event,status,grp\na,0,1,0,0,high\n");
        CHECK_THROWS_WITH_AS(parse_dataset(in), doctest::Contains("non-numeric covariate"),
                             DataError);
    }
    {
        std::istringstream in("id,t.start,t.stop,event,status,x\na,0,1,0,0,\n");
        CHECK_THROWS_AS(parse_dataset(in), DataError);
    }
}

TEST_CASE("validate: toy3 is clean in hard mode") {
    auto [ds, report] = validate(testutil::toy3(), CheckMode::hard);
    CHECK(report.findings.empty());
    CHECK_FALSE(report.has_errors());
}

TEST_CASE("validate: soft mode repairs order, duplicates, terminal flags") {
    RecurrentDataset ds = testutil::toy3();
    // shuffle subject A's intervals and duplicate one
    std::swap(ds.subjects[0].intervals[0], ds.subjects[0].intervals[1]);
    ds.subjects[0].intervals.push_back(ds.subjects[0].intervals[1]);  // dup of (0,1]
    auto [fixed, report] = validate(ds, CheckMode::soft);
    CHECK_FALSE(report.has_errors());
    bool saw_order = false, saw_dup = false;
    for (const auto& f : report.findings) {
        if (f.rule == "order") saw_order = true;
        if (f.rule == "duplicate") saw_dup = true;
    }
    CHECK(saw_order);
    CHECK(saw_dup);
    auto [refixed, recheck] = validate(fixed, CheckMode::hard);
    CHECK_FALSE(recheck.has_errors());

    // terminal flag on a non-final censoring interval relocates
    RecurrentDataset ds2 = testutil::toy3();
    ds2.subjects[1].intervals.front().terminal_mark = true;
    ds2.subjects[1].intervals.front().event_type = 0;
    auto [fixed2, report2] = validate(ds2, CheckMode::soft);
    bool saw_move = false;
    for (const auto& f : report2.findings)
        if (f.rule == "terminal_position" && f.action == "repaired") saw_move = true;
    CHECK(saw_move);
    CHECK(fixed2.subjects[1].terminal());
}

TEST_CASE("validate: hard mode flags rule violations") {
    RecurrentDataset ds = testutil::toy3();
    ds.subjects[1].intervals.front().terminal_mark = true;  // non-final interval
    auto [checked, report] = validate(ds, CheckMode::hard);
    CHECK(report.has_errors());
    bool found = false;
    for (const auto& f : report.findings)
        if (f.rule == "terminal_position" && f.is_error) found = true;
    CHECK(found);

    RecurrentDataset zl = testutil::toy3();
    zl.subjects[0].intervals[0].stop = 0.0;  // zero-length interval
    zl.subjects[0].intervals[0].start = 0.0;
    auto [checked2, report2] = validate(zl, CheckMode::hard);
    CHECK(report2.has_errors());

    auto [checked3, report3] = validate(zl, CheckMode::none);
    CHECK(report3.findings.empty());
}

TEST_CASE("summarize toy3 by hand") {
    const DatasetSummary s = summarize(testutil::toy3());
    CHECK(s.n == 3);
    CHECK(s.total_events == 3);
    CHECK(s.mean_events_per_subject == doctest::Approx(1.0));
    CHECK(s.terminal_proportion == doctest::Approx(1.0 / 3.0));
    CHECK(*s.median_followup == doctest::Approx(4.0));
    CHECK(*s.median_time_to_terminal == doctest::Approx(4.0));
}

TEST_CASE("summarize empty dataset") {
    const DatasetSummary s = summarize(RecurrentDataset{});
    CHECK(s.n == 0);
    CHECK(s.total_events == 0);
    CHECK(s.mean_events_per_subject == 0.0);
    CHECK_FALSE(s.median_followup.has_value());
    CHECK_FALSE(s.median_time_to_terminal.has_value());
}

TEST_CASE("summarize is invariant under subject permutation") {
    RecurrentDataset ds = testutil::toy3();
    RecurrentDataset perm = ds;
    std::swap(perm.subjects[0], perm.subjects[2]);
    const DatasetSummary a = summarize(ds);
    const DatasetSummary b = summarize(perm);
    CHECK(a.total_events == b.total_events);
    CHECK(a.mean_events_per_subject == b.mean_events_per_subject);
    CHECK(*a.median_followup == *b.median_followup);
}

TEST_CASE("resample_clusters: determinism, closure, synthetic ids") {
    const RecurrentDataset ds = testutil::toy3();
    const RecurrentDataset a = resample_clusters(ds, 42);
    const RecurrentDataset b = resample_clusters(ds, 42);
    REQUIRE(a.n() == 3);
    for (std::size_t i = 0; i < a.n(); ++i) CHECK(a.subjects[i].id == b.subjects[i].id);

    // every draw is a copy of some input subject (modulo id)
    for (const auto& s : a.subjects) {
        bool matched = false;
        for (const auto& orig : ds.subjects) {
            if (s.intervals.size() != orig.intervals.size()) continue;
            bool same = true;
            for (std::size_t k = 0; k < s.intervals.size(); ++k)
                same = same && s.intervals[k].start == orig.intervals[k].start &&
                       s.intervals[k].stop == orig.intervals[k].stop;
            matched = matched || same;
        }
        CHECK(matched);
    }

    // ids stay unique across many seeds
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const RecurrentDataset r = resample_clusters(ds, seed);
        std::set<std::string> ids;
        for (const auto& s : r.subjects) CHECK(ids.insert(s.id).second);
    }

    RecurrentDataset single;
    single.subjects.push_back(testutil::make_subject("only", {1.0}, 2.0, false));
    single.tau = 2.0;
    const RecurrentDataset r1 = resample_clusters(single, 7);
    REQUIRE(r1.n() == 1);
    CHECK(r1.subjects[0].intervals.size() == 2);

    CHECK_THROWS_AS(resample_clusters(RecurrentDataset{}, 1), DataError);
}

TEST_CASE("stratify partitions by covariate level") {
    const RecurrentDataset ds = testutil::toy3(true);  // x1 = (0,1,0)
    auto parts = stratify(ds, "x1");
    REQUIRE(parts.size() == 2);
    CHECK(parts.at(0.0).n() == 2);
    CHECK(parts.at(1.0).n() == 1);

    std::size_t total = 0;
    for (const auto& [level, part] : parts) total += part.n();
    CHECK(total == ds.n());

    CHECK_THROWS_AS(stratify(ds, "nope"), DataError);
    CHECK_THROWS_AS(stratify(ds, "x1", 1), DataError);

    // constant covariate: identity partition
    RecurrentDataset cds = testutil::toy3(true);
    for (auto& s : cds.subjects) s.covariates[0] = 5.0;
    auto one = stratify(cds, "x1");
    REQUIRE(one.size() == 1);
    CHECK(one.at(5.0).n() == 3);
}

TEST_CASE("write/parse round trip preserves the dataset") {
    std::istringstream in(kSimDatRows);
    auto [ds, report] = parse_dataset(in);
    std::ostringstream out;
    write_dataset(out, ds);
    std::istringstream back(out.str());
    auto [ds2, report2] = parse_dataset(back);
    REQUIRE(ds2.n() == ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const auto& a = ds.subjects[i];
        const auto& b = ds2.subjects[i];
        CHECK(a.id == b.id);
        REQUIRE(a.intervals.size() == b.intervals.size());
        for (std::size_t k = 0; k < a.intervals.size(); ++k) {
            CHECK(std::fabs(a.intervals[k].start - b.intervals[k].start) <= 1e-12);
            CHECK(std::fabs(a.intervals[k].stop - b.intervals[k].stop) <= 1e-12);
            CHECK(a.intervals[k].event_type == b.intervals[k].event_type);
            CHECK(a.intervals[k].terminal_mark == b.intervals[k].terminal_mark);
        }
        REQUIRE(a.covariates.size() == b.covariates.size());
        for (std::size_t k = 0; k < a.covariates.size(); ++k)
            CHECK(std::fabs(a.covariates[k] - b.covariates[k]) <= 1e-12);
    }
}

TEST_CASE("interval lengths telescope to the follow-up") {
    const RecurrentDataset ds = testutil::toy3();
    for (const auto& s : ds.subjects) {
        for (std::size_t k = 0; k + 1 < s.intervals.size(); ++k)
            CHECK(s.intervals[k].stop == s.intervals[k + 1].start);
        CHECK(s.intervals.front().start == s.origin);
        CHECK(s.intervals.back().stop - s.origin == s.follow_up());
    }
}

TEST_CASE("validation report serializes to text and JSON") {
    RecurrentDataset ds = testutil::toy3();
    ds.subjects[0].intervals[0].terminal_mark = true;
    auto [checked, report] = validate(ds, CheckMode::hard);
    const std::string text = report.to_text();
    CHECK(text.find("terminal") != std::string::npos);
    const std::string json = report_to_json(report);
    CHECK(json.find("\"rule\"") != std::string::npos);
    CHECK(json.find("terminal_position") != std::string::npos);
}

TEST_CASE("duplicate header names and mixed time kinds are rejected") {
    {
        std::istringstream in("id,id,t.stop,event,status\n1,1,1,1,0\n");
        CHECK_THROWS_WITH_AS(parse_dataset(in), doctest::Contains("duplicate column"), DataError);
    }
    {
        std::istringstream in(
            "id,t.start,t.stop,event,status\n"
            "1,2020-01-01,5.0,1,0\n");
        CHECK_THROWS_WITH_AS(parse_dataset(in), doctest::Contains("cannot parse"), DataError);
    }
    {
        std::istringstream in(
            "id,t.start,t.stop,event,status\n"
            "1,0,1,1,0\n"
            "1,1,2020-01-05,0,1\n");
        CHECK_THROWS_AS(parse_dataset(in), DataError);
    }
}
