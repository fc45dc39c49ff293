#include "recur/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "recur/dates.hpp"

namespace recur {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\r' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\r' || s[b - 1] == '\t')) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == delim) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    for (auto& f : out) f = trim(f);
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

// ISO-8601 date, optionally with a time part; returns serial days.
bool parse_date(const std::string& s, double& out) {
    int y, m, d;
    int consumed = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%d%n", &y, &m, &d, &consumed) != 3) return false;
    if (m < 1 || m > 12 || d < 1 || d > 31) return false;
    double frac = 0.0;
    std::string rest = s.substr(static_cast<std::size_t>(consumed));
    if (!rest.empty()) {
        if (rest[0] != 'T' && rest[0] != ' ') return false;
        int hh = 0, mm = 0;
        double ss = 0.0;
        const int got = std::sscanf(rest.c_str() + 1, "%d:%d:%lf", &hh, &mm, &ss);
        if (got < 2) return false;
        frac = (hh * 3600.0 + mm * 60.0 + ss) / 86400.0;
    }
    out = static_cast<double>(days_from_civil(y, m, d)) + frac;
    return true;
}

struct RawRow {
    double start = 0.0;
    double stop = 0.0;
    bool has_start = false;
    int event = 0;
    bool status = false;
    Vec covariates;
};

int parse_int_field(const std::string& s, const std::string& what, std::size_t line_no) {
    double v;
    if (!parse_double(s, v) || std::floor(v) != v)
        throw DataError("line " + std::to_string(line_no) + ": " + what +
                        " must be an integer, got '" + s + "'");
    return static_cast<int>(v);
}

} // namespace

ParseResult parse_dataset(std::istream& in, const ColumnSchema& schema, CheckMode mode) {
    std::string header;
    if (!std::getline(in, header) || trim(header).empty()) {
        // vacuous input: empty dataset, empty report
        ParseResult r;
        r.report.mode = mode;
        return r;
    }
    char delim = schema.delimiter;
    if (delim == 0) delim = header.find('\t') != std::string::npos ? '\t' : ',';
    const std::vector<std::string> cols = split(header, delim);
    for (std::size_t a = 0; a < cols.size(); ++a)
        for (std::size_t b = a + 1; b < cols.size(); ++b)
            if (cols[a] == cols[b] && !cols[a].empty())
                throw DataError("duplicate column name in header: " + cols[a]);

    auto find_col = [&](const std::string& name) -> int {
        for (std::size_t j = 0; j < cols.size(); ++j)
            if (cols[j] == name) return static_cast<int>(j);
        return -1;
    };

    const int id_col = find_col(schema.id);
    const int stop_col = find_col(schema.stop);
    const int event_col = find_col(schema.event);
    const int status_col = find_col(schema.status);
    int start_col = schema.start.empty() ? -1 : find_col(schema.start);

    if (id_col < 0) throw DataError("schema column not found: " + schema.id);
    if (stop_col < 0) throw DataError("schema column not found: " + schema.stop);
    if (event_col < 0) throw DataError("schema column not found: " + schema.event);
    if (status_col < 0) throw DataError("schema column not found: " + schema.status);
    // A named non-default start column must exist; the default may be absent,
    // which selects single-stop mode with chained intervals.
    if (start_col < 0 && !schema.start.empty() && schema.start != ColumnSchema().start)
        throw DataError("schema column not found: " + schema.start);
    const bool single_stop = start_col < 0;

    std::vector<int> covariate_cols;
    std::vector<std::string> covariate_names;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const int jj = static_cast<int>(j);
        if (jj == id_col || jj == stop_col || jj == event_col || jj == status_col || jj == start_col)
            continue;
        if (cols[j].empty()) throw DataError("empty column name in header");
        covariate_cols.push_back(jj);
        covariate_names.push_back(cols[j]);
    }

    // rows grouped by id in order of first appearance
    std::vector<std::string> id_order;
    std::map<std::string, std::vector<RawRow>> rows_by_id;
    std::map<std::string, Vec> cov_by_id;

    enum class TimeMode { undetermined, numeric, dates };
    TimeMode time_mode = TimeMode::undetermined;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split(line, delim);
        if (fields.size() != cols.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(cols.size()) + " fields, got " +
                            std::to_string(fields.size()));
        RawRow row;
        const std::string id = fields[static_cast<std::size_t>(id_col)];
        if (id.empty()) throw DataError("line " + std::to_string(line_no) + ": empty id");

        // the first time field fixes numeric vs date for the whole file
        auto read_time = [&](const std::string& s, const char* what) -> double {
            double v;
            if (time_mode == TimeMode::undetermined) {
                if (parse_double(s, v)) {
                    time_mode = TimeMode::numeric;
                    return v;
                }
                if (parse_date(s, v)) {
                    time_mode = TimeMode::dates;
                    return v;
                }
            } else if (time_mode == TimeMode::dates ? parse_date(s, v) : parse_double(s, v)) {
                return v;
            }
            throw DataError("line " + std::to_string(line_no) + ": cannot parse " +
                            std::string(what) + " '" + s + "'" +
                            (time_mode == TimeMode::dates
                                 ? " (file uses ISO-8601 dates)"
                                 : time_mode == TimeMode::numeric ? " (file uses numeric times)"
                                                                  : ""));
        };

        if (!single_stop) {
            row.start = read_time(fields[static_cast<std::size_t>(start_col)], "start time");
            row.has_start = true;
        }
        row.stop = read_time(fields[static_cast<std::size_t>(stop_col)], "stop time");
        if (single_stop && time_mode == TimeMode::dates)
            throw DataError("single stop column with date times is not supported; "
                            "provide interval endpoints");
        row.event = parse_int_field(fields[static_cast<std::size_t>(event_col)], "event", line_no);
        if (row.event < 0)
            throw DataError("line " + std::to_string(line_no) + ": negative event type");
        const int st = parse_int_field(fields[static_cast<std::size_t>(status_col)], "status", line_no);
        if (st != 0 && st != 1)
            throw DataError("line " + std::to_string(line_no) + ": status must be 0 or 1");
        row.status = st == 1;

        for (std::size_t k = 0; k < covariate_cols.size(); ++k) {
            double v;
            const std::string& cell = fields[static_cast<std::size_t>(covariate_cols[k])];
            if (!parse_double(cell, v) || !std::isfinite(v))
                throw DataError("line " + std::to_string(line_no) + ": non-numeric covariate " +
                                covariate_names[k] + " = '" + cell + "'");
            row.covariates.push_back(v);
        }

        auto it = rows_by_id.find(id);
        if (it == rows_by_id.end()) {
            id_order.push_back(id);
            cov_by_id[id] = row.covariates;
            it = rows_by_id.emplace(id, std::vector<RawRow>{}).first;
        } else {
            // covariates are per subject; diverging rows are a data error
            const Vec& seen = cov_by_id[id];
            for (std::size_t k = 0; k < seen.size(); ++k)
                if (seen[k] != row.covariates[k])
                    throw DataError("line " + std::to_string(line_no) + ": covariate " +
                                    covariate_names[k] + " differs across rows of subject " + id);
        }
        it->second.push_back(std::move(row));
    }

    RecurrentDataset dataset;
    dataset.covariate_names = covariate_names;

    double anchor = 0.0;
    const bool date_mode = time_mode == TimeMode::dates;
    if (date_mode) {
        anchor = std::numeric_limits<double>::infinity();
        for (const auto& [id, rows] : rows_by_id)
            for (const auto& r : rows) anchor = std::min(anchor, std::min(r.start, r.stop));
        dataset.calendar_anchor = anchor;
    }

    for (const std::string& id : id_order) {
        std::vector<RawRow>& rows = rows_by_id[id];
        SubjectRecord subj;
        subj.id = id;
        subj.covariates = cov_by_id[id];
        if (single_stop) {
            std::stable_sort(rows.begin(), rows.end(),
                             [](const RawRow& a, const RawRow& b) { return a.stop < b.stop; });
            double prev = 0.0;
            for (auto& r : rows) {
                r.start = prev;
                prev = r.stop;
            }
        }
        double origin = std::numeric_limits<double>::infinity();
        for (auto& r : rows) {
            const bool date_mode = time_mode == TimeMode::dates;
    if (date_mode) {
                r.start -= anchor;
                r.stop -= anchor;
            }
            origin = std::min(origin, r.start);
        }
        subj.origin = origin;
        for (const auto& r : rows)
            subj.intervals.push_back(Interval{r.start, r.stop, r.event, r.status});
        dataset.subjects.push_back(std::move(subj));
    }
    dataset.tau = dataset.max_follow_up();

    auto [checked, report] = validate(std::move(dataset), mode);
    if (mode == CheckMode::hard && report.has_errors())
        throw DataError("validation failed:\n" + report.to_text());
    return ParseResult{std::move(checked), std::move(report)};
}

ParseResult parse_dataset_file(const std::string& path, const ColumnSchema& schema, CheckMode mode) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return parse_dataset(in, schema, mode);
}

void write_dataset(std::ostream& out, const RecurrentDataset& dataset, char delimiter) {
    const char d = delimiter;
    out << "id" << d << "t.start" << d << "t.stop" << d << "event" << d << "status";
    for (const auto& name : dataset.covariate_names) out << d << name;
    out << "\n";
    char buf[40];
    auto num = [&](double v) -> const char* {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    };
    for (const auto& s : dataset.subjects) {
        for (const auto& iv : s.intervals) {
            out << s.id << d << num(iv.start) << d << num(iv.stop) << d << iv.event_type << d
                << (iv.terminal_mark ? 1 : 0);
            for (double c : s.covariates) out << d << num(c);
            out << "\n";
        }
    }
}

void write_dataset_file(const std::string& path, const RecurrentDataset& dataset, char delimiter) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    write_dataset(out, dataset, delimiter);
}

std::string report_to_json(const ValidationReport& report) {
    nlohmann::json j;
    j["mode"] = check_mode_name(report.mode);
    j["findings"] = nlohmann::json::array();
    for (const auto& f : report.findings) {
        j["findings"].push_back({{"subject", f.subject_id},
                                 {"rule", f.rule},
                                 {"message", f.message},
                                 {"action", f.action},
                                 {"error", f.is_error}});
    }
    return j.dump(2);
}

} // namespace recur
