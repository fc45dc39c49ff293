#ifndef RECUR_DATASET_IO_HPP
#define RECUR_DATASET_IO_HPP

#include <iosfwd>
#include <string>

#include "recur/dataset.hpp"

namespace recur {

// Column names in the input; defaults match the common layout
// (id, t.start, t.stop, event, status).  Leave `start` empty, or keep the
// default when the file has no such column, to chain intervals from a
// single stop column.  delimiter 0 means auto-detect (tab if present in
// the header, comma otherwise).
struct ColumnSchema {
    std::string id = "id";
    std::string start = "t.start";
    std::string stop = "t.stop";
    std::string event = "event";
    std::string status = "status";
    char delimiter = 0;
};

struct ParseResult {
    RecurrentDataset dataset;
    ValidationReport report;
};

// Parses delimited text with a header row.  Endpoint columns may be numeric
// or ISO-8601 dates; dates become fractional days since the earliest date in
// the file and the anchor is kept on the dataset.  Hard mode throws
// DataError on any error finding; soft mode repairs what it can and keeps
// the rest as findings.
ParseResult parse_dataset(std::istream& in, const ColumnSchema& schema = {},
                          CheckMode mode = CheckMode::hard);

ParseResult parse_dataset_file(const std::string& path, const ColumnSchema& schema = {},
                               CheckMode mode = CheckMode::hard);

void write_dataset(std::ostream& out, const RecurrentDataset& dataset, char delimiter = ',');
void write_dataset_file(const std::string& path, const RecurrentDataset& dataset,
                        char delimiter = ',');

std::string report_to_json(const ValidationReport& report);

} // namespace recur

#endif
