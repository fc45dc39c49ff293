#ifndef RECUR_VIZ_HPP
#define RECUR_VIZ_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "recur/dataset.hpp"
#include "recur/nonparametric.hpp"

namespace recur {

struct PlotStyle {
    std::string xlab;
    std::string ylab;
    std::string main;
    std::string terminal_name = "terminal event";
    std::string recurrent_name = "recurrent event";
    std::vector<std::string> recurrent_type_names;
    std::string legend_position = "top";
    double base_size = 12.0;
    double cex = 1.0;
    double alpha = 0.7;
};

enum class EventOrder { increasing, decreasing, none };

EventOrder parse_event_order(const std::string& name);

// Rows carry everything the renderer needs: display rank (1 = bottom),
// the follow-up segment, recurrent marks with their type, and the
// terminal flag.  Calendar mode uses file-time coordinates.
struct EventPlotData {
    struct Row {
        std::size_t rank = 0;
        std::string subject_id;
        double seg_start = 0.0;
        double seg_end = 0.0;
        std::vector<std::pair<double, int>> marks;
        bool terminal = false;
        std::string group;
    };
    std::vector<Row> rows;
    bool calendar = false;
    std::optional<double> calendar_anchor;
    std::vector<int> event_types;      // distinct recurrent types present
    std::vector<std::string> groups;   // panel order
};

EventPlotData event_plot_data(const RecurrentDataset& dataset,
                              const std::optional<std::string>& group_by,
                              EventOrder order = EventOrder::increasing,
                              bool calendar = false);

std::string event_plot_to_json(const EventPlotData& data);

struct CurveSet {
    std::vector<McfCurve> curves;
    std::string legend_title;
    std::vector<std::string> legend_labels;
};

// Merge curves into one plot object with shared axes; labels default to
// the curve labels.  Throws DataError when time units disagree.
CurveSet combine_curves(std::vector<McfCurve> curves, std::string legend_title = "",
                        std::vector<std::string> legend_labels = {});

// Standalone SVG 1.1 documents.  Subjects draw as gray <line> segments,
// recurrent events as <circle> marks (one fill per event type), terminal
// events as triangular <path> marks; curves draw as right-continuous step
// <polyline>s with optional band <polygon>s.
std::string render_event_plot_svg(const EventPlotData& data, const PlotStyle& style = {});
std::string render_curves_svg(const CurveSet& set, const PlotStyle& style = {});

} // namespace recur

#endif
