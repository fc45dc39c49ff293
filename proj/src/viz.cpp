#include "recur/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include <json.hpp>

#include "recur/dates.hpp"

namespace recur {

namespace {

const char* kPalette[8] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                           "#66ccee", "#aa3377", "#bbbbbb", "#222222"};

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string format_level(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

// 1-2-5 tick spacing
Vec ticks(double lo, double hi, int target = 5) {
    if (!(hi > lo)) return {lo};
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double f : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * f >= raw) {
            step = mag * f;
            break;
        }
    }
    Vec out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * step; t += step)
        out.push_back(std::fabs(t) < 1e-12 * step ? 0.0 : t);
    return out;
}

struct Frame {
    double x0, x1, y0, y1;       // pixel corners (y0 = top)
    double vx0, vx1, vy0, vy1;   // value ranges
    double px(double v) const { return x0 + (v - vx0) / (vx1 - vx0) * (x1 - x0); }
    double py(double v) const { return y1 - (v - vy0) / (vy1 - vy0) * (y1 - y0); }
};

void draw_axes(std::string& svg, const Frame& fr, const std::string& xlab,
               const std::string& ylab, bool y_ticks, const std::optional<double>& date_anchor,
               double base_size) {
    const std::string small = fmt(base_size - 1.0);
    const std::string mid = fmt(base_size);
    svg += "<path d=\"M" + fmt(fr.x0) + "," + fmt(fr.y0) + " L" + fmt(fr.x0) + "," + fmt(fr.y1) +
           " L" + fmt(fr.x1) + "," + fmt(fr.y1) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
    for (double t : ticks(fr.vx0, fr.vx1)) {
        const double x = fr.px(t);
        svg += "<path d=\"M" + fmt(x) + "," + fmt(fr.y1) + " l0,5\" stroke=\"#333333\"/>\n";
        const std::string lab = date_anchor ? format_iso_date(*date_anchor + t) : fmt(t);
        svg += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(fr.y1 + 18) +
               "\" font-size=\"" + small + "\" text-anchor=\"middle\">" + xml_escape(lab) + "</text>\n";
    }
    if (y_ticks) {
        for (double t : ticks(fr.vy0, fr.vy1)) {
            const double y = fr.py(t);
            svg += "<path d=\"M" + fmt(fr.x0) + "," + fmt(y) + " l-5,0\" stroke=\"#333333\"/>\n";
            svg += "<text x=\"" + fmt(fr.x0 - 8) + "\" y=\"" + fmt(y + 4) +
                   "\" font-size=\"" + small + "\" text-anchor=\"end\">" + xml_escape(fmt(t)) + "</text>\n";
        }
    }
    if (!xlab.empty())
        svg += "<text x=\"" + fmt(0.5 * (fr.x0 + fr.x1)) + "\" y=\"" + fmt(fr.y1 + 36) +
               "\" font-size=\"" + mid + "\" text-anchor=\"middle\">" + xml_escape(xlab) + "</text>\n";
    if (!ylab.empty())
        svg += "<text x=\"16\" y=\"" + fmt(0.5 * (fr.y0 + fr.y1)) +
               "\" font-size=\"" + mid + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
               fmt(0.5 * (fr.y0 + fr.y1)) + ")\">" + xml_escape(ylab) + "</text>\n";
}

} // namespace

EventOrder parse_event_order(const std::string& name) {
    if (name == "increasing") return EventOrder::increasing;
    if (name == "decreasing") return EventOrder::decreasing;
    if (name == "none") return EventOrder::none;
    throw DataError("unknown ordering: " + name + " (expected increasing, decreasing, none)");
}

EventPlotData event_plot_data(const RecurrentDataset& dataset,
                              const std::optional<std::string>& group_by, EventOrder order,
                              bool calendar) {
    if (dataset.n() == 0) throw DataError("event_plot_data: empty dataset");
    std::size_t group_col = 0;
    if (group_by) group_col = covariate_index(dataset, *group_by);

    EventPlotData out;
    out.calendar = calendar;
    out.calendar_anchor = calendar ? dataset.calendar_anchor : std::nullopt;

    struct Item {
        std::size_t input_pos;
        double sort_key;
        double group_key = 0.0;
        EventPlotData::Row row;
    };
    std::vector<Item> items;
    std::set<int> types;
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        const SubjectRecord& s = dataset.subjects[i];
        Item it;
        it.input_pos = i;
        EventPlotData::Row& r = it.row;
        r.subject_id = s.id;
        r.terminal = s.terminal();
        if (calendar) {
            r.seg_start = s.origin;
            r.seg_end = s.origin + s.follow_up();
            for (const auto& iv : s.intervals)
                if (iv.event_type >= 1) r.marks.emplace_back(iv.stop, iv.event_type);
        } else {
            r.seg_start = 0.0;
            r.seg_end = s.follow_up();
            for (const auto& iv : s.intervals)
                if (iv.event_type >= 1) r.marks.emplace_back(iv.stop - s.origin, iv.event_type);
        }
        for (const auto& mk : r.marks) types.insert(mk.second);
        // person time ranks by follow-up; calendar time by when follow-up ends
        it.sort_key = calendar ? r.seg_end : s.follow_up();
        if (group_by) {
            it.group_key = s.covariates[group_col];
            r.group = *group_by + " = " + format_level(it.group_key);
        }
        items.push_back(std::move(it));
    }

    std::stable_sort(items.begin(), items.end(), [&](const Item& a, const Item& b) {
        if (a.group_key != b.group_key) return a.group_key < b.group_key;
        switch (order) {
            case EventOrder::increasing: return a.sort_key < b.sort_key;
            case EventOrder::decreasing: return a.sort_key > b.sort_key;
            default: return a.input_pos < b.input_pos;
        }
    });

    out.rows.reserve(items.size());
    for (std::size_t k = 0; k < items.size(); ++k) {
        items[k].row.rank = k + 1;
        if (out.groups.empty() || out.groups.back() != items[k].row.group)
            out.groups.push_back(items[k].row.group);
        out.rows.push_back(std::move(items[k].row));
    }
    out.event_types.assign(types.begin(), types.end());
    return out;
}

std::string event_plot_to_json(const EventPlotData& data) {
    nlohmann::json j;
    j["calendar"] = data.calendar;
    if (data.calendar_anchor) j["calendar_anchor"] = *data.calendar_anchor;
    j["event_types"] = data.event_types;
    j["groups"] = data.groups;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : data.rows) {
        nlohmann::json marks = nlohmann::json::array();
        for (const auto& m : r.marks) marks.push_back({{"time", m.first}, {"type", m.second}});
        rows.push_back({{"rank", r.rank},
                        {"id", r.subject_id},
                        {"start", r.seg_start},
                        {"end", r.seg_end},
                        {"terminal", r.terminal},
                        {"group", r.group},
                        {"marks", marks}});
    }
    j["rows"] = rows;
    return j.dump(2);
}

CurveSet combine_curves(std::vector<McfCurve> curves, std::string legend_title,
                        std::vector<std::string> legend_labels) {
    if (curves.empty()) throw DataError("combine_curves: no curves given");
    for (const auto& c : curves)
        if (c.time_unit != curves.front().time_unit)
            throw DataError("combine_curves: curves have mismatched time units (" +
                            curves.front().time_unit + " vs " + c.time_unit + ")");
    CurveSet set;
    if (legend_labels.empty())
        for (const auto& c : curves) legend_labels.push_back(c.label);
    set.curves = std::move(curves);
    set.legend_title = std::move(legend_title);
    set.legend_labels = std::move(legend_labels);
    return set;
}

std::string render_event_plot_svg(const EventPlotData& data, const PlotStyle& style) {
    if (data.rows.empty()) throw DataError("render_event_plot_svg: empty plot data");
    const std::size_t n = data.rows.size();
    const double row_h = std::max(4.0, 16.0 * style.cex * (n > 80 ? 80.0 / n : 1.0));
    const double width = 860;
    const double top = 52, bottom = 48, left = 70, right = 24;
    const double height = top + row_h * n + bottom;

    double vx0 = 0.0, vx1 = 1.0;
    vx0 = data.rows.front().seg_start;
    vx1 = data.rows.front().seg_end;
    for (const auto& r : data.rows) {
        vx0 = std::min(vx0, r.seg_start);
        vx1 = std::max(vx1, r.seg_end);
    }
    if (!(vx1 > vx0)) throw DataError("render_event_plot_svg: zero-extent time axis");

    Frame fr{left, width - right, top, height - bottom, vx0, vx1, 0.0, 1.0};

    std::string svg;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", width);
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::string(buf);
    std::snprintf(buf, sizeof buf, "%g", height);
    svg += "\" height=\"" + std::string(buf) + "\" viewBox=\"0 0 " + fmt(width) + " " +
           fmt(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!style.main.empty())
        svg += "<text x=\"" + fmt(width / 2) +
               "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">" + xml_escape(style.main) +
               "</text>\n";

    auto ry = [&](std::size_t rank) { return fr.y1 - (static_cast<double>(rank) - 0.5) * row_h; };

    // follow-up segments
    for (const auto& r : data.rows) {
        const double y = ry(r.rank);
        svg += "<line x1=\"" + fmt(fr.px(r.seg_start)) + "\" y1=\"" + fmt(y) + "\" x2=\"" +
               fmt(fr.px(r.seg_end)) + "\" y2=\"" + fmt(y) +
               "\" stroke=\"#b0b0b0\" stroke-width=\"1\"/>\n";
    }
    // recurrent marks
    const double mark_r = 3.2 * style.cex;
    for (const auto& r : data.rows) {
        const double y = ry(r.rank);
        for (const auto& m : r.marks) {
            std::size_t color_idx = 0;
            for (std::size_t k = 0; k < data.event_types.size(); ++k)
                if (data.event_types[k] == m.second) color_idx = k;
            svg += "<circle class=\"mark\" cx=\"" + fmt(fr.px(m.first)) + "\" cy=\"" + fmt(y) +
                   "\" r=\"" + fmt(mark_r) + "\" fill=\"" + kPalette[color_idx % 8] +
                   "\" fill-opacity=\"" + fmt(style.alpha) + "\"/>\n";
        }
    }
    // terminal marks
    for (const auto& r : data.rows) {
        if (!r.terminal) continue;
        const double y = ry(r.rank);
        const double x = fr.px(r.seg_end);
        const double s = 4.2 * style.cex;
        svg += "<path class=\"terminal\" d=\"M" + fmt(x) + "," + fmt(y - s) + " L" +
               fmt(x + 0.9 * s) + "," + fmt(y + 0.8 * s) + " L" + fmt(x - 0.9 * s) + "," +
               fmt(y + 0.8 * s) + " Z\" fill=\"#d1495b\" fill-opacity=\"" + fmt(style.alpha) +
               "\"/>\n";
    }
    // panel separators and labels for grouped plots
    if (data.groups.size() > 1 || (data.groups.size() == 1 && !data.groups.front().empty())) {
        std::string prev_group;
        for (const auto& r : data.rows) {
            if (r.group != prev_group) {
                const double y = ry(r.rank) + 0.5 * row_h;
                if (!prev_group.empty())
                    svg += "<path d=\"M" + fmt(fr.x0) + "," + fmt(y) + " L" + fmt(fr.x1) + "," +
                           fmt(y) + "\" stroke=\"#dddddd\"/>\n";
                if (!r.group.empty())
                    svg += "<text x=\"" + fmt(fr.x1 - 4) + "\" y=\"" + fmt(y - 4) +
                           "\" font-size=\"" + fmt(style.base_size - 1.0) + "\" text-anchor=\"end\" fill=\"#555555\">" +
                           xml_escape(r.group) + "</text>\n";
                prev_group = r.group;
            }
        }
    }

    draw_axes(svg, fr, style.xlab.empty() ? (data.calendar ? "date" : "time") : style.xlab,
              style.ylab.empty() ? "subject" : style.ylab, false, data.calendar_anchor, style.base_size);

    if (style.legend_position != "none") {
        const std::string small = fmt(style.base_size - 1.0);
        double lx = fr.x0;
        const double lyy = top - 14;
        for (std::size_t k = 0; k < data.event_types.size(); ++k) {
            std::string name = k < style.recurrent_type_names.size()
                                   ? style.recurrent_type_names[k]
                                   : style.recurrent_name +
                                         (data.event_types.size() > 1
                                              ? " (type " + std::to_string(data.event_types[k]) +
                                                    ")"
                                              : "");
            // rect swatch so <circle> elements stay in bijection with marks
            svg += "<rect x=\"" + fmt(lx - 4) + "\" y=\"" + fmt(lyy - 4) +
                   "\" width=\"8\" height=\"8\" rx=\"4\" fill=\"" + kPalette[k % 8] + "\"/>\n";
            svg += "<text x=\"" + fmt(lx + 9) + "\" y=\"" + fmt(lyy + 4) + "\" font-size=\"" +
                   small + "\">" + xml_escape(name) + "</text>\n";
            lx += 22 + 6.2 * name.size();
        }
        svg += "<path d=\"M" + fmt(lx) + "," + fmt(lyy - 4) + " l4,8 l-8,0 Z\" fill=\"#d1495b\"/>\n";
        svg += "<text x=\"" + fmt(lx + 9) + "\" y=\"" + fmt(lyy + 4) + "\" font-size=\"" + small +
               "\">" + xml_escape(style.terminal_name) + "</text>\n";
    }

    svg += "</svg>\n";
    return svg;
}

namespace {

// step polyline points: origin, then a riser and a tread per knot
std::string step_points(const Frame& fr, const StepFunction& s) {
    std::string pts;
    double prev = s.value_before_first_knot();
    pts += fmt(fr.px(0.0)) + "," + fmt(fr.py(prev));
    for (std::size_t k = 0; k < s.size(); ++k) {
        pts += " " + fmt(fr.px(s.knots()[k])) + "," + fmt(fr.py(prev));
        pts += " " + fmt(fr.px(s.knots()[k])) + "," + fmt(fr.py(s.values()[k]));
        prev = s.values()[k];
    }
    return pts;
}

} // namespace

std::string render_curves_svg(const CurveSet& set, const PlotStyle& style) {
    if (set.curves.empty()) throw DataError("render_curves_svg: no curves");
    double vx1 = 0.0, vy1 = 0.0;
    for (const auto& c : set.curves) {
        if (!c.estimate.empty()) vx1 = std::max(vx1, c.estimate.knots().back());
        for (double v : c.estimate.values()) vy1 = std::max(vy1, v);
        if (c.upper) {
            for (double v : c.upper->values()) vy1 = std::max(vy1, v);
            if (!c.upper->empty()) vx1 = std::max(vx1, c.upper->knots().back());
        }
    }
    if (!(vx1 > 0.0)) throw DataError("render_curves_svg: zero-extent time axis");
    if (!(vy1 > 0.0)) vy1 = 1.0;

    const double width = 760, height = 480;
    Frame fr{64, width - 20, 48, height - 52, 0.0, vx1 * 1.02, 0.0, vy1 * 1.05};

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" +
           fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!style.main.empty())
        svg += "<text x=\"" + fmt(width / 2) +
               "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">" + xml_escape(style.main) +
               "</text>\n";

    for (std::size_t k = 0; k < set.curves.size(); ++k) {
        const McfCurve& c = set.curves[k];
        const char* color = kPalette[k % 8];
        if (c.lower && c.upper) {
            // band polygon first so the curve draws on top
            std::string pts = step_points(fr, *c.lower);
            std::string upper_pts = step_points(fr, *c.upper);
            // reverse the upper path point list
            std::vector<std::string> parts;
            std::string cur;
            for (char ch : upper_pts) {
                if (ch == ' ') {
                    parts.push_back(cur);
                    cur.clear();
                } else {
                    cur += ch;
                }
            }
            parts.push_back(cur);
            for (auto it = parts.rbegin(); it != parts.rend(); ++it) pts += " " + *it;
            svg += "<polygon points=\"" + pts + "\" fill=\"" + color +
                   "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
        }
        svg += "<polyline points=\"" + step_points(fr, c.estimate) + "\" fill=\"none\" stroke=\"" +
               color + "\" stroke-width=\"1.6\"/>\n";
    }

    draw_axes(svg, fr, style.xlab.empty() ? set.curves.front().time_unit : style.xlab,
              style.ylab.empty() ? "cumulative mean" : style.ylab, true, std::nullopt, style.base_size);

    if (style.legend_position != "none") {
        const std::string small = fmt(style.base_size - 1.0);
        double lx = fr.x0 + 8;
        const double lyy = 34;
        if (!set.legend_title.empty()) {
            svg += "<text x=\"" + fmt(lx) + "\" y=\"" + fmt(lyy + 4) + "\" font-size=\"" +
                   fmt(style.base_size) + "\" font-weight=\"bold\">" +
                   xml_escape(set.legend_title) + "</text>\n";
            lx += 14 + 7.0 * set.legend_title.size();
        }
        for (std::size_t k = 0; k < set.curves.size(); ++k) {
            const std::string label =
                k < set.legend_labels.size() ? set.legend_labels[k] : set.curves[k].label;
            svg += "<line x1=\"" + fmt(lx) + "\" y1=\"" + fmt(lyy) + "\" x2=\"" + fmt(lx + 18) +
                   "\" y2=\"" + fmt(lyy) + "\" stroke=\"" + kPalette[k % 8] +
                   "\" stroke-width=\"2\"/>\n";
            svg += "<text x=\"" + fmt(lx + 23) + "\" y=\"" + fmt(lyy + 4) + "\" font-size=\"" +
                   small + "\">" + xml_escape(label) + "</text>\n";
            lx += 34 + 6.2 * label.size();
        }
    }

    svg += "</svg>\n";
    return svg;
}

} // namespace recur
