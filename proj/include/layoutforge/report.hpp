#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "layoutforge/classification.hpp"
#include "layoutforge/evaluation.hpp"
#include "layoutforge/labels.hpp"
#include "layoutforge/promptcodec.hpp"

namespace layoutforge {

enum class TableFormat { Csv, Markdown };

// ---------------------------------------------------------------------------
// SVG rendering
// ---------------------------------------------------------------------------

struct RenderStyle {
    double page_width = 595.0;  // A4 in points
    double page_height = 842.0;
    double stroke_width = 1.0;
    double font_size = 10.0;

    const char* fill_for(SectionLabel label) const {
        switch (label) {
            case SectionLabel::Logo: return "#e6194b";
            case SectionLabel::Header: return "#3cb44b";
            case SectionLabel::VatTableSummary: return "#ffe119";
            case SectionLabel::PaymentInformation: return "#4363d8";
            case SectionLabel::LineItemTable: return "#f58231";
            case SectionLabel::Footer: return "#911eb4";
            case SectionLabel::Contact: return "#46f0f0";
            case SectionLabel::InvoiceDetails: return "#f032e6";
            case SectionLabel::Undefined: return "#808080";
        }
        return "#808080";
    }
};

namespace detail {

inline std::string svg_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
}

}  // namespace detail

// One <rect> per entry (the page frame is a <path>, so rectangle count equals
// entry count), label text anchored at each box's top-left corner. Output is
// byte-deterministic for fixed inputs.
inline std::string render_svg(const LayoutSample& sample,
                              const RenderStyle& style = RenderStyle{}) {
    const double w = style.page_width;
    const double h = style.page_height;
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           detail::svg_num(w) + "\" height=\"" + detail::svg_num(h) +
           "\" viewBox=\"0 0 " + detail::svg_num(w) + ' ' + detail::svg_num(h) +
           "\">\n";
    out += "<path d=\"M 0 0 L " + detail::svg_num(w) + " 0 L " +
           detail::svg_num(w) + ' ' + detail::svg_num(h) + " L 0 " +
           detail::svg_num(h) +
           " Z\" fill=\"none\" stroke=\"#000000\" stroke-width=\"" +
           detail::svg_num(style.stroke_width) + "\"/>\n";
    for (const auto& e : sample.entries) {
        const double x = e.bbox.x1 / 100.0 * w;
        const double y = e.bbox.y1 / 100.0 * h;
        const double bw = e.bbox.width() / 100.0 * w;
        const double bh = e.bbox.height() / 100.0 * h;
        const char* color = style.fill_for(e.label);
        out += "<rect x=\"" + detail::svg_num(x) + "\" y=\"" + detail::svg_num(y) +
               "\" width=\"" + detail::svg_num(bw) + "\" height=\"" +
               detail::svg_num(bh) + "\" fill=\"" + color +
               "\" fill-opacity=\"0.35\" stroke=\"" + color +
               "\" stroke-width=\"" + detail::svg_num(style.stroke_width) +
               "\"/>\n";
        out += "<text x=\"" + detail::svg_num(x) + "\" y=\"" +
               detail::svg_num(y + style.font_size) + "\" font-size=\"" +
               detail::svg_num(style.font_size) + "\" fill=\"#000000\">" +
               label_name(e.label) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

// ---------------------------------------------------------------------------
// Layout evaluation tables
// ---------------------------------------------------------------------------

namespace detail {

inline std::string metric_cell(double v) {
    if (std::isnan(v)) return "-";
    return svg_num(v);
}

inline std::string signed_cell(double v) {
    if (std::isnan(v)) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.2f", v);
    return std::string(buf);
}

inline std::string overlap_cell(std::size_t count, bool generated) {
    if (!generated || count == 0) return "-";
    return std::to_string(count);
}

inline std::string join_row(const std::vector<std::string>& cells, TableFormat fmt) {
    std::string out;
    if (fmt == TableFormat::Markdown) out += "| ";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) out += fmt == TableFormat::Markdown ? " | " : ",";
        out += cells[i];
    }
    if (fmt == TableFormat::Markdown) out += " |";
    out += '\n';
    return out;
}

inline std::string markdown_divider(std::size_t columns) {
    std::string out = "|";
    for (std::size_t i = 0; i < columns; ++i) out += " --- |";
    out += '\n';
    return out;
}

inline const LabelEvalRow* find_row(const LayoutEvalReport& report,
                                    SectionLabel label) {
    for (const auto& row : report.rows) {
        if (row.label == label) return &row;
    }
    return nullptr;
}

}  // namespace detail

// Fixed label order C, L, H, I, LIT, VAT, P, F; distances and areas at two
// decimals; explicit sign on area differences; "-" for zero or absent cells.
inline std::string layout_report_table(const LayoutEvalReport& report,
                                       TableFormat fmt = TableFormat::Markdown) {
    const std::vector<std::string> header = {"Label",        "GT BoxArea",
                                             "Mah. Origin",  "Mah. Closing",
                                             "Area Diff.",   "Overlaps"};
    std::string out = detail::join_row(header, fmt);
    if (fmt == TableFormat::Markdown) out += detail::markdown_divider(header.size());
    for (const auto& row : report.rows) {
        out += detail::join_row(
            {label_code(row.label), detail::metric_cell(row.gt_box_area),
             detail::metric_cell(row.mah_origin), detail::metric_cell(row.mah_closing),
             detail::signed_cell(row.area_diff),
             detail::overlap_cell(row.overlap_count, row.gen_instances > 0)},
            fmt);
    }
    return out;
}

// Two generators side by side over a shared ground truth, one column block
// per run.
inline std::string layout_report_table(const LayoutEvalReport& first,
                                       const LayoutEvalReport& second,
                                       const std::string& first_name,
                                       const std::string& second_name,
                                       TableFormat fmt = TableFormat::Markdown) {
    std::vector<std::string> header = {"Label", "GT BoxArea"};
    for (const std::string& name : {first_name, second_name}) {
        header.push_back(name + " Mah. Origin");
        header.push_back(name + " Mah. Closing");
        header.push_back(name + " Area Diff.");
        header.push_back(name + " Overlaps");
    }
    std::string out = detail::join_row(header, fmt);
    if (fmt == TableFormat::Markdown) out += detail::markdown_divider(header.size());

    for (SectionLabel label : kReportLabelOrder) {
        const LabelEvalRow* a = detail::find_row(first, label);
        const LabelEvalRow* b = detail::find_row(second, label);
        if (!a && !b) continue;
        const double gt_area = a ? a->gt_box_area
                                 : b->gt_box_area;
        std::vector<std::string> cells = {label_code(label),
                                          detail::metric_cell(gt_area)};
        for (const LabelEvalRow* row : {a, b}) {
            if (!row) {
                for (int i = 0; i < 4; ++i) cells.push_back("-");
                continue;
            }
            cells.push_back(detail::metric_cell(row->mah_origin));
            cells.push_back(detail::metric_cell(row->mah_closing));
            cells.push_back(detail::signed_cell(row->area_diff));
            cells.push_back(detail::overlap_cell(row->overlap_count,
                                                 row->gen_instances > 0));
        }
        out += detail::join_row(cells, fmt);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Classification tables
// ---------------------------------------------------------------------------

namespace detail {

inline std::string stat_cell(const MetricStat& stat, std::size_t repetitions) {
    std::string out = svg_num(stat.mean);
    if (repetitions > 1) out += " ± " + svg_num(stat.stddev);
    return out;
}

inline void append_block(std::vector<std::string>& cells,
                         const std::optional<AggregateMetrics>& metrics) {
    if (!metrics) {
        for (int i = 0; i < 4; ++i) cells.push_back("-");
        return;
    }
    cells.push_back(stat_cell(metrics->accuracy, metrics->repetitions));
    cells.push_back(stat_cell(metrics->weighted_f1, metrics->repetitions));
    cells.push_back(stat_cell(metrics->weighted_precision, metrics->repetitions));
    cells.push_back(stat_cell(metrics->weighted_recall, metrics->repetitions));
}

}  // namespace detail

inline AggregateMetrics aggregate_of(const ClassificationMetrics& metrics) {
    AggregateMetrics agg;
    agg.repetitions = 1;
    agg.runs.push_back(metrics);
    agg.accuracy = {metrics.accuracy, 0.0};
    agg.weighted_precision = {metrics.weighted_precision, 0.0};
    agg.weighted_recall = {metrics.weighted_recall, 0.0};
    agg.weighted_f1 = {metrics.weighted_f1, 0.0};
    return agg;
}

// Paired "No Bounding Boxes" / "Bounding Boxes" blocks of Acc./F1/Prec./Rec.
// at two decimals, mean ± sample std when aggregated over repetitions. A
// missing block renders as dashes so single-mode runs still report cleanly.
inline std::string classification_report_table(
    const std::optional<AggregateMetrics>& no_bbox,
    const std::optional<AggregateMetrics>& with_bbox, const std::string& model_name,
    TableFormat fmt = TableFormat::Markdown) {
    const std::vector<std::string> header = {
        "Model",
        "No Bounding Boxes Acc.", "No Bounding Boxes F1",
        "No Bounding Boxes Prec.", "No Bounding Boxes Rec.",
        "Bounding Boxes Acc.", "Bounding Boxes F1",
        "Bounding Boxes Prec.", "Bounding Boxes Rec."};
    std::string out = detail::join_row(header, fmt);
    if (fmt == TableFormat::Markdown) out += detail::markdown_divider(header.size());
    std::vector<std::string> cells = {model_name};
    detail::append_block(cells, no_bbox);
    detail::append_block(cells, with_bbox);
    out += detail::join_row(cells, fmt);
    return out;
}

}  // namespace layoutforge
