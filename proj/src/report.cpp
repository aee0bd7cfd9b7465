// Copyright 2026 The TuneQn Authors
// SPDX-License-Identifier: Apache-2.0

#include "tuneqn/report.hpp"

#include <cstdio>

#include "tuneqn/canonical_json.hpp"
#include "tuneqn/io.hpp"

namespace tuneqn {

using nlohmann::json;

std::string_view status_name(VariantStatus s) {
    switch (s) {
    case VariantStatus::Pending:
        return "pending";
    case VariantStatus::Done:
        return "done";
    case VariantStatus::Failed:
        return "failed";
    }
    return "pending";
}

VariantStatus status_from_name(std::string_view name) {
    if (name == "pending")
        return VariantStatus::Pending;
    if (name == "done")
        return VariantStatus::Done;
    if (name == "failed")
        return VariantStatus::Failed;
    throw FormatError("unknown variant status '" + std::string(name) + "'");
}

json variant_to_json(const VariantRecord& v) {
    json j{{"variant_index", v.variant_index},
           {"excluded_layers", v.excluded_layers},
           {"size_bytes", v.size_bytes},
           {"top1_mismatch", v.top1_mismatch},
           {"topk_mismatch", v.topk_mismatch},
           {"status", status_name(v.status)}};
    if (v.top1_accuracy)
        j["top1_accuracy"] = *v.top1_accuracy;
    return j;
}

VariantRecord variant_from_json(const json& j) {
    try {
        VariantRecord v;
        v.variant_index = j.at("variant_index").get<std::int64_t>();
        v.excluded_layers = j.at("excluded_layers").get<std::vector<std::string>>();
        v.size_bytes = j.at("size_bytes").get<std::int64_t>();
        v.top1_mismatch = j.at("top1_mismatch").get<double>();
        v.topk_mismatch = j.at("topk_mismatch").get<double>();
        if (j.contains("top1_accuracy"))
            v.top1_accuracy = j.at("top1_accuracy").get<double>();
        v.status = status_from_name(j.at("status").get<std::string>());
        return v;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed variant record: ") + e.what());
    }
}

std::vector<ObjectivePoint> variant_objectives(const std::vector<VariantRecord>& variants) {
    std::vector<ObjectivePoint> points;
    points.reserve(variants.size());
    for (const auto& v : variants)
        points.push_back({v.variant_index, {v.top1_mismatch, static_cast<double>(v.size_bytes)}});
    return points;
}

void finalize_report(SweepReport& r, std::size_t top_candidates) {
    const auto points = variant_objectives(r.variants);
    r.pareto = compute_pareto(points, top_candidates);
    r.normalized_objectives.clear();
    for (const auto& p : normalize_objectives(points))
        r.normalized_objectives.push_back(p.objectives);
    validate_report(r);
}

void validate_report(const SweepReport& r) {
    if (r.variants.empty())
        throw ArgumentError("report has no variants");
    for (std::size_t i = 0; i < r.variants.size(); ++i) {
        if (r.variants[i].variant_index != static_cast<std::int64_t>(i))
            throw ArgumentError("report variants are not index-contiguous from 0");
        if (r.variants[i].status != VariantStatus::Done)
            throw ArgumentError("variant " + std::to_string(i) + " is not complete");
    }
    const auto n = static_cast<std::int64_t>(r.variants.size());
    auto known = [&](std::int64_t idx) { return idx >= 0 && idx < n; };
    for (const auto& front : r.pareto.fronts)
        for (auto idx : front)
            if (!known(idx))
                throw ArgumentError("Pareto front references unknown variant " + std::to_string(idx));
    for (auto idx : r.pareto.top_candidates)
        if (!known(idx))
            throw ArgumentError("top candidate references unknown variant " + std::to_string(idx));
    if (r.normalized_objectives.size() != r.variants.size())
        throw ArgumentError("normalized objectives do not match the variant count");
}

json report_to_json(const SweepReport& r) {
    const auto& m = r.metadata;
    json meta{{"model", m.model},
              {"mode", m.mode},
              {"seed", m.seed},
              {"calib_samples", m.calib_samples},
              {"eval_samples", m.eval_samples},
              {"dataset_samples", m.dataset_samples},
              {"top_k", m.top_k},
              {"original_size_bytes", m.original_size_bytes},
              {"eval_indices", m.eval_indices},
              {"config_hash", m.config_hash},
              {"timestamp", m.timestamp}};
    json variants = json::array();
    for (const auto& v : r.variants)
        variants.push_back(variant_to_json(v));
    return json{{"metadata", meta},
                {"layer_errors", layer_errors_to_json(r.layer_errors)},
                {"ranking", r.ranking},
                {"variants", variants},
                {"pareto", {{"fronts", r.pareto.fronts}, {"top_candidates", r.pareto.top_candidates}}},
                {"normalized_objectives", r.normalized_objectives}};
}

SweepReport report_from_json(const json& j) {
    SweepReport r;
    try {
        const auto& m = j.at("metadata");
        r.metadata.model = m.at("model").get<std::string>();
        r.metadata.mode = m.at("mode").get<std::string>();
        r.metadata.seed = m.at("seed").get<std::uint64_t>();
        r.metadata.calib_samples = m.at("calib_samples").get<std::int64_t>();
        r.metadata.eval_samples = m.at("eval_samples").get<std::int64_t>();
        r.metadata.dataset_samples = m.at("dataset_samples").get<std::int64_t>();
        r.metadata.top_k = m.at("top_k").get<std::int64_t>();
        r.metadata.original_size_bytes = m.at("original_size_bytes").get<std::int64_t>();
        r.metadata.eval_indices = m.at("eval_indices").get<std::vector<std::int64_t>>();
        r.metadata.config_hash = m.at("config_hash").get<std::string>();
        r.metadata.timestamp = m.at("timestamp").get<std::string>();
        r.layer_errors = layer_errors_from_json(j.at("layer_errors"));
        r.ranking = j.at("ranking").get<std::vector<std::string>>();
        for (const auto& v : j.at("variants"))
            r.variants.push_back(variant_from_json(v));
        r.pareto.fronts = j.at("pareto").at("fronts").get<std::vector<std::vector<std::int64_t>>>();
        r.pareto.top_candidates = j.at("pareto").at("top_candidates").get<std::vector<std::int64_t>>();
        r.normalized_objectives = j.at("normalized_objectives").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed report: ") + e.what());
    }
    return r;
}

std::string render_report(const SweepReport& r) {
    validate_report(r);
    return dump_canonical(report_to_json(r));
}

void write_report(const SweepReport& r, const std::filesystem::path& path) { write_file_atomic(path, render_report(r)); }

SweepReport read_report(const std::filesystem::path& path) {
    const std::string text = read_file_text(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return report_from_json(j);
}

// ---------------------------------------------------------------------------
// SVG

double PlotFrame::x_at(std::size_t index, std::size_t count) {
    if (count <= 1)
        return (left + right) / 2.0;
    return left + static_cast<double>(index) * (right - left) / static_cast<double>(count - 1);
}

double PlotFrame::y_at(double value, double lo, double hi) { return bottom - (value - lo) / (hi - lo) * (bottom - top); }

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        case '\'':
            out += "&apos;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

struct Series {
    std::string name;
    std::string label;
    std::string color;
    std::vector<double> values;
};

class SvgCanvas {
public:
    SvgCanvas(std::string_view title, double y_lo, double y_hi) : y_lo_(y_lo), y_hi_(y_hi) {
        using F = PlotFrame;
        out_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"480\" viewBox=\"0 0 800 480\"";
        out_ += " data-plot-left=\"" + num(F::left) + "\" data-plot-right=\"" + num(F::right) + "\" data-plot-top=\"" +
                num(F::top) + "\" data-plot-bottom=\"" + num(F::bottom) + "\" data-y-min=\"" + num(y_lo) +
                "\" data-y-max=\"" + num(y_hi) + "\">\n";
        out_ += "  <rect class=\"background\" x=\"0\" y=\"0\" width=\"800\" height=\"480\" fill=\"white\"/>\n";
        out_ += "  <text class=\"title\" x=\"400.00\" y=\"28.00\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                "font-size=\"16\">" +
                xml_escape(title) + "</text>\n";
        out_ += "  <line class=\"axis\" x1=\"" + num(F::left) + "\" y1=\"" + num(F::bottom) + "\" x2=\"" + num(F::right) +
                "\" y2=\"" + num(F::bottom) + "\" stroke=\"black\"/>\n";
        out_ += "  <line class=\"axis\" x1=\"" + num(F::left) + "\" y1=\"" + num(F::top) + "\" x2=\"" + num(F::left) +
                "\" y2=\"" + num(F::bottom) + "\" stroke=\"black\"/>\n";
        for (int t = 0; t <= 4; ++t) {
            const double v = y_lo + (y_hi - y_lo) * t / 4.0;
            const double y = F::y_at(v, y_lo, y_hi);
            char label[32];
            std::snprintf(label, sizeof label, "%g", v);
            out_ += "  <line class=\"grid\" x1=\"" + num(F::left) + "\" y1=\"" + num(y) + "\" x2=\"" + num(F::right) +
                    "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\"/>\n";
            out_ += "  <text class=\"tick\" x=\"" + num(F::left - 8) + "\" y=\"" + num(y + 4) +
                    "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + label + "</text>\n";
        }
    }

    void x_ticks(const std::vector<std::string>& labels) {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const double x = PlotFrame::x_at(i, labels.size());
            out_ += "  <text class=\"tick\" x=\"" + num(x) + "\" y=\"" + num(PlotFrame::bottom + 16) +
                    "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + xml_escape(labels[i]) +
                    "</text>\n";
        }
    }

    void axis_labels(std::string_view x_label, std::string_view y_label) {
        out_ += "  <text class=\"axis-label\" x=\"400.00\" y=\"468.00\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                "font-size=\"12\">" +
                xml_escape(x_label) + "</text>\n";
        out_ += "  <text class=\"axis-label\" x=\"20.00\" y=\"240.00\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                "font-size=\"12\" transform=\"rotate(-90 20 240)\">" +
                xml_escape(y_label) + "</text>\n";
    }

    void series(const Series& s) {
        const std::size_t n = s.values.size();
        std::string pts;
        for (std::size_t i = 0; i < n; ++i) {
            if (i)
                pts += ' ';
            pts += num(PlotFrame::x_at(i, n)) + "," + num(PlotFrame::y_at(s.values[i], y_lo_, y_hi_));
        }
        out_ += "  <polyline class=\"series\" data-series=\"" + xml_escape(s.name) + "\" points=\"" + pts +
                "\" fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"2\"/>\n";
        for (std::size_t i = 0; i < n; ++i)
            out_ += "  <circle class=\"marker\" data-series=\"" + xml_escape(s.name) + "\" data-index=\"" +
                    std::to_string(i) + "\" cx=\"" + num(PlotFrame::x_at(i, n)) + "\" cy=\"" +
                    num(PlotFrame::y_at(s.values[i], y_lo_, y_hi_)) + "\" r=\"3\" fill=\"" + s.color + "\"/>\n";
    }

    void pareto_line(std::int64_t variant, std::size_t count, std::size_t rank) {
        const double x = PlotFrame::x_at(static_cast<std::size_t>(variant), count);
        out_ += "  <line class=\"pareto\" data-variant=\"" + std::to_string(variant) + "\" x1=\"" + num(x) + "\" y1=\"" +
                num(PlotFrame::top) + "\" x2=\"" + num(x) + "\" y2=\"" + num(PlotFrame::bottom) +
                "\" stroke=\"#2ca02c\" stroke-dasharray=\"4 3\"/>\n";
        out_ += "  <text class=\"pareto-label\" data-variant=\"" + std::to_string(variant) + "\" x=\"" + num(x + 3) +
                "\" y=\"" + num(PlotFrame::top + 12 + 12 * static_cast<double>(rank)) +
                "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#2ca02c\">#" + std::to_string(variant) +
                "</text>\n";
    }

    void legend(const std::vector<Series>& all, bool with_pareto) {
        double y = PlotFrame::top + 4;
        out_ += "  <g class=\"legend\">\n";
        for (const auto& s : all) {
            out_ += "    <rect x=\"" + num(PlotFrame::right + 8) + "\" y=\"" + num(y) + "\" width=\"10\" height=\"10\" fill=\"" +
                    s.color + "\"/>\n";
            out_ += "    <text x=\"" + num(PlotFrame::right + 22) + "\" y=\"" + num(y + 9) +
                    "\" font-family=\"sans-serif\" font-size=\"9\">" + xml_escape(s.label) + "</text>\n";
            y += 16;
        }
        if (with_pareto) {
            out_ += "    <line x1=\"" + num(PlotFrame::right + 8) + "\" y1=\"" + num(y + 5) + "\" x2=\"" +
                    num(PlotFrame::right + 18) + "\" y2=\"" + num(y + 5) +
                    "\" stroke=\"#2ca02c\" stroke-dasharray=\"4 3\"/>\n";
            out_ += "    <text x=\"" + num(PlotFrame::right + 22) + "\" y=\"" + num(y + 9) +
                    "\" font-family=\"sans-serif\" font-size=\"9\">Pareto pick</text>\n";
        }
        out_ += "  </g>\n";
    }

    std::string finish() { return out_ + "</svg>\n"; }

private:
    std::string out_;
    double y_lo_, y_hi_;
};

} // namespace

std::string render_layer_errors_svg(const std::vector<LayerErrorRecord>& records) {
    if (records.empty())
        throw ArgumentError("no layer error records to plot");
    Series qdq{"norm_qdq_err", "QDQ error", "#1f77b4", {}};
    Series xmodel{"norm_xmodel_err", "XModel error", "#d62728", {}};
    std::vector<std::string> labels;
    for (const auto& r : records) {
        qdq.values.push_back(r.norm_qdq_err);
        xmodel.values.push_back(r.norm_xmodel_err);
        labels.push_back(r.node_id);
    }
    SvgCanvas svg("Normalized layer errors", 0.0, 1.0);
    svg.x_ticks(labels);
    svg.axis_labels("layer (topological order)", "normalized error");
    svg.series(qdq);
    svg.series(xmodel);
    svg.legend({qdq, xmodel}, false);
    return svg.finish();
}

void plot_layer_errors(const std::vector<LayerErrorRecord>& records, const std::filesystem::path& path) {
    write_file_atomic(path, render_layer_errors_svg(records));
}

std::string render_objectives_svg(const SweepReport& r) {
    validate_report(r);
    Series acc{"top1_mismatch", "top-1 mismatch", "#1f77b4", {}};
    Series size{"size_bytes", "model size", "#ff7f0e", {}};
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < r.normalized_objectives.size(); ++i) {
        const auto& o = r.normalized_objectives[i];
        if (o.size() != 2)
            throw ArgumentError("expected two objectives per variant");
        acc.values.push_back(o[0]);
        size.values.push_back(o[1]);
        labels.push_back(std::to_string(i));
    }
    SvgCanvas svg("Objectives per selectively quantized model", 0.0, 100.0);
    svg.x_ticks(labels);
    svg.axis_labels("selectively quantized model number", "normalized percentage");
    svg.series(acc);
    svg.series(size);
    for (std::size_t i = 0; i < r.pareto.top_candidates.size(); ++i)
        svg.pareto_line(r.pareto.top_candidates[i], r.variants.size(), i);
    svg.legend({acc, size}, true);
    return svg.finish();
}

void plot_objectives(const SweepReport& r, const std::filesystem::path& path) {
    write_file_atomic(path, render_objectives_svg(r));
}

} // namespace tuneqn
