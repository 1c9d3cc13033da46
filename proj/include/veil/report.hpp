#pragma once

// Report rendering: fixed seven-column layout (Method, Privacy [Recall],
// Sentiment [Accuracy], Topic dist. [mean±std], Q&A [Accuracy],
// Q&A true [Accuracy], Probe [MAE]) in markdown or CSV, with pinned
// decimal places per column.

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "veil/metrics.hpp"

namespace veil::report {

enum class ReportFormat { markdown, csv };

inline std::string format_fixed(double value, int places) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", places, value);
    return buf;
}

inline std::string cell(const std::optional<double>& v, int places) {
    return v ? format_fixed(*v, places) : std::string("-");
}

inline std::string topic_cell(const std::optional<double>& mean,
                              const std::optional<double>& stddev) {
    if (!mean || !stddev) return "-";
    return format_fixed(*mean, 3) + " ± " + format_fixed(*stddev, 3);
}

inline const std::vector<std::string>& report_columns() {
    static const std::vector<std::string> cols = {
        "Method",           "Privacy [Recall]",  "Sentiment [Accuracy]",
        "Topic dist. [mean±std]", "Q&A [Accuracy]",
        "Q&A true [Accuracy]", "Probe [MAE]",
    };
    return cols;
}

inline std::vector<std::string> report_row(const metrics::MetricReport& r) {
    if (!r.available)
        return {r.method, "-", "-", "-", "-", "-", "-"};
    return {
        r.method,
        cell(r.privacy_recall, 2),
        cell(r.sentiment_accuracy, 3),
        topic_cell(r.topic_mean, r.topic_std),
        cell(r.qa_accuracy, 2),
        cell(r.qa_true_accuracy, 2),
        cell(r.probe_mae, 3),
    };
}

inline std::string render_report(
    const std::vector<metrics::MetricReport>& reports, ReportFormat format) {
    if (reports.empty())
        throw std::invalid_argument("render_report requires >= 1 report");
    const auto& cols = report_columns();
    std::string out;
    if (format == ReportFormat::csv) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) out.push_back(',');
            out += cols[i];
        }
        out.push_back('\n');
        for (const auto& r : reports) {
            auto row = report_row(r);
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out.push_back(',');
                out += row[i];
            }
            out.push_back('\n');
        }
        return out;
    }
    auto emit_row = [&](const std::vector<std::string>& row) {
        out.push_back('|');
        for (const auto& c : row) {
            out.push_back(' ');
            out += c;
            out += " |";
        }
        out.push_back('\n');
    };
    emit_row(cols);
    std::vector<std::string> rule(cols.size(), "---");
    emit_row(rule);
    for (const auto& r : reports) emit_row(report_row(r));
    return out;
}

// ---------------------------------------------------------------------------
// JSON persistence for `report` subcommand round-trips.

inline ojson report_to_json(const metrics::MetricReport& r) {
    ojson j;
    j["method"] = r.method;
    j["available"] = r.available;
    auto put = [&](const char* key, const std::optional<double>& v) {
        j[key] = v ? ojson(*v) : ojson(nullptr);
    };
    put("privacy_recall", r.privacy_recall);
    put("sentiment_accuracy", r.sentiment_accuracy);
    put("topic_mean", r.topic_mean);
    put("topic_std", r.topic_std);
    put("qa_accuracy", r.qa_accuracy);
    put("qa_true_accuracy", r.qa_true_accuracy);
    put("probe_mae", r.probe_mae);
    j["counts"] = {{"conversations", r.counts.conversations},
                   {"pii_values", r.counts.pii_values},
                   {"qa_items", r.counts.qa_items}};
    j["partial_conversations"] = r.partial_conversations;
    j["qa_excluded"] = r.qa_excluded;
    j["note"] = r.note;
    return j;
}

inline metrics::MetricReport report_from_json(const json& j) {
    metrics::MetricReport r;
    r.method = j.at("method").get<std::string>();
    if (j.contains("available")) r.available = j["available"].get<bool>();
    auto get = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j[key].is_null()) return std::nullopt;
        return j[key].get<double>();
    };
    r.privacy_recall = get("privacy_recall");
    r.sentiment_accuracy = get("sentiment_accuracy");
    r.topic_mean = get("topic_mean");
    r.topic_std = get("topic_std");
    r.qa_accuracy = get("qa_accuracy");
    r.qa_true_accuracy = get("qa_true_accuracy");
    r.probe_mae = get("probe_mae");
    if (j.contains("counts")) {
        const auto& c = j["counts"];
        if (c.contains("conversations"))
            r.counts.conversations = c["conversations"].get<std::size_t>();
        if (c.contains("pii_values"))
            r.counts.pii_values = c["pii_values"].get<std::size_t>();
        if (c.contains("qa_items"))
            r.counts.qa_items = c["qa_items"].get<std::size_t>();
    }
    if (j.contains("partial_conversations"))
        r.partial_conversations =
            j["partial_conversations"].get<std::size_t>();
    if (j.contains("qa_excluded"))
        r.qa_excluded = j["qa_excluded"].get<std::size_t>();
    if (j.contains("note")) r.note = j["note"].get<std::string>();
    return r;
}

inline void save_reports_json(const std::vector<metrics::MetricReport>& rs,
                              const std::string& path) {
    ojson arr = ojson::array();
    for (const auto& r : rs) arr.push_back(report_to_json(r));
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open report file: " + path);
    out << arr.dump(2) << '\n';
}

inline std::vector<metrics::MetricReport> load_reports_json(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report file: " + path);
    json arr = json::parse(in);
    std::vector<metrics::MetricReport> out;
    for (const auto& j : arr) out.push_back(report_from_json(j));
    return out;
}

}  // namespace veil::report
