#include <algorithm>
#include <cstdio>
#include <ctime>

#include "nuggetscore/annotation_io.hpp"

using ordered_json = nlohmann::ordered_json;

namespace nuggetscore {

std::optional<ReportFormat> parse_report_format(std::string_view name) {
    if (name == "json") return ReportFormat::Json;
    if (name == "csv") return ReportFormat::Csv;
    if (name == "markdown" || name == "md") return ReportFormat::Markdown;
    return std::nullopt;
}

namespace {

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm parts{};
    ::gmtime_r(&now, &parts);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &parts);
    return buf;
}

std::string fixed4(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", value);
    return buf;
}

/// Circled digits for the first twenty nuggets, "(n)" beyond.
std::string nugget_marker(std::size_t position) {
    const std::size_t number = position + 1;
    if (number > 20) return "(" + std::to_string(number) + ")";
    const char32_t cp = U'①' + static_cast<char32_t>(number - 1);
    std::string out;
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
    return out;
}

std::string csv_field(std::string_view text) {
    if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

ordered_json optional_number(const std::optional<double>& value) {
    return value ? ordered_json(*value) : ordered_json(nullptr);
}

ordered_json indices(const std::vector<IndexedScore>& scores) {
    ordered_json out = ordered_json::array();
    for (const auto& s : scores) out.push_back(s.index);
    return out;
}

void require_rows(const EvaluationReport& report) {
    if (report.rows.empty()) throw Error(ErrorCode::EmptyReport, "report has no rows");
}

} // namespace

EvaluationReport make_report(const Annotation& annotation, const TurnEvaluation& evaluation,
                             std::optional<std::string> timestamp) {
    EvaluationReport report;
    report.turn_id = evaluation.turn_id;
    report.s_original = evaluation.s_original;
    report.nugget_count = evaluation.nugget_count;
    report.config = evaluation.config;
    report.scorer_identity = evaluation.scorer_identity;
    report.timestamp = timestamp ? std::move(*timestamp) : utc_now();

    for (const auto& b : evaluation.breakdowns) {
        const Nugget* n = annotation.turn.find_nugget(b.nugget_id);
        if (n == nullptr) {
            throw Error(ErrorCode::UnknownNugget, "evaluation names unknown nugget '" + b.nugget_id + "'");
        }
        ReportRow row{n->id, n->text, n->act, n->position, {}, {}, b};
        for (const auto& set : annotation.candidates) {
            if (set.nugget_id != n->id) continue;
            row.diff_candidates = set.diff_candidates;
            row.same_candidates = set.same_candidates;
        }
        report.rows.push_back(std::move(row));
    }
    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [](const ReportRow& a, const ReportRow& b) { return a.position < b.position; });
    return report;
}

ordered_json report_to_json(const EvaluationReport& report) {
    ordered_json out;
    out["turn_id"] = report.turn_id;
    out["timestamp"] = report.timestamp;
    out["scorer"] = report.scorer_identity;
    out["config"] = config_to_json(report.config);
    out["nugget_count"] = report.nugget_count;
    out["s_original"] = report.s_original;

    ordered_json rows = ordered_json::array();
    for (const auto& row : report.rows) {
        const auto& b = row.breakdown;
        ordered_json diff = ordered_json::array();
        for (const auto& s : b.diff_scores) {
            ordered_json entry = {{"index", s.index}, {"score", s.score}};
            if (s.index < row.diff_candidates.size()) {
                entry["act"] = row.diff_candidates[s.index].act;
                entry["text"] = row.diff_candidates[s.index].text;
            }
            diff.push_back(std::move(entry));
        }
        ordered_json same = ordered_json::array();
        for (const auto& s : b.same_scores) {
            ordered_json entry = {{"index", s.index}, {"score", s.score}};
            if (s.index < row.same_candidates.size()) entry["text"] = row.same_candidates[s.index];
            same.push_back(std::move(entry));
        }

        ordered_json r;
        r["position"] = row.position;
        r["nugget_id"] = row.nugget_id;
        r["text"] = row.nugget_text;
        r["act"] = row.act;
        r["s_original"] = b.s_original;
        r["s_deleted"] = b.s_deleted;
        r["diff_scores"] = std::move(diff);
        r["same_scores"] = std::move(same);
        r["selected_diff"] = indices(b.selected_diff);
        r["selected_same"] = indices(b.selected_same);
        r["effective_k"] = b.effective_k;
        r["effective_l"] = b.effective_l;
        r["d_phi"] = b.d_phi;
        r["md_diff"] = optional_number(b.md_diff);
        r["md_same"] = optional_number(b.md_same);
        r["weighted_sum"] = b.weighted_sum;
        r["ns"] = b.ns;
        rows.push_back(std::move(r));
    }
    out["nuggets"] = std::move(rows);
    return out;
}

std::string render_report(const EvaluationReport& report, ReportFormat format) {
    require_rows(report);
    switch (format) {
        case ReportFormat::Json:
            return report_to_json(report).dump(2) + "\n";
        case ReportFormat::Csv: {
            std::string out = "nugget_id,act,d_phi,md_diff,md_same,ns\n";
            for (const auto& row : report.rows) {
                const auto& b = row.breakdown;
                out += csv_field(row.nugget_id) + "," + csv_field(row.act) + "," + fixed4(b.d_phi) +
                       "," + (b.md_diff ? fixed4(*b.md_diff) : "") + "," +
                       (b.md_same ? fixed4(*b.md_same) : "") + "," + fixed4(b.ns) + "\n";
            }
            return out;
        }
        case ReportFormat::Markdown: {
            std::string out = "| Nugget | NS(T, n) |\n|:------:|:--------:|\n";
            for (const auto& row : report.rows) {
                out += "| " + nugget_marker(row.position) + " | " + fixed4(row.breakdown.ns) + " |\n";
            }
            return out;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown report format");
}

void write_report(const EvaluationReport& report, ReportFormat format, const std::string& path) {
    write_file_atomic(path, render_report(report, format));
}

} // namespace nuggetscore
