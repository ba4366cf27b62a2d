#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nuggetscore/core_model.hpp"
#include "nuggetscore/scoring_engine.hpp"

namespace nuggetscore {

struct Annotation {
    AnnotatedTurn turn;
    std::vector<CandidateSet> candidates;

    bool operator==(const Annotation&) const = default;
};

/// Parses the annotation schema:
///   {"turn_id", "context": [{"role","text"}], "canonical_text"?,
///    "nuggets": [{"id","text","act"}],
///    "candidates": {"<nugget_id>": {"diff": [{"act","text"}], "same": ["text"]}}}
/// Throws Error(ParseError) with line/column, or ValidationError.
Annotation parse_annotation(std::string_view json_text);
Annotation load_annotation(const std::string& path);

nlohmann::ordered_json annotation_to_json(const Annotation& annotation);
void save_annotation(const Annotation& annotation, const std::string& path);

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Command-line overrides; set fields win over the file.
struct ConfigOverrides {
    std::optional<long long> k;
    std::optional<long long> l;
    std::optional<double> w_phi;
    std::optional<double> w_diff;
    std::optional<double> w_same;
    std::optional<double> sigmoid_slope;
};

/// Applies the JSON object's fields on top of `base` without validating.
/// Unknown keys and wrong types are validation errors.
ScoringConfig apply_config_json(const nlohmann::json& object, ScoringConfig base = {});

/// Defaults, then the optional file, then overrides; the result must pass
/// validate_config or ValidationError is thrown.
ScoringConfig load_config(const std::optional<std::string>& path,
                          const ConfigOverrides& overrides = {});

nlohmann::ordered_json config_to_json(const ScoringConfig& cfg);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ReportRow {
    std::string nugget_id;
    std::string nugget_text;
    std::string act;
    std::size_t position = 0;
    std::vector<DiffCandidate> diff_candidates;
    std::vector<std::string> same_candidates;
    ScoreBreakdown breakdown;
};

struct EvaluationReport {
    std::string turn_id;
    std::vector<ReportRow> rows;
    double s_original = 0.0;
    std::size_t nugget_count = 0;
    ScoringConfig config;
    std::string scorer_identity;
    std::string timestamp;
};

enum class ReportFormat { Json, Csv, Markdown };

std::optional<ReportFormat> parse_report_format(std::string_view name);

/// Rows follow nugget position order. `timestamp` defaults to the current UTC time.
EvaluationReport make_report(const Annotation& annotation, const TurnEvaluation& evaluation,
                             std::optional<std::string> timestamp = std::nullopt);

nlohmann::ordered_json report_to_json(const EvaluationReport& report);
/// Throws Error(EmptyReport) when there are no rows.
std::string render_report(const EvaluationReport& report, ReportFormat format);
void write_report(const EvaluationReport& report, ReportFormat format, const std::string& path);

/// Writes via a temporary sibling file and rename.
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_text_file(const std::string& path);

} // namespace nuggetscore
