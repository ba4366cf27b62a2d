#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nuggetscore/error.hpp"

namespace nuggetscore {

// ---------------------------------------------------------------------------
// Dialogue acts
// ---------------------------------------------------------------------------

struct DialogueAct {
    std::string_view id;
    std::string_view display_name;
    std::string_view example;
};

/// The closed catalog of 24 acts, in taxonomy order.
std::span<const DialogueAct> act_catalog();

/// nullptr when `id` is not in the catalog.
const DialogueAct* find_act(std::string_view id);

// ---------------------------------------------------------------------------
// Annotated turns
// ---------------------------------------------------------------------------

enum class SpeakerRole { User, System };

std::string_view to_string(SpeakerRole role);
std::optional<SpeakerRole> parse_speaker_role(std::string_view text);

struct Utterance {
    SpeakerRole role = SpeakerRole::User;
    std::string text;

    bool operator==(const Utterance&) const = default;
};

/// One segment of a system turn carrying a single dialogue act.
struct Nugget {
    std::string id;
    std::string text;
    std::string act;
    std::size_t position = 0;

    bool operator==(const Nugget&) const = default;
};

struct AnnotatedTurn {
    std::string turn_id;
    std::vector<Utterance> context;
    std::vector<Nugget> nuggets;
    /// When present, rendering the nuggets should reproduce it exactly.
    std::optional<std::string> canonical_text;

    bool operator==(const AnnotatedTurn&) const = default;

    const Nugget* find_nugget(std::string_view nugget_id) const;
};

struct DiffCandidate {
    std::string act;
    std::string text;

    bool operator==(const DiffCandidate&) const = default;
};

/// Authored replacements for one nugget. Same-act candidates inherit the
/// original nugget's act.
struct CandidateSet {
    std::string nugget_id;
    std::vector<DiffCandidate> diff_candidates;
    std::vector<std::string> same_candidates;

    bool operator==(const CandidateSet&) const = default;
};

// ---------------------------------------------------------------------------
// Scoring configuration
// ---------------------------------------------------------------------------

/// Opt-in linear weight scaling: W = w * nugget_count / reference_length.
struct LengthScaling {
    std::optional<std::size_t> reference_length;

    bool enabled() const { return reference_length.has_value(); }
    bool operator==(const LengthScaling&) const = default;
};

/// Defaults are the case-study parameters (K=5, L=3, w = {10, 5, 2}).
struct ScoringConfig {
    long long k = 5;
    long long l = 3;
    double w_phi = 10.0;
    double w_diff = 5.0;
    double w_same = 2.0;
    double sigmoid_slope = 1.0;
    LengthScaling length_scaling;
    /// Whether deleting the only nugget (yielding "") is sent to the scorer.
    bool score_empty_turn = true;

    bool operator==(const ScoringConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class Severity { Error, Warning };

std::string_view to_string(Severity severity);

struct ValidationIssue {
    Severity severity = Severity::Error;
    std::string code;
    std::string message;
    std::string location;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    /// True iff no error-severity issue is present.
    bool ok() const;
    bool has(std::string_view code) const;
    std::size_t error_count() const;

    void error(std::string code, std::string message, std::string location = {});
    void warning(std::string code, std::string message, std::string location = {});
    void merge(const ValidationReport& other);

    /// One line per issue: "error CODE at location: message".
    std::string summary() const;
};

/// Raised when a structural check fails; embeds the full report.
class ValidationError : public Error {
public:
    explicit ValidationError(ValidationReport report);

    const ValidationReport& report() const noexcept { return report_; }

private:
    ValidationReport report_;
};

/// Structural checks on a turn and its candidate sets. Problems are
/// reported, never thrown.
ValidationReport validate_annotation(const AnnotatedTurn& turn,
                                     std::span<const CandidateSet> candidates);

ValidationReport validate_config(const ScoringConfig& cfg);

} // namespace nuggetscore
