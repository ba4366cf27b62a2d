#include "nuggetscore/core_model.hpp"

#include <array>
#include <cmath>
#include <set>
#include <unordered_set>

#include "nuggetscore/perturbation.hpp"

namespace nuggetscore {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::IoError: return "IO_ERROR";
        case ErrorCode::ParseError: return "PARSE_ERROR";
        case ErrorCode::ValidationError: return "VALIDATION_ERROR";
        case ErrorCode::UnknownNugget: return "UNKNOWN_NUGGET";
        case ErrorCode::NonFiniteScore: return "NON_FINITE_SCORE";
        case ErrorCode::EmptyCandidates: return "EMPTY_CANDIDATES";
        case ErrorCode::EmptyTurnPerturbation: return "EMPTY_TURN_PERTURBATION";
        case ErrorCode::ScorerFailure: return "SCORER_FAILURE";
        case ErrorCode::ScorerTimeout: return "SCORER_TIMEOUT";
        case ErrorCode::ScorerProtocol: return "SCORER_PROTOCOL";
        case ErrorCode::ScorerRejected: return "SCORER_REJECTED";
        case ErrorCode::EmptyReport: return "EMPTY_REPORT";
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    }
    return "UNKNOWN";
}

namespace {

constexpr std::array<DialogueAct, 24> kCatalog{{
    {"agreement", "Agreement", "I agree"},
    {"disagreement", "Disagreement", "I disagree"},
    {"yes_answer", "Yes Answer", "Yes, you are correct"},
    {"no_answer", "No Answer", "No, that is wrong"},
    {"opening", "Opening", "Hello"},
    {"closing", "Closing", "It was nice talking with you."},
    {"apology", "Apology", "I am sorry"},
    {"thanking", "Thanking", "Thank you"},
    {"rejection", "Rejection", "I cannot provide an answer."},
    {"applause", "Applause", "Well done."},
    {"declarative_question", "Declarative Question", "What do you mean by ...?"},
    {"confusion", "Confusion", "I don't understand"},
    {"reasoning", "Reasoning", "This is because ..."},
    {"downplayer", "Downplayer", "That's all right."},
    {"assumption", "Assumption", "I assume you meant ..."},
    {"acknowledgment", "Acknowledgment", "Ok."},
    {"clarification", "Clarification", "The pdf you provided me is ...."},
    {"non_declarative_question", "Non-Declarative Question", "Isn't it exciting?"},
    {"user_instruction", "User instruction", "Please click on ...."},
    {"recommendation", "Recommendation", "I would recommend...."},
    {"citation", "Citation", "According to ..."},
    {"example", "Example", "For example, ..."},
    {"commissive", "Commissive", "I am happy to help ..."},
    {"opinion", "Opinion", "I think ..."},
}};

bool is_blank(std::string_view text) {
    return text.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

std::string nugget_location(const Nugget& n) { return "nuggets[" + n.id + "]"; }

} // namespace

std::span<const DialogueAct> act_catalog() { return kCatalog; }

const DialogueAct* find_act(std::string_view id) {
    for (const auto& act : kCatalog) {
        if (act.id == id) return &act;
    }
    return nullptr;
}

std::string_view to_string(SpeakerRole role) {
    return role == SpeakerRole::User ? "user" : "system";
}

std::optional<SpeakerRole> parse_speaker_role(std::string_view text) {
    if (text == "user") return SpeakerRole::User;
    if (text == "system") return SpeakerRole::System;
    return std::nullopt;
}

const Nugget* AnnotatedTurn::find_nugget(std::string_view nugget_id) const {
    for (const auto& n : nuggets) {
        if (n.id == nugget_id) return &n;
    }
    return nullptr;
}

std::string_view to_string(Severity severity) {
    return severity == Severity::Error ? "error" : "warning";
}

bool ValidationReport::ok() const { return error_count() == 0; }

bool ValidationReport::has(std::string_view code) const {
    for (const auto& issue : issues) {
        if (issue.code == code) return true;
    }
    return false;
}

std::size_t ValidationReport::error_count() const {
    std::size_t count = 0;
    for (const auto& issue : issues) {
        if (issue.severity == Severity::Error) ++count;
    }
    return count;
}

void ValidationReport::error(std::string code, std::string message, std::string location) {
    issues.push_back({Severity::Error, std::move(code), std::move(message), std::move(location)});
}

void ValidationReport::warning(std::string code, std::string message, std::string location) {
    issues.push_back({Severity::Warning, std::move(code), std::move(message), std::move(location)});
}

void ValidationReport::merge(const ValidationReport& other) {
    issues.insert(issues.end(), other.issues.begin(), other.issues.end());
}

std::string ValidationReport::summary() const {
    std::string out;
    for (const auto& issue : issues) {
        out += to_string(issue.severity);
        out += ' ';
        out += issue.code;
        if (!issue.location.empty()) {
            out += " at ";
            out += issue.location;
        }
        out += ": ";
        out += issue.message;
        out += '\n';
    }
    return out;
}

ValidationError::ValidationError(ValidationReport report)
    : Error(ErrorCode::ValidationError,
            "validation failed:\n" + report.summary()),
      report_(std::move(report)) {}

ValidationReport validate_annotation(const AnnotatedTurn& turn,
                                     std::span<const CandidateSet> candidates) {
    ValidationReport report;

    if (turn.nuggets.empty()) {
        report.error("EMPTY_TURN", "turn has no nuggets", "nuggets");
        return report;
    }

    std::unordered_set<std::string> ids;
    std::vector<bool> seen_position(turn.nuggets.size(), false);
    for (const auto& n : turn.nuggets) {
        if (n.id.empty()) {
            report.error("EMPTY_NUGGET_ID", "nugget id is empty", "nuggets");
        } else if (!ids.insert(n.id).second) {
            report.error("DUPLICATE_NUGGET_ID", "nugget id '" + n.id + "' is used twice",
                         nugget_location(n));
        }
        if (is_blank(n.text)) {
            report.error("EMPTY_NUGGET_TEXT", "nugget text is empty", nugget_location(n));
        }
        if (find_act(n.act) == nullptr) {
            report.error("UNKNOWN_ACT", "act '" + n.act + "' is not in the catalog",
                         nugget_location(n));
        }
        if (n.position >= turn.nuggets.size() || seen_position[n.position]) {
            report.error("BAD_POSITION",
                         "positions must be 0..N-1 without gaps or duplicates",
                         nugget_location(n));
        } else {
            seen_position[n.position] = true;
        }
    }

    std::set<std::string> with_candidates;
    for (std::size_t s = 0; s < candidates.size(); ++s) {
        const auto& set = candidates[s];
        const std::string where = "candidates[" + set.nugget_id + "]";
        const Nugget* original = turn.find_nugget(set.nugget_id);
        if (original == nullptr) {
            report.error("UNKNOWN_NUGGET",
                         "candidate set references unknown nugget '" + set.nugget_id + "'",
                         where);
            continue;
        }
        if (!with_candidates.insert(set.nugget_id).second) {
            report.error("DUPLICATE_CANDIDATE_SET",
                         "more than one candidate set for nugget '" + set.nugget_id + "'",
                         where);
        }

        std::set<std::string> diff_acts;
        for (std::size_t i = 0; i < set.diff_candidates.size(); ++i) {
            const auto& cand = set.diff_candidates[i];
            const std::string at = where + ".diff[" + std::to_string(i) + "]";
            if (find_act(cand.act) == nullptr) {
                report.error("UNKNOWN_ACT", "act '" + cand.act + "' is not in the catalog", at);
            } else if (cand.act == original->act) {
                report.error("DUPLICATE_ACT_AS_ORIGINAL",
                             "diff candidate shares the original act '" + cand.act + "'", at);
            } else if (!diff_acts.insert(cand.act).second) {
                report.error("DUPLICATE_DIFF_ACT",
                             "more than one diff candidate with act '" + cand.act + "'", at);
            }
            if (is_blank(cand.text)) {
                report.error("EMPTY_CANDIDATE_TEXT", "candidate text is empty", at);
            }
        }
        for (std::size_t i = 0; i < set.same_candidates.size(); ++i) {
            const auto& text = set.same_candidates[i];
            const std::string at = where + ".same[" + std::to_string(i) + "]";
            if (is_blank(text)) {
                report.error("EMPTY_CANDIDATE_TEXT", "candidate text is empty", at);
            } else if (text == original->text) {
                report.error("SAME_EQUALS_ORIGINAL",
                             "same-act candidate repeats the original text", at);
            }
        }
        if (set.diff_candidates.empty()) {
            report.warning("NO_DIFF_CANDIDATES", "nugget has no diff candidates", where);
        }
        if (set.same_candidates.empty()) {
            report.warning("NO_SAME_CANDIDATES", "nugget has no same candidates", where);
        }
    }
    for (const auto& n : turn.nuggets) {
        if (!n.id.empty() && with_candidates.count(n.id) == 0) {
            report.warning("NO_CANDIDATES", "nugget has no candidate set; only deletion applies",
                           nugget_location(n));
        }
    }

    if (turn.canonical_text && report.ok()) {
        const std::string rendered = render_turn(turn.nuggets);
        if (rendered != *turn.canonical_text) {
            report.warning("CANONICAL_TEXT_MISMATCH",
                           "rendered nuggets do not reproduce canonical_text: \"" + rendered +
                               "\"",
                           "canonical_text");
        }
    }
    return report;
}

ValidationReport validate_config(const ScoringConfig& cfg) {
    ValidationReport report;
    if (cfg.k < 1) report.error("K_RANGE", "k must be at least 1", "k");
    if (cfg.l < 1) report.error("L_RANGE", "l must be at least 1", "l");

    const bool finite = std::isfinite(cfg.w_phi) && std::isfinite(cfg.w_diff) &&
                        std::isfinite(cfg.w_same);
    if (!finite) {
        report.error("WEIGHT_RANGE", "weights must be finite", "weights");
    } else {
        if (cfg.w_phi < 0 || cfg.w_diff < 0 || cfg.w_same < 0) {
            report.error("WEIGHT_RANGE", "weights must be nonnegative", "weights");
        }
        if (cfg.w_phi < cfg.w_diff || cfg.w_diff < cfg.w_same) {
            report.error("WEIGHT_ORDER", "weights must satisfy w_phi >= w_diff >= w_same",
                         "weights");
        }
    }
    if (!(cfg.sigmoid_slope > 0) || !std::isfinite(cfg.sigmoid_slope)) {
        report.error("SLOPE_RANGE", "sigmoid_slope must be a positive finite number",
                     "sigmoid_slope");
    }
    if (cfg.length_scaling.reference_length && *cfg.length_scaling.reference_length == 0) {
        report.error("REFERENCE_LENGTH_RANGE", "reference_length must be positive",
                     "length_scaling");
    }
    return report;
}

} // namespace nuggetscore
