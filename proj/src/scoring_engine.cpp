#include "nuggetscore/scoring_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace nuggetscore {

double delta_deletion(double s_original, double s_deleted) {
    if (!std::isfinite(s_original) || !std::isfinite(s_deleted)) {
        throw Error(ErrorCode::NonFiniteScore, "deletion delta needs finite scores");
    }
    return s_original - s_deleted;
}

std::vector<IndexedScore> top_k_select(std::span<const IndexedScore> scores, std::size_t k) {
    std::vector<IndexedScore> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end(), [](const IndexedScore& a, const IndexedScore& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.index < b.index;
    });
    if (sorted.size() > k) sorted.resize(k);
    return sorted;
}

namespace {

SubstitutionAggregate mean_substitution(double s_original, std::span<const IndexedScore> scores,
                                        std::size_t count, const char* kind) {
    if (scores.empty()) {
        throw Error(ErrorCode::EmptyCandidates, std::string("no ") + kind + " candidates to average");
    }
    if (!std::isfinite(s_original)) {
        throw Error(ErrorCode::NonFiniteScore, "original turn score is not finite");
    }
    SubstitutionAggregate agg;
    agg.selected = top_k_select(scores, count);
    agg.effective_count = agg.selected.size();
    // Summed in descending-score order so the result is independent of input order.
    double sum = 0.0;
    for (const auto& s : agg.selected) {
        if (!std::isfinite(s.score)) {
            throw Error(ErrorCode::NonFiniteScore, std::string(kind) + " score is not finite");
        }
        sum += s_original - s.score;
    }
    agg.mean_difference = sum / static_cast<double>(agg.effective_count);
    return agg;
}

} // namespace

SubstitutionAggregate mean_diff_substitution(double s_original,
                                             std::span<const IndexedScore> diff_scores,
                                             std::size_t k) {
    return mean_substitution(s_original, diff_scores, k, "diff");
}

SubstitutionAggregate mean_same_substitution(double s_original,
                                             std::span<const IndexedScore> same_scores,
                                             std::size_t l) {
    return mean_substitution(s_original, same_scores, l, "same");
}

double sigmoid(double x, double slope) {
    const double z = slope * x;
    const double value = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    constexpr double lo = std::numeric_limits<double>::denorm_min();
    const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(value, lo, hi);
}

EffectiveWeights effective_weights(const ScoringConfig& cfg, std::size_t nugget_count) {
    EffectiveWeights w{cfg.w_phi, cfg.w_diff, cfg.w_same};
    if (cfg.length_scaling.enabled()) {
        const double factor = static_cast<double>(nugget_count) /
                              static_cast<double>(*cfg.length_scaling.reference_length);
        w.w_phi *= factor;
        w.w_diff *= factor;
        w.w_same *= factor;
    }
    return w;
}

namespace {

double weighted_sum(double d_phi, std::optional<double> md_diff, std::optional<double> md_same,
                    const ScoringConfig& cfg, std::size_t nugget_count) {
    const auto w = effective_weights(cfg, nugget_count);
    return w.w_phi * d_phi + w.w_diff * md_diff.value_or(0.0) + w.w_same * md_same.value_or(0.0);
}

} // namespace

double nugget_score(double d_phi, std::optional<double> md_diff, std::optional<double> md_same,
                    const ScoringConfig& cfg, std::size_t nugget_count) {
    return sigmoid(weighted_sum(d_phi, md_diff, md_same, cfg, nugget_count), cfg.sigmoid_slope);
}

ScoreBreakdown compute_breakdown(std::string nugget_id, double s_original, double s_deleted,
                                 std::vector<IndexedScore> diff_scores,
                                 std::vector<IndexedScore> same_scores, const ScoringConfig& cfg,
                                 std::size_t nugget_count) {
    ScoreBreakdown b;
    b.nugget_id = std::move(nugget_id);
    b.s_original = s_original;
    b.s_deleted = s_deleted;
    b.d_phi = delta_deletion(s_original, s_deleted);
    b.diff_scores = std::move(diff_scores);
    b.same_scores = std::move(same_scores);

    if (!b.diff_scores.empty()) {
        auto agg = mean_diff_substitution(s_original, b.diff_scores, static_cast<std::size_t>(cfg.k));
        b.md_diff = agg.mean_difference;
        b.selected_diff = std::move(agg.selected);
        b.effective_k = agg.effective_count;
    }
    if (!b.same_scores.empty()) {
        auto agg = mean_same_substitution(s_original, b.same_scores, static_cast<std::size_t>(cfg.l));
        b.md_same = agg.mean_difference;
        b.selected_same = std::move(agg.selected);
        b.effective_l = agg.effective_count;
    }
    b.weighted_sum = weighted_sum(b.d_phi, b.md_diff, b.md_same, cfg, nugget_count);
    b.ns = sigmoid(b.weighted_sum, cfg.sigmoid_slope);
    return b;
}

namespace {

std::string describe(const PerturbedTurn& entry) {
    std::string out = "nugget '" + entry.nugget_id + "' " + std::string(to_string(entry.kind));
    if (entry.candidate_index) out += "[" + std::to_string(*entry.candidate_index) + "]";
    return out;
}

void check_inputs(const AnnotatedTurn& turn, std::span<const CandidateSet> candidates,
                  const ScoringConfig& cfg) {
    ValidationReport report = validate_annotation(turn, candidates);
    report.merge(validate_config(cfg));
    if (!report.ok()) throw ValidationError(std::move(report));
}

struct ScoredPlan {
    double s_original = 0.0;
    /// Parallel to the entries that were scored.
    std::vector<double> entry_scores;
};

/// Scores T and the given entries, issuing one request per distinct text.
ScoredPlan score_entries(const AnnotatedTurn& turn, const std::string& original_text,
                         std::span<const PerturbedTurn* const> entries, const ScoringConfig& cfg,
                         Scorer& scorer) {
    std::unordered_map<std::string, std::size_t> slot_of;
    std::vector<ScorerRequest> requests;
    std::vector<std::string> first_user;

    auto slot_for = [&](const std::string& text, std::string user) {
        auto [it, inserted] = slot_of.try_emplace(text, requests.size());
        if (inserted) {
            requests.push_back({"q" + std::to_string(requests.size()), text, turn.context});
            first_user.push_back(std::move(user));
        }
        return it->second;
    };

    const std::size_t original_slot = slot_for(original_text, "original turn");
    std::vector<std::size_t> entry_slots;
    entry_slots.reserve(entries.size());
    for (const PerturbedTurn* entry : entries) {
        if (entry->text.empty() && !cfg.score_empty_turn) {
            throw Error(ErrorCode::EmptyTurnPerturbation,
                        describe(*entry) + " leaves an empty turn and empty-turn scoring is disabled");
        }
        entry_slots.push_back(slot_for(entry->text, describe(*entry)));
    }

    const auto results = scorer.score_batch(requests);
    if (results.size() != requests.size()) {
        throw Error(ErrorCode::ScorerFailure, "scorer returned " + std::to_string(results.size()) +
                                                  " results for " +
                                                  std::to_string(requests.size()) + " requests",
                    ErrorCode::ScorerProtocol);
    }
    std::vector<double> values(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        if (r.error || !r.score) {
            const ScorerFault fault = r.error.value_or(ScorerFault{ErrorCode::ScorerProtocol, "no score"});
            throw Error(ErrorCode::ScorerFailure,
                        "scoring " + first_user[i] + " failed: " + std::string(to_string(fault.code)) +
                            ": " + fault.message + " (text: \"" + requests[i].turn_text + "\")",
                        fault.code);
        }
        if (!std::isfinite(*r.score)) {
            throw Error(ErrorCode::ScorerFailure,
                        "scoring " + first_user[i] + " returned a non-finite score",
                        ErrorCode::NonFiniteScore);
        }
        values[i] = *r.score;
    }

    ScoredPlan scored;
    scored.s_original = values[original_slot];
    scored.entry_scores.reserve(entries.size());
    for (std::size_t slot : entry_slots) scored.entry_scores.push_back(values[slot]);
    return scored;
}

/// Folds the scored entries of one nugget (deletion first) into its breakdown.
ScoreBreakdown fold_nugget(const std::string& nugget_id, double s_original,
                           std::span<const PerturbedTurn* const> entries,
                           std::span<const double> scores, const ScoringConfig& cfg,
                           std::size_t nugget_count) {
    double s_deleted = 0.0;
    std::vector<IndexedScore> diff;
    std::vector<IndexedScore> same;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const PerturbedTurn& e = *entries[i];
        switch (e.kind) {
            case PerturbationKind::Deletion: s_deleted = scores[i]; break;
            case PerturbationKind::DiffSubstitution: diff.push_back({*e.candidate_index, scores[i]}); break;
            case PerturbationKind::SameSubstitution: same.push_back({*e.candidate_index, scores[i]}); break;
        }
    }
    return compute_breakdown(nugget_id, s_original, s_deleted, std::move(diff), std::move(same), cfg,
                             nugget_count);
}

} // namespace

TurnEvaluation evaluate_turn(const AnnotatedTurn& turn, std::span<const CandidateSet> candidates,
                             const ScoringConfig& cfg, Scorer& scorer) {
    check_inputs(turn, candidates, cfg);
    const PerturbationPlan plan = enumerate_perturbations(turn, candidates);

    std::vector<const PerturbedTurn*> entries;
    entries.reserve(plan.entries.size());
    for (const auto& e : plan.entries) entries.push_back(&e);
    const ScoredPlan scored = score_entries(turn, plan.original_text, entries, cfg, scorer);

    TurnEvaluation eval;
    eval.turn_id = turn.turn_id;
    eval.s_original = scored.s_original;
    eval.nugget_count = turn.nuggets.size();
    eval.config = cfg;
    eval.scorer_identity = scorer.identity();

    // Plan entries are grouped per nugget, each group opening with its deletion.
    std::size_t begin = 0;
    while (begin < entries.size()) {
        std::size_t end = begin + 1;
        while (end < entries.size() && entries[end]->kind != PerturbationKind::Deletion) ++end;
        eval.breakdowns.push_back(fold_nugget(
            entries[begin]->nugget_id, scored.s_original,
            std::span(entries).subspan(begin, end - begin),
            std::span(scored.entry_scores).subspan(begin, end - begin), cfg, eval.nugget_count));
        begin = end;
    }
    return eval;
}

ScoreBreakdown evaluate_nugget(const AnnotatedTurn& turn, std::span<const CandidateSet> candidates,
                               std::string_view nugget_id, const ScoringConfig& cfg,
                               Scorer& scorer) {
    check_inputs(turn, candidates, cfg);
    if (turn.find_nugget(nugget_id) == nullptr) {
        throw Error(ErrorCode::UnknownNugget, "no nugget '" + std::string(nugget_id) + "'");
    }
    const PerturbationPlan plan = enumerate_perturbations(turn, candidates);

    std::vector<const PerturbedTurn*> entries;
    for (const auto& e : plan.entries) {
        if (e.nugget_id == nugget_id) entries.push_back(&e);
    }
    const ScoredPlan scored = score_entries(turn, plan.original_text, entries, cfg, scorer);
    return fold_nugget(std::string(nugget_id), scored.s_original, entries, scored.entry_scores, cfg,
                       turn.nuggets.size());
}

} // namespace nuggetscore
