#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nuggetscore/core_model.hpp"
#include "nuggetscore/perturbation.hpp"
#include "nuggetscore/scorer_gateway.hpp"

namespace nuggetscore {

struct IndexedScore {
    std::size_t index = 0;
    double score = 0.0;

    bool operator==(const IndexedScore&) const = default;
};

/// Mean of s(T) - s over the top-scoring substitutions.
struct SubstitutionAggregate {
    double mean_difference = 0.0;
    std::vector<IndexedScore> selected;
    std::size_t effective_count = 0;
};

struct ScoreBreakdown {
    std::string nugget_id;
    double s_original = 0.0;
    double s_deleted = 0.0;
    std::vector<IndexedScore> diff_scores;
    std::vector<IndexedScore> same_scores;
    std::vector<IndexedScore> selected_diff;
    std::vector<IndexedScore> selected_same;
    double d_phi = 0.0;
    std::optional<double> md_diff;
    std::optional<double> md_same;
    std::size_t effective_k = 0;
    std::size_t effective_l = 0;
    /// Pre-sigmoid weighted sum.
    double weighted_sum = 0.0;
    double ns = 0.5;
};

struct TurnEvaluation {
    std::string turn_id;
    double s_original = 0.0;
    std::size_t nugget_count = 0;
    /// In nugget position order.
    std::vector<ScoreBreakdown> breakdowns;
    ScoringConfig config;
    std::string scorer_identity;
};

/// s(T) - s(T with the nugget deleted). Throws NonFiniteScore.
double delta_deletion(double s_original, double s_deleted);

/// The min(k, n) largest scores, sorted descending; ties go to the lower index.
std::vector<IndexedScore> top_k_select(std::span<const IndexedScore> scores, std::size_t k);

/// Both throw EmptyCandidates for an empty score list.
SubstitutionAggregate mean_diff_substitution(double s_original,
                                             std::span<const IndexedScore> diff_scores,
                                             std::size_t k);
SubstitutionAggregate mean_same_substitution(double s_original,
                                             std::span<const IndexedScore> same_scores,
                                             std::size_t l);

/// 1 / (1 + exp(-slope * x)), kept strictly inside (0, 1).
double sigmoid(double x, double slope);

struct EffectiveWeights {
    double w_phi;
    double w_diff;
    double w_same;
};

/// Applies optional length scaling for a turn of `nugget_count` nuggets.
EffectiveWeights effective_weights(const ScoringConfig& cfg, std::size_t nugget_count);

/// Absent terms contribute zero to the weighted sum.
double nugget_score(double d_phi, std::optional<double> md_diff, std::optional<double> md_same,
                    const ScoringConfig& cfg, std::size_t nugget_count);

/// Assembles one breakdown from raw scores.
ScoreBreakdown compute_breakdown(std::string nugget_id, double s_original, double s_deleted,
                                 std::vector<IndexedScore> diff_scores,
                                 std::vector<IndexedScore> same_scores, const ScoringConfig& cfg,
                                 std::size_t nugget_count);

/// Scores T and every perturbation (each distinct text once) and folds the
/// results into per-nugget breakdowns. Throws ValidationError for bad input,
/// Error(ScorerFailure) naming the failing perturbation, and
/// Error(EmptyTurnPerturbation) when the empty turn must not be scored.
TurnEvaluation evaluate_turn(const AnnotatedTurn& turn, std::span<const CandidateSet> candidates,
                             const ScoringConfig& cfg, Scorer& scorer);

/// Same as evaluate_turn restricted to one nugget.
ScoreBreakdown evaluate_nugget(const AnnotatedTurn& turn, std::span<const CandidateSet> candidates,
                               std::string_view nugget_id, const ScoringConfig& cfg,
                               Scorer& scorer);

} // namespace nuggetscore
