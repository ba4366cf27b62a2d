#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nuggetscore/core_model.hpp"

namespace nuggetscore {

enum class PerturbationKind { Deletion, DiffSubstitution, SameSubstitution };

std::string_view to_string(PerturbationKind kind);

/// Replace (or, with no replacement, delete) the nugget at `position`.
struct SlotOverride {
    std::size_t position = 0;
    std::optional<std::string> replacement;

    static SlotOverride erase(std::size_t position) { return {position, std::nullopt}; }
    static SlotOverride replace(std::size_t position, std::string text) {
        return {position, std::move(text)};
    }
};

struct PerturbedTurn {
    PerturbationKind kind = PerturbationKind::Deletion;
    std::string nugget_id;
    std::optional<std::size_t> candidate_index;
    std::string text;
};

struct PerturbationPlan {
    std::string original_text;
    /// Ordered by nugget position, then deletion/diff/same, then candidate index.
    std::vector<PerturbedTurn> entries;
};

/// Joins nugget texts in position order with a single space. Texts are used
/// verbatim; no punctuation or capitalization repair.
std::string render_turn(std::span<const Nugget> nuggets,
                        const std::optional<SlotOverride>& slot = std::nullopt);

/// Throws Error(UnknownNugget) when a candidate set names a missing nugget.
PerturbationPlan enumerate_perturbations(const AnnotatedTurn& turn,
                                         std::span<const CandidateSet> candidates);

} // namespace nuggetscore
