#include "nuggetscore/perturbation.hpp"

#include <algorithm>
#include <numeric>

namespace nuggetscore {

std::string_view to_string(PerturbationKind kind) {
    switch (kind) {
        case PerturbationKind::Deletion: return "deletion";
        case PerturbationKind::DiffSubstitution: return "diff";
        case PerturbationKind::SameSubstitution: return "same";
    }
    return "unknown";
}

namespace {

std::vector<std::size_t> position_order(std::span<const Nugget> nuggets) {
    std::vector<std::size_t> order(nuggets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return nuggets[a].position < nuggets[b].position;
    });
    return order;
}

} // namespace

std::string render_turn(std::span<const Nugget> nuggets, const std::optional<SlotOverride>& slot) {
    std::string out;
    bool first = true;
    for (std::size_t idx : position_order(nuggets)) {
        const Nugget& n = nuggets[idx];
        const std::string* piece = &n.text;
        if (slot && slot->position == n.position) {
            if (!slot->replacement) continue;
            piece = &*slot->replacement;
        }
        if (!first) out += ' ';
        out += *piece;
        first = false;
    }
    return out;
}

PerturbationPlan enumerate_perturbations(const AnnotatedTurn& turn,
                                         std::span<const CandidateSet> candidates) {
    for (const auto& set : candidates) {
        if (turn.find_nugget(set.nugget_id) == nullptr) {
            throw Error(ErrorCode::UnknownNugget,
                        "candidate set references unknown nugget '" + set.nugget_id + "'");
        }
    }

    PerturbationPlan plan;
    plan.original_text = render_turn(turn.nuggets);

    for (std::size_t idx : position_order(turn.nuggets)) {
        const Nugget& n = turn.nuggets[idx];
        plan.entries.push_back({PerturbationKind::Deletion, n.id, std::nullopt,
                                render_turn(turn.nuggets, SlotOverride::erase(n.position))});

        const auto set = std::find_if(candidates.begin(), candidates.end(),
                                      [&](const CandidateSet& c) { return c.nugget_id == n.id; });
        if (set == candidates.end()) continue;

        for (std::size_t i = 0; i < set->diff_candidates.size(); ++i) {
            plan.entries.push_back(
                {PerturbationKind::DiffSubstitution, n.id, i,
                 render_turn(turn.nuggets,
                             SlotOverride::replace(n.position, set->diff_candidates[i].text))});
        }
        for (std::size_t i = 0; i < set->same_candidates.size(); ++i) {
            plan.entries.push_back(
                {PerturbationKind::SameSubstitution, n.id, i,
                 render_turn(turn.nuggets,
                             SlotOverride::replace(n.position, set->same_candidates[i]))});
        }
    }
    return plan;
}

} // namespace nuggetscore
