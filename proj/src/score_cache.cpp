#include <mutex>
#include <unordered_map>

#include "nuggetscore/scorer_gateway.hpp"

namespace nuggetscore {

CachedScorer::CachedScorer(std::shared_ptr<Scorer> inner) : inner_(std::move(inner)) {
    if (!inner_) throw Error(ErrorCode::InvalidArgument, "cannot cache a null scorer");
}

// Length-prefixed fields so no two (text, context) pairs share a key.
std::string CachedScorer::key_for(const ScorerRequest& request) const {
    std::string key;
    auto append = [&key](std::string_view field) {
        key += std::to_string(field.size());
        key += ':';
        key += field;
    };
    append(inner_->identity());
    append(request.turn_text);
    for (const auto& u : request.context) {
        append(to_string(u.role));
        append(u.text);
    }
    return key;
}

std::optional<double> CachedScorer::lookup(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void CachedScorer::store(std::string key, double value) {
    std::unique_lock lock(mutex_);
    entries_.insert_or_assign(std::move(key), value);
}

std::size_t CachedScorer::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

double CachedScorer::score(const ScorerRequest& request) {
    std::string key = key_for(request);
    if (auto hit = lookup(key)) {
        ++hits_;
        return *hit;
    }
    ++misses_;
    const double value = inner_->score(request);
    store(std::move(key), value);
    return value;
}

std::vector<ScoreResult> CachedScorer::score_batch(std::span<const ScorerRequest> requests) {
    std::vector<ScoreResult> results(requests.size());
    std::vector<std::string> keys(requests.size());

    // Misses are deduplicated so each distinct key reaches the scorer once.
    std::unordered_map<std::string, std::size_t> miss_slot;
    std::vector<ScorerRequest> misses;
    std::vector<std::size_t> waiting_on(requests.size(), 0);

    for (std::size_t i = 0; i < requests.size(); ++i) {
        results[i].request_id = requests[i].request_id;
        keys[i] = key_for(requests[i]);
        if (auto hit = lookup(keys[i])) {
            ++hits_;
            results[i].score = *hit;
            continue;
        }
        auto [it, inserted] = miss_slot.try_emplace(keys[i], misses.size());
        if (inserted) {
            ++misses_;
            misses.push_back(requests[i]);
        } else {
            ++hits_;
        }
        waiting_on[i] = it->second;
    }

    if (!misses.empty()) {
        auto fresh = inner_->score_batch(misses);
        for (std::size_t m = 0; m < misses.size(); ++m) {
            if (fresh[m].score) store(key_for(misses[m]), *fresh[m].score);
        }
        for (std::size_t i = 0; i < requests.size(); ++i) {
            if (results[i].score) continue;
            const auto& source = fresh[waiting_on[i]];
            results[i].score = source.score;
            results[i].error = source.error;
        }
    }
    return results;
}

std::shared_ptr<Scorer> cached(std::shared_ptr<Scorer> scorer) {
    return std::make_shared<CachedScorer>(std::move(scorer));
}

// ---------------------------------------------------------------------------

ScorerDescriptor parse_scorer_descriptor(std::string_view desc) {
    auto starts_with = [&desc](std::string_view prefix) {
        return desc.substr(0, prefix.size()) == prefix;
    };
    ScorerDescriptor d;
    if (starts_with("exec:")) {
        d.kind = ScorerKind::Exec;
        d.target = std::string(desc.substr(5));
        if (d.target.empty()) throw Error(ErrorCode::InvalidArgument, "exec scorer needs a command");
        d.identity = "exec:" + d.target;
        return d;
    }
    if (starts_with("http:") || starts_with("https:")) {
        d.kind = ScorerKind::Http;
        std::string_view rest = desc.substr(desc.find(':') + 1);
        if (rest.substr(0, 2) == "//") {
            d.target = std::string(desc);
        } else if (rest.find("://") != std::string_view::npos) {
            d.target = std::string(rest);
        } else {
            d.target = "http://" + std::string(rest);
        }
        if (d.target.substr(0, 8) == "https://") {
            throw Error(ErrorCode::InvalidArgument, "https scorers are not supported");
        }
        d.identity = "http:" + d.target;
        return d;
    }

    std::string_view builtin = starts_with("builtin:") ? desc.substr(8) : desc;
    d.kind = ScorerKind::Builtin;
    d.target = std::string(builtin);
    d.identity = "builtin:" + d.target;
    const auto name = builtin.substr(0, builtin.find(':'));
    if (name != "constant" && name != "length" && name != "keyword" && name != "table") {
        throw Error(ErrorCode::InvalidArgument,
                    "unknown scorer '" + std::string(desc) +
                        "' (expected constant:<v>, length, keyword:<file>, table:<file>, "
                        "exec:<command> or http:<url>)");
    }
    return d;
}

std::shared_ptr<Scorer> make_scorer(const ScorerDescriptor& descriptor,
                                    const ScorerOptions& options) {
    switch (descriptor.kind) {
        case ScorerKind::Exec:
            return std::make_shared<ExecScorer>(descriptor.target, options);
        case ScorerKind::Http:
            return std::make_shared<HttpScorer>(descriptor.target, options);
        case ScorerKind::Builtin: break;
    }

    const std::string& desc = descriptor.target;
    const auto colon = desc.find(':');
    const std::string name = desc.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string() : desc.substr(colon + 1);
    if (name == "length") return std::make_shared<LengthScorer>();
    if (name == "constant") {
        std::size_t used = 0;
        double value = 0;
        try {
            value = std::stod(arg, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (arg.empty() || used != arg.size()) {
            throw Error(ErrorCode::InvalidArgument, "constant scorer needs a number: '" + desc + "'");
        }
        return std::make_shared<ConstantScorer>(value);
    }
    if (arg.empty()) throw Error(ErrorCode::InvalidArgument, name + " scorer needs a file path");
    if (name == "table") return load_table_scorer(arg);
    if (name == "keyword") return load_keyword_scorer(arg);
    throw Error(ErrorCode::InvalidArgument, "unknown builtin scorer '" + desc + "'");
}

} // namespace nuggetscore
