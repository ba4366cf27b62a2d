#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nuggetscore/scorer_gateway.hpp"

using json = nlohmann::json;

namespace nuggetscore {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// FNV-1a, only used to make file-backed identities content sensitive.
std::string content_digest(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::vector<ScoreResult> Scorer::score_batch(std::span<const ScorerRequest> requests) {
    std::vector<ScoreResult> results;
    results.reserve(requests.size());
    for (const auto& request : requests) {
        ScoreResult result{request.request_id, std::nullopt, std::nullopt};
        try {
            result.score = score(request);
        } catch (const Error& e) {
            result.error = ScorerFault{e.code(), e.what()};
        }
        results.push_back(std::move(result));
    }
    return results;
}

ConstantScorer::ConstantScorer(double value)
    : value_(value), identity_("builtin:constant:" + format_value(value)) {
    if (!std::isfinite(value)) {
        throw Error(ErrorCode::InvalidArgument, "constant scorer value must be finite");
    }
}

double ConstantScorer::score(const ScorerRequest&) { return value_; }

LengthScorer::LengthScorer() : identity_("builtin:length") {}

std::size_t LengthScorer::token_count(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        const bool space = std::isspace(c) != 0;
        if (!space && !in_token) ++count;
        in_token = !space;
    }
    return count;
}

double LengthScorer::score(const ScorerRequest& request) {
    const auto w = static_cast<double>(token_count(request.turn_text));
    return w / (w + 20.0);
}

KeywordScorer::KeywordScorer(std::vector<std::string> keywords, std::string identity)
    : identity_(std::move(identity)) {
    for (auto& k : keywords) keywords_.push_back(lowercase(k));
    if (keywords_.empty()) {
        throw Error(ErrorCode::InvalidArgument, "keyword scorer needs at least one keyword");
    }
}

double KeywordScorer::score(const ScorerRequest& request) {
    const std::string haystack = lowercase(request.turn_text);
    std::size_t present = 0;
    for (const auto& k : keywords_) {
        if (haystack.find(k) != std::string::npos) ++present;
    }
    return static_cast<double>(present) / static_cast<double>(keywords_.size());
}

TableScorer::TableScorer(std::unordered_map<std::string, double> table, std::string identity)
    : table_(std::move(table)), identity_(std::move(identity)) {
    for (const auto& [text, value] : table_) {
        if (!std::isfinite(value)) {
            throw Error(ErrorCode::NonFiniteScore, "table entry for \"" + text + "\" is not finite");
        }
    }
}

double TableScorer::score(const ScorerRequest& request) {
    auto it = table_.find(request.turn_text);
    if (it == table_.end()) {
        throw Error(ErrorCode::ScorerRejected,
                    "table scorer has no entry for \"" + request.turn_text + "\"");
    }
    return it->second;
}

std::shared_ptr<TableScorer> load_table_scorer(const std::string& path) {
    const std::string bytes = read_file(path);
    json parsed;
    try {
        parsed = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, "table '" + path + "': " + e.what());
    }
    if (!parsed.is_object()) {
        throw Error(ErrorCode::ParseError, "table '" + path + "' must be a JSON object");
    }
    std::unordered_map<std::string, double> table;
    for (const auto& [text, value] : parsed.items()) {
        if (!value.is_number()) {
            throw Error(ErrorCode::ParseError,
                        "table '" + path + "': value for \"" + text + "\" is not a number");
        }
        table.emplace(text, value.get<double>());
    }
    return std::make_shared<TableScorer>(std::move(table),
                                         "builtin:table:" + path + "#" + content_digest(bytes));
}

std::shared_ptr<KeywordScorer> load_keyword_scorer(const std::string& path) {
    const std::string bytes = read_file(path);
    std::vector<std::string> keywords;
    std::istringstream lines(bytes);
    std::string line;
    while (std::getline(lines, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        keywords.push_back(line.substr(first, last - first + 1));
    }
    return std::make_shared<KeywordScorer>(std::move(keywords),
                                           "builtin:keyword:" + path + "#" + content_digest(bytes));
}

} // namespace nuggetscore
