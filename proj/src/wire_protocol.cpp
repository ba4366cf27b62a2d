#include <cmath>

#include <json.hpp>

#include "nuggetscore/scorer_gateway.hpp"

using json = nlohmann::json;

namespace nuggetscore::wire {

std::string encode_request(const ScorerRequest& request, std::string_view id) {
    nlohmann::ordered_json context = nlohmann::ordered_json::array();
    for (const auto& u : request.context) {
        context.push_back({{"role", to_string(u.role)}, {"text", u.text}});
    }
    nlohmann::ordered_json body = {{"id", id}, {"turn", request.turn_text}, {"context", std::move(context)}};
    return body.dump();
}

ScorerRequest decode_request(std::string_view body) {
    json parsed;
    try {
        parsed = json::parse(body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ScorerProtocol, std::string("malformed request: ") + e.what());
    }
    if (!parsed.is_object() || !parsed.contains("id") || !parsed["id"].is_string() ||
        !parsed.contains("turn") || !parsed["turn"].is_string()) {
        throw Error(ErrorCode::ScorerProtocol, "request needs string fields 'id' and 'turn'");
    }
    ScorerRequest request;
    request.request_id = parsed["id"].get<std::string>();
    request.turn_text = parsed["turn"].get<std::string>();
    if (parsed.contains("context")) {
        const auto& context = parsed["context"];
        if (!context.is_array()) {
            throw Error(ErrorCode::ScorerProtocol, "'context' must be an array");
        }
        for (const auto& item : context) {
            if (!item.is_object() || !item.contains("role") || !item["role"].is_string() ||
                !item.contains("text") || !item["text"].is_string()) {
                throw Error(ErrorCode::ScorerProtocol, "context entries need 'role' and 'text'");
            }
            auto role = parse_speaker_role(item["role"].get<std::string>());
            if (!role) throw Error(ErrorCode::ScorerProtocol, "context role must be user|system");
            request.context.push_back({*role, item["text"].get<std::string>()});
        }
    }
    return request;
}

std::string encode_score(std::string_view id, double score) {
    return nlohmann::ordered_json{{"id", id}, {"score", score}}.dump();
}

std::string encode_error(std::string_view id, std::string_view code, std::string_view message) {
    return nlohmann::ordered_json{{"id", id}, {"error", {{"code", code}, {"message", message}}}}.dump();
}

Response decode_response(std::string_view body) {
    json parsed;
    try {
        parsed = json::parse(body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ScorerProtocol, std::string("malformed response: ") + e.what());
    }
    if (!parsed.is_object() || !parsed.contains("id") || !parsed["id"].is_string()) {
        throw Error(ErrorCode::ScorerProtocol, "response has no string 'id'");
    }

    Response response;
    response.id = parsed["id"].get<std::string>();
    const bool has_score = parsed.contains("score");
    const bool has_error = parsed.contains("error");
    if (has_score == has_error) {
        throw Error(ErrorCode::ScorerProtocol,
                    "response '" + response.id + "' must carry exactly one of score/error");
    }
    if (has_score) {
        const auto& value = parsed["score"];
        if (!value.is_number()) {
            throw Error(ErrorCode::ScorerProtocol,
                        "response '" + response.id + "' score is not a number");
        }
        response.score = value.get<double>();
        return response;
    }

    const auto& err = parsed["error"];
    std::string code = "UNKNOWN";
    std::string message;
    if (err.is_object()) {
        if (err.contains("code") && err["code"].is_string()) code = err["code"].get<std::string>();
        if (err.contains("message") && err["message"].is_string()) {
            message = err["message"].get<std::string>();
        }
    } else if (err.is_string()) {
        message = err.get<std::string>();
    }
    response.error = ScorerFault{ErrorCode::ScorerRejected, code + ": " + message};
    return response;
}

} // namespace nuggetscore::wire
