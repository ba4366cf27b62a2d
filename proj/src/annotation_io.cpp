#include "nuggetscore/annotation_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace nuggetscore {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const std::string& path, std::string_view contents) {
    static std::atomic<unsigned> counter{0};
    const std::string tmp = path + ".tmp." + std::to_string(::getpid()) + "." +
                            std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error(ErrorCode::IoError, "short write to '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error(ErrorCode::IoError, "cannot replace '" + path + "': " + ec.message());
    }
}

namespace {

json parse_json(std::string_view text, std::string_view what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // Convert the byte offset to 1-based line/column.
        const std::size_t byte = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        std::size_t line = 1;
        std::size_t column = 1;
        for (std::size_t i = 0; i < byte; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw Error(ErrorCode::ParseError, std::string(what) + ": line " + std::to_string(line) +
                                               ", column " + std::to_string(column) + ": " +
                                               e.what());
    }
}

/// Collects schema problems rather than stopping at the first.
class SchemaReader {
public:
    ValidationReport report;

    const json* field(const json& object, const char* key, json::value_t type, const std::string& at,
                      bool required = true) {
        auto it = object.find(key);
        if (it == object.end()) {
            if (required) report.error("SCHEMA", std::string("missing field '") + key + "'", at);
            return nullptr;
        }
        if (it->type() != type) {
            report.error("SCHEMA", std::string("field '") + key + "' has the wrong type", at);
            return nullptr;
        }
        return &*it;
    }

    std::string string_field(const json& object, const char* key, const std::string& at) {
        const json* value = field(object, key, json::value_t::string, at);
        return value ? value->get<std::string>() : std::string();
    }
};

} // namespace

Annotation parse_annotation(std::string_view json_text) {
    const json doc = parse_json(json_text, "annotation");
    SchemaReader reader;
    Annotation out;

    if (!doc.is_object()) {
        reader.report.error("SCHEMA", "annotation must be a JSON object", "$");
        throw ValidationError(std::move(reader.report));
    }

    out.turn.turn_id = reader.string_field(doc, "turn_id", "$");
    if (const json* context = reader.field(doc, "context", json::value_t::array, "$", false)) {
        for (std::size_t i = 0; i < context->size(); ++i) {
            const auto& item = (*context)[i];
            const std::string at = "context[" + std::to_string(i) + "]";
            if (!item.is_object()) {
                reader.report.error("SCHEMA", "context entry must be an object", at);
                continue;
            }
            const std::string role_text = reader.string_field(item, "role", at);
            const auto role = parse_speaker_role(role_text);
            if (!role && !role_text.empty()) {
                reader.report.error("SCHEMA", "role must be 'user' or 'system'", at);
            }
            out.turn.context.push_back({role.value_or(SpeakerRole::User),
                                        reader.string_field(item, "text", at)});
        }
    }
    if (const json* canonical = reader.field(doc, "canonical_text", json::value_t::string, "$", false)) {
        out.turn.canonical_text = canonical->get<std::string>();
    }
    if (const json* nuggets = reader.field(doc, "nuggets", json::value_t::array, "$")) {
        for (std::size_t i = 0; i < nuggets->size(); ++i) {
            const auto& item = (*nuggets)[i];
            const std::string at = "nuggets[" + std::to_string(i) + "]";
            if (!item.is_object()) {
                reader.report.error("SCHEMA", "nugget must be an object", at);
                continue;
            }
            out.turn.nuggets.push_back({reader.string_field(item, "id", at),
                                        reader.string_field(item, "text", at),
                                        reader.string_field(item, "act", at), i});
        }
    }
    if (const json* candidates = reader.field(doc, "candidates", json::value_t::object, "$", false)) {
        for (const auto& [nugget_id, entry] : candidates->items()) {
            const std::string at = "candidates[" + nugget_id + "]";
            if (!entry.is_object()) {
                reader.report.error("SCHEMA", "candidate set must be an object", at);
                continue;
            }
            CandidateSet set;
            set.nugget_id = nugget_id;
            if (const json* diff = reader.field(entry, "diff", json::value_t::array, at, false)) {
                for (const auto& d : *diff) {
                    if (!d.is_object()) {
                        reader.report.error("SCHEMA", "diff candidate must be an object", at);
                        continue;
                    }
                    set.diff_candidates.push_back(
                        {reader.string_field(d, "act", at), reader.string_field(d, "text", at)});
                }
            }
            if (const json* same = reader.field(entry, "same", json::value_t::array, at, false)) {
                for (const auto& s : *same) {
                    if (!s.is_string()) {
                        reader.report.error("SCHEMA", "same candidate must be a string", at);
                        continue;
                    }
                    set.same_candidates.push_back(s.get<std::string>());
                }
            }
            out.candidates.push_back(std::move(set));
        }
    }

    // JSON objects are unordered; keep candidate sets in nugget order.
    auto rank = [&out](const CandidateSet& c) {
        const Nugget* n = out.turn.find_nugget(c.nugget_id);
        return n ? n->position : out.turn.nuggets.size();
    };
    std::stable_sort(out.candidates.begin(), out.candidates.end(),
                     [&](const CandidateSet& a, const CandidateSet& b) { return rank(a) < rank(b); });

    if (reader.report.ok()) {
        reader.report.merge(validate_annotation(out.turn, out.candidates));
    }
    if (!reader.report.ok()) throw ValidationError(std::move(reader.report));
    return out;
}

Annotation load_annotation(const std::string& path) {
    return parse_annotation(read_text_file(path));
}

ordered_json annotation_to_json(const Annotation& annotation) {
    const auto& turn = annotation.turn;
    ordered_json doc;
    doc["turn_id"] = turn.turn_id;
    doc["context"] = ordered_json::array();
    for (const auto& u : turn.context) {
        doc["context"].push_back({{"role", to_string(u.role)}, {"text", u.text}});
    }
    if (turn.canonical_text) doc["canonical_text"] = *turn.canonical_text;

    std::vector<const Nugget*> ordered;
    for (const auto& n : turn.nuggets) ordered.push_back(&n);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const Nugget* a, const Nugget* b) { return a->position < b->position; });
    doc["nuggets"] = ordered_json::array();
    for (const Nugget* n : ordered) {
        doc["nuggets"].push_back({{"id", n->id}, {"text", n->text}, {"act", n->act}});
    }

    doc["candidates"] = ordered_json::object();
    for (const auto& set : annotation.candidates) {
        ordered_json diff = ordered_json::array();
        for (const auto& d : set.diff_candidates) diff.push_back({{"act", d.act}, {"text", d.text}});
        doc["candidates"][set.nugget_id] = {{"diff", std::move(diff)},
                                            {"same", set.same_candidates}};
    }
    return doc;
}

void save_annotation(const Annotation& annotation, const std::string& path) {
    write_file_atomic(path, annotation_to_json(annotation).dump(2) + "\n");
}

// ---------------------------------------------------------------------------

ScoringConfig apply_config_json(const json& object, ScoringConfig cfg) {
    ValidationReport report;
    if (!object.is_object()) {
        report.error("SCHEMA", "config must be a JSON object", "$");
        throw ValidationError(std::move(report));
    }

    auto integer = [&](const std::string& key, const json& value, long long& target) {
        if (value.is_number_integer()) {
            target = value.get<long long>();
        } else if (value.is_number_float() && std::floor(value.get<double>()) == value.get<double>()) {
            target = static_cast<long long>(value.get<double>());
        } else {
            report.error("SCHEMA", "'" + key + "' must be an integer", key);
        }
    };
    auto real = [&](const std::string& key, const json& value, double& target) {
        if (value.is_number()) {
            target = value.get<double>();
        } else {
            report.error("SCHEMA", "'" + key + "' must be a number", key);
        }
    };

    for (const auto& [key, value] : object.items()) {
        if (key == "k") {
            integer(key, value, cfg.k);
        } else if (key == "l") {
            integer(key, value, cfg.l);
        } else if (key == "w_phi") {
            real(key, value, cfg.w_phi);
        } else if (key == "w_diff") {
            real(key, value, cfg.w_diff);
        } else if (key == "w_same") {
            real(key, value, cfg.w_same);
        } else if (key == "sigmoid_slope") {
            real(key, value, cfg.sigmoid_slope);
        } else if (key == "score_empty_turn") {
            if (value.is_boolean()) {
                cfg.score_empty_turn = value.get<bool>();
            } else {
                report.error("SCHEMA", "'score_empty_turn' must be a boolean", key);
            }
        } else if (key == "length_scaling") {
            // "off" | {"mode": "linear", "reference_length": n}
            if (value.is_string() && value.get<std::string>() == "off") {
                cfg.length_scaling = {};
            } else if (value.is_object() && value.value("mode", "") == "linear" &&
                       value.contains("reference_length") &&
                       value["reference_length"].is_number_integer() &&
                       value["reference_length"].get<long long>() > 0) {
                cfg.length_scaling.reference_length =
                    static_cast<std::size_t>(value["reference_length"].get<long long>());
            } else {
                report.error("REFERENCE_LENGTH_RANGE",
                             "length_scaling must be \"off\" or {\"mode\": \"linear\", "
                             "\"reference_length\": <positive integer>}",
                             key);
            }
        } else {
            report.error("UNKNOWN_CONFIG_KEY", "unknown config key '" + key + "'", key);
        }
    }
    if (!report.ok()) throw ValidationError(std::move(report));
    return cfg;
}

ScoringConfig load_config(const std::optional<std::string>& path, const ConfigOverrides& overrides) {
    ScoringConfig cfg;
    if (path) cfg = apply_config_json(parse_json(read_text_file(*path), "config"), cfg);
    if (overrides.k) cfg.k = *overrides.k;
    if (overrides.l) cfg.l = *overrides.l;
    if (overrides.w_phi) cfg.w_phi = *overrides.w_phi;
    if (overrides.w_diff) cfg.w_diff = *overrides.w_diff;
    if (overrides.w_same) cfg.w_same = *overrides.w_same;
    if (overrides.sigmoid_slope) cfg.sigmoid_slope = *overrides.sigmoid_slope;

    ValidationReport report = validate_config(cfg);
    if (!report.ok()) throw ValidationError(std::move(report));
    return cfg;
}

ordered_json config_to_json(const ScoringConfig& cfg) {
    ordered_json out;
    out["k"] = cfg.k;
    out["l"] = cfg.l;
    out["w_phi"] = cfg.w_phi;
    out["w_diff"] = cfg.w_diff;
    out["w_same"] = cfg.w_same;
    out["sigmoid_slope"] = cfg.sigmoid_slope;
    if (cfg.length_scaling.enabled()) {
        out["length_scaling"] = {{"mode", "linear"},
                                 {"reference_length", *cfg.length_scaling.reference_length}};
    } else {
        out["length_scaling"] = "off";
    }
    out["score_empty_turn"] = cfg.score_empty_turn;
    return out;
}

} // namespace nuggetscore
