#include "nuggetscore/service.hpp"

#include <algorithm>
#include <cctype>

#include <httplib.h>
#include <json.hpp>

#include "nuggetscore/annotation_io.hpp"
#include "nuggetscore/perturbation.hpp"
#include "nuggetscore/scoring_engine.hpp"

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace nuggetscore {

namespace {

ordered_json issues_json(const ValidationReport& report) {
    ordered_json out = ordered_json::array();
    for (const auto& issue : report.issues) {
        out.push_back({{"severity", to_string(issue.severity)},
                       {"code", issue.code},
                       {"message", issue.message},
                       {"location", issue.location}});
    }
    return out;
}

ServiceResponse error_response(int status, std::string_view code, const std::string& message,
                               const ValidationReport* report = nullptr) {
    ordered_json err = {{"code", code}, {"message", message}};
    if (report) err["issues"] = issues_json(*report);
    return {status, ordered_json{{"error", std::move(err)}}.dump()};
}

ServiceResponse ok_json(const ordered_json& body) { return {200, body.dump()}; }

struct BadRequest {
    ServiceResponse response;
};

json parse_body(std::string_view body) {
    try {
        json parsed = json::parse(body);
        if (!parsed.is_object()) {
            throw BadRequest{error_response(400, "PARSE_ERROR", "request body must be a JSON object")};
        }
        return parsed;
    } catch (const json::parse_error& e) {
        throw BadRequest{error_response(400, "PARSE_ERROR", e.what())};
    }
}

std::string require_string(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || !it->is_string()) {
        throw BadRequest{error_response(400, "SCHEMA", std::string("missing string field '") + key + "'")};
    }
    return it->get<std::string>();
}

ScoringConfig request_config(const json& body, const ScoringConfig& defaults) {
    ScoringConfig cfg = defaults;
    if (auto it = body.find("config"); it != body.end() && !it->is_null()) {
        try {
            cfg = apply_config_json(*it, defaults);
        } catch (const ValidationError& e) {
            throw BadRequest{error_response(422, "VALIDATION_ERROR", e.what(), &e.report())};
        }
    }
    ValidationReport report = validate_config(cfg);
    if (!report.ok()) {
        throw BadRequest{error_response(422, "VALIDATION_ERROR", "invalid config", &report)};
    }
    return cfg;
}

double score_or_throw(const ScoreResult& r, const std::string& what) {
    if (!r.score) {
        const auto fault = r.error.value_or(ScorerFault{ErrorCode::ScorerProtocol, "no score"});
        throw Error(ErrorCode::ScorerFailure,
                    "scoring " + what + " failed: " + std::string(to_string(fault.code)) + ": " +
                        fault.message,
                    fault.code);
    }
    return *r.score;
}

} // namespace

WorkbenchService::WorkbenchService(std::shared_ptr<Scorer> scorer, std::filesystem::path data_dir,
                                   ScoringConfig defaults)
    : scorer_(std::move(scorer)), data_dir_(std::move(data_dir)), defaults_(defaults) {
    std::filesystem::create_directories(data_dir_);
}

bool WorkbenchService::valid_annotation_id(std::string_view id) {
    if (id.empty() || id.size() > 128 || id.front() == '.') return false;
    return std::all_of(id.begin(), id.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-' || c == '.';
    });
}

std::filesystem::path WorkbenchService::path_for(std::string_view id) const {
    return data_dir_ / (std::string(id) + ".json");
}

ServiceResponse WorkbenchService::list_acts() const {
    ordered_json out = ordered_json::array();
    for (const auto& act : act_catalog()) {
        out.push_back({{"id", act.id}, {"display_name", act.display_name}, {"example", act.example}});
    }
    return ok_json(out);
}

ServiceResponse WorkbenchService::get_annotation(std::string_view id) const {
    if (!valid_annotation_id(id)) return error_response(400, "BAD_ID", "invalid annotation id");
    const auto path = path_for(id);
    if (!std::filesystem::exists(path)) {
        return error_response(404, "NOT_FOUND", "no annotation '" + std::string(id) + "'");
    }
    try {
        return {200, read_text_file(path.string())};
    } catch (const Error& e) {
        return error_response(500, to_string(e.code()), e.what());
    }
}

ServiceResponse WorkbenchService::put_annotation(std::string_view id, std::string_view body) {
    if (!valid_annotation_id(id)) return error_response(400, "BAD_ID", "invalid annotation id");
    ValidationReport warnings;
    try {
        const Annotation annotation = parse_annotation(body);
        warnings = validate_annotation(annotation.turn, annotation.candidates);
        write_file_atomic(path_for(id).string(), body);
    } catch (const ValidationError& e) {
        return error_response(400, "VALIDATION_ERROR", e.what(), &e.report());
    } catch (const Error& e) {
        return error_response(e.code() == ErrorCode::IoError ? 500 : 400, to_string(e.code()), e.what());
    }
    return ok_json({{"ok", true}, {"issues", issues_json(warnings)}});
}

ServiceResponse WorkbenchService::evaluate(std::string_view body) {
    try {
        const json request = parse_body(body);
        const std::string id = require_string(request, "annotation_id");
        const ScoringConfig cfg = request_config(request, defaults_);
        auto stored = get_annotation(id);
        if (stored.status != 200) return stored;

        const Annotation annotation = parse_annotation(stored.body);
        const TurnEvaluation eval = evaluate_turn(annotation.turn, annotation.candidates, cfg, *scorer_);
        return ok_json(report_to_json(make_report(annotation, eval)));
    } catch (const BadRequest& bad) {
        return bad.response;
    } catch (const ValidationError& e) {
        return error_response(400, "VALIDATION_ERROR", e.what(), &e.report());
    } catch (const Error& e) {
        const int status = e.code() == ErrorCode::ScorerFailure ? 502 : 400;
        const ErrorCode shown = e.cause().value_or(e.code());
        return error_response(status, to_string(shown), e.what());
    }
}

ServiceResponse WorkbenchService::whatif(std::string_view body) {
    try {
        const json request = parse_body(body);
        const std::string id = require_string(request, "annotation_id");
        const std::string nugget_id = require_string(request, "nugget_id");
        const std::string kind = require_string(request, "kind");
        const ScoringConfig cfg = request_config(request, defaults_);
        auto stored = get_annotation(id);
        if (stored.status != 200) return stored;
        const Annotation annotation = parse_annotation(stored.body);
        const AnnotatedTurn& turn = annotation.turn;

        const Nugget* nugget = turn.find_nugget(nugget_id);
        if (nugget == nullptr) {
            return error_response(400, "UNKNOWN_NUGGET", "no nugget '" + nugget_id + "'");
        }
        CandidateSet set{nugget_id, {}, {}};
        for (const auto& c : annotation.candidates) {
            if (c.nugget_id == nugget_id) set = c;
        }

        // The draft joins the candidate set provisionally. A diff draft
        // replaces any existing candidate of its act (one per act).
        std::optional<std::string> replacement;
        if (kind == "diff") {
            const auto it = request.find("candidate");
            if (it == request.end() || !it->is_object()) {
                return error_response(400, "SCHEMA", "diff what-if needs candidate {act, text}");
            }
            const std::string act = require_string(*it, "act");
            const std::string text = require_string(*it, "text");
            if (find_act(act) == nullptr) {
                return error_response(400, "UNKNOWN_ACT", "act '" + act + "' is not in the catalog");
            }
            if (act == nugget->act) {
                return error_response(400, "DUPLICATE_ACT_AS_ORIGINAL",
                                      "diff candidate must use a different act");
            }
            auto& diffs = set.diff_candidates;
            diffs.erase(std::remove_if(diffs.begin(), diffs.end(),
                                       [&](const DiffCandidate& d) { return d.act == act; }),
                        diffs.end());
            diffs.push_back({act, text});
            replacement = text;
        } else if (kind == "same") {
            const auto it = request.find("candidate");
            std::string text;
            if (it != request.end() && it->is_string()) {
                text = it->get<std::string>();
            } else if (it != request.end() && it->is_object()) {
                text = require_string(*it, "text");
            } else {
                return error_response(400, "SCHEMA", "same what-if needs a candidate text");
            }
            auto& sames = set.same_candidates;
            if (std::find(sames.begin(), sames.end(), text) == sames.end()) sames.push_back(text);
            replacement = text;
        } else if (kind != "deletion") {
            return error_response(400, "SCHEMA", "kind must be deletion, diff or same");
        }

        const std::string original = render_turn(turn.nuggets);
        const std::string deleted = render_turn(turn.nuggets, SlotOverride::erase(nugget->position));
        const std::string perturbed =
            replacement ? render_turn(turn.nuggets, SlotOverride::replace(nugget->position, *replacement))
                        : deleted;
        if (!cfg.score_empty_turn && deleted.empty()) {
            return error_response(400, "EMPTY_TURN_PERTURBATION",
                                  "deleting the only nugget leaves an empty turn");
        }

        std::vector<ScorerRequest> requests;
        auto add = [&](std::string text) {
            requests.push_back({"w" + std::to_string(requests.size()), std::move(text), turn.context});
        };
        add(original);
        add(deleted);
        add(perturbed);
        for (const auto& d : set.diff_candidates) {
            add(render_turn(turn.nuggets, SlotOverride::replace(nugget->position, d.text)));
        }
        for (const auto& s : set.same_candidates) {
            add(render_turn(turn.nuggets, SlotOverride::replace(nugget->position, s)));
        }
        const auto results = scorer_->score_batch(requests);

        const double s_original = score_or_throw(results[0], "original turn");
        const double s_deleted = score_or_throw(results[1], "deletion");
        const double s_perturbed = score_or_throw(results[2], "draft");
        std::vector<IndexedScore> diff;
        std::vector<IndexedScore> same;
        std::size_t next = 3;
        for (std::size_t i = 0; i < set.diff_candidates.size(); ++i) {
            diff.push_back({i, score_or_throw(results[next++], "diff candidate")});
        }
        for (std::size_t i = 0; i < set.same_candidates.size(); ++i) {
            same.push_back({i, score_or_throw(results[next++], "same candidate")});
        }
        const ScoreBreakdown projected = compute_breakdown(nugget_id, s_original, s_deleted, diff, same,
                                                           cfg, turn.nuggets.size());

        ordered_json out;
        out["annotation_id"] = id;
        out["nugget_id"] = nugget_id;
        out["kind"] = kind;
        out["text"] = perturbed;
        out["s_original"] = s_original;
        out["s_perturbed"] = s_perturbed;
        out["delta"] = s_original - s_perturbed;
        out["projected_ns"] = projected.ns;
        out["projected"] = {{"d_phi", projected.d_phi},
                            {"md_diff", projected.md_diff ? ordered_json(*projected.md_diff) : nullptr},
                            {"md_same", projected.md_same ? ordered_json(*projected.md_same) : nullptr},
                            {"effective_k", projected.effective_k},
                            {"effective_l", projected.effective_l}};
        return ok_json(out);
    } catch (const BadRequest& bad) {
        return bad.response;
    } catch (const ValidationError& e) {
        return error_response(400, "VALIDATION_ERROR", e.what(), &e.report());
    } catch (const Error& e) {
        const int status = e.code() == ErrorCode::ScorerFailure ? 502 : 400;
        return error_response(status, to_string(e.cause().value_or(e.code())), e.what());
    }
}

// ---------------------------------------------------------------------------

struct WorkbenchServer::Impl {
    std::shared_ptr<WorkbenchService> service;
    httplib::Server server;
};

namespace {

void reply(httplib::Response& res, const ServiceResponse& out) {
    res.status = out.status;
    res.set_content(out.body, out.content_type);
}

constexpr const char* kPlaceholderPage =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>nuggetscore</title></head>"
    "<body><h1>nuggetscore workbench API</h1><p>The workbench UI is not installed. "
    "API: GET /api/acts, GET|PUT /api/annotations/{id}, POST /api/evaluate, "
    "POST /api/whatif.</p></body></html>";

} // namespace

WorkbenchServer::WorkbenchServer(std::shared_ptr<WorkbenchService> service,
                                 std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>()) {
    impl_->service = std::move(service);
    auto& server = impl_->server;
    auto* svc = impl_->service.get();

    server.Get("/api/acts", [svc](const httplib::Request&, httplib::Response& res) {
        reply(res, svc->list_acts());
    });
    server.Get(R"(/api/annotations/([^/]+))", [svc](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc->get_annotation(req.matches[1].str()));
    });
    server.Put(R"(/api/annotations/([^/]+))", [svc](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc->put_annotation(req.matches[1].str(), req.body));
    });
    server.Post("/api/evaluate", [svc](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc->evaluate(req.body));
    });
    server.Post("/api/whatif", [svc](const httplib::Request& req, httplib::Response& res) {
        reply(res, svc->whatif(req.body));
    });

    if (static_dir && server.set_mount_point("/", static_dir->string())) return;
    server.Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(kPlaceholderPage, "text/html; charset=utf-8");
    });
}

WorkbenchServer::~WorkbenchServer() { stop(); }

int WorkbenchServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void WorkbenchServer::listen() { impl_->server.listen_after_bind(); }

void WorkbenchServer::stop() {
    if (impl_) impl_->server.stop();
}

} // namespace nuggetscore
