#include <doctest.h>

#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "nuggetscore/annotation_io.hpp"
#include "nuggetscore/service.hpp"
#include "support/test_support.hpp"

using namespace nuggetscore;
using json = nlohmann::json;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("nuggetscore_svc_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

std::string error_code(const ServiceResponse& r) { return json::parse(r.body)["error"]["code"]; }

struct Fixture {
    std::string case_study = read_text_file(testing::fixture_path("case_study.json"));
    std::shared_ptr<Scorer> table = load_table_scorer(testing::fixture_path("case_study_scores.json"));
    std::unordered_map<std::string, double> scores = [] {
        std::unordered_map<std::string, double> m;
        const auto doc = json::parse(read_text_file(testing::fixture_path("case_study_scores.json")));
        for (const auto& [k, v] : doc.items()) m[k] = v.get<double>();
        return m;
    }();
};

} // namespace

TEST_CASE("annotation storage") {
    Fixture f;
    WorkbenchService svc(f.table, fresh_dir("storage"));

    const auto acts = svc.list_acts();
    CHECK(acts.status == 200);
    CHECK(json::parse(acts.body).size() == 24);

    CHECK(svc.get_annotation("cs").status == 404);
    const auto put = svc.put_annotation("cs", f.case_study);
    CHECK(put.status == 200);
    CHECK(json::parse(put.body)["ok"] == true);
    const auto got = svc.get_annotation("cs");
    CHECK(got.status == 200);
    CHECK(got.body == f.case_study);

    const auto bad_act = svc.put_annotation(
        "bad", R"({"turn_id": "t", "nuggets": [{"id": "a", "text": "Hi.", "act": "laughter"}]})");
    CHECK(bad_act.status == 400);
    CHECK(json::parse(bad_act.body)["error"]["issues"][0]["code"] == "UNKNOWN_ACT");
    CHECK(svc.get_annotation("bad").status == 404);

    CHECK(svc.put_annotation("x", "{not json").status == 400);
    CHECK(svc.put_annotation("../escape", f.case_study).status == 400);
    CHECK(svc.get_annotation(".hidden").status == 400);
    CHECK(WorkbenchService::valid_annotation_id("case-study_1.v2"));
    CHECK_FALSE(WorkbenchService::valid_annotation_id("a/b"));
}

TEST_CASE("evaluate") {
    Fixture f;
    WorkbenchService svc(f.table, fresh_dir("evaluate"));
    REQUIRE(svc.put_annotation("cs", f.case_study).status == 200);

    const auto ok = svc.evaluate(R"({"annotation_id": "cs"})");
    REQUIRE(ok.status == 200);
    const auto report = json::parse(ok.body);
    CHECK(report["nuggets"].size() == 5);

    const auto expected = testing::oracle_evaluate(load_annotation(testing::fixture_path("case_study.json")),
                                                   f.scores, ScoringConfig{});
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(report["nuggets"][i]["ns"].get<double>() == doctest::Approx(expected[i].ns).epsilon(1e-12));
    }

    const auto k2 = json::parse(svc.evaluate(R"({"annotation_id": "cs", "config": {"k": 2}})").body);
    CHECK(k2["nuggets"][0]["effective_k"] == 2);

    CHECK(svc.evaluate(R"({"annotation_id": "nope"})").status == 404);
    CHECK(svc.evaluate(R"({"annotation_id": "cs", "config": {"w_phi": 1, "w_diff": 4}})").status == 422);
    CHECK(svc.evaluate(R"({"annotation_id": "cs", "config": {"zz": 1}})").status == 422);
    CHECK(svc.evaluate("[]").status == 400);
    CHECK(svc.evaluate("{}").status == 400);

    WorkbenchService broken(std::make_shared<TableScorer>(std::unordered_map<std::string, double>{}, "empty"),
                            fresh_dir("broken"));
    REQUIRE(broken.put_annotation("cs", f.case_study).status == 200);
    const auto failed = broken.evaluate(R"({"annotation_id": "cs"})");
    CHECK(failed.status == 502);
    CHECK(error_code(failed) == "SCORER_REJECTED");
}

TEST_CASE("whatif") {
    Fixture f;
    WorkbenchService svc(f.table, fresh_dir("whatif"));
    REQUIRE(svc.put_annotation("cs", f.case_study).status == 200);
    const auto annotation = load_annotation(testing::fixture_path("case_study.json"));
    const auto expected = testing::oracle_evaluate(annotation, f.scores, ScoringConfig{});
    const auto report = json::parse(svc.evaluate(R"({"annotation_id": "cs"})").body);

    for (std::size_t i = 0; i < 5; ++i) {
        const std::string id = annotation.turn.nuggets[i].id;
        const auto r = svc.whatif(json{{"annotation_id", "cs"}, {"nugget_id", id}, {"kind", "deletion"}}.dump());
        REQUIRE(r.status == 200);
        const auto body = json::parse(r.body);
        CHECK(body["delta"].get<double>() == doctest::Approx(expected[i].d_phi).epsilon(1e-12));
        char a[32], b[32];
        std::snprintf(a, sizeof a, "%.4f", body["delta"].get<double>());
        std::snprintf(b, sizeof b, "%.4f", report["nuggets"][i]["d_phi"].get<double>());
        CHECK(std::string(a) == std::string(b));
        CHECK(body["projected_ns"].get<double>() == doctest::Approx(expected[i].ns).epsilon(1e-12));
    }

    // Re-submitting an existing candidate leaves the projection unchanged.
    const auto& d0 = annotation.candidates[0].diff_candidates[0];
    const auto diff = svc.whatif(json{{"annotation_id", "cs"},
                                      {"nugget_id", "n1"},
                                      {"kind", "diff"},
                                      {"candidate", {{"act", d0.act}, {"text", d0.text}}}}
                                     .dump());
    REQUIRE(diff.status == 200);
    CHECK(json::parse(diff.body)["projected_ns"].get<double>() == doctest::Approx(expected[0].ns).epsilon(1e-12));

    const auto same_text = annotation.candidates[0].same_candidates[0];
    const auto same =
        svc.whatif(json{{"annotation_id", "cs"}, {"nugget_id", "n1"}, {"kind", "same"}, {"candidate", same_text}}.dump());
    REQUIRE(same.status == 200);
    const auto same_body = json::parse(same.body);
    CHECK(same_body["s_perturbed"].get<double>() ==
          f.scores.at(testing::oracle_render(annotation.turn.nuggets, 0, &same_text, false)));

    const auto dup = svc.whatif(json{{"annotation_id", "cs"},
                                     {"nugget_id", "n1"},
                                     {"kind", "diff"},
                                     {"candidate", {{"act", "declarative_question"}, {"text", "Hm?"}}}}
                                    .dump());
    CHECK(dup.status == 400);
    CHECK(error_code(dup) == "DUPLICATE_ACT_AS_ORIGINAL");

    // A draft the scorer has never seen surfaces as a scorer failure.
    const auto unseen = svc.whatif(
        json{{"annotation_id", "cs"}, {"nugget_id", "n1"}, {"kind", "same"}, {"candidate", {{"text", "Unseen."}}}}
            .dump());
    CHECK(unseen.status == 502);

    CHECK(svc.whatif(json{{"annotation_id", "cs"}, {"nugget_id", "n9"}, {"kind", "deletion"}}.dump()).status == 400);
    CHECK(svc.whatif(json{{"annotation_id", "cs"}, {"nugget_id", "n1"}, {"kind", "swap"}}.dump()).status == 400);
    CHECK(svc.whatif(json{{"annotation_id", "zz"}, {"nugget_id", "n1"}, {"kind", "deletion"}}.dump()).status == 404);
}

TEST_CASE("http front end") {
    Fixture f;
    auto svc = std::make_shared<WorkbenchService>(f.table, fresh_dir("http"));
    WorkbenchServer server(svc);
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread th([&] { server.listen(); });

    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(10, 0);
    auto acts = client.Get("/api/acts");
    REQUIRE(acts);
    CHECK(acts->status == 200);
    CHECK(json::parse(acts->body).size() == 24);

    auto put = client.Put("/api/annotations/cs", f.case_study, "application/json");
    REQUIRE(put);
    CHECK(put->status == 200);
    auto got = client.Get("/api/annotations/cs");
    REQUIRE(got);
    CHECK(got->body == f.case_study);

    auto eval = client.Post("/api/evaluate", R"({"annotation_id": "cs"})", "application/json");
    REQUIRE(eval);
    CHECK(eval->status == 200);
    CHECK(json::parse(eval->body)["nuggets"].size() == 5);

    auto missing = client.Get("/api/annotations/none");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    auto index = client.Get("/");
    REQUIRE(index);
    CHECK(index->status == 200);

    server.stop();
    th.join();
}
