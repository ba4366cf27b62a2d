#include <doctest.h>

#include <set>

#include "nuggetscore/annotation_io.hpp"
#include "nuggetscore/core_model.hpp"
#include "support/test_support.hpp"

using namespace nuggetscore;

namespace {

AnnotatedTurn apology_turn() {
    AnnotatedTurn turn;
    turn.turn_id = "t";
    turn.nuggets = {{"a", "I am sorry,", "apology", 0},
                    {"b", "I cannot provide an answer for that.", "rejection", 1}};
    return turn;
}

} // namespace

TEST_CASE("act catalog") {
    const auto catalog = act_catalog();
    CHECK(catalog.size() == 24);
    CHECK(catalog[6].id == "apology");
    CHECK(catalog[6].display_name == "Apology");
    CHECK(catalog[6].example == "I am sorry");
    CHECK(catalog.front().id == "agreement");
    CHECK(catalog.back().id == "opinion");

    std::set<std::string_view> ids;
    for (const auto& act : catalog) ids.insert(act.id);
    CHECK(ids.size() == 24);

    CHECK(act_catalog().data() == catalog.data());
    CHECK(find_act("non_declarative_question") != nullptr);
    CHECK(find_act("laughter") == nullptr);
}

TEST_CASE("every catalog act is accepted on a nugget") {
    for (const auto& act : act_catalog()) {
        AnnotatedTurn turn;
        turn.nuggets = {{"n", "Some text.", std::string(act.id), 0}};
        CAPTURE(act.id);
        CHECK(validate_annotation(turn, {}).ok());
    }
}

TEST_CASE("validate_annotation reports rule violations") {
    const AnnotatedTurn turn = apology_turn();

    SUBCASE("diff candidate with the original act") {
        const std::vector<CandidateSet> sets{{"a", {{"apology", "I apologize."}}, {}}};
        const auto report = validate_annotation(turn, sets);
        CHECK_FALSE(report.ok());
        CHECK(report.has("DUPLICATE_ACT_AS_ORIGINAL"));
    }
    SUBCASE("two diff candidates with one act") {
        const std::vector<CandidateSet> sets{
            {"a", {{"opening", "Hello."}, {"opening", "Hi there."}}, {"I apologize."}}};
        const auto report = validate_annotation(turn, sets);
        CHECK(report.has("DUPLICATE_DIFF_ACT"));
        CHECK(report.error_count() == 1);
    }
    SUBCASE("unknown nugget and unknown act") {
        const std::vector<CandidateSet> sets{{"zz", {}, {"x"}}, {"b", {{"laughter", "Haha."}}, {}}};
        const auto report = validate_annotation(turn, sets);
        CHECK(report.has("UNKNOWN_NUGGET"));
        CHECK(report.has("UNKNOWN_ACT"));
    }
    SUBCASE("blank nugget text, duplicate ids and bad positions") {
        AnnotatedTurn bad = turn;
        bad.nuggets[1].text = "   ";
        bad.nuggets[1].id = "a";
        bad.nuggets[1].position = 0;
        const auto report = validate_annotation(bad, {});
        CHECK(report.has("EMPTY_NUGGET_TEXT"));
        CHECK(report.has("DUPLICATE_NUGGET_ID"));
        CHECK(report.has("BAD_POSITION"));
    }
    SUBCASE("same candidate repeating the original") {
        const std::vector<CandidateSet> sets{{"a", {}, {"I am sorry,"}}};
        CHECK(validate_annotation(turn, sets).has("SAME_EQUALS_ORIGINAL"));
    }
    SUBCASE("empty turn") {
        CHECK(validate_annotation(AnnotatedTurn{}, {}).has("EMPTY_TURN"));
    }
    SUBCASE("missing candidates only warn") {
        const std::vector<CandidateSet> sets{{"a", {}, {}}};
        const auto report = validate_annotation(turn, sets);
        CHECK(report.ok());
        CHECK(report.has("NO_DIFF_CANDIDATES"));
        CHECK(report.has("NO_SAME_CANDIDATES"));
        CHECK(report.has("NO_CANDIDATES"));
    }
    SUBCASE("canonical text mismatch is a warning") {
        AnnotatedTurn t = turn;
        t.canonical_text = "I am sorry, I cannot provide an answer for that";
        const auto report = validate_annotation(t, {});
        CHECK(report.ok());
        CHECK(report.has("CANONICAL_TEXT_MISMATCH"));
        t.canonical_text = "I am sorry, I cannot provide an answer for that.";
        CHECK_FALSE(validate_annotation(t, {}).has("CANONICAL_TEXT_MISMATCH"));
    }
}

TEST_CASE("case-study annotation validates cleanly") {
    const Annotation a = load_annotation(testing::fixture_path("case_study.json"));
    CHECK(a.turn.nuggets.size() == 5);
    const auto report = validate_annotation(a.turn, a.candidates);
    CHECK(report.ok());
    CHECK(report.error_count() == 0);
}

TEST_CASE("validate_config") {
    ScoringConfig cfg;
    cfg.k = 5;
    cfg.l = 3;
    CHECK(validate_config(cfg).ok());

    cfg.w_phi = 5;
    cfg.w_diff = 10;
    CHECK(validate_config(cfg).has("WEIGHT_ORDER"));

    ScoringConfig zero_k;
    zero_k.k = 0;
    CHECK(validate_config(zero_k).has("K_RANGE"));
    ScoringConfig zero_l;
    zero_l.l = 0;
    CHECK(validate_config(zero_l).has("L_RANGE"));
    ScoringConfig flat;
    flat.sigmoid_slope = 0;
    CHECK(validate_config(flat).has("SLOPE_RANGE"));
    ScoringConfig negative;
    negative.w_same = -1;
    CHECK(validate_config(negative).has("WEIGHT_RANGE"));

    ScoringConfig equal;
    equal.w_phi = equal.w_diff = equal.w_same = 3;
    CHECK(validate_config(equal).ok());
    ScoringConfig zeros;
    zeros.w_phi = zeros.w_diff = zeros.w_same = 0;
    CHECK(validate_config(zeros).ok());
}

TEST_CASE("validate_config over a weight grid") {
    const double values[] = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0};
    for (double a : values) {
        for (double b : values) {
            for (double c : values) {
                ScoringConfig cfg;
                cfg.w_phi = a;
                cfg.w_diff = b;
                cfg.w_same = c;
                const bool expected = a >= b && b >= c;
                CAPTURE(a);
                CAPTURE(b);
                CAPTURE(c);
                CHECK(validate_config(cfg).ok() == expected);
            }
        }
    }
}
