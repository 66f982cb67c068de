#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <mjudge/core.hpp>
#include <mjudge/rng.hpp>

using namespace mjudge;

namespace {

DAInstance sample_da() {
    DAInstance x;
    x.id = "da:1";
    x.language = {"fr"};
    x.instruction = "Expliquez la photosynthèse.";
    x.response = "Dans le cadre de l'organisation, la photosynthèse...";
    x.reference = "La photosynthèse est le processus...";
    x.reference_encoding = RefEncoding::present;
    x.rubric.criteria = "Is the explanation accurate and complete?";
    for (int s = 1; s <= 5; ++s)
        x.rubric.score_descriptions[s] = "level " + std::to_string(s);
    x.gold_score = 4;
    return x;
}

std::string temp_path(const std::string& stem) {
    return std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") + "/" + stem;
}

}  // namespace

TEST_CASE("validate: well-formed DA instance passes") {
    auto r = validate(sample_da());
    CHECK(r.empty());
    CHECK(r.ok());
}

TEST_CASE("validate: gold_score boundary violations") {
    auto x = sample_da();
    x.gold_score = 0;
    auto r = validate(x);
    REQUIRE_FALSE(r.ok());
    bool found = false;
    for (const auto& i : r.issues) found |= i.message == "gold_score out of 1..5";
    CHECK(found);

    x.gold_score = 6;
    CHECK_FALSE(validate(x).ok());
    x.gold_score = 1;
    CHECK(validate(x).ok());
    x.gold_score = 5;
    CHECK(validate(x).ok());
}

TEST_CASE("validate: rubric with four descriptions is flagged by field path") {
    auto x = sample_da();
    x.rubric.score_descriptions.erase(3);
    auto r = validate(x);
    REQUIRE_FALSE(r.ok());
    bool found = false;
    for (const auto& i : r.issues)
        found |= i.field == "rubric.score_descriptions" &&
                 i.message == "score_descriptions keys != {1..5}";
    CHECK(found);
}

TEST_CASE("validate: empty-string reference is a warning, not an error") {
    auto x = sample_da();
    x.reference = "";
    x.reference_encoding = RefEncoding::present;
    auto r = validate(x);
    CHECK(r.ok());          // warnings do not fail validation
    CHECK_FALSE(r.empty()); // but the report is not silent
    REQUIRE(r.issues.size() == 1);
    CHECK(r.issues[0].warning);
}

TEST_CASE("validate: PWC gold winner domain") {
    PWCInstance x;
    x.id = "p";
    x.language = {"pt"};
    x.instruction = "q";
    x.response_a = "a";
    x.response_b = "b";
    x.criteria = "Is the response structured to promote readability";
    x.gold_winner = 'A';
    CHECK(validate(x).ok());
    x.gold_winner = 'X';
    CHECK_FALSE(validate(x).ok());
}

TEST_CASE("validate: MTEval same-language pair rejected") {
    MTEvalInstance x;
    x.id = "m";
    x.source_lang = {"en"};
    x.target_lang = {"en"};
    x.source = "text";
    for (int s = 1; s <= 5; ++s) x.rubric.score_descriptions[s] = "d";
    x.rubric.criteria = "c";
    CHECK_FALSE(validate(x).ok());
    x.target_lang = {"de"};
    CHECK(validate(x).ok());
}

TEST_CASE("JSON round trip: decode(encode(i)) == i for all three instance kinds") {
    auto da = sample_da();
    CHECK(da_from_json(to_json(da)) == da);

    PWCInstance pwc;
    pwc.id = "p:1";
    pwc.language = {"pt"};
    pwc.instruction = "Compare.";
    pwc.response_a = "Resposta A";
    pwc.response_b = "Resposta B";
    pwc.criteria = "Is the response structured to promote readability";
    pwc.gold_winner = 'B';
    pwc.extra["origin"] = "unit-test";
    CHECK(pwc_from_json(to_json(pwc)) == pwc);

    MTEvalInstance mt;
    mt.id = "m:1";
    mt.source_lang = {"en"};
    mt.target_lang = {"cs"};
    mt.source = "A quiet morning.";
    mt.translation_instruction = "Translate into Czech.";
    mt.candidate = "Tiché ráno.";
    mt.rubric.criteria = "accuracy; fluency";
    for (int s = 1; s <= 5; ++s) mt.rubric.score_descriptions[s] = "d" + std::to_string(s);
    mt.gold_score = 3;
    CHECK(mteval_from_json(to_json(mt)) == mt);
}

TEST_CASE("JSONL: write then read 3 DA instances") {
    std::vector<json> recs;
    for (int i = 0; i < 3; ++i) {
        auto x = sample_da();
        x.id = "da:" + std::to_string(i);
        recs.push_back(to_json(x));
    }
    auto path = temp_path("core_roundtrip.jsonl");
    write_jsonl(path, recs);
    auto back = read_jsonl(path);
    REQUIRE(back.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(back[i] == recs[i]);
    std::remove(path.c_str());
}

TEST_CASE("JSONL: malformed line carries its line number") {
    std::stringstream in;
    in << R"({"ok": 1})" << "\n"
       << "not json\n"
       << R"({"ok": 2})" << "\n";
    try {
        read_jsonl(in);
        FAIL("expected JsonlError");
    } catch (const JsonlError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("reference null vs absent: both decode absent, re-encode as written") {
    // Byte-compare fixture: encoding must preserve the wire shape.
    json with_null = json::parse(R"({"id":"x","language":"fr","instruction":"q","response":"r",)"
                                 R"("reference":null,"rubric":{"criteria":"c","score_descriptions":)"
                                 R"({"1":"a","2":"b","3":"c","4":"d","5":"e"}}})");
    json absent = with_null;
    absent.erase("reference");

    auto a = da_from_json(with_null);
    auto b = da_from_json(absent);
    CHECK_FALSE(a.reference.has_value());
    CHECK_FALSE(b.reference.has_value());
    CHECK(a.reference_encoding == RefEncoding::null_key);
    CHECK(b.reference_encoding == RefEncoding::absent_key);

    CHECK(to_json(a).dump() == with_null.dump());
    CHECK(to_json(b).dump() == absent.dump());
    CHECK(to_json(a).dump() != to_json(b).dump());
}

TEST_CASE("unknown fields survive the round trip opaquely") {
    json j = to_json(sample_da());
    j["vendor_specific"] = {{"nested", true}};
    auto x = da_from_json(j);
    CHECK(to_json(x).dump() == j.dump());
}

TEST_CASE("property: randomized instances with injected violations") {
    Rng rng(20240817);
    for (int trial = 0; trial < 300; ++trial) {
        auto x = sample_da();
        x.id = "prop:" + std::to_string(trial);
        x.gold_score = 1 + static_cast<int>(rng.uniform_index(5));
        REQUIRE(validate(x).ok());

        // Inject exactly one violation; validation must catch it.
        switch (rng.uniform_index(4)) {
            case 0: x.id.clear(); break;
            case 1: x.gold_score = rng.coin_flip() ? 0 : 6; break;
            case 2: x.rubric.score_descriptions.erase(1 + static_cast<int>(rng.uniform_index(5))); break;
            case 3: x.instruction.clear(); break;
        }
        CHECK_FALSE(validate(x).ok());

        // And the pristine round trip stays the identity.
        auto y = sample_da();
        y.extra["trial"] = trial;
        CHECK(da_from_json(to_json(y)) == y);
    }
}
