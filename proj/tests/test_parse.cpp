#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include <mjudge/parse.hpp>

using namespace mjudge;

TEST_CASE("parse_da: canonical shape") {
    auto out = parse_da(
        "Feedback: The response is well organized. So the overall score is 4. [RESULT] 4");
    REQUIRE(out.ok());
    CHECK(out.verdict->score == 4);
    CHECK(out.verdict->feedback ==
          "The response is well organized. So the overall score is 4.");
}

TEST_CASE("parse_da: out-of-range and malformed values") {
    CHECK(parse_da("[RESULT] 6").failure_reason == ParseFailure::bad_value);
    CHECK(parse_da("[RESULT] 0").failure_reason == ParseFailure::bad_value);
    CHECK(parse_da("no marker here").failure_reason == ParseFailure::missing_marker);
    CHECK(parse_da("[RESULT] great").failure_reason == ParseFailure::bad_value);
}

TEST_CASE("parse_pwc: canonical shapes") {
    auto out = parse_pwc("Response B is superior in terms of structure. [RESULT] B");
    REQUIRE(out.ok());
    CHECK(out.verdict->choice == 'B');

    out = parse_pwc("Feedback: close call. [RESULT] \"a\"");
    REQUIRE(out.ok());
    CHECK(out.verdict->choice == 'A');
}

TEST_CASE("parse_pwc: failures") {
    CHECK(parse_pwc("both fine").failure_reason == ParseFailure::missing_marker);
    CHECK(parse_pwc("[RESULT] C").failure_reason == ParseFailure::bad_value);
    CHECK(parse_pwc("[RESULT] A/B").failure_reason == ParseFailure::ambiguous);
}

TEST_CASE("round trip: any feedback + any score/choice") {
    const std::string feedbacks[] = {
        "Solid reasoning throughout.",
        "Multi\nline\nfeedback with punctuation, quotes \"x\" and unicode é.",
        "",
    };
    for (const auto& f : feedbacks) {
        for (int s = 1; s <= 5; ++s) {
            auto out = parse_da(f + " [RESULT] " + std::to_string(s));
            REQUIRE(out.ok());
            CHECK(out.verdict->score == s);
            CHECK(out.verdict->feedback == f.substr(0, f.find_last_not_of(" \n\t") + 1));
        }
        for (char c : {'A', 'B'}) {
            auto out = parse_pwc(f + " [RESULT] " + c);
            REQUIRE(out.ok());
            CHECK(out.verdict->choice == c);
        }
    }
}

TEST_CASE("last-marker rule: second marker overrides the first, all pairs") {
    for (int s = 1; s <= 5; ++s)
        for (int t = 1; t <= 5; ++t) {
            auto text = "first [RESULT] " + std::to_string(s) + " second [RESULT] " +
                        std::to_string(t);
            auto out = parse_da(text);
            REQUIRE(out.ok());
            CHECK(out.verdict->score == t);
        }
    for (char s : {'A', 'B'})
        for (char t : {'A', 'B'}) {
            auto out = parse_pwc(std::string("x [RESULT] ") + s + " y [RESULT] " + t);
            REQUIRE(out.ok());
            CHECK(out.verdict->choice == t);
        }
}

TEST_CASE("parse_pwc case-insensitivity") {
    for (const char* v : {"a", "A", "b", "B"}) {
        auto lower = parse_pwc(std::string("[RESULT] ") + v);
        REQUIRE(lower.ok());
        CHECK(lower.verdict->choice == std::toupper(v[0]));
    }
}

TEST_CASE("noisy corpus: >= 99% agreement with hand labels") {
    std::ifstream in(std::string(MJUDGE_TEST_DATA_DIR) + "/noisy_corpus.jsonl");
    REQUIRE(in);
    auto rows = read_jsonl(in);
    REQUIRE(rows.size() == 200);

    int agree = 0;
    for (const auto& row : rows) {
        auto text = row.at("text").get<std::string>();
        auto expect = row.at("expect").get<std::string>();
        ParseOutcome out = row.at("task") == "da" ? parse_da(text) : parse_pwc(text);

        std::string got;
        if (out.ok()) {
            got = out.verdict->score ? "score:" + std::to_string(*out.verdict->score)
                                     : std::string("choice:") + *out.verdict->choice;
        } else {
            switch (*out.failure_reason) {
                case ParseFailure::missing_marker: got = "fail:missing_marker"; break;
                case ParseFailure::bad_value: got = "fail:bad_value"; break;
                case ParseFailure::ambiguous: got = "fail:ambiguous"; break;
            }
        }
        if (got == expect) {
            ++agree;
        } else {
            UNSCOPED_INFO("disagree on [" << row.at("note").get<std::string>()
                                          << "]: " << text << " expect=" << expect
                                          << " got=" << got);
        }
    }
    CHECK(agree >= 198);
}

TEST_CASE("parse_mt_gen_blocks: well-formed fixture yields 9 blocks") {
    std::string text;
    text += "<START OF SOURCE>\nA quiet pond.\n<END OF SOURCE>\n\n";
    text += "<START OF TRANSLATION INSTRUCTION>\nTranslate.\n<END OF TRANSLATION INSTRUCTION>\n\n";
    text += "<START OF REFERENCE TRANSLATION>\nEin stiller Teich.\n<END OF REFERENCE TRANSLATION>\n\n";
    text += "<START OF SCORING RUBRICS>\naccuracy; fluency\n<END OF SCORING RUBRICS>\n\n";
    for (int k = 1; k <= 5; ++k) {
        auto n = std::to_string(k);
        text += "<START OF SCORE " + n + " DESCRIPTION>\ndesc " + n + "\n<END OF SCORE " + n +
                " DESCRIPTION>\n\n";
    }
    auto blocks = parse_mt_gen_blocks(text);
    CHECK(blocks.size() == 9);
    CHECK(blocks.at("SOURCE") == "A quiet pond.");
    CHECK(blocks.at("SCORE 5 DESCRIPTION") == "desc 5");
    CHECK_NOTHROW(require_mt_source_blocks(blocks));

    auto factors = split_rubric_factors(blocks.at("SCORING RUBRICS"));
    REQUIRE(factors.size() == 2);
    CHECK(factors[0] == "accuracy");
    CHECK(factors[1] == "fluency");
}

TEST_CASE("parse_mt_gen_blocks: truncation and empty bodies") {
    CHECK_THROWS_AS(parse_mt_gen_blocks("<START OF SOURCE>\ntext\n"), BlockParseError);

    auto blocks = parse_mt_gen_blocks("<START OF SOURCE>\n<END OF SOURCE>\n");
    CHECK(blocks.at("SOURCE").empty());

    std::map<std::string, std::string> missing{{"SOURCE", "x"}};
    CHECK_THROWS_AS(require_mt_source_blocks(missing), BlockParseError);
}
