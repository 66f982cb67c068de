#pragma once

// Domain types shared by every module: judgeable instances, rubrics,
// verdicts, and their canonical JSONL (de)serialization.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace mjudge {

using json = nlohmann::ordered_json;

/// BCP-47-style language tag, e.g. "fr" or "zh-Hans".
struct LanguageTag {
    std::string code;

    bool operator==(const LanguageTag&) const = default;
    auto operator<=>(const LanguageTag&) const = default;
};

/// Evaluation criteria plus one description per score 1..5.
struct ScoreRubric {
    std::string criteria;
    std::map<int, std::string> score_descriptions;

    bool operator==(const ScoreRubric&) const = default;
};

/// How the optional reference field appeared on the wire. An absent key and
/// an explicit null both decode to "no reference" but re-encode as written.
enum class RefEncoding { absent_key, null_key, present };

/// Direct-assessment instance: one response judged 1..5 against a rubric.
struct DAInstance {
    std::string id;
    LanguageTag language;
    std::string instruction;
    std::string response;
    std::optional<std::string> reference;
    RefEncoding reference_encoding = RefEncoding::absent_key;
    ScoreRubric rubric;
    std::optional<int> gold_score;
    std::optional<std::string> feedback;
    json extra = json::object();

    bool operator==(const DAInstance& o) const {
        return id == o.id && language == o.language && instruction == o.instruction &&
               response == o.response && reference == o.reference &&
               reference_encoding == o.reference_encoding && rubric == o.rubric &&
               gold_score == o.gold_score && feedback == o.feedback && extra == o.extra;
    }
};

/// Pairwise-comparison instance: two responses, pick the better one.
struct PWCInstance {
    std::string id;
    LanguageTag language;
    std::string instruction;
    std::string response_a;
    std::string response_b;
    std::optional<std::string> reference;
    RefEncoding reference_encoding = RefEncoding::absent_key;
    std::string criteria;
    std::optional<char> gold_winner;  // 'A' or 'B'
    std::optional<std::string> feedback;
    json extra = json::object();

    bool operator==(const PWCInstance& o) const {
        return id == o.id && language == o.language && instruction == o.instruction &&
               response_a == o.response_a && response_b == o.response_b &&
               reference == o.reference && reference_encoding == o.reference_encoding &&
               criteria == o.criteria && gold_winner == o.gold_winner &&
               feedback == o.feedback && extra == o.extra;
    }
};

/// Parsed judge output: long-form feedback plus exactly one judgement.
struct Verdict {
    std::string feedback;
    std::optional<int> score;    // DA, 1..5
    std::optional<char> choice;  // PWC, 'A' or 'B'

    bool operator==(const Verdict&) const = default;
};

/// MT-evaluation instance: source, candidate translation, rubric.
struct MTEvalInstance {
    std::string id;
    LanguageTag source_lang;
    LanguageTag target_lang;
    std::string source;
    std::string translation_instruction;
    std::string candidate;
    std::optional<std::string> reference;
    RefEncoding reference_encoding = RefEncoding::absent_key;
    ScoreRubric rubric;
    std::optional<int> gold_score;
    json extra = json::object();

    bool operator==(const MTEvalInstance& o) const {
        return id == o.id && source_lang == o.source_lang && target_lang == o.target_lang &&
               source == o.source && translation_instruction == o.translation_instruction &&
               candidate == o.candidate && reference == o.reference &&
               reference_encoding == o.reference_encoding && rubric == o.rubric &&
               gold_score == o.gold_score && extra == o.extra;
    }
};

/// Sampling parameters for a completion call. temperature 0 means greedy.
struct GenerationParams {
    double temperature = 0.0;
    int max_tokens = 2048;
    int n_samples = 1;
    std::optional<std::uint64_t> seed;

    bool operator==(const GenerationParams&) const = default;
};

// ---------------------------------------------------------------------------
// Validation

struct ValidationIssue {
    std::string field;
    std::string message;
    bool warning = false;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const {
        for (const auto& i : issues)
            if (!i.warning) return false;
        return true;
    }
    bool empty() const { return issues.empty(); }
};

namespace detail {

inline bool lowercase_primary_subtag(const std::string& code) {
    for (char c : code) {
        if (c == '-') break;
        if (c >= 'A' && c <= 'Z') return false;
    }
    return true;
}

inline void check_language(const LanguageTag& lang, const std::string& path,
                           ValidationReport& r) {
    if (lang.code.empty())
        r.issues.push_back({path, "language code empty"});
    else if (!lowercase_primary_subtag(lang.code))
        r.issues.push_back({path, "primary subtag not lowercase"});
}

inline void check_rubric(const ScoreRubric& rubric, const std::string& path,
                         ValidationReport& r) {
    if (rubric.criteria.empty())
        r.issues.push_back({path + ".criteria", "criteria empty"});
    bool keys_ok = rubric.score_descriptions.size() == 5;
    for (int s = 1; s <= 5 && keys_ok; ++s)
        keys_ok = rubric.score_descriptions.contains(s);
    if (!keys_ok)
        r.issues.push_back({path + ".score_descriptions", "score_descriptions keys != {1..5}"});
}

inline void check_gold_score(const std::optional<int>& score, const std::string& path,
                             ValidationReport& r) {
    if (score && (*score < 1 || *score > 5))
        r.issues.push_back({path, "gold_score out of 1..5"});
}

inline void check_reference(const std::optional<std::string>& ref, const std::string& path,
                            ValidationReport& r) {
    if (ref && ref->empty())
        r.issues.push_back({path, "reference present but empty", true});
}

}  // namespace detail

inline ValidationReport validate(const DAInstance& x) {
    ValidationReport r;
    if (x.id.empty()) r.issues.push_back({"id", "id empty"});
    detail::check_language(x.language, "language", r);
    if (x.instruction.empty()) r.issues.push_back({"instruction", "instruction empty"});
    detail::check_rubric(x.rubric, "rubric", r);
    detail::check_gold_score(x.gold_score, "gold_score", r);
    detail::check_reference(x.reference, "reference", r);
    return r;
}

inline ValidationReport validate(const PWCInstance& x) {
    ValidationReport r;
    if (x.id.empty()) r.issues.push_back({"id", "id empty"});
    detail::check_language(x.language, "language", r);
    if (x.instruction.empty()) r.issues.push_back({"instruction", "instruction empty"});
    if (x.criteria.empty()) r.issues.push_back({"criteria", "criteria empty"});
    if (x.gold_winner && *x.gold_winner != 'A' && *x.gold_winner != 'B')
        r.issues.push_back({"gold_winner", "gold_winner not in {A,B}"});
    detail::check_reference(x.reference, "reference", r);
    return r;
}

inline ValidationReport validate(const MTEvalInstance& x) {
    ValidationReport r;
    if (x.id.empty()) r.issues.push_back({"id", "id empty"});
    detail::check_language(x.source_lang, "source_lang", r);
    detail::check_language(x.target_lang, "target_lang", r);
    if (x.source_lang == x.target_lang)
        r.issues.push_back({"lp", "source_lang equals target_lang"});
    if (x.source.empty()) r.issues.push_back({"source", "source empty"});
    detail::check_rubric(x.rubric, "rubric", r);
    detail::check_gold_score(x.gold_score, "gold_score", r);
    detail::check_reference(x.reference, "reference", r);
    return r;
}

inline ValidationReport validate(const Verdict& v) {
    ValidationReport r;
    if (v.score.has_value() == v.choice.has_value())
        r.issues.push_back({"judgement", "exactly one of score/choice must be set"});
    if (v.score && (*v.score < 1 || *v.score > 5))
        r.issues.push_back({"score", "score out of 1..5"});
    if (v.choice && *v.choice != 'A' && *v.choice != 'B')
        r.issues.push_back({"choice", "choice not in {A,B}"});
    return r;
}

// ---------------------------------------------------------------------------
// JSON encoding. Key order is canonical; unknown input fields are preserved
// and re-emitted after the known ones, in their original order.

namespace detail {

inline json rubric_to_json(const ScoreRubric& rubric) {
    json j = json::object();
    j["criteria"] = rubric.criteria;
    json d = json::object();
    for (const auto& [score, text] : rubric.score_descriptions)
        d[std::to_string(score)] = text;
    j["score_descriptions"] = std::move(d);
    return j;
}

inline ScoreRubric rubric_from_json(const json& j) {
    ScoreRubric rubric;
    rubric.criteria = j.at("criteria").get<std::string>();
    for (const auto& [key, value] : j.at("score_descriptions").items())
        rubric.score_descriptions[std::stoi(key)] = value.get<std::string>();
    return rubric;
}

inline void emit_reference(json& j, const std::optional<std::string>& ref, RefEncoding enc) {
    if (ref)
        j["reference"] = *ref;
    else if (enc == RefEncoding::null_key)
        j["reference"] = nullptr;
}

inline void take_reference(const json& j, std::optional<std::string>& ref, RefEncoding& enc) {
    if (!j.contains("reference")) {
        enc = RefEncoding::absent_key;
    } else if (j["reference"].is_null()) {
        enc = RefEncoding::null_key;
    } else {
        ref = j["reference"].get<std::string>();
        enc = RefEncoding::present;
    }
}

inline void append_extra(json& j, const json& extra) {
    for (const auto& [key, value] : extra.items()) j[key] = value;
}

inline json collect_extra(const json& j, std::initializer_list<const char*> known) {
    json extra = json::object();
    for (const auto& [key, value] : j.items()) {
        bool is_known = false;
        for (const char* k : known)
            if (key == k) { is_known = true; break; }
        if (!is_known) extra[key] = value;
    }
    return extra;
}

}  // namespace detail

inline json to_json(const DAInstance& x) {
    json j = json::object();
    j["id"] = x.id;
    j["language"] = x.language.code;
    j["instruction"] = x.instruction;
    j["response"] = x.response;
    detail::emit_reference(j, x.reference, x.reference_encoding);
    j["rubric"] = detail::rubric_to_json(x.rubric);
    if (x.gold_score) j["gold_score"] = *x.gold_score;
    if (x.feedback) j["feedback"] = *x.feedback;
    detail::append_extra(j, x.extra);
    return j;
}

inline DAInstance da_from_json(const json& j) {
    DAInstance x;
    x.id = j.at("id").get<std::string>();
    x.language.code = j.at("language").get<std::string>();
    x.instruction = j.at("instruction").get<std::string>();
    x.response = j.at("response").get<std::string>();
    detail::take_reference(j, x.reference, x.reference_encoding);
    x.rubric = detail::rubric_from_json(j.at("rubric"));
    if (j.contains("gold_score") && !j["gold_score"].is_null())
        x.gold_score = j["gold_score"].get<int>();
    if (j.contains("feedback") && !j["feedback"].is_null())
        x.feedback = j["feedback"].get<std::string>();
    x.extra = detail::collect_extra(
        j, {"id", "language", "instruction", "response", "reference", "rubric",
            "gold_score", "feedback"});
    return x;
}

inline json to_json(const PWCInstance& x) {
    json j = json::object();
    j["id"] = x.id;
    j["language"] = x.language.code;
    j["instruction"] = x.instruction;
    j["response_a"] = x.response_a;
    j["response_b"] = x.response_b;
    detail::emit_reference(j, x.reference, x.reference_encoding);
    j["criteria"] = x.criteria;
    if (x.gold_winner) j["gold_winner"] = std::string(1, *x.gold_winner);
    if (x.feedback) j["feedback"] = *x.feedback;
    detail::append_extra(j, x.extra);
    return j;
}

inline PWCInstance pwc_from_json(const json& j) {
    PWCInstance x;
    x.id = j.at("id").get<std::string>();
    x.language.code = j.at("language").get<std::string>();
    x.instruction = j.at("instruction").get<std::string>();
    x.response_a = j.at("response_a").get<std::string>();
    x.response_b = j.at("response_b").get<std::string>();
    detail::take_reference(j, x.reference, x.reference_encoding);
    x.criteria = j.at("criteria").get<std::string>();
    if (j.contains("gold_winner") && !j["gold_winner"].is_null())
        x.gold_winner = j["gold_winner"].get<std::string>().at(0);
    if (j.contains("feedback") && !j["feedback"].is_null())
        x.feedback = j["feedback"].get<std::string>();
    x.extra = detail::collect_extra(
        j, {"id", "language", "instruction", "response_a", "response_b", "reference",
            "criteria", "gold_winner", "feedback"});
    return x;
}

inline json to_json(const MTEvalInstance& x) {
    json j = json::object();
    j["id"] = x.id;
    j["source_lang"] = x.source_lang.code;
    j["target_lang"] = x.target_lang.code;
    j["source"] = x.source;
    j["translation_instruction"] = x.translation_instruction;
    j["candidate"] = x.candidate;
    detail::emit_reference(j, x.reference, x.reference_encoding);
    j["rubric"] = detail::rubric_to_json(x.rubric);
    if (x.gold_score) j["gold_score"] = *x.gold_score;
    detail::append_extra(j, x.extra);
    return j;
}

inline MTEvalInstance mteval_from_json(const json& j) {
    MTEvalInstance x;
    x.id = j.at("id").get<std::string>();
    x.source_lang.code = j.at("source_lang").get<std::string>();
    x.target_lang.code = j.at("target_lang").get<std::string>();
    x.source = j.at("source").get<std::string>();
    x.translation_instruction = j.at("translation_instruction").get<std::string>();
    x.candidate = j.at("candidate").get<std::string>();
    detail::take_reference(j, x.reference, x.reference_encoding);
    x.rubric = detail::rubric_from_json(j.at("rubric"));
    if (j.contains("gold_score") && !j["gold_score"].is_null())
        x.gold_score = j["gold_score"].get<int>();
    x.extra = detail::collect_extra(
        j, {"id", "source_lang", "target_lang", "source", "translation_instruction",
            "candidate", "reference", "rubric", "gold_score"});
    return x;
}

inline json to_json(const Verdict& v) {
    json j = json::object();
    j["feedback"] = v.feedback;
    if (v.score) j["score"] = *v.score;
    if (v.choice) j["choice"] = std::string(1, *v.choice);
    return j;
}

inline Verdict verdict_from_json(const json& j) {
    Verdict v;
    v.feedback = j.at("feedback").get<std::string>();
    if (j.contains("score") && !j["score"].is_null()) v.score = j["score"].get<int>();
    if (j.contains("choice") && !j["choice"].is_null())
        v.choice = j["choice"].get<std::string>().at(0);
    return v;
}

// ---------------------------------------------------------------------------
// JSONL I/O

class JsonlError : public std::runtime_error {
public:
    JsonlError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

inline std::vector<json> read_jsonl(std::istream& in) {
    std::vector<json> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw JsonlError(lineno, "malformed JSON object");
        records.push_back(std::move(j));
    }
    return records;
}

inline std::vector<json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_jsonl(in);
}

inline void write_jsonl(std::ostream& out, const std::vector<json>& records) {
    for (const auto& j : records) out << j.dump() << '\n';
}

inline void write_jsonl(const std::string& path, const std::vector<json>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_jsonl(out, records);
}

template <class T, class Decode>
std::vector<T> read_jsonl_as(const std::string& path, Decode decode) {
    std::vector<T> out;
    std::size_t lineno = 0;
    for (const auto& j : read_jsonl(path)) {
        ++lineno;
        try {
            out.push_back(decode(j));
        } catch (const std::exception& e) {
            throw JsonlError(lineno, e.what());
        }
    }
    return out;
}

}  // namespace mjudge
