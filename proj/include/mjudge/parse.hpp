#pragma once

// Extraction of structured verdicts and generation blocks from raw model
// text. Marker semantics: the LAST "[RESULT]" occurrence wins, since models
// often restate the requested format inside their feedback.

#include <cctype>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "core.hpp"

namespace mjudge {

enum class ParseFailure { missing_marker, bad_value, ambiguous };

struct ParseOutcome {
    std::optional<Verdict> verdict;
    std::optional<ParseFailure> failure_reason;

    bool ok() const { return verdict.has_value(); }

    static ParseOutcome success(Verdict v) { return {std::move(v), std::nullopt}; }
    static ParseOutcome failure(ParseFailure f) { return {std::nullopt, f}; }
};

namespace detail {

inline constexpr std::string_view kResultMarker = "[RESULT]";

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

/// Feedback = text before the last marker, minus a leading "Feedback:" label.
inline std::string extract_feedback(std::string_view text, std::size_t marker_pos) {
    std::string_view fb = trim(text.substr(0, marker_pos));
    constexpr std::string_view label = "Feedback:";
    if (fb.substr(0, label.size()) == label) fb = trim(fb.substr(label.size()));
    return std::string(fb);
}

/// Whitespace-split tokens with leading/trailing punctuation (quotes,
/// brackets, markdown bolding, colons) stripped. Inner punctuation stays.
inline std::vector<std::string> verdict_tokens(std::string_view tail) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < tail.size()) {
        while (i < tail.size() && std::isspace(static_cast<unsigned char>(tail[i]))) ++i;
        std::size_t start = i;
        while (i < tail.size() && !std::isspace(static_cast<unsigned char>(tail[i]))) ++i;
        std::string_view tok = tail.substr(start, i - start);
        while (!tok.empty() && !std::isalnum(static_cast<unsigned char>(tok.front())))
            tok.remove_prefix(1);
        while (!tok.empty() && !std::isalnum(static_cast<unsigned char>(tok.back())))
            tok.remove_suffix(1);
        if (!tok.empty()) tokens.emplace_back(tok);
    }
    return tokens;
}

inline std::string lowercase(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace detail

inline ParseOutcome parse_da(std::string_view text) {
    std::size_t pos = text.rfind(detail::kResultMarker);
    if (pos == std::string_view::npos) return ParseOutcome::failure(ParseFailure::missing_marker);

    auto tokens = detail::verdict_tokens(text.substr(pos + detail::kResultMarker.size()));
    for (const auto& token : tokens) {
        if (detail::lowercase(token) == "score") continue;  // "[RESULT] Score: 4"
        if (!std::isdigit(static_cast<unsigned char>(token.front())))
            return ParseOutcome::failure(ParseFailure::bad_value);
        std::size_t end = 0;
        while (end < token.size() && std::isdigit(static_cast<unsigned char>(token[end]))) ++end;
        // Anything after the digits must be a "/5"-style denominator.
        if (end < token.size() && token[end] != '/')
            return ParseOutcome::failure(ParseFailure::bad_value);
        int value = 0;
        for (std::size_t k = 0; k < end; ++k) value = value * 10 + (token[k] - '0');
        if (value < 1 || value > 5) return ParseOutcome::failure(ParseFailure::bad_value);
        Verdict v;
        v.feedback = detail::extract_feedback(text, pos);
        v.score = value;
        return ParseOutcome::success(std::move(v));
    }
    return ParseOutcome::failure(ParseFailure::bad_value);
}

inline ParseOutcome parse_pwc(std::string_view text) {
    std::size_t pos = text.rfind(detail::kResultMarker);
    if (pos == std::string_view::npos) return ParseOutcome::failure(ParseFailure::missing_marker);

    auto tokens = detail::verdict_tokens(text.substr(pos + detail::kResultMarker.size()));
    for (const auto& token : tokens) {
        std::string low = detail::lowercase(token);
        if (low == "response") continue;  // "[RESULT] Response A"
        if (low == "a" || low == "b") {
            Verdict v;
            v.feedback = detail::extract_feedback(text, pos);
            v.choice = low == "a" ? 'A' : 'B';
            return ParseOutcome::success(std::move(v));
        }
        // "A/B"-style restatements of the format are ambiguous.
        if (low == "a/b" || low == "b/a" || low == "a|b" || low == "b|a")
            return ParseOutcome::failure(ParseFailure::ambiguous);
        return ParseOutcome::failure(ParseFailure::bad_value);
    }
    return ParseOutcome::failure(ParseFailure::bad_value);
}

// ---------------------------------------------------------------------------
// <START OF X> ... <END OF X> block extraction

class BlockParseError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Extract every "<START OF X>"..."<END OF X>" pair. Bodies are trimmed of
/// one leading and one trailing newline. Mismatched or nested delimiters
/// raise BlockParseError.
inline std::map<std::string, std::string> parse_mt_gen_blocks(std::string_view text) {
    std::map<std::string, std::string> blocks;
    std::size_t pos = 0;
    while (true) {
        std::size_t start = text.find("<START OF ", pos);
        if (start == std::string_view::npos) break;
        std::size_t name_begin = start + 10;
        std::size_t name_end = text.find('>', name_begin);
        if (name_end == std::string_view::npos)
            throw BlockParseError("unterminated <START OF ...> delimiter");
        std::string name(text.substr(name_begin, name_end - name_begin));

        std::string end_tag = "<END OF " + name + ">";
        std::size_t body_begin = name_end + 1;
        std::size_t end = text.find(end_tag, body_begin);
        if (end == std::string_view::npos)
            throw BlockParseError("missing " + end_tag);
        std::size_t inner_start = text.find("<START OF ", body_begin);
        if (inner_start != std::string_view::npos && inner_start < end)
            throw BlockParseError("nested delimiter inside block " + name);

        std::string_view body = text.substr(body_begin, end - body_begin);
        if (!body.empty() && body.front() == '\n') body.remove_prefix(1);
        if (!body.empty() && body.back() == '\n') body.remove_suffix(1);
        blocks[name] = std::string(body);
        pos = end + end_tag.size();
    }
    return blocks;
}

/// Required blocks for MT source generation; throws naming the first absent one.
inline void require_mt_source_blocks(const std::map<std::string, std::string>& blocks) {
    const char* required[] = {"SOURCE",
                              "TRANSLATION INSTRUCTION",
                              "REFERENCE TRANSLATION",
                              "SCORING RUBRICS",
                              "SCORE 1 DESCRIPTION",
                              "SCORE 2 DESCRIPTION",
                              "SCORE 3 DESCRIPTION",
                              "SCORE 4 DESCRIPTION",
                              "SCORE 5 DESCRIPTION"};
    for (const char* name : required)
        if (!blocks.contains(name))
            throw BlockParseError(std::string("missing required block ") + name);
}

/// Scoring-rubric factors are ';'-separated in the SCORING RUBRICS block.
inline std::vector<std::string> split_rubric_factors(std::string_view rubrics) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= rubrics.size()) {
        std::size_t semi = rubrics.find(';', pos);
        std::string_view piece = semi == std::string_view::npos
                                     ? rubrics.substr(pos)
                                     : rubrics.substr(pos, semi - pos);
        piece = detail::trim(piece);
        if (!piece.empty()) out.emplace_back(piece);
        if (semi == std::string_view::npos) break;
        pos = semi + 1;
    }
    return out;
}

}  // namespace mjudge
