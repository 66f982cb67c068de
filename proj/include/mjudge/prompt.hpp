#pragma once

// Prompt rendering: DA and PWC judge prompts (reference-based and
// reference-free) and the data-generation prompts. Templates are plain text
// with ${name} placeholders; inserted values are never rescanned, so user
// content passes through byte-exactly. The same templates ship as text
// assets under assets/templates/ for diffing; a test pins the two equal.

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "core.hpp"

namespace mjudge {

struct PromptMode {
    enum class Task { DA, PWC };
    Task task = Task::DA;
    bool with_reference = false;
};

/// Attributes conditioning MT source-text generation.
struct MTGenAttributes {
    std::string source_language;
    std::string target_language;
    std::string topic;
    std::string subtopic;
    std::string source_length;  // short | medium | long | very long
    std::string audience;
    std::string style;
};

inline bool valid_source_length(const std::string& s) {
    return s == "short" || s == "medium" || s == "long" || s == "very long";
}

struct TemplateSet {
    std::string version;
    std::string da_ref;
    std::string da_noref;
    std::string pwc_ref;
    std::string pwc_noref;
    std::string mt_source_gen;
    std::string mt_candidate;
    std::string instruction_gen;
    std::string response_gen;
    std::string reference_gen;
    std::string preference_feedback_gen;

    static const TemplateSet& builtin();
    static TemplateSet load(const std::string& dir);
};

/// Substitute ${name} placeholders. Placeholders are found in the template
/// only; substituted values are emitted verbatim and never rescanned.
/// Throws if the template names a variable not present in vars.
inline std::string render_template(std::string_view tmpl,
                                   const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        std::size_t open = tmpl.find("${", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        std::size_t close = tmpl.find('}', open + 2);
        if (close == std::string_view::npos)
            throw std::invalid_argument("unterminated placeholder in template");
        std::string name(tmpl.substr(open + 2, close - open - 2));
        auto it = vars.find(name);
        if (it == vars.end())
            throw std::invalid_argument("template references unknown variable: " + name);
        out.append(it->second);
        pos = close + 1;
    }
    return out;
}

/// Rubric block as it appears under "###Score Rubrics:": bracketed criteria
/// followed by one "Score N:" line per score.
inline std::string render_rubric(const ScoreRubric& rubric) {
    std::ostringstream out;
    out << '[' << rubric.criteria << ']';
    for (int s = 1; s <= 5; ++s) {
        auto it = rubric.score_descriptions.find(s);
        out << "\nScore " << s << ": " << (it != rubric.score_descriptions.end() ? it->second : "");
    }
    return out.str();
}

inline std::string render_da_prompt(const DAInstance& x, PromptMode mode,
                                    const TemplateSet& templates = TemplateSet::builtin()) {
    if (mode.task != PromptMode::Task::DA)
        throw std::invalid_argument("render_da_prompt called with non-DA mode");
    std::map<std::string, std::string> vars{
        {"instruction", x.instruction},
        {"response", x.response},
        {"rubric", render_rubric(x.rubric)},
    };
    if (mode.with_reference) {
        if (!x.reference)
            throw std::invalid_argument("reference-based mode but instance has no reference");
        vars["reference"] = *x.reference;
        return render_template(templates.da_ref, vars);
    }
    return render_template(templates.da_noref, vars);
}

inline std::string render_pwc_prompt(const PWCInstance& x, PromptMode mode,
                                     const TemplateSet& templates = TemplateSet::builtin()) {
    if (mode.task != PromptMode::Task::PWC)
        throw std::invalid_argument("render_pwc_prompt called with non-PWC mode");
    std::map<std::string, std::string> vars{
        {"instruction", x.instruction},
        {"response_a", x.response_a},
        {"response_b", x.response_b},
        {"criteria", x.criteria},
    };
    if (mode.with_reference) {
        if (!x.reference)
            throw std::invalid_argument("reference-based mode but instance has no reference");
        vars["reference"] = *x.reference;
        return render_template(templates.pwc_ref, vars);
    }
    return render_template(templates.pwc_noref, vars);
}

inline std::string render_mt_source_gen_prompt(
    const MTGenAttributes& attrs, const TemplateSet& templates = TemplateSet::builtin()) {
    if (!valid_source_length(attrs.source_length))
        throw std::invalid_argument("source_length must be one of short/medium/long/very long");
    return render_template(templates.mt_source_gen,
                           {{"source_language", attrs.source_language},
                            {"target_language", attrs.target_language},
                            {"topic", attrs.topic},
                            {"subtopic", attrs.subtopic},
                            {"source_length", attrs.source_length},
                            {"audience", attrs.audience},
                            {"style", attrs.style}});
}

inline std::string render_mt_candidate_prompt(
    const std::string& source, const std::string& translation_instruction,
    const std::string& rubric_text, int score,
    const TemplateSet& templates = TemplateSet::builtin()) {
    if (score < 1 || score > 5) throw std::invalid_argument("score out of 1..5");
    return render_template(templates.mt_candidate,
                           {{"source", source},
                            {"translation_instruction", translation_instruction},
                            {"scoring_rubrics", rubric_text},
                            {"score", std::to_string(score)}});
}

// ---------------------------------------------------------------------------
// Built-in templates. These strings and the files in assets/templates/ are
// the same bytes; tests enforce it.

namespace templates_v1 {

inline constexpr std::string_view kVersion = "templates-v1";

inline constexpr std::string_view kDaRef =
    R"TMPL(###Task Description:
An instruction (might include an Input inside it), a response to evaluate, a reference answer that gets a score of 5, and a score rubric representing a evaluation criteria are given.
1. Write a detailed feedback that assess the quality of the response strictly based on the given score rubric, not evaluating in general.
2. After writing a feedback, write a score that is an integer between 1 and 5. You should refer to the score rubric.
3. The output format should look as follows: "Feedback: (write a feedback for criteria) [RESULT] (an integer number between 1 and 5)"
4. Please do not generate any other opening, closing, and explanations.

###The instruction to evaluate:
${instruction}

###Response to evaluate:
${response}

###Reference Answer (Score 5):
${reference}

###Score Rubrics:
${rubric}
)TMPL";

inline constexpr std::string_view kDaNoRef =
    R"TMPL(###Task Description:
An instruction (might include an Input inside it), a response to evaluate, and a score rubric representing a evaluation criteria are given.
1. Write a detailed feedback that assess the quality of the response strictly based on the given score rubric, not evaluating in general.
2. After writing a feedback, write a score that is an integer between 1 and 5. You should refer to the score rubric.
3. The output format should look as follows: "Feedback: (write a feedback for criteria) [RESULT] (an integer number between 1 and 5)"
4. Please do not generate any other opening, closing, and explanations.

###The instruction to evaluate:
${instruction}

###Response to evaluate:
${response}

###Score Rubrics:
${rubric}
)TMPL";

inline constexpr std::string_view kPwcRef =
    R"TMPL(###Task Description:
An instruction (might include an Input inside it), two responses to evaluate (denoted as Response A and Response B), a reference answer, and an evaluation criteria are given.
1. Write a detailed feedback that assess the quality of the two responses strictly based on the given evaluation criteria, not evaluating in general.
2. Make comparisons between Response A, Response B, and the Reference Answer. Instead of examining Response A and Response B separately, go straight to the point and mention about the commonalities and differences between them.
3. After writing the feedback, indicate the better response, either "A" or "B".
4. The output format should look as follows: "Feedback: (write a feedback for criteria) [RESULT] (Either "A" or "B")"
5. Please do not generate any other opening, closing, and explanations.

###The instruction to evaluate:
${instruction}

###Response A to evaluate:
${response_a}

###Response B to evaluate:
${response_b}

###Reference Answer:
${reference}

###Evaluation Criteria:
${criteria}
)TMPL";

inline constexpr std::string_view kPwcNoRef =
    R"TMPL(###Task Description:
An instruction (might include an Input inside it), two responses to evaluate (denoted as Response A and Response B), and an evaluation criteria are given.
1. Write a detailed feedback that assess the quality of the two responses strictly based on the given evaluation criteria, not evaluating in general.
2. Make comparisons between Response A and Response B. Instead of examining Response A and Response B separately, go straight to the point and mention about the commonalities and differences between them.
3. After writing the feedback, indicate the better response, either "A" or "B".
4. The output format should look as follows: "Feedback: (write a feedback for criteria) [RESULT] (Either "A" or "B")"
5. Please do not generate any other opening, closing, and explanations.

###The instruction to evaluate:
${instruction}

###Response A to evaluate:
${response_a}

###Response B to evaluate:
${response_b}

###Evaluation Criteria:
${criteria}
)TMPL";

inline constexpr std::string_view kMtSourceGen =
    R"TMPL(You are a multilingual content creator and translation expert. Your task is to generate a comprehensive translation exercise package based on the given attributes. Follow these instructions carefully:

1. Review the following input variables:
- Source language: ${source_language}
- Target language: ${target_language}
- Topic: ${topic}
- Subtopic: ${subtopic}
- Source Length: ${source_length}
- Audience: ${audience}
- Style: ${style}

2. Generate a source text:
Create an original text in the source language, adhering to the specified topic, subtopic, and length. The text should be coherent, informative, and suitable for translation.

3. Create a translation instruction:
Formulate a clear and specific instruction for translating the source text, taking into account the given attributes. The instruction should guide the translator on how to approach the translation task.

4. Generate a reference translation:
Produce a high-quality, fluent translation of the source text in the target language. This translation should serve as a reference for evaluating other translations.

5. Develop scoring rubrics:
Create one to three scoring factors to evaluate translations. These rubrics should be in English, clear, specific, and relevant to the translation task.

6. Generate descriptions of scores, ranging from score 1 (worst) to score 5 (best), which will later be used as guidelines to score translations. Give a description in English of what each score represents.

Format your output as follows:

<START OF SOURCE>
[INSERT THE SOURCE TEXT HERE]
<END OF SOURCE>

<START OF TRANSLATION INSTRUCTION>
[INSERT THE TRANSLATION INSTRUCTION HERE]
<END OF TRANSLATION INSTRUCTION>

<START OF REFERENCE TRANSLATION>
[INSERT THE REFERENCE TRANSLATION HERE]
<END OF REFERENCE TRANSLATION>

<START OF SCORING RUBRICS>
[INSERT SCORING RUBRICS IN ENGLISH SEPARATED BY A ;]
<END OF SCORING RUBRICS>

<START OF SCORE 1 DESCRIPTION>
[INSERT SCORE 1 DESCRIPTION IN ENGLISH HERE]
<END OF SCORE 1 DESCRIPTION>

<START OF SCORE 2 DESCRIPTION>
[INSERT SCORE 2 DESCRIPTION IN ENGLISH HERE]
<END OF SCORE 2 DESCRIPTION>

<START OF SCORE 3 DESCRIPTION>
[INSERT SCORE 3 DESCRIPTION IN ENGLISH HERE]
<END OF SCORE 3 DESCRIPTION>

<START OF SCORE 4 DESCRIPTION>
[INSERT SCORE 4 DESCRIPTION IN ENGLISH HERE]
<END OF SCORE 4 DESCRIPTION>

<START OF SCORE 5 DESCRIPTION>
[INSERT SCORE 5 DESCRIPTION IN ENGLISH HERE]
<END OF SCORE 5 DESCRIPTION>

Ensure that your response is comprehensive, coherent, and follows all the instructions provided above.
IMPORTANT: ABIDE STRICTLY BY THE REQUESTED FORMAT AND KEEP GENERATING UNTIL THE END OF THE REQUESTED OUTPUT.
)TMPL";

inline constexpr std::string_view kMtCandidate =
    R"TMPL(Generate an example translation of score ${score} for the given translation instruction, source, and scoring rubrics:
<START OF SOURCE>
${source}
<END OF SOURCE>

<START OF TRANSLATION INSTRUCTION>
${translation_instruction}
<END OF TRANSLATION INSTRUCTION>

<START OF SCORING RUBRICS>
${scoring_rubrics}
<END OF SCORING RUBRICS>

<START OF SCORE ${score} TRANSLATION>
[INSERT TRANSLATION HERE]
<END OF SCORE ${score} TRANSLATION>

IMPORTANT: ABIDE STRICTLY BY THE REQUESTED FORMAT AND KEEP GENERATING UNTIL THE END OF THE REQUESTED OUTPUT.
)TMPL";

inline constexpr std::string_view kInstructionGen =
    R"TMPL(You are a multilingual content creator. Given a scoring rubric, write one realistic user instruction in ${language} that a free-form response could be judged against using the rubric. The instruction should be self-contained and demanding enough that responses of clearly different quality are possible.

Scoring rubric:
${rubric}

Format your output as follows:

<START OF INSTRUCTION>
[INSERT THE INSTRUCTION HERE]
<END OF INSTRUCTION>

IMPORTANT: ABIDE STRICTLY BY THE REQUESTED FORMAT AND KEEP GENERATING UNTIL THE END OF THE REQUESTED OUTPUT.
)TMPL";

inline constexpr std::string_view kResponseGen =
    R"TMPL(You are a multilingual content creator. Given a user instruction in ${language} and a scoring rubric, write a response in ${language} whose quality corresponds exactly to score ${score} of the rubric, followed by detailed long-form feedback in English explaining why the response deserves score ${score}.

Instruction:
${instruction}

Scoring rubric:
${rubric}

Format your output as follows:

<START OF RESPONSE>
[INSERT THE RESPONSE HERE]
<END OF RESPONSE>

<START OF FEEDBACK>
[INSERT THE FEEDBACK IN ENGLISH HERE]
<END OF FEEDBACK>

IMPORTANT: ABIDE STRICTLY BY THE REQUESTED FORMAT AND KEEP GENERATING UNTIL THE END OF THE REQUESTED OUTPUT.
)TMPL";

inline constexpr std::string_view kReferenceGen =
    R"TMPL(You are a multilingual content creator. Given a user instruction in ${language} and a scoring rubric, write a reference response in ${language} that would receive score 5 of the rubric. The reference represents an ideal answer to the instruction.

Instruction:
${instruction}

Scoring rubric:
${rubric}

Format your output as follows:

<START OF REFERENCE>
[INSERT THE REFERENCE RESPONSE HERE]
<END OF REFERENCE>

IMPORTANT: ABIDE STRICTLY BY THE REQUESTED FORMAT AND KEEP GENERATING UNTIL THE END OF THE REQUESTED OUTPUT.
)TMPL";

inline constexpr std::string_view kPreferenceFeedbackGen =
    R"TMPL(You are an expert evaluator. Given a user instruction, two responses (denoted as Response A and Response B), and an evaluation criteria, write detailed long-form feedback in English comparing the two responses strictly based on the criteria. Go straight to the point and mention the commonalities and differences between them.

Instruction:
${instruction}

Response A:
${response_a}

Response B:
${response_b}

Evaluation criteria:
${criteria}

Format your output as follows:

<START OF FEEDBACK>
[INSERT THE FEEDBACK IN ENGLISH HERE]
<END OF FEEDBACK>

IMPORTANT: ABIDE STRICTLY BY THE REQUESTED FORMAT AND KEEP GENERATING UNTIL THE END OF THE REQUESTED OUTPUT.
)TMPL";

}  // namespace templates_v1

inline const TemplateSet& TemplateSet::builtin() {
    static const TemplateSet set{
        std::string(templates_v1::kVersion),
        std::string(templates_v1::kDaRef),
        std::string(templates_v1::kDaNoRef),
        std::string(templates_v1::kPwcRef),
        std::string(templates_v1::kPwcNoRef),
        std::string(templates_v1::kMtSourceGen),
        std::string(templates_v1::kMtCandidate),
        std::string(templates_v1::kInstructionGen),
        std::string(templates_v1::kResponseGen),
        std::string(templates_v1::kReferenceGen),
        std::string(templates_v1::kPreferenceFeedbackGen),
    };
    return set;
}

namespace detail {

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

inline TemplateSet TemplateSet::load(const std::string& dir) {
    TemplateSet set;
    auto strip = [](std::string s) {
        while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
        return s;
    };
    set.version = strip(detail::read_text_file(dir + "/VERSION"));
    set.da_ref = detail::read_text_file(dir + "/da_ref.txt");
    set.da_noref = detail::read_text_file(dir + "/da_noref.txt");
    set.pwc_ref = detail::read_text_file(dir + "/pwc_ref.txt");
    set.pwc_noref = detail::read_text_file(dir + "/pwc_noref.txt");
    set.mt_source_gen = detail::read_text_file(dir + "/mt_source_gen.txt");
    set.mt_candidate = detail::read_text_file(dir + "/mt_candidate.txt");
    set.instruction_gen = detail::read_text_file(dir + "/instruction_gen.txt");
    set.response_gen = detail::read_text_file(dir + "/response_gen.txt");
    set.reference_gen = detail::read_text_file(dir + "/reference_gen.txt");
    set.preference_feedback_gen = detail::read_text_file(dir + "/preference_feedback_gen.txt");
    return set;
}

}  // namespace mjudge
