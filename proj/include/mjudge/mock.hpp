#pragma once

// Scripted, in-process stand-ins for model endpoints. Used by tests and by
// the CLI's --mock mode; never opens a network connection.

#include <atomic>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "client.hpp"
#include "parse.hpp"
#include "rng.hpp"

namespace mjudge {

inline json make_openai_response(const std::vector<std::string>& texts,
                                 long prompt_tokens = 0, long completion_tokens = 0) {
    json choices = json::array();
    for (const auto& t : texts)
        choices.push_back({{"message", {{"role", "assistant"}, {"content", t}}},
                           {"finish_reason", "stop"}});
    return json{{"choices", std::move(choices)},
                {"usage",
                 {{"prompt_tokens", prompt_tokens}, {"completion_tokens", completion_tokens}}}};
}

/// A Transport backed by a function from request body to sample texts.
/// Tracks call count and the concurrent-connection high-water mark.
class ScriptedTransport : public Transport {
public:
    using Behavior = std::function<std::vector<std::string>(const json& body)>;

    explicit ScriptedTransport(Behavior behavior, std::chrono::microseconds latency = {})
        : behavior_(std::move(behavior)), latency_(latency) {}

    TransportResult perform(const EndpointConfig&, const json& body, const std::string&) override {
        int now = ++active_;
        int high = high_water_.load();
        while (now > high && !high_water_.compare_exchange_weak(high, now)) {
        }
        if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
        ++calls_;
        std::vector<std::string> texts = behavior_(body);
        --active_;
        return {200, make_openai_response(texts).dump(), ""};
    }

    int calls() const { return calls_.load(); }
    int high_water_mark() const { return high_water_.load(); }

private:
    Behavior behavior_;
    std::chrono::microseconds latency_;
    std::atomic<int> active_{0};
    std::atomic<int> calls_{0};
    std::atomic<int> high_water_{0};
};

/// Behavior adapter: one text per requested sample, from (prompt, index).
inline ScriptedTransport::Behavior per_sample(
    std::function<std::string(const std::string& prompt, int sample_index)> fn) {
    return [fn = std::move(fn)](const json& body) {
        std::string prompt = body.at("messages").back().at("content").get<std::string>();
        int n = body.value("n", 1);
        std::vector<std::string> texts;
        texts.reserve(n);
        for (int i = 0; i < n; ++i) texts.push_back(fn(prompt, i));
        return texts;
    };
}

namespace mockgen {

inline std::string slug(const std::string& prompt, std::string_view tag) {
    std::uint64_t h = detail::fnv1a64(prompt, detail::fnv1a64(tag));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string extract_after(const std::string& prompt, const std::string& header) {
    std::size_t pos = prompt.find(header);
    if (pos == std::string::npos) return "";
    pos += header.size();
    std::size_t end = prompt.find("\n\n", pos);
    return prompt.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

}  // namespace mockgen

/// Deterministic generator behavior for the datagen pipelines: recognizes
/// each generation prompt by its leading text and answers with well-formed
/// delimiter blocks whose bodies are stable digests of the prompt.
inline ScriptedTransport::Behavior mock_generator_behavior() {
    return per_sample([](const std::string& prompt, int sample) {
        using mockgen::slug;
        std::string salt = std::to_string(sample);
        if (prompt.rfind("You are a multilingual content creator and translation expert", 0) == 0) {
            std::string s;
            s += "<START OF SOURCE>\nsource text " + slug(prompt, "src" + salt) + "\n<END OF SOURCE>\n\n";
            s += "<START OF TRANSLATION INSTRUCTION>\ntranslate carefully " +
                 slug(prompt, "ti" + salt) + "\n<END OF TRANSLATION INSTRUCTION>\n\n";
            s += "<START OF REFERENCE TRANSLATION>\nreference translation " +
                 slug(prompt, "ref" + salt) + "\n<END OF REFERENCE TRANSLATION>\n\n";
            s += "<START OF SCORING RUBRICS>\naccuracy of meaning; fluency of target text\n"
                 "<END OF SCORING RUBRICS>\n\n";
            for (int k = 1; k <= 5; ++k) {
                std::string n = std::to_string(k);
                s += "<START OF SCORE " + n + " DESCRIPTION>\nscore " + n + " description " +
                     slug(prompt, "d" + n) + "\n<END OF SCORE " + n + " DESCRIPTION>\n\n";
            }
            return s;
        }
        if (prompt.rfind("Generate an example translation of score", 0) == 0) {
            std::string n = mockgen::extract_after(prompt, "Generate an example translation of score ");
            n = n.substr(0, n.find(' '));
            return "<START OF SCORE " + n + " TRANSLATION>\ncandidate translation score " + n +
                   " " + slug(prompt, "cand" + salt) + "\n<END OF SCORE " + n + " TRANSLATION>\n";
        }
        if (prompt.find("<START OF INSTRUCTION>") != std::string::npos) {
            return "<START OF INSTRUCTION>\ninstruction " + slug(prompt, "ins" + salt) +
                   "\n<END OF INSTRUCTION>\n";
        }
        if (prompt.find("<START OF RESPONSE>") != std::string::npos) {
            std::string score = mockgen::extract_after(prompt, "corresponds exactly to score ");
            score = score.substr(0, score.find(' '));
            return "<START OF RESPONSE>\nresponse score " + score + " " +
                   slug(prompt, "resp" + salt) + "\n<END OF RESPONSE>\n\n<START OF FEEDBACK>\n" +
                   "feedback for score " + score + " " + slug(prompt, "fb" + salt) +
                   "\n<END OF FEEDBACK>\n";
        }
        if (prompt.find("<START OF REFERENCE>") != std::string::npos) {
            return "<START OF REFERENCE>\nreference response " + slug(prompt, "gref" + salt) +
                   "\n<END OF REFERENCE>\n";
        }
        if (prompt.find("<START OF FEEDBACK>") != std::string::npos) {
            return "<START OF FEEDBACK>\npreference feedback " + slug(prompt, "pfb" + salt) +
                   "\n<END OF FEEDBACK>\n";
        }
        return std::string("mock completion ") + slug(prompt, "gen" + salt);
    });
}

/// Deterministic DA judge: scores by a stable digest of the response block,
/// in the Feedback ... [RESULT] N format.
inline ScriptedTransport::Behavior mock_da_judge_behavior() {
    return per_sample([](const std::string& prompt, int) {
        std::string response = mockgen::extract_after(prompt, "###Response to evaluate:\n");
        int score = 1 + static_cast<int>(detail::fnv1a64(response) % 5);
        return "Feedback: mock direct assessment. [RESULT] " + std::to_string(score);
    });
}

/// Deterministic PWC judge: picks by comparing stable digests of the two
/// response blocks.
inline ScriptedTransport::Behavior mock_pwc_judge_behavior() {
    return per_sample([](const std::string& prompt, int) {
        std::string a = mockgen::extract_after(prompt, "###Response A to evaluate:\n");
        std::string b = mockgen::extract_after(prompt, "###Response B to evaluate:\n");
        char pick = detail::fnv1a64(a) >= detail::fnv1a64(b) ? 'A' : 'B';
        return std::string("Feedback: mock pairwise comparison. [RESULT] ") + pick;
    });
}

}  // namespace mjudge
