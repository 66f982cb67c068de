#pragma once

// Quality-aware decoding: best-of-n candidate selection by a DA judge,
// position-swapped head-to-head evaluation against greedy outputs, and
// Bradley-Terry ratings on the Elo scale with expected win rates.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "client.hpp"
#include "core.hpp"
#include "metaeval.hpp"
#include "parse.hpp"
#include "prompt.hpp"
#include "rng.hpp"

namespace mjudge {

struct CandidateSet {
    std::string query;
    LanguageTag language;
    std::string greedy_answer;
    std::vector<std::string> sampled;
    std::optional<std::vector<int>> judge_scores;  // aligned with sampled; 0 = unparseable
};

enum class MatchOutcome { a_wins, b_wins, tie };

struct MatchRecord {
    std::string query_id;
    std::string contestant_a;
    std::string contestant_b;
    MatchOutcome outcome = MatchOutcome::tie;
    bool position_swapped = false;
};

inline json to_json(const MatchRecord& m) {
    const char* outcome = m.outcome == MatchOutcome::a_wins   ? "a_wins"
                          : m.outcome == MatchOutcome::b_wins ? "b_wins"
                                                              : "tie";
    return json{{"query_id", m.query_id},
                {"contestant_a", m.contestant_a},
                {"contestant_b", m.contestant_b},
                {"outcome", outcome},
                {"position_swapped", m.position_swapped}};
}

inline MatchRecord match_record_from_json(const json& j) {
    MatchRecord m;
    m.query_id = j.at("query_id").get<std::string>();
    m.contestant_a = j.at("contestant_a").get<std::string>();
    m.contestant_b = j.at("contestant_b").get<std::string>();
    std::string o = j.at("outcome").get<std::string>();
    m.outcome = o == "a_wins" ? MatchOutcome::a_wins
                : o == "b_wins" ? MatchOutcome::b_wins
                                : MatchOutcome::tie;
    m.position_swapped = j.value("position_swapped", false);
    return m;
}

// ---------------------------------------------------------------------------
// Candidate generation

/// One greedy answer plus n temperature-sampled candidates.
inline CandidateSet sample_candidates(Client& generator, const std::string& query,
                                      const LanguageTag& language, int n = 30,
                                      double temperature = 0.3, int max_tokens = 2048) {
    CandidateSet set;
    set.query = query;
    set.language = language;

    GenerationParams greedy;
    greedy.temperature = 0.0;
    greedy.max_tokens = max_tokens;
    GenerationParams sampled;
    sampled.temperature = temperature;
    sampled.max_tokens = max_tokens;
    sampled.n_samples = n;

    auto results = generator.map_complete({{{{"user", query}}, greedy},
                                           {{{"user", query}}, sampled}});
    set.greedy_answer = results[0].value().texts[0];
    set.sampled = results[1].value().texts;
    return set;
}

// ---------------------------------------------------------------------------
// Best-of-n selection

/// General-quality rubric the QAD judge scores candidates against.
inline ScoreRubric qad_rubric() {
    ScoreRubric rubric;
    rubric.criteria =
        "Is the response helpful, accurate, complete, and well written for the given query?";
    rubric.score_descriptions = {
        {1, "The response is unhelpful, inaccurate, or fails to address the query."},
        {2, "The response partially addresses the query but contains notable errors or omissions."},
        {3, "The response addresses the query adequately with minor errors or gaps."},
        {4, "The response is helpful and accurate with only small room for improvement."},
        {5, "The response is exemplary: helpful, accurate, complete, and clearly written."}};
    return rubric;
}

class AllCandidatesUnparseableError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SelectionResult {
    std::size_t index = 0;
    std::vector<int> scores;  // 0 = unparseable candidate
};

/// Score every candidate with a reference-free DA judgement; pick the
/// argmax, breaking ties uniformly at random with the given seed.
/// Unparseable candidates score 0 and are never selected over parsed ones.
inline SelectionResult select_best(Client& judge, CandidateSet& set, std::uint64_t seed,
                                   const GenerationParams& judge_params = {},
                                   const TemplateSet& templates = TemplateSet::builtin()) {
    if (set.sampled.empty()) throw std::invalid_argument("candidate set is empty");

    ScoreRubric rubric = qad_rubric();
    std::vector<CompletionRequest> requests;
    requests.reserve(set.sampled.size());
    for (const auto& candidate : set.sampled) {
        DAInstance da;
        da.id = "qad";
        da.language = set.language;
        da.instruction = set.query;
        da.response = candidate;
        da.rubric = rubric;
        requests.push_back(
            {{{"user", render_da_prompt(da, {PromptMode::Task::DA, false}, templates)}},
             judge_params});
    }
    auto responses = judge.map_complete(requests);

    SelectionResult result;
    result.scores.reserve(set.sampled.size());
    for (const auto& res : responses) {
        int score = 0;
        if (res.ok()) {
            ParseOutcome outcome = parse_da(res.value().texts[0]);
            if (outcome.ok()) score = *outcome.verdict->score;
        }
        result.scores.push_back(score);
    }
    set.judge_scores = result.scores;

    int best = *std::max_element(result.scores.begin(), result.scores.end());
    if (best == 0)
        throw AllCandidatesUnparseableError("no candidate received a parseable score");
    std::vector<std::size_t> argmax;
    for (std::size_t i = 0; i < result.scores.size(); ++i)
        if (result.scores[i] == best) argmax.push_back(i);

    Rng rng = Rng::substream(seed, "tie-break:" + set.query);
    result.index = argmax[rng.uniform_index(argmax.size())];
    return result;
}

// ---------------------------------------------------------------------------
// Head-to-head evaluation

/// Criteria the head-to-head evaluator compares answers against.
inline std::string head_to_head_criteria() {
    return "Which response answers the query more helpfully, accurately, and completely?";
}

/// Two PWC games with positions swapped between them. Per-game outcome from
/// the parsed choice; an unparseable game records a tie. Aggregation
/// downstream decides the match: both games for one side is a win, a split
/// is a tie.
inline std::pair<MatchRecord, MatchRecord> head_to_head(
    Client& evaluator, const std::string& query_id, const std::string& query,
    const std::string& contestant_a, const std::string& answer_a,
    const std::string& contestant_b, const std::string& answer_b,
    const std::string& reference_answer, const GenerationParams& judge_params = {},
    const TemplateSet& templates = TemplateSet::builtin()) {
    auto make_request = [&](const std::string& slot_a, const std::string& slot_b) {
        PWCInstance inst;
        inst.id = query_id;
        inst.instruction = query;
        inst.response_a = slot_a;
        inst.response_b = slot_b;
        inst.criteria = head_to_head_criteria();
        inst.reference = reference_answer;
        inst.reference_encoding = RefEncoding::present;
        return CompletionRequest{
            {{"user", render_pwc_prompt(inst, {PromptMode::Task::PWC, true}, templates)}},
            judge_params};
    };
    auto responses = evaluator.map_complete(
        {make_request(answer_a, answer_b), make_request(answer_b, answer_a)});

    auto game = [&](std::size_t i, bool swapped) {
        MatchRecord m;
        m.query_id = query_id;
        m.contestant_a = contestant_a;
        m.contestant_b = contestant_b;
        m.position_swapped = swapped;
        m.outcome = MatchOutcome::tie;
        if (responses[i].ok()) {
            ParseOutcome outcome = parse_pwc(responses[i].value().texts[0]);
            if (outcome.ok()) {
                bool slot_a_won = *outcome.verdict->choice == 'A';
                bool a_won = swapped ? !slot_a_won : slot_a_won;
                m.outcome = a_won ? MatchOutcome::a_wins : MatchOutcome::b_wins;
            }
        }
        return m;
    };
    return {game(0, false), game(1, true)};
}

// ---------------------------------------------------------------------------
// Bradley-Terry ratings on the Elo scale

class DisconnectedGraphError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bradley-Terry maximum likelihood from match outcomes, ties as half-wins,
/// ridge-regularized, reported on the Elo scale (logistic base 10, scale
/// 400) with the anchor contestant at 1000.
inline std::map<std::string, double> estimate_ratings(const std::vector<MatchRecord>& matches,
                                                      const std::string& anchor = "",
                                                      double ridge = 1e-4) {
    std::vector<std::string> ids;
    std::map<std::string, std::size_t> index;
    auto intern = [&](const std::string& id) {
        auto [it, inserted] = index.try_emplace(id, ids.size());
        if (inserted) ids.push_back(id);
        return it->second;
    };

    std::map<std::pair<std::size_t, std::size_t>, double> wins;
    for (const auto& m : matches) {
        std::size_t a = intern(m.contestant_a);
        std::size_t b = intern(m.contestant_b);
        switch (m.outcome) {
            case MatchOutcome::a_wins: wins[{a, b}] += 1.0; break;
            case MatchOutcome::b_wins: wins[{b, a}] += 1.0; break;
            case MatchOutcome::tie:
                wins[{a, b}] += 0.5;
                wins[{b, a}] += 0.5;
                break;
        }
    }
    const std::size_t n = ids.size();
    if (n == 0) throw std::invalid_argument("no matches");

    // Connectivity over the comparison graph.
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& [pair, _] : wins) parent[find(pair.first)] = find(pair.second);
    for (std::size_t i = 1; i < n; ++i)
        if (find(i) != find(0))
            throw DisconnectedGraphError("comparison graph does not connect all contestants");

    // Ridge: every ordered pair gets a small phantom win.
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (const auto& [pair, count] : wins) w[pair.first][pair.second] = count;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) w[i][j] += ridge;

    // MM iteration on strengths.
    std::vector<double> strength(n, 1.0);
    for (int iter = 0; iter < 10000; ++iter) {
        double max_delta = 0;
        std::vector<double> updated(n);
        for (std::size_t i = 0; i < n; ++i) {
            double wins_i = 0;
            double denom = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                wins_i += w[i][j];
                denom += (w[i][j] + w[j][i]) / (strength[i] + strength[j]);
            }
            updated[i] = wins_i / denom;
        }
        double geo = 0;
        for (double s : updated) geo += std::log(s);
        geo = std::exp(geo / static_cast<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            updated[i] /= geo;
            max_delta = std::max(max_delta, std::abs(updated[i] - strength[i]));
            strength[i] = updated[i];
        }
        if (max_delta < 1e-12) break;
    }

    std::size_t anchor_index = 0;
    if (!anchor.empty()) {
        auto it = index.find(anchor);
        if (it == index.end()) throw std::invalid_argument("anchor " + anchor + " has no matches");
        anchor_index = it->second;
    }
    std::map<std::string, double> ratings;
    for (std::size_t i = 0; i < n; ++i)
        ratings[ids[i]] =
            1000.0 + 400.0 * std::log10(strength[i] / strength[anchor_index]);
    return ratings;
}

/// Expected win rate from an Elo rating difference.
inline double elo_to_winrate(double delta) { return 1.0 / (1.0 + std::pow(10.0, -delta / 400.0)); }

}  // namespace mjudge
