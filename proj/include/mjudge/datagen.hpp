#pragma once

// Synthetic training-data pipelines: multilingual DA data (feedback
// collection), PWC preference pairs derived from it, and MT-evaluation
// data. Fully seeded; all model calls go through Client::map_complete and
// post-processing is sequential over the ordered results.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "client.hpp"
#include "core.hpp"
#include "parse.hpp"
#include "prompt.hpp"
#include "rng.hpp"

namespace mjudge {

/// One instruction's five scored responses plus English feedback.
struct FeedbackGroup {
    ScoreRubric rubric;
    LanguageTag language;
    std::string instruction;
    std::string instruction_id;
    std::map<int, std::pair<std::string, std::string>> responses;  // score -> (response, feedback)
    std::optional<std::string> reference;

    bool complete() const {
        for (int s = 1; s <= 5; ++s)
            if (!responses.contains(s)) return false;
        return true;
    }
};

struct RunSummary {
    std::size_t attempted = 0;
    std::size_t emitted = 0;
    std::size_t skipped = 0;
    std::vector<std::string> skip_log;

    double skip_rate() const { return attempted == 0 ? 0.0 : double(skipped) / double(attempted); }
};

// ---------------------------------------------------------------------------
// Attribute pool (weighted categories for MT source generation)

struct WeightedCategory {
    std::string value;
    long count = 0;
};

struct AttributePool {
    // topic -> weighted subtopics; topic weight = sum of its subtopic counts
    std::vector<std::pair<std::string, std::vector<WeightedCategory>>> topics;
    std::vector<WeightedCategory> styles;
    std::vector<WeightedCategory> audiences;
    std::vector<WeightedCategory> source_lengths;

    bool empty() const {
        return topics.empty() || styles.empty() || audiences.empty() || source_lengths.empty();
    }

    static AttributePool from_json(const json& j) {
        AttributePool pool;
        auto read_list = [](const json& arr) {
            std::vector<WeightedCategory> out;
            for (const auto& e : arr)
                out.push_back({e.at("value").get<std::string>(), e.at("count").get<long>()});
            return out;
        };
        for (const auto& t : j.at("topics")) {
            pool.topics.emplace_back(t.at("value").get<std::string>(),
                                     read_list(t.at("subtopics")));
        }
        pool.styles = read_list(j.at("styles"));
        pool.audiences = read_list(j.at("audiences"));
        pool.source_lengths = read_list(j.at("source_lengths"));
        for (const auto& [topic, subs] : pool.topics)
            for (const auto& s : subs)
                if (s.count <= 0) throw std::runtime_error("non-positive count in pool");
        return pool;
    }

    static AttributePool load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open attribute pool " + path);
        return from_json(json::parse(in));
    }
};

namespace detail {

inline const WeightedCategory& weighted_draw(const std::vector<WeightedCategory>& items, Rng& rng) {
    long total = 0;
    for (const auto& it : items) total += it.count;
    std::uint64_t x = rng.uniform_index(static_cast<std::uint64_t>(total));
    for (const auto& it : items) {
        if (x < static_cast<std::uint64_t>(it.count)) return it;
        x -= it.count;
    }
    return items.back();
}

}  // namespace detail

/// Weighted categorical draw per attribute; subtopic conditional on topic.
/// Language pair fields are the caller's to fill.
inline MTGenAttributes sample_mt_attributes(const AttributePool& pool, Rng& rng) {
    if (pool.empty()) throw std::runtime_error("attribute pool is empty");
    MTGenAttributes attrs;

    long topic_total = 0;
    for (const auto& [_, subs] : pool.topics)
        for (const auto& s : subs) topic_total += s.count;
    std::uint64_t x = rng.uniform_index(static_cast<std::uint64_t>(topic_total));
    const std::vector<WeightedCategory>* subs = nullptr;
    for (const auto& [topic, sublist] : pool.topics) {
        long w = 0;
        for (const auto& s : sublist) w += s.count;
        if (x < static_cast<std::uint64_t>(w)) {
            attrs.topic = topic;
            subs = &sublist;
            break;
        }
        x -= w;
    }
    attrs.subtopic = detail::weighted_draw(*subs, rng).value;
    attrs.style = detail::weighted_draw(pool.styles, rng).value;
    attrs.audience = detail::weighted_draw(pool.audiences, rng).value;
    attrs.source_length = detail::weighted_draw(pool.source_lengths, rng).value;
    return attrs;
}

// ---------------------------------------------------------------------------
// Deterministic half-split: seeded shuffle of indices, first ceil(n/2) in.

inline std::vector<bool> half_split(std::size_t n, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<bool> selected(n, false);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) selected[order[i]] = true;
    return selected;
}

// ---------------------------------------------------------------------------
// Feedback collection (DA data)

struct DatagenCounts {
    int instructions_per_rubric = 5;
};

struct FeedbackCollectionResult {
    std::vector<DAInstance> instances;
    std::vector<FeedbackGroup> groups;
    RunSummary summary;
};

inline FeedbackCollectionResult gen_feedback_collection(
    const std::vector<ScoreRubric>& rubrics, const std::vector<LanguageTag>& languages,
    Client& generator, std::uint64_t seed, DatagenCounts counts = {},
    const TemplateSet& templates = TemplateSet::builtin()) {
    if (rubrics.empty()) throw std::invalid_argument("no rubrics");
    if (languages.empty()) throw std::invalid_argument("no languages");

    FeedbackCollectionResult result;
    GenerationParams params;
    params.temperature = 0.0;
    params.max_tokens = 4096;

    const int per_rubric = counts.instructions_per_rubric;

    // Stage 1: instructions, one batch across all (rubric, language) cells.
    std::vector<CompletionRequest> instr_requests;
    for (std::size_t r = 0; r < rubrics.size(); ++r) {
        std::string rubric_text = render_rubric(rubrics[r]);
        for (const auto& lang : languages) {
            for (int i = 0; i < per_rubric; ++i) {
                std::string prompt = render_template(
                    templates.instruction_gen,
                    {{"language", lang.code}, {"rubric", rubric_text}});
                // Distinct index salt so identical prompts stay distinct calls.
                prompt += "\n[request " + std::to_string(i) + "]";
                instr_requests.push_back({{{"user", prompt}}, params});
            }
        }
    }
    auto instr_responses = generator.map_complete(instr_requests);

    struct PendingInstruction {
        std::size_t rubric_index;
        LanguageTag language;
        int instr_index;
        std::string instruction;
        bool with_reference = false;
    };
    std::vector<PendingInstruction> pending;

    std::size_t cursor = 0;
    for (std::size_t r = 0; r < rubrics.size(); ++r) {
        for (const auto& lang : languages) {
            std::vector<PendingInstruction> cell;
            for (int i = 0; i < per_rubric; ++i, ++cursor) {
                result.summary.attempted += 5;  // five scored instances ride on it
                const auto& res = instr_responses[cursor];
                std::string where = "rubric " + std::to_string(r) + " lang " + lang.code +
                                    " instruction " + std::to_string(i);
                if (!res.ok()) {
                    result.summary.skipped += 5;
                    result.summary.skip_log.push_back(where + ": " + res.error);
                    continue;
                }
                try {
                    auto blocks = parse_mt_gen_blocks(res.value().texts[0]);
                    if (!blocks.contains("INSTRUCTION"))
                        throw BlockParseError("missing required block INSTRUCTION");
                    cell.push_back({r, lang, i, blocks.at("INSTRUCTION")});
                } catch (const BlockParseError& e) {
                    result.summary.skipped += 5;
                    result.summary.skip_log.push_back(where + ": " + e.what());
                }
            }
            // Reference half, per (rubric, language) cell of surviving instructions.
            Rng half_rng = Rng::substream(
                seed, "half-split:" + std::to_string(r) + ":" + lang.code);
            auto selected = half_split(cell.size(), half_rng);
            for (std::size_t k = 0; k < cell.size(); ++k) cell[k].with_reference = selected[k];
            pending.insert(pending.end(), cell.begin(), cell.end());
        }
    }

    // Stage 2: references and scored responses, one batch.
    std::vector<CompletionRequest> work_requests;
    for (const auto& p : pending) {
        std::string rubric_text = render_rubric(rubrics[p.rubric_index]);
        if (p.with_reference) {
            work_requests.push_back(
                {{{"user", render_template(templates.reference_gen,
                                           {{"language", p.language.code},
                                            {"instruction", p.instruction},
                                            {"rubric", rubric_text}})}},
                 params});
        }
        for (int score = 1; score <= 5; ++score) {
            work_requests.push_back(
                {{{"user", render_template(templates.response_gen,
                                           {{"language", p.language.code},
                                            {"instruction", p.instruction},
                                            {"rubric", rubric_text},
                                            {"score", std::to_string(score)}})}},
                 params});
        }
    }
    auto work_responses = generator.map_complete(work_requests);

    cursor = 0;
    for (const auto& p : pending) {
        FeedbackGroup group;
        group.rubric = rubrics[p.rubric_index];
        group.language = p.language;
        group.instruction = p.instruction;
        group.instruction_id = "fb:" + std::to_string(seed) + ":" +
                               std::to_string(p.rubric_index) + ":" + p.language.code + ":" +
                               std::to_string(p.instr_index);
        std::string where = group.instruction_id;

        bool reference_ok = true;
        if (p.with_reference) {
            const auto& res = work_responses[cursor++];
            try {
                if (!res.ok()) throw std::runtime_error(res.error);
                auto blocks = parse_mt_gen_blocks(res.value().texts[0]);
                if (!blocks.contains("REFERENCE"))
                    throw BlockParseError("missing required block REFERENCE");
                group.reference = blocks.at("REFERENCE");
            } catch (const std::exception& e) {
                reference_ok = false;
                result.summary.skip_log.push_back(where + " reference: " + e.what());
            }
        }

        for (int score = 1; score <= 5; ++score) {
            const auto& res = work_responses[cursor++];
            std::string instance_where = where + ":" + std::to_string(score);
            try {
                if (!res.ok()) throw std::runtime_error(res.error);
                auto blocks = parse_mt_gen_blocks(res.value().texts[0]);
                if (!blocks.contains("RESPONSE") || !blocks.contains("FEEDBACK"))
                    throw BlockParseError("missing RESPONSE or FEEDBACK block");
                group.responses[score] = {blocks.at("RESPONSE"), blocks.at("FEEDBACK")};
            } catch (const std::exception& e) {
                ++result.summary.skipped;
                result.summary.skip_log.push_back(instance_where + ": " + e.what());
            }
        }
        if (p.with_reference && !reference_ok) {
            // Degrade to reference-free rather than dropping the instruction.
            group.reference.reset();
        }

        for (const auto& [score, rf] : group.responses) {
            DAInstance inst;
            inst.id = group.instruction_id + ":" + std::to_string(score);
            inst.language = p.language;
            inst.instruction = p.instruction;
            inst.response = rf.first;
            inst.reference = group.reference;
            inst.reference_encoding =
                group.reference ? RefEncoding::present : RefEncoding::absent_key;
            inst.rubric = group.rubric;
            inst.gold_score = score;
            inst.feedback = rf.second;
            result.instances.push_back(std::move(inst));
            ++result.summary.emitted;
        }
        result.groups.push_back(std::move(group));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Preference pairs (PWC data)

/// The fixed pairing scheme: score 5 against every other score, plus 4 vs 2.
inline constexpr std::pair<int, int> kPreferencePairs[] = {
    {5, 1}, {5, 2}, {5, 3}, {5, 4}, {4, 2}};

/// Build the five PWC instances for one complete group. Pure function of
/// (group, seed): the winner lands in slot A with seeded probability 0.5.
/// Feedback is left unset; gen_preference_collection fills it.
inline std::vector<PWCInstance> build_preference_pairs(const FeedbackGroup& group,
                                                       std::uint64_t seed) {
    if (!group.complete()) throw std::invalid_argument("incomplete feedback group");
    Rng rng(detail::splitmix64(
        seed ^ detail::fnv1a64(group.language.code + '\x1f' + group.instruction)));

    std::vector<PWCInstance> out;
    for (auto [hi, lo] : kPreferencePairs) {
        PWCInstance inst;
        inst.id = group.instruction_id + ":pair" + std::to_string(hi) + std::to_string(lo);
        inst.language = group.language;
        inst.instruction = group.instruction;
        inst.criteria = group.rubric.criteria;
        inst.reference = group.reference;
        inst.reference_encoding =
            group.reference ? RefEncoding::present : RefEncoding::absent_key;
        const std::string& winner = group.responses.at(hi).first;
        const std::string& loser = group.responses.at(lo).first;
        bool winner_in_a = rng.coin_flip();
        inst.response_a = winner_in_a ? winner : loser;
        inst.response_b = winner_in_a ? loser : winner;
        inst.gold_winner = winner_in_a ? 'A' : 'B';
        inst.extra["pair"] = {hi, lo};
        out.push_back(std::move(inst));
    }
    return out;
}

struct PreferenceCollectionResult {
    std::vector<PWCInstance> instances;
    RunSummary summary;
};

/// Pair every complete group and solicit preference feedback per pair. The
/// feedback prompt shows the responses in the order the judge will see them.
inline PreferenceCollectionResult gen_preference_collection(
    const std::vector<FeedbackGroup>& groups, Client& generator, std::uint64_t seed,
    const TemplateSet& templates = TemplateSet::builtin()) {
    PreferenceCollectionResult result;
    GenerationParams params;
    params.max_tokens = 4096;

    for (const auto& group : groups) {
        if (!group.complete()) {
            result.summary.skip_log.push_back(group.instruction_id + ": incomplete group");
            continue;
        }
        auto pairs = build_preference_pairs(group, seed);
        result.instances.insert(result.instances.end(), pairs.begin(), pairs.end());
    }
    result.summary.attempted = result.instances.size();

    std::vector<CompletionRequest> requests;
    requests.reserve(result.instances.size());
    for (const auto& inst : result.instances) {
        requests.push_back(
            {{{"user", render_template(templates.preference_feedback_gen,
                                       {{"instruction", inst.instruction},
                                        {"response_a", inst.response_a},
                                        {"response_b", inst.response_b},
                                        {"criteria", inst.criteria}})}},
             params});
    }
    auto responses = generator.map_complete(requests);
    for (std::size_t i = 0; i < responses.size(); ++i) {
        try {
            if (!responses[i].ok()) throw std::runtime_error(responses[i].error);
            auto blocks = parse_mt_gen_blocks(responses[i].value().texts[0]);
            if (!blocks.contains("FEEDBACK"))
                throw BlockParseError("missing required block FEEDBACK");
            result.instances[i].feedback = blocks.at("FEEDBACK");
            ++result.summary.emitted;
        } catch (const std::exception& e) {
            ++result.summary.skipped;
            result.summary.skip_log.push_back(result.instances[i].id + ": " + e.what());
        }
    }
    // Drop instances whose feedback failed.
    std::erase_if(result.instances,
                  [](const PWCInstance& x) { return !x.feedback.has_value(); });
    return result;
}

// ---------------------------------------------------------------------------
// MT evaluation data

struct LanguagePair {
    LanguageTag source;
    LanguageTag target;

    std::string key() const { return source.code + "-" + target.code; }
};

struct MTEvalResult {
    std::vector<MTEvalInstance> instances;
    RunSummary summary;
};

inline MTEvalResult gen_mt_eval(const std::vector<LanguagePair>& language_pairs,
                                int per_lp_sources, Client& generator,
                                std::uint64_t seed, const AttributePool& pool,
                                const TemplateSet& templates = TemplateSet::builtin()) {
    if (language_pairs.empty()) throw std::invalid_argument("no language pairs");

    MTEvalResult result;
    GenerationParams params;
    params.max_tokens = 4096;

    // Stage 1: source packages.
    std::vector<CompletionRequest> source_requests;
    for (const auto& lp : language_pairs) {
        Rng attr_rng = Rng::substream(seed, "mt-attrs:" + lp.key());
        for (int s = 0; s < per_lp_sources; ++s) {
            MTGenAttributes attrs = sample_mt_attributes(pool, attr_rng);
            attrs.source_language = lp.source.code;
            attrs.target_language = lp.target.code;
            std::string prompt = render_mt_source_gen_prompt(attrs, templates);
            prompt += "\n[request " + std::to_string(s) + "]";
            source_requests.push_back({{{"user", prompt}}, params});
        }
    }
    auto source_responses = generator.map_complete(source_requests);

    struct SourcePackage {
        std::size_t lp_index;
        int source_index;
        std::string source;
        std::string translation_instruction;
        std::string reference;
        ScoreRubric rubric;
    };
    std::vector<SourcePackage> packages;

    std::size_t cursor = 0;
    for (std::size_t l = 0; l < language_pairs.size(); ++l) {
        for (int s = 0; s < per_lp_sources; ++s, ++cursor) {
            result.summary.attempted += 5;
            const auto& res = source_responses[cursor];
            std::string where = language_pairs[l].key() + " source " + std::to_string(s);
            try {
                if (!res.ok()) throw std::runtime_error(res.error);
                auto blocks = parse_mt_gen_blocks(res.value().texts[0]);
                require_mt_source_blocks(blocks);
                SourcePackage pkg;
                pkg.lp_index = l;
                pkg.source_index = s;
                pkg.source = blocks.at("SOURCE");
                pkg.translation_instruction = blocks.at("TRANSLATION INSTRUCTION");
                pkg.reference = blocks.at("REFERENCE TRANSLATION");
                pkg.rubric.criteria = blocks.at("SCORING RUBRICS");
                for (int k = 1; k <= 5; ++k)
                    pkg.rubric.score_descriptions[k] =
                        blocks.at("SCORE " + std::to_string(k) + " DESCRIPTION");
                packages.push_back(std::move(pkg));
            } catch (const std::exception& e) {
                result.summary.skipped += 5;
                result.summary.skip_log.push_back(where + ": " + e.what());
            }
        }
    }

    // Stage 2: five candidate translations per source.
    std::vector<CompletionRequest> cand_requests;
    cand_requests.reserve(packages.size() * 5);
    for (const auto& pkg : packages) {
        for (int score = 1; score <= 5; ++score) {
            cand_requests.push_back(
                {{{"user", render_mt_candidate_prompt(pkg.source, pkg.translation_instruction,
                                                      pkg.rubric.criteria, score, templates)}},
                 params});
        }
    }
    auto cand_responses = generator.map_complete(cand_requests);

    std::vector<std::vector<MTEvalInstance>> per_lp(language_pairs.size());
    cursor = 0;
    for (const auto& pkg : packages) {
        const auto& lp = language_pairs[pkg.lp_index];
        for (int score = 1; score <= 5; ++score, ++cursor) {
            const auto& res = cand_responses[cursor];
            std::string where = lp.key() + " source " + std::to_string(pkg.source_index) +
                                " score " + std::to_string(score);
            try {
                if (!res.ok()) throw std::runtime_error(res.error);
                auto blocks = parse_mt_gen_blocks(res.value().texts[0]);
                std::string block = "SCORE " + std::to_string(score) + " TRANSLATION";
                if (!blocks.contains(block))
                    throw BlockParseError("missing required block " + block);
                MTEvalInstance inst;
                inst.id = "mt:" + std::to_string(seed) + ":" + lp.key() + ":" +
                          std::to_string(pkg.source_index) + ":" + std::to_string(score);
                inst.source_lang = lp.source;
                inst.target_lang = lp.target;
                inst.source = pkg.source;
                inst.translation_instruction = pkg.translation_instruction;
                inst.candidate = blocks.at(block);
                inst.reference = pkg.reference;  // attached now, halved below
                inst.rubric = pkg.rubric;
                inst.gold_score = score;
                per_lp[pkg.lp_index].push_back(std::move(inst));
            } catch (const std::exception& e) {
                ++result.summary.skipped;
                result.summary.skip_log.push_back(where + ": " + e.what());
            }
        }
    }

    // Reference on a deterministic half of the instances, per language pair.
    for (std::size_t l = 0; l < per_lp.size(); ++l) {
        Rng half_rng = Rng::substream(seed, "mt-half:" + language_pairs[l].key());
        auto selected = half_split(per_lp[l].size(), half_rng);
        for (std::size_t i = 0; i < per_lp[l].size(); ++i) {
            if (selected[i]) {
                per_lp[l][i].reference_encoding = RefEncoding::present;
            } else {
                per_lp[l][i].reference.reset();
                per_lp[l][i].reference_encoding = RefEncoding::absent_key;
            }
            result.instances.push_back(std::move(per_lp[l][i]));
            ++result.summary.emitted;
        }
    }
    return result;
}

/// Optional seeded down-sampling to a target size (order-preserving).
template <class T>
void downsample(std::vector<T>& items, std::size_t target, Rng& rng) {
    if (items.size() <= target) return;
    std::vector<std::size_t> order(items.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    order.resize(target);
    std::sort(order.begin(), order.end());
    std::vector<T> kept;
    kept.reserve(target);
    for (std::size_t i : order) kept.push_back(std::move(items[i]));
    items = std::move(kept);
}

}  // namespace mjudge
