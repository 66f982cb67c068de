#pragma once

// Meta-evaluation: run judges over labeled benchmarks, compute stratified
// accuracies and their aggregates, and rank-correlate MT judgements with
// human scores via Kendall's tau-b.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "client.hpp"
#include "core.hpp"
#include "parse.hpp"
#include "prompt.hpp"

namespace mjudge {

// ---------------------------------------------------------------------------
// Kendall's tau-b. Knight's O(n log n) route: the tests hold it against an
// O(n^2) pair-enumeration oracle.

class DegenerateRankingError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Inversions in v, counted by merge sort.
inline long long count_inversions(std::vector<double>& v) {
    std::vector<double> buf(v.size());
    long long swaps = 0;
    for (std::size_t width = 1; width < v.size(); width *= 2) {
        for (std::size_t lo = 0; lo + width < v.size(); lo += 2 * width) {
            std::size_t mid = lo + width;
            std::size_t hi = std::min(lo + 2 * width, v.size());
            std::size_t i = lo, j = mid, k = lo;
            while (i < mid && j < hi) {
                if (v[j] < v[i]) {
                    swaps += static_cast<long long>(mid - i);
                    buf[k++] = v[j++];
                } else {
                    buf[k++] = v[i++];
                }
            }
            while (i < mid) buf[k++] = v[i++];
            while (j < hi) buf[k++] = v[j++];
            std::copy(buf.begin() + lo, buf.begin() + hi, v.begin() + lo);
        }
    }
    return swaps;
}

template <class Eq>
long long tie_pairs(const std::vector<double>& sorted, Eq same) {
    long long pairs = 0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && same(i)) {
            ++run;
        } else {
            pairs += static_cast<long long>(run) * (run - 1) / 2;
            run = 1;
        }
    }
    return pairs;
}

}  // namespace detail

inline double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("kendall_tau_b: size mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("kendall_tau_b: need at least 2 items");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = x[order[i]];
        ys[i] = y[order[i]];
    }

    const long long n0 = static_cast<long long>(n) * (n - 1) / 2;
    long long tx = detail::tie_pairs(xs, [&](std::size_t i) { return xs[i] == xs[i - 1]; });
    long long txy = detail::tie_pairs(
        xs, [&](std::size_t i) { return xs[i] == xs[i - 1] && ys[i] == ys[i - 1]; });
    std::vector<double> ys_sorted = ys;
    std::sort(ys_sorted.begin(), ys_sorted.end());
    long long ty = detail::tie_pairs(ys_sorted,
                                     [&](std::size_t i) { return ys_sorted[i] == ys_sorted[i - 1]; });

    if (tx == n0 || ty == n0)
        throw DegenerateRankingError("kendall_tau_b undefined: an argument is all-tied");

    std::vector<double> ys_mut = ys;
    long long swaps = detail::count_inversions(ys_mut);

    const long long concordant_minus_discordant = n0 - tx - ty + txy - 2 * swaps;
    return static_cast<double>(concordant_minus_discordant) /
           std::sqrt(static_cast<double>(n0 - tx) * static_cast<double>(n0 - ty));
}

/// Tau-a (no tie correction), available for sensitivity checks.
inline double kendall_tau_a(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("kendall_tau_a: bad input");
    long long cd = 0;
    const long long n0 = static_cast<long long>(x.size()) * (x.size() - 1) / 2;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            double s = (x[i] - x[j]) * (y[i] - y[j]);
            cd += s > 0 ? 1 : s < 0 ? -1 : 0;
        }
    return static_cast<double>(cd) / static_cast<double>(n0);
}

// ---------------------------------------------------------------------------
// Aggregation rules

/// Unweighted arithmetic mean of per-category accuracies.
inline double aggregate_category_mean(const std::map<std::string, double>& per_category) {
    if (per_category.empty()) throw std::invalid_argument("no categories");
    double sum = 0;
    for (const auto& [_, v] : per_category) sum += v;
    return sum / static_cast<double>(per_category.size());
}

/// Headline for multilingual benchmarks: mean across languages of the
/// per-language micro-average. Not a global pool.
inline double aggregate_multilingual(const std::map<std::string, double>& per_language_micro) {
    if (per_language_micro.empty()) throw std::invalid_argument("no languages");
    double sum = 0;
    for (const auto& [_, v] : per_language_micro) sum += v;
    return sum / static_cast<double>(per_language_micro.size());
}

// ---------------------------------------------------------------------------
// Benchmark records

struct BenchRecord {
    std::variant<DAInstance, PWCInstance, MTEvalInstance> instance;
    std::string category;
    LanguageTag language;
    std::optional<std::string> system_id;
    std::optional<double> human_score;
};

inline json to_json(const BenchRecord& r) {
    json j = json::object();
    if (std::holds_alternative<PWCInstance>(r.instance)) {
        j["kind"] = "pwc";
        j["instance"] = to_json(std::get<PWCInstance>(r.instance));
    } else if (std::holds_alternative<DAInstance>(r.instance)) {
        j["kind"] = "da";
        j["instance"] = to_json(std::get<DAInstance>(r.instance));
    } else {
        j["kind"] = "mteval";
        j["instance"] = to_json(std::get<MTEvalInstance>(r.instance));
    }
    j["category"] = r.category;
    j["language"] = r.language.code;
    if (r.system_id) j["system_id"] = *r.system_id;
    if (r.human_score) j["human_score"] = *r.human_score;
    return j;
}

inline BenchRecord bench_record_from_json(const json& j) {
    BenchRecord r;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "pwc")
        r.instance = pwc_from_json(j.at("instance"));
    else if (kind == "da")
        r.instance = da_from_json(j.at("instance"));
    else if (kind == "mteval")
        r.instance = mteval_from_json(j.at("instance"));
    else
        throw std::runtime_error("unknown bench record kind: " + kind);
    r.category = j.value("category", "");
    r.language.code = j.value("language", "");
    if (j.contains("system_id")) r.system_id = j["system_id"].get<std::string>();
    if (j.contains("human_score")) r.human_score = j["human_score"].get<double>();
    return r;
}

// ---------------------------------------------------------------------------
// Pairwise accuracy benchmark

struct EvalReport {
    std::map<std::pair<std::string, std::string>, std::pair<long, long>>
        strata;  // (language, category) -> (correct, total)
    std::map<std::string, double> per_language_micro;
    std::map<std::string, double> per_category;
    double headline_category_mean = 0;
    double headline_multilingual = 0;
    double headline = 0;
    long correct = 0;
    long total = 0;
    std::size_t unparsed = 0;
    std::vector<std::string> failures;

    json to_json() const {
        json j = json::object();
        json s = json::array();
        for (const auto& [key, ct] : strata)
            s.push_back({{"language", key.first},
                         {"category", key.second},
                         {"correct", ct.first},
                         {"total", ct.second},
                         {"accuracy", ct.second ? double(ct.first) / ct.second : 0.0}});
        j["strata"] = std::move(s);
        j["per_language_micro"] = per_language_micro;
        j["per_category"] = per_category;
        j["headline_category_mean"] = headline_category_mean;
        j["headline_multilingual"] = headline_multilingual;
        j["headline"] = headline;
        j["correct"] = correct;
        j["total"] = total;
        j["unparsed"] = unparsed;
        return j;
    }

    std::string to_table() const {
        std::ostringstream out;
        out << "language      category           correct/total  accuracy\n";
        for (const auto& [key, ct] : strata) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "%-13s %-18s %6ld/%-6ld %.4f\n", key.first.c_str(),
                          key.second.c_str(), ct.first, ct.second,
                          ct.second ? double(ct.first) / ct.second : 0.0);
            out << buf;
        }
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "headline %.4f (category-mean %.4f, multilingual %.4f), unparsed %zu\n",
                      headline, headline_category_mean, headline_multilingual, unparsed);
        out << buf;
        return out.str();
    }
};

namespace detail {

inline void finalize_report(EvalReport& report) {
    std::map<std::string, std::pair<long, long>> by_lang, by_cat;
    for (const auto& [key, ct] : report.strata) {
        by_lang[key.first].first += ct.first;
        by_lang[key.first].second += ct.second;
        by_cat[key.second].first += ct.first;
        by_cat[key.second].second += ct.second;
        report.correct += ct.first;
        report.total += ct.second;
    }
    for (const auto& [lang, ct] : by_lang)
        report.per_language_micro[lang] = ct.second ? double(ct.first) / ct.second : 0.0;
    for (const auto& [cat, ct] : by_cat)
        report.per_category[cat] = ct.second ? double(ct.first) / ct.second : 0.0;
    if (!report.per_category.empty())
        report.headline_category_mean = aggregate_category_mean(report.per_category);
    if (!report.per_language_micro.empty())
        report.headline_multilingual = aggregate_multilingual(report.per_language_micro);
    report.headline = report.per_language_micro.size() > 1 ? report.headline_multilingual
                                                           : report.headline_category_mean;
}

}  // namespace detail

/// Judge every PWC record, mark correct iff the parsed choice matches the
/// gold winner. Unparseable verdicts count incorrect and are tallied.
inline EvalReport run_pairwise_bench(Client& judge, const std::vector<BenchRecord>& records,
                                     const GenerationParams& judge_params = {},
                                     const TemplateSet& templates = TemplateSet::builtin()) {
    std::vector<CompletionRequest> requests;
    requests.reserve(records.size());
    for (const auto& r : records) {
        const auto& inst = std::get<PWCInstance>(r.instance);
        if (!inst.gold_winner) throw std::invalid_argument("record " + inst.id + " lacks gold_winner");
        PromptMode mode{PromptMode::Task::PWC, inst.reference.has_value()};
        requests.push_back({{{"user", render_pwc_prompt(inst, mode, templates)}}, judge_params});
    }
    auto responses = judge.map_complete(requests);

    EvalReport report;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& inst = std::get<PWCInstance>(records[i].instance);
        auto& stratum = report.strata[{records[i].language.code, records[i].category}];
        ++stratum.second;
        if (!responses[i].ok()) {
            report.failures.push_back(inst.id + ": " + responses[i].error);
            continue;
        }
        ParseOutcome outcome = parse_pwc(responses[i].value().texts[0]);
        if (!outcome.ok()) {
            ++report.unparsed;
            continue;
        }
        if (outcome.verdict->choice == inst.gold_winner) ++stratum.first;
    }
    detail::finalize_report(report);
    return report;
}

// ---------------------------------------------------------------------------
// MT ranking benchmark (reference-free DA scoring vs human scores)

/// DA view of an MT instance: the judge sees the translation instruction
/// plus the source, and scores the candidate. Reference withheld unless
/// requested.
inline DAInstance da_from_mteval(const MTEvalInstance& x, bool with_reference = false) {
    DAInstance da;
    da.id = x.id;
    da.language = x.target_lang;
    da.instruction = x.translation_instruction + "\n\nSource text (" + x.source_lang.code +
                     "):\n" + x.source;
    da.response = x.candidate;
    if (with_reference && x.reference) {
        da.reference = x.reference;
        da.reference_encoding = RefEncoding::present;
    }
    da.rubric = x.rubric;
    da.gold_score = x.gold_score;
    return da;
}

struct MTRankingReport {
    std::map<std::string, double> per_lp_tau;  // "src-tgt" -> tau
    double macro_tau = 0;
    std::size_t scored = 0;
    std::size_t excluded = 0;  // unparsed or failed judge calls
    std::vector<std::string> failures;

    json to_json() const {
        return json{{"per_lp_tau", per_lp_tau},
                    {"macro_tau", macro_tau},
                    {"scored", scored},
                    {"excluded", excluded}};
    }
};

/// Score each translation with a reference-free DA judgement and correlate
/// with human scores per language pair. Unparsed items are excluded from
/// tau and tallied. group_by_source computes tau per source then averages
/// within the language pair.
inline MTRankingReport run_mt_ranking(Client& judge, const std::vector<BenchRecord>& records,
                                      bool group_by_source = false,
                                      const GenerationParams& judge_params = {},
                                      const TemplateSet& templates = TemplateSet::builtin()) {
    std::vector<CompletionRequest> requests;
    requests.reserve(records.size());
    for (const auto& r : records) {
        const auto& inst = std::get<MTEvalInstance>(r.instance);
        if (!r.human_score && !inst.gold_score)
            throw std::invalid_argument("record " + inst.id + " lacks a human score");
        DAInstance da = da_from_mteval(inst, /*with_reference=*/false);
        requests.push_back(
            {{{"user", render_da_prompt(da, {PromptMode::Task::DA, false}, templates)}},
             judge_params});
    }
    auto responses = judge.map_complete(requests);

    struct Item {
        double judge_score;
        double human_score;
        std::string group;
    };
    std::map<std::string, std::vector<Item>> per_lp;
    MTRankingReport report;

    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& inst = std::get<MTEvalInstance>(records[i].instance);
        std::string lp = inst.source_lang.code + "-" + inst.target_lang.code;
        if (!responses[i].ok()) {
            ++report.excluded;
            report.failures.push_back(inst.id + ": " + responses[i].error);
            continue;
        }
        ParseOutcome outcome = parse_da(responses[i].value().texts[0]);
        if (!outcome.ok()) {
            ++report.excluded;
            continue;
        }
        double human = records[i].human_score ? *records[i].human_score
                                              : static_cast<double>(*inst.gold_score);
        per_lp[lp].push_back({static_cast<double>(*outcome.verdict->score), human, inst.source});
        ++report.scored;
    }

    for (const auto& [lp, items] : per_lp) {
        auto tau_of = [](const std::vector<Item>& v) {
            std::vector<double> js, hs;
            for (const auto& it : v) {
                js.push_back(it.judge_score);
                hs.push_back(it.human_score);
            }
            return kendall_tau_b(js, hs);
        };
        if (!group_by_source) {
            report.per_lp_tau[lp] = tau_of(items);
        } else {
            std::map<std::string, std::vector<Item>> by_group;
            for (const auto& it : items) by_group[it.group].push_back(it);
            double sum = 0;
            int n = 0;
            for (const auto& [_, group_items] : by_group) {
                if (group_items.size() < 2) continue;
                try {
                    sum += tau_of(group_items);
                    ++n;
                } catch (const DegenerateRankingError&) {
                }
            }
            if (n == 0) throw DegenerateRankingError("no group in " + lp + " yields a defined tau");
            report.per_lp_tau[lp] = sum / n;
        }
    }
    if (!report.per_lp_tau.empty()) {
        double sum = 0;
        for (const auto& [_, tau] : report.per_lp_tau) sum += tau;
        report.macro_tau = sum / static_cast<double>(report.per_lp_tau.size());
    }
    return report;
}

}  // namespace mjudge
