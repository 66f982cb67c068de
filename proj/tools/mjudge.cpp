// mjudge: command-line entry point wiring config, datasets, endpoints, and
// reports. Subcommands: datagen, eval, qad, report.
// Exit codes: 0 ok, 2 config error, 3 quality-cap breach, 4 endpoint failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <mjudge/client.hpp>
#include <mjudge/core.hpp>
#include <mjudge/datagen.hpp>
#include <mjudge/http_transport.hpp>
#include <mjudge/metaeval.hpp>
#include <mjudge/mock.hpp>
#include <mjudge/qad.hpp>

namespace fs = std::filesystem;
using namespace mjudge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitQualityCap = 3;
constexpr int kExitEndpoint = 4;

struct Thresholds {
    double skip_rate_cap = 0.05;
    double unparsed_rate_cap = 0.2;
};

struct RunConfig {
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string output_dir = "out";
    std::string cache_path;
    std::string templates_dir;
    std::string pool_path = "assets/attribute_pool.json";
    bool mock = false;
    Thresholds thresholds;
    EndpointConfig generator;
    EndpointConfig judge;
    EndpointConfig evaluator;
    json raw = json::object();
};

EndpointConfig endpoint_from_json(const json& j, EndpointConfig base = {}) {
    base.base_url = j.value("base_url", base.base_url);
    base.model_name = j.value("model_name", base.model_name);
    base.api_key_env_var = j.value("api_key_env_var", base.api_key_env_var);
    base.max_in_flight = j.value("max_in_flight", base.max_in_flight);
    base.timeout = std::chrono::milliseconds(
        j.value("timeout_ms", static_cast<long>(base.timeout.count())));
    base.retry.max_attempts = j.value("max_attempts", base.retry.max_attempts);
    base.retry.base_backoff = std::chrono::milliseconds(
        j.value("base_backoff_ms", static_cast<long>(base.retry.base_backoff.count())));
    return base;
}

json endpoint_to_json(const EndpointConfig& e) {
    return json{{"base_url", e.base_url},
                {"model_name", e.model_name},
                {"api_key_env_var", e.api_key_env_var},
                {"max_in_flight", e.max_in_flight},
                {"timeout_ms", e.timeout.count()},
                {"max_attempts", e.retry.max_attempts},
                {"base_backoff_ms", e.retry.base_backoff.count()}};
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    json j = json::parse(in);
    cfg.raw = j;
    if (j.contains("seed")) {
        cfg.seed = j["seed"].get<std::uint64_t>();
        cfg.seed_set = true;
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.cache_path = j.value("cache_path", cfg.cache_path);
    cfg.templates_dir = j.value("templates_dir", cfg.templates_dir);
    cfg.pool_path = j.value("pool_path", cfg.pool_path);
    if (j.contains("thresholds")) {
        cfg.thresholds.skip_rate_cap =
            j["thresholds"].value("skip_rate_cap", cfg.thresholds.skip_rate_cap);
        cfg.thresholds.unparsed_rate_cap =
            j["thresholds"].value("unparsed_rate_cap", cfg.thresholds.unparsed_rate_cap);
    }
    if (j.contains("endpoints")) {
        const auto& e = j["endpoints"];
        if (e.contains("generator")) cfg.generator = endpoint_from_json(e["generator"]);
        if (e.contains("judge")) cfg.judge = endpoint_from_json(e["judge"]);
        if (e.contains("evaluator")) cfg.evaluator = endpoint_from_json(e["evaluator"]);
    }
    return cfg;
}

/// Effective config dump, written into every output directory.
void dump_effective_config(const RunConfig& cfg, const std::string& command) {
    json j = json::object();
    j["command"] = command;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    j["cache_path"] = cfg.cache_path;
    j["templates_dir"] = cfg.templates_dir;
    j["pool_path"] = cfg.pool_path;
    j["mock"] = cfg.mock;
    j["thresholds"] = {{"skip_rate_cap", cfg.thresholds.skip_rate_cap},
                       {"unparsed_rate_cap", cfg.thresholds.unparsed_rate_cap}};
    j["endpoints"] = {{"generator", endpoint_to_json(cfg.generator)},
                      {"judge", endpoint_to_json(cfg.judge)},
                      {"evaluator", endpoint_to_json(cfg.evaluator)}};
    std::ofstream out(cfg.output_dir + "/effective_config.json");
    out << j.dump(2) << '\n';
}

enum class Role { generator, da_judge, pwc_judge };

Client make_client(const RunConfig& cfg, const EndpointConfig& endpoint, Role role,
                   std::shared_ptr<CompletionCache> cache) {
    std::shared_ptr<Transport> transport;
    if (cfg.mock) {
        switch (role) {
            case Role::generator:
                transport = std::make_shared<ScriptedTransport>(mock_generator_behavior());
                break;
            case Role::da_judge:
                transport = std::make_shared<ScriptedTransport>(mock_da_judge_behavior());
                break;
            case Role::pwc_judge:
                transport = std::make_shared<ScriptedTransport>(mock_pwc_judge_behavior());
                break;
        }
    } else {
        transport = std::make_shared<HttpTransport>();
    }
    return Client(endpoint, transport, std::move(cache));
}

TemplateSet load_templates(const RunConfig& cfg) {
    if (cfg.templates_dir.empty()) return TemplateSet::builtin();
    return TemplateSet::load(cfg.templates_dir);
}

std::vector<LanguagePair> parse_lps(const std::string& csv) {
    std::vector<LanguagePair> lps;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto dash = item.find('-');
        if (dash == std::string::npos)
            throw std::runtime_error("language pair must look like en-de: " + item);
        lps.push_back({{item.substr(0, dash)}, {item.substr(dash + 1)}});
    }
    return lps;
}

std::vector<LanguageTag> parse_langs(const std::string& csv) {
    std::vector<LanguageTag> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back({item});
    return out;
}

void write_metadata(const RunConfig& cfg, const std::string& path, const std::string& kind,
                    const RunSummary& summary, const TemplateSet& templates,
                    const std::string& model, json counts) {
    json meta = json::object();
    meta["kind"] = kind;
    meta["seed"] = cfg.seed;
    meta["counts"] = std::move(counts);
    meta["template_version"] = templates.version;
    meta["generator_model"] = model;
    meta["attempted"] = summary.attempted;
    meta["emitted"] = summary.emitted;
    meta["skipped"] = summary.skipped;
    meta["skip_rate"] = summary.skip_rate();
    meta["skip_log"] = summary.skip_log;
    std::ofstream out(path);
    out << meta.dump(2) << '\n';
}

int check_skip_cap(const RunConfig& cfg, const RunSummary& summary) {
    if (summary.skip_rate() > cfg.thresholds.skip_rate_cap) {
        std::cerr << "skip rate " << summary.skip_rate() << " exceeds cap "
                  << cfg.thresholds.skip_rate_cap << "\n";
        return kExitQualityCap;
    }
    return kExitOk;
}

std::vector<ScoreRubric> load_rubrics(const std::string& path) {
    std::vector<ScoreRubric> rubrics;
    for (const auto& j : read_jsonl(path)) rubrics.push_back(detail::rubric_from_json(j));
    return rubrics;
}

// -------------------------------------------------------------------------

int cmd_datagen(RunConfig& cfg, const std::string& kind, const std::string& rubrics_path,
                const std::string& languages_csv, int instructions, const std::string& lps_csv,
                int sources) {
    if (!cfg.seed_set) {
        std::cerr << "datagen requires a seed (--seed or config)\n";
        return kExitConfig;
    }
    fs::create_directories(cfg.output_dir);
    dump_effective_config(cfg, "datagen");
    TemplateSet templates = load_templates(cfg);
    auto cache = cfg.cache_path.empty() ? nullptr
                                        : std::make_shared<CompletionCache>(cfg.cache_path);
    Client generator = make_client(cfg, cfg.generator, Role::generator, cache);

    if (kind == "feedback" || kind == "preference") {
        auto rubrics = load_rubrics(rubrics_path);
        auto languages = parse_langs(languages_csv);
        DatagenCounts counts{instructions};
        auto result =
            gen_feedback_collection(rubrics, languages, generator, cfg.seed, counts, templates);

        std::vector<json> da_records;
        for (const auto& inst : result.instances) da_records.push_back(to_json(inst));
        write_jsonl(cfg.output_dir + "/da.jsonl", da_records);
        write_metadata(cfg, cfg.output_dir + "/da.meta.json", "feedback", result.summary,
                       templates, cfg.generator.model_name,
                       {{"rubrics", rubrics.size()},
                        {"languages", languages.size()},
                        {"instructions_per_rubric", instructions}});
        std::cout << "da instances: " << result.instances.size() << " (skipped "
                  << result.summary.skipped << ")\n";

        if (kind == "preference") {
            auto pref = gen_preference_collection(result.groups, generator, cfg.seed, templates);
            std::vector<json> pwc_records;
            for (const auto& inst : pref.instances) pwc_records.push_back(to_json(inst));
            write_jsonl(cfg.output_dir + "/pwc.jsonl", pwc_records);
            write_metadata(cfg, cfg.output_dir + "/pwc.meta.json", "preference", pref.summary,
                           templates, cfg.generator.model_name,
                           {{"groups", result.groups.size()}});
            std::cout << "pwc instances: " << pref.instances.size() << " (skipped "
                      << pref.summary.skipped << ")\n";
            if (int rc = check_skip_cap(cfg, pref.summary)) return rc;
        }
        return check_skip_cap(cfg, result.summary);
    }
    if (kind == "mteval") {
        auto lps = parse_lps(lps_csv);
        AttributePool pool = AttributePool::load(cfg.pool_path);
        auto result = gen_mt_eval(lps, sources, generator, cfg.seed, pool, templates);
        std::vector<json> records;
        for (const auto& inst : result.instances) records.push_back(to_json(inst));
        write_jsonl(cfg.output_dir + "/mteval.jsonl", records);
        write_metadata(cfg, cfg.output_dir + "/mteval.meta.json", "mteval", result.summary,
                       templates, cfg.generator.model_name,
                       {{"language_pairs", lps.size()}, {"sources_per_lp", sources}});
        std::cout << "mteval instances: " << result.instances.size() << " (skipped "
                  << result.summary.skipped << ")\n";
        return check_skip_cap(cfg, result.summary);
    }
    std::cerr << "unknown datagen kind " << kind << " (feedback|preference|mteval)\n";
    return kExitConfig;
}

int cmd_eval(RunConfig& cfg, const std::string& bench_path, const std::string& kind,
             bool group_by_source) {
    fs::create_directories(cfg.output_dir);
    dump_effective_config(cfg, "eval");
    TemplateSet templates = load_templates(cfg);
    auto cache = cfg.cache_path.empty() ? nullptr
                                        : std::make_shared<CompletionCache>(cfg.cache_path);

    std::vector<BenchRecord> records;
    for (const auto& j : read_jsonl(bench_path)) records.push_back(bench_record_from_json(j));
    if (records.empty()) {
        std::cerr << "benchmark file is empty\n";
        return kExitConfig;
    }

    if (kind == "pairwise") {
        Client judge = make_client(cfg, cfg.judge, Role::pwc_judge, cache);
        EvalReport report = run_pairwise_bench(judge, records, {}, templates);
        std::ofstream(cfg.output_dir + "/eval_report.json") << report.to_json().dump(2) << '\n';
        std::ofstream(cfg.output_dir + "/eval_report.txt") << report.to_table();
        std::cout << report.to_table();
        if (!report.failures.empty()) {
            std::cerr << report.failures.size() << " records failed at the endpoint\n";
            return kExitEndpoint;
        }
        double unparsed_rate = double(report.unparsed) / double(records.size());
        if (unparsed_rate > cfg.thresholds.unparsed_rate_cap) {
            std::cerr << "unparsed rate " << unparsed_rate << " exceeds cap\n";
            return kExitQualityCap;
        }
        return kExitOk;
    }
    if (kind == "mtranking") {
        Client judge = make_client(cfg, cfg.judge, Role::da_judge, cache);
        MTRankingReport report = run_mt_ranking(judge, records, group_by_source, {}, templates);
        std::ofstream(cfg.output_dir + "/mt_ranking_report.json")
            << report.to_json().dump(2) << '\n';
        std::cout << "macro tau: " << report.macro_tau << " (excluded " << report.excluded
                  << ")\n";
        double excluded_rate = double(report.excluded) / double(records.size());
        if (excluded_rate > cfg.thresholds.unparsed_rate_cap) {
            std::cerr << "excluded rate " << excluded_rate << " exceeds cap\n";
            return kExitQualityCap;
        }
        return kExitOk;
    }
    std::cerr << "unknown eval kind " << kind << " (pairwise|mtranking)\n";
    return kExitConfig;
}

int cmd_qad(RunConfig& cfg, const std::string& queries_path, int n, double temperature) {
    if (!cfg.seed_set) {
        std::cerr << "qad requires a seed (--seed or config)\n";
        return kExitConfig;
    }
    fs::create_directories(cfg.output_dir);
    dump_effective_config(cfg, "qad");
    TemplateSet templates = load_templates(cfg);
    auto cache = cfg.cache_path.empty() ? nullptr
                                        : std::make_shared<CompletionCache>(cfg.cache_path);
    Client generator = make_client(cfg, cfg.generator, Role::generator, cache);
    Client judge = make_client(cfg, cfg.judge, Role::da_judge, cache);
    Client evaluator = make_client(cfg, cfg.evaluator, Role::pwc_judge, cache);

    struct Query {
        std::string id;
        LanguageTag language;
        std::string text;
        std::string reference;
    };
    std::vector<Query> queries;
    for (const auto& j : read_jsonl(queries_path)) {
        queries.push_back({j.at("id").get<std::string>(),
                           {j.at("language").get<std::string>()},
                           j.at("query").get<std::string>(),
                           j.value("reference_answer", "")});
    }
    if (queries.empty()) {
        std::cerr << "queries file is empty\n";
        return kExitConfig;
    }

    std::vector<json> selections;
    std::vector<MatchRecord> matches;
    std::vector<json> match_records;
    try {
        for (const auto& q : queries) {
            CandidateSet set =
                sample_candidates(generator, q.text, q.language, n, temperature);
            SelectionResult sel = select_best(judge, set, cfg.seed, {}, templates);
            selections.push_back({{"query_id", q.id},
                                  {"language", q.language.code},
                                  {"selected_index", sel.index},
                                  {"scores", sel.scores},
                                  {"selected", set.sampled[sel.index]},
                                  {"greedy", set.greedy_answer}});
            auto [g1, g2] = head_to_head(evaluator, q.id, q.text, "qad",
                                         set.sampled[sel.index], "greedy", set.greedy_answer,
                                         q.reference, {}, templates);
            matches.push_back(g1);
            matches.push_back(g2);
            match_records.push_back(to_json(g1));
            match_records.push_back(to_json(g2));
        }
    } catch (const std::exception& e) {
        std::cerr << "qad pipeline failed: " << e.what() << "\n";
        return kExitEndpoint;
    }
    write_jsonl(cfg.output_dir + "/selections.jsonl", selections);
    write_jsonl(cfg.output_dir + "/matches.jsonl", match_records);

    // Ratings and expected win rates, per language.
    json report = json::object();
    std::map<std::string, std::vector<MatchRecord>> by_lang;
    std::map<std::string, std::string> lang_of_query;
    for (const auto& q : queries) lang_of_query[q.id] = q.language.code;
    for (const auto& m : matches) by_lang[lang_of_query[m.query_id]].push_back(m);
    for (const auto& [lang, lang_matches] : by_lang) {
        long wins = 0, losses = 0, ties = 0;
        // Two games per query; both-for-one-side is a win, a split is a tie.
        for (std::size_t i = 0; i + 1 < lang_matches.size(); i += 2) {
            auto o1 = lang_matches[i].outcome;
            auto o2 = lang_matches[i + 1].outcome;
            if (o1 == MatchOutcome::a_wins && o2 == MatchOutcome::a_wins)
                ++wins;
            else if (o1 == MatchOutcome::b_wins && o2 == MatchOutcome::b_wins)
                ++losses;
            else
                ++ties;
        }
        json entry = {{"wins", wins}, {"losses", losses}, {"ties", ties}};
        try {
            auto ratings = estimate_ratings(lang_matches, "greedy");
            double delta = ratings.at("qad") - ratings.at("greedy");
            entry["elo_qad"] = ratings.at("qad");
            entry["elo_greedy"] = ratings.at("greedy");
            entry["elo_delta"] = delta;
            entry["expected_win_rate"] = elo_to_winrate(delta);
        } catch (const DisconnectedGraphError& e) {
            entry["error"] = e.what();
        }
        report[lang] = entry;
        std::cout << lang << ": " << entry.dump() << "\n";
    }
    std::ofstream(cfg.output_dir + "/qad_report.json") << report.dump(2) << '\n';
    return kExitOk;
}

int cmd_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "cannot open " << path << "\n";
        return kExitConfig;
    }
    json j = json::parse(in);
    if (j.contains("strata")) {
        // Rebuild the table from an eval report.
        std::printf("%-13s %-18s %8s %8s\n", "language", "category", "correct", "total");
        for (const auto& s : j["strata"])
            std::printf("%-13s %-18s %8ld %8ld  %.4f\n",
                        s["language"].get<std::string>().c_str(),
                        s["category"].get<std::string>().c_str(), s["correct"].get<long>(),
                        s["total"].get<long>(), s["accuracy"].get<double>());
        std::printf("headline: %.4f\n", j["headline"].get<double>());
    } else {
        std::cout << j.dump(2) << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multilingual LLM-judge toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file");

    // Shared overrides; every flag beats its config counterpart.
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string output_dir, cache_path, templates_dir, pool_path;
    bool mock = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "root seed")->each([&](const std::string&) {
            seed_given = true;
        });
        sub->add_option("--output-dir", output_dir, "output directory");
        sub->add_option("--cache", cache_path, "completion cache JSONL");
        sub->add_option("--templates", templates_dir, "template asset directory");
        sub->add_option("--pool", pool_path, "attribute pool JSON");
        sub->add_flag("--mock", mock, "use scripted in-process endpoints (no network)");
    };

    auto* datagen = app.add_subcommand("datagen", "synthesize training datasets");
    std::string kind = "feedback", rubrics_path, languages_csv = "fr", lps_csv = "en-de";
    int instructions = 5, sources = 0;
    datagen->add_option("--kind", kind, "feedback|preference|mteval");
    datagen->add_option("--rubrics", rubrics_path, "rubric JSONL (feedback/preference)");
    datagen->add_option("--languages", languages_csv, "comma-separated languages");
    datagen->add_option("--instructions", instructions, "instructions per rubric");
    datagen->add_option("--lps", lps_csv, "comma-separated language pairs (mteval)");
    datagen->add_option("--sources", sources, "source texts per language pair (mteval)");
    add_common(datagen);

    auto* eval = app.add_subcommand("eval", "run a meta-evaluation benchmark");
    std::string bench_path, eval_kind = "pairwise";
    bool group_by_source = false;
    eval->add_option("--bench", bench_path, "benchmark records JSONL")->required();
    eval->add_option("--kind", eval_kind, "pairwise|mtranking");
    eval->add_flag("--group-by-source", group_by_source, "tau per source group, then averaged");
    add_common(eval);

    auto* qad = app.add_subcommand("qad", "quality-aware decoding evaluation");
    std::string queries_path;
    int n = 30;
    double temperature = 0.3;
    qad->add_option("--queries", queries_path, "queries JSONL")->required();
    qad->add_option("--n", n, "candidates per query");
    qad->add_option("--temperature", temperature, "sampling temperature");
    add_common(qad);

    auto* report = app.add_subcommand("report", "pretty-print a report JSON");
    std::string report_path;
    report->add_option("path", report_path, "report JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = load_config(config_path);
        if (seed_given) {
            cfg.seed = seed;
            cfg.seed_set = true;
        }
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        if (!cache_path.empty()) cfg.cache_path = cache_path;
        if (!templates_dir.empty()) cfg.templates_dir = templates_dir;
        if (!pool_path.empty()) cfg.pool_path = pool_path;
        if (mock) cfg.mock = true;

        if (datagen->parsed())
            return cmd_datagen(cfg, kind, rubrics_path, languages_csv, instructions, lps_csv,
                               sources);
        if (eval->parsed()) return cmd_eval(cfg, bench_path, eval_kind, group_by_source);
        if (qad->parsed()) return cmd_qad(cfg, queries_path, n, temperature);
        if (report->parsed()) return cmd_report(report_path);
    } catch (const JsonlError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
