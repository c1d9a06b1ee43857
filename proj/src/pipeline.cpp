#include "sciq/pipeline.hpp"

#include "sciq/eval.hpp"
#include "sciq/reward.hpp"
#include "sciq/synth.hpp"
#include "sciq/voting.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace sciq {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

namespace {

RolePolicy role_from_json(const json& models, const json& temps, const json& tokens,
                          const char* name, RolePolicy defaults) {
    RolePolicy role = defaults;
    if (models.contains(name)) role.model_id = models[name].get<std::string>();
    if (temps.contains(name)) role.temperature = temps[name].get<double>();
    if (tokens.contains(name)) role.max_tokens = tokens[name].get<int>();
    return role;
}

std::string resolve_path(const fs::path& base, const std::string& p) {
    if (p.empty()) return p;
    fs::path path(p);
    if (path.is_absolute()) return path.lexically_normal().string();
    return (base / path).lexically_normal().string();
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig c;
    const json backend = j.value("backend", json::object());
    c.backend_kind = backend.value("kind", c.backend_kind);
    c.endpoint = backend.value("endpoint", c.endpoint);
    c.api_key_env = backend.value("api_key_env", c.api_key_env);
    c.mock_script = backend.value("mock_script", c.mock_script);
    c.timeout_seconds = backend.value("timeout_seconds", c.timeout_seconds);
    c.retry_max_attempts = backend.value("retry_max_attempts", c.retry_max_attempts);
    c.retry_base_ms = backend.value("retry_base_ms", c.retry_base_ms);

    const json models = j.value("models", json::object());
    const json temps = j.value("temperatures", json::object());
    const json tokens = j.value("max_tokens", json::object());
    c.generator = role_from_json(models, temps, tokens, "generation", {"", 0.8, 4096});
    c.refiner = role_from_json(models, temps, tokens, "refinement", {"", 0.8, 4096});
    c.voter = role_from_json(models, temps, tokens, "voting", {"", 0.8, 2048});
    c.judge = role_from_json(models, temps, tokens, "judge", {"", 0.0, 64});
    c.evaluator = role_from_json(models, temps, tokens, "evaluation", {"", 0.0, 2048});
    if (models.contains("voters"))
        c.voter_ensemble = models["voters"].get<std::vector<std::string>>();

    const json embedding = j.value("embedding", json::object());
    c.embedding_kind = embedding.value("kind", c.embedding_kind);
    c.embedding_endpoint = embedding.value("endpoint", c.embedding_endpoint);
    c.embedding_model = embedding.value("model", c.embedding_model);
    c.embedding_api_key_env = embedding.value("api_key_env", c.embedding_api_key_env);

    c.questions_per_paper = j.value("questions_per_paper", c.questions_per_paper);
    c.dedup_ngram = j.value("dedup_ngram", c.dedup_ngram);
    c.votes_per_model = j.value("votes_per_model", c.votes_per_model);
    c.refine_max_retries = j.value("refine_max_retries", c.refine_max_retries);
    c.sample_per_discipline = j.value("sample_per_discipline", c.sample_per_discipline);
    c.validation_per_discipline =
        j.value("validation_per_discipline", c.validation_per_discipline);

    const json analysis = j.value("analysis", json::object());
    c.analysis_reasoning = analysis.value("reasoning", c.analysis_reasoning);
    c.analysis_validity = analysis.value("validity", c.analysis_validity);
    c.analysis_difficulty = analysis.value("difficulty", c.analysis_difficulty);
    c.analysis_redundancy = analysis.value("redundancy", c.analysis_redundancy);
    c.redundancy_threshold = analysis.value("redundancy_threshold", c.redundancy_threshold);

    c.seed = j.value("seed", c.seed);
    c.sample_epoch = j.value("sample_epoch", c.sample_epoch);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);

    c.run_id = j.value("run_id", c.run_id);
    c.parent_run = j.value("parent_run", c.parent_run);
    c.inputs = j.value("inputs", c.inputs);
    c.reference_files = j.value("reference_files", c.reference_files);
    c.prompts_dir = j.value("prompts_dir", c.prompts_dir);
    c.patterns_file = j.value("patterns_file", c.patterns_file);
    c.taxonomy_file = j.value("taxonomy_file", c.taxonomy_file);

    const json cache = j.value("cache", json::object());
    c.cache_enabled = cache.value("enabled", c.cache_enabled);
    c.cache_dir = cache.value("dir", c.cache_dir);
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
    json parsed;
    try {
        parsed = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw Error("ConfigInvalid", path.string() + ": " + e.what());
    }
    PipelineConfig c = from_json(parsed);
    // Relative resource paths are taken relative to the config file.
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    c.mock_script = resolve_path(base, c.mock_script);
    c.prompts_dir = resolve_path(base, c.prompts_dir);
    c.patterns_file = resolve_path(base, c.patterns_file);
    c.taxonomy_file = resolve_path(base, c.taxonomy_file);
    c.cache_dir = resolve_path(base, c.cache_dir);
    for (auto& p : c.inputs) p = resolve_path(base, p);
    for (auto& p : c.reference_files) p = resolve_path(base, p);
    return c;
}

json PipelineConfig::to_json() const {
    json j;
    j["backend"] = {{"kind", backend_kind},
                    {"endpoint", endpoint},
                    {"api_key_env", api_key_env},
                    {"mock_script", mock_script},
                    {"timeout_seconds", timeout_seconds},
                    {"retry_max_attempts", retry_max_attempts},
                    {"retry_base_ms", retry_base_ms}};
    j["models"] = {{"generation", generator.model_id}, {"refinement", refiner.model_id},
                   {"voting", voter.model_id},         {"voters", voter_ensemble},
                   {"judge", judge.model_id},          {"evaluation", evaluator.model_id}};
    j["temperatures"] = {{"generation", generator.temperature},
                         {"refinement", refiner.temperature},
                         {"voting", voter.temperature},
                         {"judge", judge.temperature},
                         {"evaluation", evaluator.temperature}};
    j["max_tokens"] = {{"generation", generator.max_tokens},
                       {"refinement", refiner.max_tokens},
                       {"voting", voter.max_tokens},
                       {"judge", judge.max_tokens},
                       {"evaluation", evaluator.max_tokens}};
    j["embedding"] = {{"kind", embedding_kind},
                      {"endpoint", embedding_endpoint},
                      {"model", embedding_model},
                      {"api_key_env", embedding_api_key_env}};
    j["questions_per_paper"] = questions_per_paper;
    j["dedup_ngram"] = dedup_ngram;
    j["votes_per_model"] = votes_per_model;
    j["refine_max_retries"] = refine_max_retries;
    j["sample_per_discipline"] = sample_per_discipline;
    j["validation_per_discipline"] = validation_per_discipline;
    j["analysis"] = {{"reasoning", analysis_reasoning},
                     {"validity", analysis_validity},
                     {"difficulty", analysis_difficulty},
                     {"redundancy", analysis_redundancy},
                     {"redundancy_threshold", redundancy_threshold}};
    j["seed"] = seed;
    j["sample_epoch"] = sample_epoch;
    j["max_in_flight"] = max_in_flight;
    j["run_id"] = run_id;
    j["parent_run"] = parent_run;
    j["inputs"] = inputs;
    j["reference_files"] = reference_files;
    j["prompts_dir"] = prompts_dir;
    j["patterns_file"] = patterns_file;
    j["taxonomy_file"] = taxonomy_file;
    j["cache"] = {{"enabled", cache_enabled}, {"dir", cache_dir}};
    return j;
}

std::string PipelineConfig::fingerprint() const { return stable_hash_hex({to_json().dump()}); }

// ---------------------------------------------------------------------------
// Context
// ---------------------------------------------------------------------------

void PipelineContext::save_manifest() const { manifest.save(run_dir / "manifest.json"); }

PipelineContext make_context(PipelineConfig config, const fs::path& run_dir) {
    PipelineContext ctx;
    ctx.config = std::move(config);
    ctx.run_dir = run_dir;
    fs::create_directories(run_dir);

    ctx.prompts = ctx.config.prompts_dir.empty() ? PromptCatalog::builtin()
                                                 : PromptCatalog::load_dir(ctx.config.prompts_dir);
    ctx.taxonomy = ctx.config.taxonomy_file.empty() ? Taxonomy::builtin()
                                                    : Taxonomy::load(ctx.config.taxonomy_file);
    ctx.patterns = ctx.config.patterns_file.empty() ? PatternSet::builtin()
                                                    : PatternSet::load(ctx.config.patterns_file);

    // Backend: every configured model id routes to one shared backend.
    ctx.gateway = std::make_shared<Gateway>();
    RetryPolicy retry;
    retry.max_attempts = ctx.config.retry_max_attempts;
    retry.base_delay = std::chrono::milliseconds(ctx.config.retry_base_ms);
    ctx.gateway->set_retry_policy(retry);

    std::shared_ptr<ChatBackend> backend;
    if (ctx.config.backend_kind == "mock") {
        ctx.mock = ctx.config.mock_script.empty()
                       ? std::make_shared<MockBackend>()
                       : MockBackend::from_script_file(ctx.config.mock_script);
        backend = ctx.mock;
    } else if (ctx.config.backend_kind == "openai") {
        HttpBackendConfig http;
        http.base_url = ctx.config.endpoint;
        http.api_key_env = ctx.config.api_key_env;
        http.timeout_seconds = ctx.config.timeout_seconds;
        backend = std::make_shared<HttpBackend>(http);
    } else {
        throw Error("ConfigInvalid", "unknown backend kind: " + ctx.config.backend_kind);
    }

    std::set<std::string> model_ids;
    for (const auto& id : {ctx.config.generator.model_id, ctx.config.refiner.model_id,
                           ctx.config.judge.model_id, ctx.config.evaluator.model_id})
        if (!id.empty()) model_ids.insert(id);
    for (const auto& id : ctx.config.voter_ensemble)
        if (!id.empty()) model_ids.insert(id);
    for (const auto& id : model_ids) ctx.gateway->register_backend(id, backend);

    if (ctx.config.cache_enabled) {
        fs::path dir = ctx.config.cache_dir.empty() ? run_dir / "cache"
                                                    : fs::path(ctx.config.cache_dir);
        ctx.gateway->set_cache(std::make_shared<ResponseCache>(dir));
    }

    const std::string fingerprint = ctx.config.fingerprint();
    const fs::path manifest_path = run_dir / "manifest.json";
    if (fs::exists(manifest_path)) {
        ctx.manifest = store::DatasetManifest::load(manifest_path);
        if (ctx.manifest.config_fingerprint != fingerprint) {
            // Config changed: prior stage outputs no longer count as done.
            ctx.manifest.stages.clear();
            ctx.manifest.config_fingerprint = fingerprint;
        }
    } else {
        ctx.manifest.config_fingerprint = fingerprint;
    }
    ctx.manifest.run_id = !ctx.config.run_id.empty() ? ctx.config.run_id
                                                     : run_dir.filename().string();
    if (!ctx.config.parent_run.empty()) ctx.manifest.parent_run = ctx.config.parent_run;
    return ctx;
}

// ---------------------------------------------------------------------------
// Stage helpers
// ---------------------------------------------------------------------------

namespace {

bool stage_done(const PipelineContext& ctx, const std::string& stage, const fs::path& output) {
    return ctx.manifest.has_stage(stage) && fs::exists(output);
}

void require_file(const fs::path& path, const std::string& needed_by) {
    if (!fs::exists(path))
        throw Error("MissingDependency",
                    needed_by + " requires " + path.filename().string() +
                        "; run the earlier stage first");
}

StageResult finish(PipelineContext& ctx, const std::string& stage, std::size_t kept,
                   json detail) {
    ctx.manifest.record_stage(stage, kept, std::move(detail));
    ctx.manifest.validate_monotone();
    ctx.save_manifest();
    return {stage, kept, false};
}

std::string tsv_escape(const std::string& s) {
    std::string out;
    for (char c : s) out.push_back(c == '\t' || c == '\n' ? ' ' : c);
    return out;
}

std::string format_rate(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
}

}  // namespace

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

StageResult run_ingest(PipelineContext& ctx, const std::vector<fs::path>& cli_inputs) {
    const fs::path out = ctx.file("papers.jsonl");
    if (stage_done(ctx, "ingested", out)) {
        return {"ingested", ctx.manifest.find_stage("ingested")->kept, true};
    }

    std::vector<fs::path> inputs = cli_inputs;
    if (inputs.empty())
        for (const auto& p : ctx.config.inputs) inputs.emplace_back(p);
    if (inputs.empty()) throw Error("ConfigInvalid", "ingest has no inputs");

    std::vector<fs::path> files;
    for (const auto& input : inputs) {
        if (fs::is_directory(input)) {
            for (const auto& entry : fs::directory_iterator(input))
                if (entry.is_regular_file() && entry.path().extension() == ".txt")
                    files.push_back(entry.path());
        } else if (fs::exists(input)) {
            files.push_back(input);
        } else {
            throw Error("FileNotFound", "ingest input missing: " + input.string());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<Paper> papers;
    for (const auto& file : files) {
        IngestOptions options;
        options.paper_id = file.stem().string();
        options.source_uri = file.generic_string();
        papers.push_back(ingest_paper(read_file(file), ctx.taxonomy, options));
    }
    save_papers(out, papers);
    return finish(ctx, "ingested", papers.size(), json{{"files", files.size()}});
}

StageResult run_sample(PipelineContext& ctx) {
    const fs::path out = ctx.file("sampled.jsonl");
    if (stage_done(ctx, "sampled", out))
        return {"sampled", ctx.manifest.find_stage("sampled")->kept, true};
    require_file(ctx.file("papers.jsonl"), "sample");

    auto papers = load_papers(ctx.file("papers.jsonl"));
    auto sample = sample_balanced(papers, ctx.config.sample_per_discipline, ctx.config.seed,
                                  ctx.taxonomy.discipline_names());
    save_papers(out, sample.papers);

    json draws = json::array();
    for (const auto& draw : sample.draws)
        draws.push_back({{"discipline", draw.discipline},
                         {"available", draw.available},
                         {"requested", draw.requested},
                         {"selected", draw.selected},
                         {"shortfall", draw.shortfall()}});
    return finish(ctx, "sampled", sample.papers.size(), json{{"draws", draws}});
}

StageResult run_generate(PipelineContext& ctx) {
    const fs::path out = ctx.file("drafts.jsonl");
    if (stage_done(ctx, "generated", out))
        return {"generated", ctx.manifest.find_stage("generated")->kept, true};
    require_file(ctx.file("sampled.jsonl"), "generate");
    if (ctx.config.generator.model_id.empty())
        throw Error("ConfigInvalid", "models.generation is not set");

    GenerationConfig gen;
    gen.model_id = ctx.config.generator.model_id;
    gen.temperature = ctx.config.generator.temperature;
    gen.max_tokens = ctx.config.generator.max_tokens;
    gen.questions_per_paper = ctx.config.questions_per_paper;
    gen.sample_epoch = ctx.config.sample_epoch;

    std::vector<McqItem> drafts;
    std::size_t parsed = 0;
    std::size_t dropped = 0;
    json empty_papers = json::array();
    json drop_reasons = json::array();
    for (const auto& paper : load_papers(ctx.file("sampled.jsonl"))) {
        try {
            GenerationResult result = generate_qas(paper, gen, *ctx.gateway, ctx.prompts);
            parsed += result.parsed;
            dropped += result.dropped;
            for (const auto& reason : result.drop_reasons) drop_reasons.push_back(reason);
            for (auto& item : result.items) drafts.push_back(std::move(item));
        } catch (const Error& e) {
            if (e.code() != "GenerationEmpty") throw;
            empty_papers.push_back(paper.paper_id);
        }
    }
    store::write_items(out, drafts);
    return finish(ctx, "generated", drafts.size(),
                  json{{"parsed", parsed},
                       {"dropped", dropped},
                       {"drop_reasons", drop_reasons},
                       {"empty_papers", empty_papers}});
}

StageResult run_filter(PipelineContext& ctx) {
    const fs::path out = ctx.file("filtered.jsonl");
    if (stage_done(ctx, "filtered", out))
        return {"filtered", ctx.manifest.find_stage("filtered")->kept, true};
    require_file(ctx.file("drafts.jsonl"), "filter");

    auto drafts = store::read_items(ctx.file("drafts.jsonl"));
    std::vector<McqItem> kept;
    json drops = json::array();
    for (const auto& item : drafts) {
        FilterDecision decision = heuristic_filter(item, ctx.patterns);
        if (decision.keep) {
            kept.push_back(item);
        } else {
            drops.push_back({{"item_id", item.item_id},
                             {"filter", "heuristic"},
                             {"reason", decision.reason}});
        }
    }
    const std::size_t heuristic_dropped = drafts.size() - kept.size();

    double overlap_rate = 0.0;
    std::size_t dedup_dropped = 0;
    if (!kept.empty()) {
        std::vector<std::string> references;
        for (const auto& file : ctx.config.reference_files) {
            auto questions = load_reference_questions(file);
            references.insert(references.end(), questions.begin(), questions.end());
        }
        DedupResult dedup =
            dedup_against(kept, references, static_cast<std::size_t>(ctx.config.dedup_ngram));
        overlap_rate = dedup.overlap_rate;
        dedup_dropped = dedup.dropped.size();
        for (const auto& item : dedup.dropped)
            drops.push_back(
                {{"item_id", item.item_id}, {"filter", "dedup"}, {"reason", "ngram-overlap"}});
        kept = std::move(dedup.kept);
    }

    store::write_items(out, kept);
    std::string drop_lines;
    for (const auto& d : drops) {
        drop_lines += d.dump();
        drop_lines += '\n';
    }
    atomic_write_file(ctx.file("filter_drops.jsonl"), drop_lines);
    return finish(ctx, "filtered", kept.size(),
                  json{{"heuristic_dropped", heuristic_dropped},
                       {"dedup_dropped", dedup_dropped},
                       {"overlap_rate", overlap_rate}});
}

StageResult run_refine(PipelineContext& ctx) {
    const fs::path out = ctx.file("refined.jsonl");
    if (stage_done(ctx, "refined", out))
        return {"refined", ctx.manifest.find_stage("refined")->kept, true};
    require_file(ctx.file("filtered.jsonl"), "refine");
    if (ctx.config.refiner.model_id.empty())
        throw Error("ConfigInvalid", "models.refinement is not set");

    RefineConfig cfg;
    cfg.model_id = ctx.config.refiner.model_id;
    cfg.temperature = ctx.config.refiner.temperature;
    cfg.max_tokens = ctx.config.refiner.max_tokens;
    cfg.max_retries = ctx.config.refine_max_retries;
    cfg.sample_epoch = ctx.config.sample_epoch;

    std::vector<McqItem> refined;
    json failures = json::array();
    for (const auto& draft : store::read_items(ctx.file("filtered.jsonl"))) {
        try {
            refined.push_back(refine(draft, cfg, *ctx.gateway, ctx.prompts));
        } catch (const Error& e) {
            if (e.code() != "RefinementFailed") throw;
            failures.push_back({{"item_id", draft.item_id}, {"reason", e.what()}});
        }
    }
    store::write_items(out, refined);
    return finish(ctx, "refined", refined.size(), json{{"failures", failures}});
}

StageResult run_vote(PipelineContext& ctx) {
    const fs::path out = ctx.file("votes.jsonl");
    if (stage_done(ctx, "voted", out))
        return {"voted", ctx.manifest.find_stage("voted")->kept, true};
    require_file(ctx.file("refined.jsonl"), "vote");
    if (ctx.config.voter_ensemble.empty())
        throw Error("ConfigInvalid", "models.voters is empty");

    VotingConfig cfg;
    cfg.ensemble = ctx.config.voter_ensemble;
    cfg.samples_per_model = ctx.config.votes_per_model;
    cfg.temperature = ctx.config.voter.temperature;
    cfg.max_tokens = ctx.config.voter.max_tokens;
    cfg.sample_epoch_base = ctx.config.sample_epoch;
    cfg.max_in_flight = ctx.config.max_in_flight;

    auto items = store::read_items(ctx.file("refined.jsonl"));
    std::vector<Vote> all_votes;
    std::size_t unextracted = 0;
    for (const auto& item : items) {
        auto votes = collect_votes(item, cfg, *ctx.gateway, ctx.prompts);
        for (const auto& vote : votes)
            if (vote.unextracted) ++unextracted;
        all_votes.insert(all_votes.end(), votes.begin(), votes.end());
    }
    save_votes(out, all_votes);
    return finish(ctx, "voted", items.size(),
                  json{{"votes", all_votes.size()}, {"unextracted", unextracted}});
}

StageResult run_partition(PipelineContext& ctx) {
    const fs::path out = ctx.file("partitioned.jsonl");
    if (stage_done(ctx, "partitioned", out))
        return {"partitioned", ctx.manifest.find_stage("partitioned")->kept, true};
    require_file(ctx.file("refined.jsonl"), "partition");
    require_file(ctx.file("votes.jsonl"), "partition");

    auto items = store::read_items(ctx.file("refined.jsonl"));
    std::map<std::string, std::vector<Vote>> votes_by_item;
    for (auto& vote : load_votes(ctx.file("votes.jsonl")))
        votes_by_item[vote.item_id].push_back(std::move(vote));

    std::vector<std::pair<McqItem, std::vector<Vote>>> with_votes;
    for (auto& item : items) {
        auto it = votes_by_item.find(item.item_id);
        if (it == votes_by_item.end() || it->second.empty())
            throw Error("MissingVotes", "item has no votes: " + item.item_id);
        with_votes.emplace_back(std::move(item), std::move(it->second));
    }

    PartitionResult result = partition(with_votes);
    std::vector<McqItem> ordered;
    json class_counts = json::object();
    for (const auto& [cls, group] : result.groups) {
        class_counts[to_string(cls)] = group.size();
        ordered.insert(ordered.end(), group.begin(), group.end());
    }
    store::write_items(out, ordered);
    return finish(ctx, "partitioned", result.total(), json{{"classes", class_counts}});
}

StageResult run_export(PipelineContext& ctx, const std::set<AgreementClass>& classes,
                       std::optional<fs::path> holdout_path) {
    require_file(ctx.file("partitioned.jsonl"), "export");
    if (classes.empty()) throw Error("InvalidArgument", "export needs at least one class");

    std::string slug;
    for (const auto& cls : classes) {
        if (!slug.empty()) slug += "+";
        slug += to_string(cls);
    }
    const fs::path out = ctx.file("export_" + slug + ".jsonl");
    if (const auto* entry = ctx.manifest.find_stage("exported");
        entry && entry->detail.value("classes", "") == slug && fs::exists(out)) {
        return {"exported", entry->kept, true};
    }

    std::set<std::string> holdout;
    fs::path holdout_file = holdout_path.value_or(ctx.file("holdout.json"));
    if (fs::exists(holdout_file)) holdout = store::load_holdout(holdout_file);

    auto items = store::read_items(ctx.file("partitioned.jsonl"));
    auto exported = store::export_split(items, classes, holdout);
    store::write_items(out, exported);
    return finish(ctx, "exported", exported.size(),
                  json{{"classes", slug},
                       {"holdout_size", holdout.size()},
                       {"file", out.filename().string()}});
}

StageResult run_validation(PipelineContext& ctx) {
    require_file(ctx.file("partitioned.jsonl"), "validation");
    auto items = store::read_items(ctx.file("partitioned.jsonl"));
    std::vector<McqItem> pool;
    for (auto& item : items)
        if (item.agreement_class == AgreementClass::AllAligned) pool.push_back(std::move(item));

    auto selected = build_validation_set(pool, ctx.taxonomy.discipline_names(),
                                         ctx.config.validation_per_discipline, ctx.config.seed);
    store::write_items(ctx.file("validation.jsonl"), selected);

    std::set<std::string> ids;
    for (const auto& item : selected) ids.insert(item.item_id);
    store::save_holdout(ctx.file("holdout.json"), ids);
    return finish(ctx, "validation", selected.size(),
                  json{{"per_discipline", ctx.config.validation_per_discipline}});
}

StageResult run_augment(PipelineContext& ctx, const fs::path& benchmark_in,
                        const fs::path& benchmark_out) {
    auto source = load_benchmark(benchmark_in);
    std::vector<BenchmarkItem> augmented;
    augmented.reserve(source.size() * 4);
    for (const auto& bench : source) {
        for (const auto& variant : augment_permutations(bench.to_item())) {
            BenchmarkItem v;
            v.id = variant.item_id;
            v.question = variant.question;
            v.options = variant.options;
            v.answer = variant.correct_label;
            v.domain = bench.domain;
            augmented.push_back(std::move(v));
        }
    }
    save_benchmark(benchmark_out, augmented);
    return finish(ctx, "augmented", augmented.size(),
                  json{{"source_items", source.size()},
                       {"file", benchmark_out.filename().string()}});
}

StageResult run_evaluate(PipelineContext& ctx, const fs::path& benchmark_path, int runs) {
    if (runs < 1) throw Error("InvalidArgument", "runs must be >= 1");
    if (ctx.config.evaluator.model_id.empty())
        throw Error("ConfigInvalid", "models.evaluation is not set");

    auto benchmark = load_benchmark(benchmark_path);
    if (benchmark.empty()) throw Error("EmptyInput", "benchmark has no items");

    std::vector<EvalRecord> records;
    std::vector<Metrics> per_run;
    for (int r = 0; r < runs; ++r) {
        std::vector<ChatRequest> requests;
        requests.reserve(benchmark.size());
        for (const auto& bench : benchmark) {
            McqItem item = bench.to_item();
            ChatRequest request;
            request.model_id = ctx.config.evaluator.model_id;
            request.user_prompt = ctx.prompts.render(
                "answer", {{"QUESTION", item.question},
                           {"OPTIONS", format_options(item, /*with_fallback=*/false)}});
            request.temperature = ctx.config.evaluator.temperature;
            request.max_tokens = ctx.config.evaluator.max_tokens;
            request.sample_epoch = ctx.config.sample_epoch + static_cast<std::uint64_t>(r);
            requests.push_back(std::move(request));
        }
        auto outcomes = ctx.gateway->complete_batch(requests, ctx.config.max_in_flight);

        std::vector<EvalRecord> run_records;
        for (std::size_t i = 0; i < benchmark.size(); ++i) {
            const auto& bench = benchmark[i];
            EvalRecord record;
            record.item_id = bench.id;
            record.domain = bench.domain;
            record.run_index = r;
            if (outcomes[i].ok()) {
                record.response_text = outcomes[i].response->texts.at(0);
                std::set<char> allowed;
                for (std::size_t k = 0; k < bench.options.size(); ++k)
                    allowed.insert(static_cast<char>('A' + k));
                record.extracted_label = extract_answer(record.response_text, allowed);
                record.correct = record.extracted_label && *record.extracted_label == bench.answer;
            }
            run_records.push_back(std::move(record));
        }
        per_run.push_back(score(run_records));
        records.insert(records.end(), run_records.begin(), run_records.end());
    }

    // records log
    std::string lines;
    for (const auto& record : records) {
        json rj;
        rj["item_id"] = record.item_id;
        rj["domain"] = record.domain;
        rj["response_text"] = record.response_text;
        rj["extracted_label"] =
            record.extracted_label ? json(std::string(1, *record.extracted_label)) : json(nullptr);
        rj["correct"] = record.correct;
        rj["run_index"] = record.run_index;
        lines += rj.dump();
        lines += '\n';
    }
    atomic_write_file(ctx.file("eval_records.jsonl"), lines);

    // per-domain table
    DomainReport report = per_domain_report(records);
    std::ostringstream tsv;
    tsv << "domain\tn\taccuracy\textraction_rate\n";
    for (const auto& [domain, metrics] : report.domains)
        tsv << tsv_escape(domain) << '\t' << metrics.n << '\t' << format_rate(metrics.accuracy)
            << '\t' << format_rate(metrics.extraction_rate) << '\n';
    tsv << "overall\t" << report.overall.n << '\t' << format_rate(report.overall.accuracy) << '\t'
        << format_rate(report.overall.extraction_rate) << '\n';
    atomic_write_file(ctx.file("eval_report.tsv"), tsv.str());

    MetricsStats stats = run_stats(per_run);
    json summary;
    summary["model"] = ctx.config.evaluator.model_id;
    summary["benchmark"] = benchmark_path.filename().string();
    summary["runs"] = json::array();
    for (const auto& m : per_run)
        summary["runs"].push_back({{"accuracy", m.accuracy},
                                   {"extraction_rate", m.extraction_rate},
                                   {"n", m.n}});
    summary["accuracy"] = {{"mean", stats.accuracy.mean}, {"sd", stats.accuracy.sd}};
    summary["extraction_rate"] = {{"mean", stats.extraction_rate.mean},
                                  {"sd", stats.extraction_rate.sd}};
    json domains = json::object();
    for (const auto& [domain, metrics] : report.domains)
        domains[domain] = {{"accuracy", metrics.accuracy},
                           {"extraction_rate", metrics.extraction_rate},
                           {"n", metrics.n}};
    summary["per_domain"] = domains;
    atomic_write_file(ctx.file("eval_summary.json"), summary.dump(2) + "\n");

    return finish(ctx, "evaluated", records.size(), json{{"runs", runs}});
}

StageResult run_analyze(PipelineContext& ctx) {
    fs::path source = ctx.file("partitioned.jsonl");
    if (!fs::exists(source)) source = ctx.file("refined.jsonl");
    require_file(source, "analyze");
    auto items = store::read_items(source);

    json report;
    report["source"] = source.filename().string();
    report["items"] = items.size();

    // Length statistics (stem words only).
    LengthStats lengths = length_stats(items);
    std::ostringstream tsv;
    tsv << "discipline\tn\tmean_words\tsd_words\n";
    json length_json = json::object();
    for (const auto& [discipline, entry] : lengths.per_discipline) {
        tsv << tsv_escape(discipline) << '\t' << entry.count << '\t' << format_rate(entry.mean)
            << '\t' << format_rate(entry.sd) << '\n';
        length_json[discipline] = {{"n", entry.count}, {"mean", entry.mean}, {"sd", entry.sd}};
    }
    tsv << "overall\t" << lengths.overall.count << '\t' << format_rate(lengths.overall.mean)
        << '\t' << format_rate(lengths.overall.sd) << '\n';
    atomic_write_file(ctx.file("length_stats.tsv"), tsv.str());
    report["length"] = {{"overall",
                         {{"n", lengths.overall.count},
                          {"mean", lengths.overall.mean},
                          {"sd", lengths.overall.sd}}},
                        {"per_discipline", length_json}};

    const bool judging = !ctx.config.judge.model_id.empty();
    JudgeConfig judge;
    judge.model_id = ctx.config.judge.model_id;
    judge.temperature = ctx.config.judge.temperature;
    judge.max_tokens = ctx.config.judge.max_tokens;
    judge.sample_epoch = ctx.config.sample_epoch;

    if (judging && ctx.config.analysis_reasoning) {
        std::map<std::string, std::size_t> counts;
        std::size_t unparseable = 0;
        for (const auto& item : items) {
            try {
                ++counts[to_string(classify_reasoning_type(item, judge, *ctx.gateway,
                                                           ctx.prompts))];
            } catch (const Error& e) {
                if (e.code() != "JudgeUnparseable") throw;
                ++unparseable;
            }
        }
        report["reasoning_types"] = {{"counts", counts}, {"unparseable", unparseable}};
    }

    if (judging && ctx.config.analysis_validity) {
        std::map<std::string, std::size_t> counts;
        std::size_t unparseable = 0;
        for (const auto& item : items) {
            try {
                ++counts[to_string(judge_validity(item, judge, *ctx.gateway, ctx.prompts))];
            } catch (const Error& e) {
                if (e.code() != "JudgeUnparseable") throw;
                ++unparseable;
            }
        }
        report["validity"] = {{"counts", counts}, {"unparseable", unparseable}};
    }

    if (judging && ctx.config.analysis_difficulty) {
        std::map<std::string, std::size_t> histogram;
        std::size_t unparseable = 0;
        for (const auto& item : items) {
            try {
                ++histogram[std::to_string(
                    judge_difficulty(item, judge, *ctx.gateway, ctx.prompts))];
            } catch (const Error& e) {
                if (e.code() != "JudgeUnparseable") throw;
                ++unparseable;
            }
        }
        report["difficulty"] = {{"histogram", histogram}, {"unparseable", unparseable}};
    }

    if (ctx.config.analysis_redundancy) {
        std::unique_ptr<EmbeddingClient> embedder;
        if (ctx.config.embedding_kind == "stub") {
            embedder = std::make_unique<StubEmbeddingClient>();
        } else if (ctx.config.embedding_kind == "openai") {
            embedder = std::make_unique<HttpEmbeddingClient>(ctx.config.embedding_endpoint,
                                                             ctx.config.embedding_model,
                                                             ctx.config.embedding_api_key_env);
        } else {
            throw Error("ConfigInvalid", "unknown embedding kind: " + ctx.config.embedding_kind);
        }
        auto pairs = redundancy_pairs(items, *embedder, ctx.config.redundancy_threshold);
        std::string lines;
        for (const auto& pair : pairs) {
            json pj;
            pj["item_id_a"] = pair.item_id_a;
            pj["item_id_b"] = pair.item_id_b;
            pj["similarity"] = pair.similarity;
            lines += pj.dump();
            lines += '\n';
        }
        atomic_write_file(ctx.file("redundancy_pairs.jsonl"), lines);
        report["redundancy"] = {{"threshold", ctx.config.redundancy_threshold},
                                {"pairs", pairs.size()}};
    }

    atomic_write_file(ctx.file("analysis_report.json"), report.dump(2) + "\n");
    return finish(ctx, "analyzed", items.size(), json{{"report", "analysis_report.json"}});
}

StageResult run_score_rewards(PipelineContext& ctx, const fs::path& input,
                              const fs::path& output) {
    require_file(input, "score-rewards");
    std::ifstream in(input);
    if (!in) throw Error("IoError", "cannot open " + input.string());
    std::ostringstream buffer;
    std::size_t scored = score_rewards_stream(in, buffer);
    atomic_write_file(output, buffer.str());
    return finish(ctx, "scored", scored, json{{"file", output.filename().string()}});
}

std::vector<StageResult> run_full_pipeline(PipelineContext& ctx,
                                           const std::vector<fs::path>& inputs) {
    std::vector<StageResult> results;
    results.push_back(run_ingest(ctx, inputs));
    results.push_back(run_sample(ctx));
    results.push_back(run_generate(ctx));
    results.push_back(run_filter(ctx));
    results.push_back(run_refine(ctx));
    results.push_back(run_vote(ctx));
    results.push_back(run_partition(ctx));
    return results;
}

}  // namespace sciq
