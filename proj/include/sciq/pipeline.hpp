#pragma once
// Stage orchestration shared by the CLI and the acceptance suite: one config
// file, a run directory of stage outputs, and a manifest that makes every
// stage re-runnable (a completed stage with an unchanged config fingerprint
// is a no-op).

#include "sciq/analysis.hpp"
#include "sciq/corpus.hpp"
#include "sciq/filters.hpp"
#include "sciq/gateway.hpp"
#include "sciq/prompts.hpp"
#include "sciq/store.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sciq {

struct RolePolicy {
    std::string model_id;
    double temperature = 0.0;
    int max_tokens = 2048;
};

struct PipelineConfig {
    // backend
    std::string backend_kind = "mock";  // "mock" | "openai"
    std::string endpoint;               // OpenAI-compatible base URL
    std::string api_key_env;            // name of the credential env var
    std::string mock_script;            // path to a mock-backend script
    int timeout_seconds = 120;
    int retry_max_attempts = 5;
    int retry_base_ms = 1000;

    // roles
    RolePolicy generator{"", 0.8, 4096};
    RolePolicy refiner{"", 0.8, 4096};
    RolePolicy voter{"", 0.8, 2048};  // temperature/max_tokens for the ensemble
    std::vector<std::string> voter_ensemble;
    RolePolicy judge{"", 0.0, 64};
    RolePolicy evaluator{"", 0.0, 2048};

    // embeddings
    std::string embedding_kind = "stub";  // "stub" | "openai"
    std::string embedding_endpoint;
    std::string embedding_model;
    std::string embedding_api_key_env;

    // knobs (paper-stated values as defaults, reconstructions as knobs)
    int questions_per_paper = 3;
    int dedup_ngram = 13;
    int votes_per_model = 4;
    int refine_max_retries = 2;
    std::size_t sample_per_discipline = 100;
    std::size_t validation_per_discipline = 100;
    double redundancy_threshold = 0.9;
    bool analysis_reasoning = true;
    bool analysis_validity = true;
    bool analysis_difficulty = true;
    bool analysis_redundancy = true;

    std::uint64_t seed = 0;
    std::uint64_t sample_epoch = 0;
    int max_in_flight = 4;

    // resources
    std::string run_id;      // defaults to the run directory name
    std::string parent_run;  // recorded in the manifest for forked runs
    std::vector<std::string> inputs;
    std::vector<std::string> reference_files;
    std::string prompts_dir;
    std::string patterns_file;
    std::string taxonomy_file;
    bool cache_enabled = true;
    std::string cache_dir;  // defaults to <run_dir>/cache

    static PipelineConfig load(const std::filesystem::path& path);
    static PipelineConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    /// Stable hash of the effective config (after CLI overrides); stage
    /// resumption compares against it.
    std::string fingerprint() const;
};

struct PipelineContext {
    PipelineConfig config;
    std::filesystem::path run_dir;
    std::shared_ptr<Gateway> gateway;
    std::shared_ptr<MockBackend> mock;  // set when backend_kind == "mock"
    PromptCatalog prompts;
    Taxonomy taxonomy;
    PatternSet patterns;
    store::DatasetManifest manifest;

    std::filesystem::path file(const std::string& name) const { return run_dir / name; }
    void save_manifest() const;
};

PipelineContext make_context(PipelineConfig config, const std::filesystem::path& run_dir);

struct StageResult {
    std::string stage;
    std::size_t kept = 0;
    bool skipped = false;  // no-op resume
};

StageResult run_ingest(PipelineContext& ctx, const std::vector<std::filesystem::path>& inputs);
StageResult run_sample(PipelineContext& ctx);
StageResult run_generate(PipelineContext& ctx);
StageResult run_filter(PipelineContext& ctx);
StageResult run_refine(PipelineContext& ctx);
StageResult run_vote(PipelineContext& ctx);
StageResult run_partition(PipelineContext& ctx);
StageResult run_export(PipelineContext& ctx, const std::set<AgreementClass>& classes,
                       std::optional<std::filesystem::path> holdout_path = std::nullopt);
StageResult run_validation(PipelineContext& ctx);
StageResult run_augment(PipelineContext& ctx, const std::filesystem::path& benchmark_in,
                        const std::filesystem::path& benchmark_out);
StageResult run_evaluate(PipelineContext& ctx, const std::filesystem::path& benchmark, int runs);
StageResult run_analyze(PipelineContext& ctx);
StageResult run_score_rewards(PipelineContext& ctx, const std::filesystem::path& input,
                              const std::filesystem::path& output);

/// ingest -> sample -> generate -> filter -> refine -> vote -> partition.
std::vector<StageResult> run_full_pipeline(PipelineContext& ctx,
                                           const std::vector<std::filesystem::path>& inputs);

}  // namespace sciq
