// sciq: orchestrate the question-synthesis pipeline as composable
// subcommands over a run directory.

#include "sciq/pipeline.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using sciq::AgreementClass;

struct CommonArgs {
    std::string config_path;
    std::string run_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> max_in_flight;
    bool mock_backend = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "pipeline config file (JSON)")->required();
    cmd->add_option("--run-dir", args.run_dir, "run directory for stage outputs")->required();
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--max-in-flight", args.max_in_flight, "override the concurrency cap");
    cmd->add_flag("--mock-backend", args.mock_backend,
                  "force the scripted mock backend regardless of config");
}

sciq::PipelineContext make_context(const CommonArgs& args) {
    sciq::PipelineConfig config = sciq::PipelineConfig::load(args.config_path);
    if (args.seed) config.seed = *args.seed;
    if (args.max_in_flight) config.max_in_flight = *args.max_in_flight;
    if (args.mock_backend) config.backend_kind = "mock";
    return sciq::make_context(std::move(config), args.run_dir);
}

std::set<AgreementClass> parse_classes(const std::vector<std::string>& names) {
    std::set<AgreementClass> classes;
    for (const auto& name : names) classes.insert(sciq::agreement_class_from_string(name));
    return classes;
}

void report(const sciq::StageResult& result) {
    std::cout << result.stage << ": kept " << result.kept
              << (result.skipped ? " (already done, skipped)" : "") << "\n";
}

int fail(const std::string& stage, const std::string& code, const std::string& message) {
    nlohmann::json record;
    record["stage"] = stage;
    record["error"] = code;
    record["message"] = message;
    std::cerr << record.dump() << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthesize, filter, vote on and evaluate science MCQs from research papers"};
    app.require_subcommand(1);

    CommonArgs args;
    std::vector<std::string> inputs;
    std::vector<std::string> classes{"all-aligned"};
    std::string holdout;
    std::string input_file;
    std::string output_file;
    std::string benchmark;
    int runs = 1;

    CLI::App* ingest = app.add_subcommand("ingest", "parse marked-up documents into papers");
    add_common(ingest, args);
    ingest->add_option("--input", inputs, "document files or directories");

    CLI::App* sample = app.add_subcommand("sample", "balanced per-discipline paper sample");
    add_common(sample, args);

    CLI::App* generate = app.add_subcommand("generate", "draft 4-option questions per paper");
    add_common(generate, args);

    CLI::App* filter = app.add_subcommand("filter", "heuristic filters + n-gram dedup");
    add_common(filter, args);

    CLI::App* refine = app.add_subcommand("refine", "expand drafts to 10 options A-J");
    add_common(refine, args);

    CLI::App* vote = app.add_subcommand("vote", "collect ensemble votes per item");
    add_common(vote, args);

    CLI::App* partition = app.add_subcommand("partition", "bucket items by vote agreement");
    add_common(partition, args);

    CLI::App* exp = app.add_subcommand("export", "write a class-filtered training split");
    add_common(exp, args);
    exp->add_option("--classes", classes,
                    "agreement classes to export (all-aligned, majority-aligned, "
                    "majority-divergent, all-divergent, discarded)");
    exp->add_option("--holdout", holdout, "holdout manifest path (default <run-dir>/holdout.json)");

    CLI::App* validation =
        app.add_subcommand("validation", "draw the per-discipline validation holdout");
    add_common(validation, args);

    CLI::App* augment =
        app.add_subcommand("augment", "4x position augmentation of a 4-option benchmark");
    add_common(augment, args);
    augment->add_option("--input", input_file, "benchmark JSONL in")->required();
    augment->add_option("--output", output_file, "augmented JSONL out")->required();

    CLI::App* evaluate = app.add_subcommand("evaluate", "run a benchmark against a model");
    add_common(evaluate, args);
    evaluate->add_option("--benchmark", benchmark, "benchmark JSONL")->required();
    evaluate->add_option("--runs", runs, "independent runs for mean/sd");

    CLI::App* analyze = app.add_subcommand("analyze", "length/judge/redundancy reports");
    add_common(analyze, args);

    CLI::App* score =
        app.add_subcommand("score-rewards", "append reward/extracted to response records");
    add_common(score, args);
    score->add_option("--input", input_file, "records JSONL in (item fields + response)")
        ->required();
    score->add_option("--output", output_file, "scored records JSONL out")->required();

    CLI::App* pipeline = app.add_subcommand("pipeline", "ingest through partition in one go");
    add_common(pipeline, args);
    pipeline->add_option("--input", inputs, "document files or directories");

    CLI11_PARSE(app, argc, argv);
    CLI::App* cmd = app.get_subcommands().front();
    const std::string stage = cmd->get_name();

    try {
        sciq::PipelineContext ctx = make_context(args);
        std::vector<std::filesystem::path> input_paths(inputs.begin(), inputs.end());

        if (cmd == ingest) {
            report(sciq::run_ingest(ctx, input_paths));
        } else if (cmd == sample) {
            report(sciq::run_sample(ctx));
        } else if (cmd == generate) {
            report(sciq::run_generate(ctx));
        } else if (cmd == filter) {
            report(sciq::run_filter(ctx));
        } else if (cmd == refine) {
            report(sciq::run_refine(ctx));
        } else if (cmd == vote) {
            report(sciq::run_vote(ctx));
        } else if (cmd == partition) {
            report(sciq::run_partition(ctx));
        } else if (cmd == exp) {
            std::optional<std::filesystem::path> holdout_path;
            if (!holdout.empty()) holdout_path = holdout;
            report(sciq::run_export(ctx, parse_classes(classes), holdout_path));
        } else if (cmd == validation) {
            report(sciq::run_validation(ctx));
        } else if (cmd == augment) {
            report(sciq::run_augment(ctx, input_file, output_file));
        } else if (cmd == evaluate) {
            report(sciq::run_evaluate(ctx, benchmark, runs));
        } else if (cmd == analyze) {
            report(sciq::run_analyze(ctx));
        } else if (cmd == score) {
            report(sciq::run_score_rewards(ctx, input_file, output_file));
        } else if (cmd == pipeline) {
            for (const auto& result : sciq::run_full_pipeline(ctx, input_paths)) report(result);
        }
        return 0;
    } catch (const sciq::Error& e) {
        return fail(stage, e.code(), e.what());
    } catch (const std::exception& e) {
        return fail(stage, "Internal", e.what());
    }
}
