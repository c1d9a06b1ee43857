#pragma once
// Evaluation harness: final-option extraction, accuracy / extraction-rate
// metrics, answer-position permutation augmentation, per-domain reports,
// multi-run statistics, and the validation-set builder.

#include "sciq/item.hpp"
#include "sciq/util.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sciq {

/// One graded model response.
struct EvalRecord {
    std::string item_id;
    std::string domain;
    std::string response_text;
    std::optional<char> extracted_label;
    bool correct = false;
    int run_index = 0;
};

/// Pull the final selected option out of free-form model text.
///
/// Ordered cascade, case-insensitive; within a tier the last valid match
/// wins and tiers never mix:
///   1. "answer is (X)" / "answer: X" / "final answer ... X"
///   2. a boxed or parenthesized standalone label
///   3. a standalone label letter as the last non-empty line
/// Candidates outside allowed_labels are ignored. Total: never throws on
/// arbitrary text (allowed_labels must be non-empty).
std::optional<char> extract_answer(std::string_view response_text,
                                   const std::set<char>& allowed_labels);

/// The 4 position variants of a 4-option item: variant k puts the correct
/// option text at position k while the other options keep their relative
/// cyclic order. Throws Error("WrongOptionCount") unless the item has
/// exactly 4 options.
std::vector<McqItem> augment_permutations(const McqItem& item);

struct Metrics {
    double accuracy = 0.0;
    double extraction_rate = 0.0;
    std::size_t n = 0;
};

/// Unextracted records count as incorrect, so accuracy <= extraction_rate.
/// Throws Error("EmptyRecords") on empty input.
Metrics score(std::span<const EvalRecord> records);

struct DomainReport {
    std::vector<std::pair<std::string, Metrics>> domains;  // sorted by domain name
    Metrics overall;
};

DomainReport per_domain_report(std::span<const EvalRecord> records);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;  // population standard deviation
};

MeanSd run_stats(std::span<const double> per_run_values);

struct MetricsStats {
    MeanSd accuracy;
    MeanSd extraction_rate;
    std::size_t runs = 0;
};

MetricsStats run_stats(std::span<const Metrics> per_run_metrics);

/// Per-discipline uniform sample without replacement from an All-Aligned
/// 10-option pool. Every listed discipline must hold at least per_discipline
/// items, otherwise Error("InsufficientItems"). Selection order follows the
/// discipline list; deterministic in (items, per_discipline, seed).
std::vector<McqItem> build_validation_set(std::span<const McqItem> all_aligned_items,
                                          const std::vector<std::string>& disciplines,
                                          std::size_t per_discipline, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Benchmark records (line-delimited JSON with question / options / answer /
// domain fields).
// ---------------------------------------------------------------------------

struct BenchmarkItem {
    std::string id;
    std::string question;
    std::vector<std::string> options;
    char answer = 'A';
    std::string domain;

    McqItem to_item() const;
};

std::vector<BenchmarkItem> load_benchmark(const std::filesystem::path& path);
void save_benchmark(const std::filesystem::path& path, std::span<const BenchmarkItem> items);

}  // namespace sciq
