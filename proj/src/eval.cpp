#include "sciq/eval.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <regex>

namespace sciq {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Answer extraction
// ---------------------------------------------------------------------------

namespace {

struct TierMatch {
    std::size_t pos = 0;
    char label = 0;
};

// Last in-text match across the tier's patterns whose letter is allowed.
std::optional<char> scan_tier(const std::string& text, const std::vector<std::regex>& patterns,
                              const std::set<char>& allowed) {
    std::optional<TierMatch> best;
    for (const auto& pattern : patterns) {
        for (std::sregex_iterator it(text.begin(), text.end(), pattern), end; it != end; ++it) {
            const std::smatch& m = *it;
            for (std::size_t g = 1; g < m.size(); ++g) {
                if (!m[g].matched) continue;
                char label = static_cast<char>(
                    std::toupper(static_cast<unsigned char>(m[g].str()[0])));
                if (!allowed.count(label)) continue;
                std::size_t pos = static_cast<std::size_t>(m.position(0));
                if (!best || pos >= best->pos) best = TierMatch{pos, label};
                break;
            }
        }
    }
    if (best) return best->label;
    return std::nullopt;
}

const std::vector<std::regex>& tier1_patterns() {
    static const std::vector<std::regex> patterns = {
        std::regex(R"(\banswer\s+is\s*:?\s*\**\(?([A-Za-z])\)?)", std::regex::icase),
        std::regex(R"(\banswer\s*:\s*\**\(?([A-Za-z])\)?)", std::regex::icase),
        std::regex(R"(\bfinal\s+answer\b[\s:*\-=>.,()\[\]]*\(?([A-Za-z])\)?\b)",
                   std::regex::icase),
    };
    return patterns;
}

const std::vector<std::regex>& tier2_patterns() {
    static const std::vector<std::regex> patterns = {
        std::regex(R"(\\boxed\s*\{\s*\(?([A-Za-z])\)?\s*\})", std::regex::icase),
        std::regex(R"(\(\s*([A-Za-z])\s*\))", std::regex::icase),
    };
    return patterns;
}

}  // namespace

std::optional<char> extract_answer(std::string_view response_text,
                                   const std::set<char>& allowed_labels) {
    if (allowed_labels.empty())
        throw Error("InvalidArgument", "allowed_labels must be non-empty");
    const std::string text(response_text);

    if (auto hit = scan_tier(text, tier1_patterns(), allowed_labels)) return hit;
    if (auto hit = scan_tier(text, tier2_patterns(), allowed_labels)) return hit;

    // Tier 3: the last non-empty line is a standalone label.
    auto lines = split_lines(text);
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
        std::string line = trim(*it);
        if (line.empty()) continue;
        static const std::regex standalone(R"(^\(?([A-Za-z])\)?\.?$)");
        std::smatch m;
        if (std::regex_match(line, m, standalone)) {
            char label =
                static_cast<char>(std::toupper(static_cast<unsigned char>(m[1].str()[0])));
            if (allowed_labels.count(label)) return label;
        }
        break;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Permutation augmentation
// ---------------------------------------------------------------------------

std::vector<McqItem> augment_permutations(const McqItem& item) {
    if (item.options.size() != 4)
        throw Error("WrongOptionCount", "augment_permutations requires exactly 4 options, got " +
                                            std::to_string(item.options.size()));
    const std::size_t c = item.correct_index();
    // Cyclic read starting at the correct option; rotating it keeps the
    // relative cyclic order of distractors in every variant.
    std::vector<std::string> cycle(4);
    for (std::size_t i = 0; i < 4; ++i) cycle[i] = item.options[(c + i) % 4];

    std::vector<McqItem> variants;
    variants.reserve(4);
    for (std::size_t k = 0; k < 4; ++k) {
        McqItem variant = item;
        variant.item_id = item.item_id + "-p" + std::string(1, static_cast<char>('A' + k));
        for (std::size_t i = 0; i < 4; ++i) variant.options[(i + k) % 4] = cycle[i];
        variant.correct_label = static_cast<char>('A' + k);
        variants.push_back(std::move(variant));
    }
    return variants;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

Metrics score(std::span<const EvalRecord> records) {
    if (records.empty()) throw Error("EmptyRecords", "score requires at least one record");
    Metrics m;
    m.n = records.size();
    std::size_t extracted = 0;
    std::size_t correct = 0;
    for (const auto& r : records) {
        if (r.extracted_label) ++extracted;
        if (r.correct) ++correct;
    }
    m.extraction_rate = static_cast<double>(extracted) / static_cast<double>(m.n);
    m.accuracy = static_cast<double>(correct) / static_cast<double>(m.n);
    return m;
}

DomainReport per_domain_report(std::span<const EvalRecord> records) {
    std::map<std::string, std::vector<EvalRecord>> by_domain;
    for (const auto& r : records) by_domain[r.domain].push_back(r);

    DomainReport report;
    for (const auto& [domain, rows] : by_domain)
        report.domains.emplace_back(domain, score(rows));
    if (!records.empty()) report.overall = score(records);
    return report;
}

MeanSd run_stats(std::span<const double> per_run_values) {
    if (per_run_values.empty()) throw Error("InvalidArgument", "run_stats requires >= 1 run");
    MeanSd out;
    for (double v : per_run_values) out.mean += v;
    out.mean /= static_cast<double>(per_run_values.size());
    double ss = 0.0;
    for (double v : per_run_values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(per_run_values.size()));
    return out;
}

MetricsStats run_stats(std::span<const Metrics> per_run_metrics) {
    std::vector<double> acc;
    std::vector<double> ext;
    for (const auto& m : per_run_metrics) {
        acc.push_back(m.accuracy);
        ext.push_back(m.extraction_rate);
    }
    MetricsStats stats;
    stats.accuracy = run_stats(std::span<const double>(acc));
    stats.extraction_rate = run_stats(std::span<const double>(ext));
    stats.runs = per_run_metrics.size();
    return stats;
}

// ---------------------------------------------------------------------------
// Validation set
// ---------------------------------------------------------------------------

std::vector<McqItem> build_validation_set(std::span<const McqItem> all_aligned_items,
                                          const std::vector<std::string>& disciplines,
                                          std::size_t per_discipline, std::uint64_t seed) {
    if (per_discipline == 0) throw Error("InvalidArgument", "per_discipline must be >= 1");
    for (const auto& item : all_aligned_items) {
        if (item.agreement_class != AgreementClass::AllAligned)
            throw Error("PreconditionFailed",
                        "validation pool must be All-Aligned: " + item.item_id);
        if (item.options.size() != 10)
            throw Error("PreconditionFailed", "validation pool items need 10 options: " +
                                                  item.item_id);
    }

    std::map<std::string, std::vector<std::size_t>> by_discipline;
    for (std::size_t i = 0; i < all_aligned_items.size(); ++i)
        by_discipline[all_aligned_items[i].discipline].push_back(i);

    std::vector<McqItem> selected;
    selected.reserve(disciplines.size() * per_discipline);
    for (const auto& discipline : disciplines) {
        auto it = by_discipline.find(discipline);
        const std::size_t available = it == by_discipline.end() ? 0 : it->second.size();
        if (available < per_discipline)
            throw Error("InsufficientItems",
                        discipline + " has " + std::to_string(available) + " items, need " +
                            std::to_string(per_discipline));
        auto rng = seeded_rng(derive_seed(seed, "val/" + discipline));
        for (std::size_t p : sample_indices(available, per_discipline, rng))
            selected.push_back(all_aligned_items[it->second[p]]);
    }
    return selected;
}

// ---------------------------------------------------------------------------
// Benchmark records
// ---------------------------------------------------------------------------

McqItem BenchmarkItem::to_item() const {
    McqItem item;
    item.item_id = id;
    item.question = question;
    item.options = options;
    item.correct_label = answer;
    item.discipline = domain;
    item.stage = options.size() == 10 ? ItemStage::Refined : ItemStage::Draft;
    return item;
}

std::vector<BenchmarkItem> load_benchmark(const std::filesystem::path& path) {
    std::vector<BenchmarkItem> items;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(read_file(path))) {
        ++line_no;
        if (trim(line).empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object())
            throw Error("SchemaViolation",
                        path.string() + ":" + std::to_string(line_no) + ": not a JSON object");
        BenchmarkItem item;
        item.id = record.value("id", "bench-" + std::to_string(line_no));
        if (!record.contains("question") || !record.contains("options") ||
            !record.contains("answer"))
            throw Error("SchemaViolation", path.string() + ":" + std::to_string(line_no) +
                                               ": needs question/options/answer");
        item.question = record["question"].get<std::string>();
        const json& opts = record["options"];
        if (opts.is_array()) {
            for (const auto& v : opts) item.options.push_back(v.get<std::string>());
        } else if (opts.is_object()) {
            for (auto it = opts.begin(); it != opts.end(); ++it)
                item.options.push_back(it.value().get<std::string>());
        } else {
            throw Error("SchemaViolation", "options must be an array or object");
        }
        std::string answer = trim(record["answer"].get<std::string>());
        if (answer.empty()) throw Error("SchemaViolation", "empty answer");
        item.answer = static_cast<char>(std::toupper(static_cast<unsigned char>(answer[0])));
        item.domain = record.value("domain", "");
        items.push_back(std::move(item));
    }
    return items;
}

void save_benchmark(const std::filesystem::path& path, std::span<const BenchmarkItem> items) {
    std::string out;
    for (const auto& item : items) {
        json record;
        record["id"] = item.id;
        record["question"] = item.question;
        record["options"] = item.options;
        record["answer"] = std::string(1, item.answer);
        record["domain"] = item.domain;
        out += record.dump();
        out += '\n';
    }
    atomic_write_file(path, out);
}

}  // namespace sciq
