#pragma once
// Quality filters: keyword heuristics for context-dependent or leaky
// questions, and n-gram deduplication against reference benchmarks
// (default n = 13).

#include "sciq/item.hpp"
#include "sciq/util.hpp"

#include <filesystem>
#include <regex>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace sciq {

struct FilterDecision {
    bool keep = true;
    std::string reason;  // reason code of the matched pattern when dropped
};

/// Named drop patterns, matched case-insensitively against question and
/// option texts. File format: one pattern per line, `reason<TAB>regex`
/// (a line without a tab uses the pattern text itself as the reason);
/// `#` starts a comment.
class PatternSet {
public:
    /// Shipped default set: figure/table/section references, "in this
    /// study/paper/work", "the authors", "according to the paper",
    /// "the proposed method", supplementary-material references.
    static PatternSet builtin();
    static PatternSet load(const std::filesystem::path& path);
    static PatternSet from_lines(const std::vector<std::string>& lines);

    /// Reason code of the first matching pattern, or empty when none match.
    std::string match(const std::string& text) const;

    std::size_t size() const { return patterns_.size(); }

private:
    struct Entry {
        std::string reason;
        std::string pattern_text;
        std::regex pattern;
    };
    std::vector<Entry> patterns_;
};

/// Drop iff the question or any option matches a pattern.
FilterDecision heuristic_filter(const McqItem& item, const PatternSet& patterns);

/// Fixed tokenizer for dedup: ASCII-lowercase, characters outside
/// letters/digits/hyphen become spaces (non-ASCII bytes are kept as letter
/// bytes), then whitespace split.
std::vector<std::string> dedup_tokenize(std::string_view text);

/// All contiguous n-token windows of the text, each joined with single
/// spaces. Texts with fewer than n tokens yield the empty set. n >= 1.
std::unordered_set<std::string> ngram_set(std::string_view text, std::size_t n);

struct DedupResult {
    std::vector<McqItem> kept;     // input order
    std::vector<McqItem> dropped;  // input order
    double overlap_rate = 0.0;     // dropped / total
};

/// Drop any item whose question stem shares at least one n-gram with the
/// union of reference n-gram sets. Scans stems only. Deterministic and
/// order-independent. Throws Error("EmptyInput") when items is empty.
DedupResult dedup_against(const std::vector<McqItem>& items,
                          const std::vector<std::string>& reference_questions,
                          std::size_t n = 13);

/// Reference benchmarks ship as line-delimited JSON with a `question` field.
std::vector<std::string> load_reference_questions(const std::filesystem::path& path);

}  // namespace sciq
