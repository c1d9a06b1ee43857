#include "sciq/filters.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <sstream>

namespace sciq {

// ---------------------------------------------------------------------------
// PatternSet
// ---------------------------------------------------------------------------

PatternSet PatternSet::from_lines(const std::vector<std::string>& lines) {
    PatternSet set;
    for (const auto& raw : lines) {
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        std::string reason;
        std::string pattern;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            reason = line;
            pattern = line;
        } else {
            reason = trim(line.substr(0, tab));
            pattern = trim(line.substr(tab + 1));
        }
        try {
            set.patterns_.push_back(
                {reason, pattern, std::regex(pattern, std::regex::icase | std::regex::ECMAScript)});
        } catch (const std::regex_error& e) {
            throw Error("SchemaViolation", "bad filter pattern '" + pattern + "': " + e.what());
        }
    }
    return set;
}

PatternSet PatternSet::builtin() {
    // Reconstructed category list; the upstream filter rules are editable via
    // a pattern file.
    static const std::vector<std::string> kDefault = {
        "figure-reference\t\\bfig(?:ure)?s?\\.?\\s*\\d+\\b",
        "figure-reference\t\\b(?:shown|illustrated|depicted|described)\\s+in\\s+(?:the\\s+)?fig(?:ure)?s?\\b",
        "figure-reference\t\\b(?:the|this|above|following)\\s+figures?\\b",
        "table-reference\t\\btables?\\s*\\d+\\b",
        "table-reference\t\\b(?:shown|listed|reported|presented)\\s+in\\s+(?:the\\s+)?tables?\\b",
        "table-reference\t\\b(?:the|this|above|following)\\s+tables?\\b",
        "section-reference\t\\bsections?\\s*\\d+\\b",
        "section-reference\t\\bin\\s+(?:this|the|that)\\s+section\\b",
        "study-reference\t\\bin\\s+(?:this|the\\s+present|the\\s+current)\\s+(?:study|paper|work|article|manuscript)\\b",
        "study-reference\t\\bof\\s+(?:this|the)\\s+(?:study|paper|article)\\b",
        "authors-reference\t\\bthe\\s+authors?\\b",
        "paper-reference\t\\baccording\\s+to\\s+the\\s+(?:paper|study|article|text|authors?)\\b",
        "proposed-method\t\\bthe\\s+proposed\\s+(?:method|approach|model|framework|technique|algorithm)\\b",
        "supplementary-reference\t\\bsupplementary\\s+(?:material|information|data|methods?|notes?|figures?|tables?)s?\\b",
        "supplementary-reference\t\\bsupporting\\s+information\\b",
        "experimental-result-reference\t\\b(?:as|the)\\s+(?:results?\\s+)?(?:reported|measured|observed)\\s+(?:here|above|in\\s+the\\s+experiments?)\\b",
    };
    return from_lines(kDefault);
}

PatternSet PatternSet::load(const std::filesystem::path& path) {
    return from_lines(split_lines(read_file(path)));
}

std::string PatternSet::match(const std::string& text) const {
    for (const auto& entry : patterns_) {
        if (std::regex_search(text, entry.pattern)) return entry.reason;
    }
    return "";
}

FilterDecision heuristic_filter(const McqItem& item, const PatternSet& patterns) {
    if (std::string reason = patterns.match(item.question); !reason.empty())
        return {false, reason};
    for (const auto& option : item.options) {
        if (std::string reason = patterns.match(option); !reason.empty()) return {false, reason};
    }
    return {true, ""};
}

// ---------------------------------------------------------------------------
// n-gram deduplication
// ---------------------------------------------------------------------------

std::vector<std::string> dedup_tokenize(std::string_view text) {
    std::string cleaned;
    cleaned.reserve(text.size());
    for (unsigned char c : text) {
        if (c >= 0x80) {
            cleaned.push_back(static_cast<char>(c));  // multibyte sequences pass through
        } else if (std::isalnum(c) || c == '-') {
            cleaned.push_back(static_cast<char>(std::tolower(c)));
        } else {
            cleaned.push_back(' ');
        }
    }
    std::vector<std::string> tokens;
    std::istringstream stream(cleaned);
    std::string token;
    while (stream >> token) tokens.push_back(token);
    return tokens;
}

std::unordered_set<std::string> ngram_set(std::string_view text, std::size_t n) {
    if (n == 0) throw Error("InvalidArgument", "n must be >= 1");
    std::vector<std::string> tokens = dedup_tokenize(text);
    std::unordered_set<std::string> grams;
    if (tokens.size() < n) return grams;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string gram = tokens[i];
        for (std::size_t j = 1; j < n; ++j) {
            gram.push_back(' ');
            gram += tokens[i + j];
        }
        grams.insert(std::move(gram));
    }
    return grams;
}

DedupResult dedup_against(const std::vector<McqItem>& items,
                          const std::vector<std::string>& reference_questions, std::size_t n) {
    if (n == 0) throw Error("InvalidArgument", "n must be >= 1");
    if (items.empty()) throw Error("EmptyInput", "dedup_against requires at least one item");

    // Reference index built once per call.
    std::unordered_set<std::string> index;
    for (const auto& ref : reference_questions) {
        for (auto& gram : ngram_set(ref, n)) index.insert(std::move(gram));
    }

    DedupResult result;
    for (const auto& item : items) {
        bool hit = false;
        for (const auto& gram : ngram_set(item.question, n)) {
            if (index.count(gram)) {
                hit = true;
                break;
            }
        }
        (hit ? result.dropped : result.kept).push_back(item);
    }
    result.overlap_rate = static_cast<double>(result.dropped.size()) /
                          static_cast<double>(items.size());
    return result;
}

std::vector<std::string> load_reference_questions(const std::filesystem::path& path) {
    std::vector<std::string> questions;
    for (const auto& line : split_lines(read_file(path))) {
        if (trim(line).empty()) continue;
        nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object() || !record.contains("question"))
            throw Error("SchemaViolation",
                        "reference line lacks a question field: " + path.string());
        questions.push_back(record["question"].get<std::string>());
    }
    return questions;
}

}  // namespace sciq
