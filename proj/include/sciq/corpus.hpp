#pragma once
// Source-article ingestion and discipline-balanced sampling.
//
// Ingestion format: one article per UTF-8 file, organized by line-prefixed
// block markers:
//
//   #TITLE      title lines follow
//   #ABSTRACT   abstract lines follow
//   #BODY       one prose section follows
//   #FIGURE     figure caption block (stripped)
//   #TABLE      table block (stripped)
//   #META subdomain=<name>
//
// A #BODY block whose first non-empty line is "References" or "Bibliography"
// (case-insensitive) is treated as a reference list and stripped as well.
// Conversion from PDF/HTML into this format is upstream of this library.

#include "sciq/util.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace sciq {

struct Paper {
    std::string paper_id;
    std::string title;
    std::string abstract_text;
    std::string body;  // figures, tables and reference lists excluded
    std::string subdomain;
    std::string discipline;
    std::string source_uri;

    /// Title + abstract + body, the text handed to QA generation.
    std::string full_text() const;
};

/// Two-level topic taxonomy: subdomain -> discipline, with a fixed discipline
/// order used for balanced sampling and reporting. The built-in default maps
/// 26 subdomains onto 9 disciplines; it is a reconstructed mapping and fully
/// replaceable via a taxonomy file (`subdomain<TAB>discipline` per line,
/// `#` comments).
class Taxonomy {
public:
    static Taxonomy builtin();
    static Taxonomy load(const std::filesystem::path& path);
    static Taxonomy from_entries(const std::vector<std::pair<std::string, std::string>>& entries);

    void save(const std::filesystem::path& path) const;

    /// Throws Error("UnknownSubdomain") when the subdomain is not mapped.
    const std::string& discipline_of(const std::string& subdomain) const;
    bool has_subdomain(const std::string& subdomain) const;

    const std::vector<std::string>& discipline_names() const { return discipline_names_; }
    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
    std::size_t subdomain_count() const { return entries_.size(); }

private:
    std::vector<std::pair<std::string, std::string>> entries_;  // insertion order
    std::map<std::string, std::string> by_subdomain_;
    std::vector<std::string> discipline_names_;  // first-appearance order
};

struct IngestOptions {
    std::string paper_id;    // defaults to a content hash
    std::string source_uri;  // recorded as-is
};

/// Parse one marked-up document into a Paper. Figure captions, table bodies
/// and reference lists are stripped; the subdomain from #META is resolved to
/// a discipline through the taxonomy.
///
/// Errors: "MissingSection" (no #TITLE / #BODY / #META subdomain),
/// "UnknownSubdomain", "EmptyBody" (no prose remains after stripping).
Paper ingest_paper(std::string_view raw_document, const Taxonomy& taxonomy,
                   const IngestOptions& options = {});

struct DisciplineDraw {
    std::string discipline;
    std::size_t available = 0;
    std::size_t requested = 0;
    std::size_t selected = 0;
    bool shortfall() const { return selected < requested; }
};

struct BalancedSample {
    std::vector<Paper> papers;          // discipline order, then selection order
    std::vector<DisciplineDraw> draws;  // one per discipline, for the run manifest
};

/// Uniform per-discipline sample without replacement, min(per_discipline,
/// available) from each. Deterministic in (papers, per_discipline, seed):
/// each discipline draws from an independent stream seeded by
/// derive_seed(seed, discipline). Disciplines not named by the taxonomy
/// order are appended in first-appearance order.
BalancedSample sample_balanced(const std::vector<Paper>& papers, std::size_t per_discipline,
                               std::uint64_t seed,
                               const std::vector<std::string>& discipline_order);

// Paper persistence (line-delimited JSON, same discipline as the item store).
void save_papers(const std::filesystem::path& path, const std::vector<Paper>& papers);
std::vector<Paper> load_papers(const std::filesystem::path& path);

}  // namespace sciq
