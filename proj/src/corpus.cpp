#include "sciq/corpus.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <sstream>

namespace sciq {

std::string Paper::full_text() const {
    std::string out = title;
    if (!abstract_text.empty()) {
        out += "\n\n";
        out += abstract_text;
    }
    if (!body.empty()) {
        out += "\n\n";
        out += body;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Taxonomy
// ---------------------------------------------------------------------------

Taxonomy Taxonomy::from_entries(const std::vector<std::pair<std::string, std::string>>& entries) {
    Taxonomy t;
    for (const auto& [sub, disc] : entries) {
        if (t.by_subdomain_.count(sub))
            throw Error("SchemaViolation", "duplicate subdomain in taxonomy: " + sub);
        t.entries_.emplace_back(sub, disc);
        t.by_subdomain_[sub] = disc;
        if (std::find(t.discipline_names_.begin(), t.discipline_names_.end(), disc) ==
            t.discipline_names_.end()) {
            t.discipline_names_.push_back(disc);
        }
    }
    return t;
}

Taxonomy Taxonomy::builtin() {
    // Reconstructed default: 26 subdomains over 9 disciplines. Interdisciplinary
    // subdomains are assigned to a single first-listed parent.
    static const std::vector<std::pair<std::string, std::string>> kDefault = {
        {"Molecular Biology", "Biology"},
        {"Genetics", "Biology"},
        {"Microbiology", "Biology"},
        {"Ecology", "Biology"},
        {"Neuroscience", "Biology"},
        {"Biochemistry", "Chemistry"},
        {"Organic Chemistry", "Chemistry"},
        {"Inorganic Chemistry", "Chemistry"},
        {"Catalysis", "Chemistry"},
        {"Condensed Matter Physics", "Physics"},
        {"Quantum Physics", "Physics"},
        {"Optics and Photonics", "Physics"},
        {"Astrophysics", "Physics"},
        {"Applied Mathematics", "Mathematics"},
        {"Statistics", "Mathematics"},
        {"Electrical Engineering", "Engineering"},
        {"Chemical Engineering", "Engineering"},
        {"Mechanical Engineering", "Engineering"},
        {"Oncology", "Medicine"},
        {"Immunology", "Medicine"},
        {"Public Health", "Medicine"},
        {"Climate Science", "Earth Science"},
        {"Geophysics", "Earth Science"},
        {"Nanomaterials", "Materials Science"},
        {"Polymers and Soft Matter", "Materials Science"},
        {"Psychology", "Social Science"},
    };
    return from_entries(kDefault);
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
    std::vector<std::pair<std::string, std::string>> entries;
    for (const auto& raw : split_lines(read_file(path))) {
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw Error("SchemaViolation", "taxonomy line lacks a tab: " + line);
        std::string sub = trim(line.substr(0, tab));
        std::string disc = trim(line.substr(tab + 1));
        if (sub.empty() || disc.empty())
            throw Error("SchemaViolation", "taxonomy line has an empty column: " + line);
        entries.emplace_back(std::move(sub), std::move(disc));
    }
    if (entries.empty()) throw Error("SchemaViolation", "empty taxonomy file: " + path.string());
    return from_entries(entries);
}

void Taxonomy::save(const std::filesystem::path& path) const {
    std::ostringstream out;
    for (const auto& [sub, disc] : entries_) out << sub << '\t' << disc << '\n';
    atomic_write_file(path, out.str());
}

const std::string& Taxonomy::discipline_of(const std::string& subdomain) const {
    auto it = by_subdomain_.find(subdomain);
    if (it == by_subdomain_.end())
        throw Error("UnknownSubdomain", "subdomain not in taxonomy: " + subdomain);
    return it->second;
}

bool Taxonomy::has_subdomain(const std::string& subdomain) const {
    return by_subdomain_.count(subdomain) > 0;
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

namespace {

struct Block {
    std::string kind;  // TITLE, ABSTRACT, BODY, FIGURE, TABLE
    std::string text;
};

bool is_reference_block(const std::string& text) {
    for (const auto& line : split_lines(text)) {
        std::string t = to_lower_ascii(trim(line));
        if (t.empty()) continue;
        return t == "references" || t == "bibliography";
    }
    return false;
}

}  // namespace

Paper ingest_paper(std::string_view raw_document, const Taxonomy& taxonomy,
                   const IngestOptions& options) {
    std::vector<Block> blocks;
    std::string subdomain;
    std::string* current = nullptr;

    for (const auto& line : split_lines(raw_document)) {
        if (!line.empty() && line[0] == '#') {
            std::string marker = trim(line);
            if (marker == "#TITLE" || marker == "#ABSTRACT" || marker == "#BODY" ||
                marker == "#FIGURE" || marker == "#TABLE") {
                blocks.push_back({marker.substr(1), ""});
                current = &blocks.back().text;
                continue;
            }
            if (marker.rfind("#META", 0) == 0) {
                std::string meta = trim(marker.substr(5));
                if (meta.rfind("subdomain=", 0) == 0) subdomain = trim(meta.substr(10));
                current = nullptr;
                continue;
            }
            // Unknown '#' line inside a block is kept as content.
        }
        if (current) {
            if (!current->empty()) current->push_back('\n');
            current->append(line);
        }
    }

    std::string title;
    std::string abstract_text;
    std::vector<std::string> body_sections;
    for (auto& block : blocks) {
        std::string text = trim(block.text);
        if (block.kind == "TITLE") {
            if (title.empty()) title = normalize_ws(text);
        } else if (block.kind == "ABSTRACT") {
            if (!text.empty()) {
                if (!abstract_text.empty()) abstract_text += "\n\n";
                abstract_text += text;
            }
        } else if (block.kind == "BODY") {
            if (!text.empty() && !is_reference_block(text)) body_sections.push_back(std::move(text));
        }
        // FIGURE and TABLE blocks are dropped.
    }

    if (title.empty()) throw Error("MissingSection", "document has no #TITLE block");
    if (subdomain.empty()) throw Error("MissingSection", "document has no #META subdomain=");

    Paper paper;
    paper.title = std::move(title);
    paper.abstract_text = std::move(abstract_text);
    for (const auto& section : body_sections) {
        if (!paper.body.empty()) paper.body += "\n\n";
        paper.body += section;
    }
    if (trim(paper.body).empty()) throw Error("EmptyBody", "no prose remains after stripping");

    paper.subdomain = subdomain;
    paper.discipline = taxonomy.discipline_of(subdomain);
    paper.source_uri = options.source_uri;
    paper.paper_id = options.paper_id.empty()
                         ? stable_hash_hex({paper.title, paper.abstract_text, paper.body}).substr(0, 16)
                         : options.paper_id;
    return paper;
}

// ---------------------------------------------------------------------------
// Balanced sampling
// ---------------------------------------------------------------------------

BalancedSample sample_balanced(const std::vector<Paper>& papers, std::size_t per_discipline,
                               std::uint64_t seed,
                               const std::vector<std::string>& discipline_order) {
    if (per_discipline == 0) throw Error("InvalidArgument", "per_discipline must be >= 1");

    std::vector<std::string> order = discipline_order;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < papers.size(); ++i) {
        const std::string& disc = papers[i].discipline;
        auto [it, inserted] = groups.try_emplace(disc);
        it->second.push_back(i);
        if (inserted && std::find(order.begin(), order.end(), disc) == order.end())
            order.push_back(disc);
    }

    BalancedSample result;
    static const std::vector<std::size_t> kEmpty;
    for (const auto& disc : order) {
        auto it = groups.find(disc);
        const std::vector<std::size_t>& pool = it == groups.end() ? kEmpty : it->second;
        DisciplineDraw draw;
        draw.discipline = disc;
        draw.available = pool.size();
        draw.requested = per_discipline;
        auto rng = seeded_rng(derive_seed(seed, disc));
        auto picks = sample_indices(pool.size(), per_discipline, rng);
        draw.selected = picks.size();
        for (std::size_t p : picks) result.papers.push_back(papers[pool[p]]);
        result.draws.push_back(std::move(draw));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Paper persistence
// ---------------------------------------------------------------------------

void save_papers(const std::filesystem::path& path, const std::vector<Paper>& papers) {
    std::string out;
    for (const auto& paper : papers) {
        nlohmann::json record;
        record["paper_id"] = paper.paper_id;
        record["title"] = paper.title;
        record["abstract"] = paper.abstract_text;
        record["body"] = paper.body;
        record["subdomain"] = paper.subdomain;
        record["discipline"] = paper.discipline;
        record["source_uri"] = paper.source_uri;
        out += record.dump();
        out += '\n';
    }
    atomic_write_file(path, out);
}

std::vector<Paper> load_papers(const std::filesystem::path& path) {
    std::vector<Paper> papers;
    for (const auto& line : split_lines(read_file(path))) {
        if (trim(line).empty()) continue;
        nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
        if (record.is_discarded() || !record.is_object())
            throw Error("SchemaViolation", "bad paper record in " + path.string());
        Paper paper;
        paper.paper_id = record.at("paper_id").get<std::string>();
        paper.title = record.at("title").get<std::string>();
        paper.abstract_text = record.value("abstract", "");
        paper.body = record.at("body").get<std::string>();
        paper.subdomain = record.value("subdomain", "");
        paper.discipline = record.value("discipline", "");
        paper.source_uri = record.value("source_uri", "");
        papers.push_back(std::move(paper));
    }
    return papers;
}

}  // namespace sciq
