#include "sciq/corpus.hpp"

#include "test_helpers.hpp"

#include <doctest.h>

#include <set>

using namespace sciq;

namespace {

const char* kDoc = R"(#TITLE
A study of things
#META subdomain=Biochemistry
#ABSTRACT
Short abstract.
#BODY
Section one prose.
#FIGURE
Figure caption to strip.
#BODY
Section two prose.
#TABLE
Tabular junk.
#BODY
Section three prose.
)";

}  // namespace

TEST_CASE("ingest strips figure and table blocks, keeps body sections") {
    auto paper = ingest_paper(kDoc, Taxonomy::builtin());
    CHECK(paper.title == "A study of things");
    CHECK(paper.abstract_text == "Short abstract.");
    CHECK(paper.body == "Section one prose.\n\nSection two prose.\n\nSection three prose.");
    CHECK(paper.body.find("caption") == std::string::npos);
    CHECK(paper.body.find("Tabular") == std::string::npos);
    CHECK(paper.subdomain == "Biochemistry");
    CHECK(paper.discipline == "Chemistry");  // builtin assigns Biochemistry to Chemistry
    CHECK(!paper.paper_id.empty());
}

TEST_CASE("discipline resolution follows the active taxonomy") {
    auto custom = Taxonomy::from_entries({{"Biochemistry", "Biology"}});
    auto paper = ingest_paper(kDoc, custom);
    CHECK(paper.discipline == "Biology");
}

TEST_CASE("reference list body blocks are stripped") {
    std::string doc = kDoc;
    doc += "#BODY\nReferences\n1. Someone 1999.\n";
    auto paper = ingest_paper(doc, Taxonomy::builtin());
    CHECK(paper.body.find("1999") == std::string::npos);
}

TEST_CASE("document whose body is a single table is EmptyBody") {
    const char* doc = R"(#TITLE
T
#META subdomain=Ecology
#BODY

#TABLE
only a table here
)";
    CHECK_THROWS_WITH_AS(ingest_paper(doc, Taxonomy::builtin()), doctest::Contains("EmptyBody"),
                         Error);
}

TEST_CASE("ingest error paths") {
    CHECK_THROWS_WITH_AS(ingest_paper("#BODY\ntext\n#META subdomain=Ecology", Taxonomy::builtin()),
                         doctest::Contains("MissingSection"), Error);
    CHECK_THROWS_WITH_AS(ingest_paper("#TITLE\nT\n#BODY\ntext\n", Taxonomy::builtin()),
                         doctest::Contains("MissingSection"), Error);
    CHECK_THROWS_WITH_AS(
        ingest_paper("#TITLE\nT\n#META subdomain=Alchemy\n#BODY\ntext\n", Taxonomy::builtin()),
        doctest::Contains("UnknownSubdomain"), Error);
}

TEST_CASE("builtin taxonomy shape: 26 subdomains over 9 disciplines") {
    auto taxonomy = Taxonomy::builtin();
    CHECK(taxonomy.subdomain_count() == 26);
    CHECK(taxonomy.discipline_names().size() == 9);
    // Every discipline has at least one subdomain and lookups are total.
    std::set<std::string> seen;
    for (const auto& [sub, disc] : taxonomy.entries()) {
        CHECK_NOTHROW(taxonomy.discipline_of(sub));
        seen.insert(disc);
    }
    CHECK(seen.size() == 9);
}

TEST_CASE("shipped taxonomy file matches the builtin table") {
    auto loaded = Taxonomy::load(test::asset_dir() / "taxonomy.tsv");
    CHECK(loaded.entries() == Taxonomy::builtin().entries());
    CHECK_THROWS_AS(Taxonomy::from_entries({{"X", "A"}, {"X", "B"}}), Error);
}

TEST_CASE("taxonomy save/load round trip") {
    auto dir = test::fresh_tmp_dir("taxonomy");
    auto custom = Taxonomy::from_entries({{"Subdomain One", "Alpha"}, {"Sub Two", "Beta"}});
    custom.save(dir / "t.tsv");
    auto loaded = Taxonomy::load(dir / "t.tsv");
    CHECK(loaded.entries() == custom.entries());
    CHECK(loaded.discipline_names() == std::vector<std::string>{"Alpha", "Beta"});
    std::filesystem::remove_all(dir);
}

namespace {

std::vector<Paper> synthetic_corpus(const std::vector<std::pair<std::string, std::size_t>>& spec) {
    std::vector<Paper> papers;
    for (const auto& [discipline, count] : spec) {
        for (std::size_t i = 0; i < count; ++i) {
            Paper p;
            p.paper_id = discipline + "-" + std::to_string(i);
            p.title = "t";
            p.abstract_text = "a";
            p.body = "b";
            p.discipline = discipline;
            papers.push_back(std::move(p));
        }
    }
    return papers;
}

}  // namespace

TEST_CASE("sample_balanced draws per_discipline from each discipline") {
    auto disciplines = Taxonomy::builtin().discipline_names();
    std::vector<std::pair<std::string, std::size_t>> spec;
    for (const auto& d : disciplines) spec.emplace_back(d, 200);
    auto papers = synthetic_corpus(spec);

    auto sample = sample_balanced(papers, 100, 17, disciplines);
    CHECK(sample.papers.size() == 900);
    std::map<std::string, std::size_t> per;
    for (const auto& p : sample.papers) ++per[p.discipline];
    for (const auto& d : disciplines) CHECK(per[d] == 100);

    // No duplicates, and output is exactly the union of the per-discipline draws.
    std::set<std::string> ids;
    for (const auto& p : sample.papers) ids.insert(p.paper_id);
    CHECK(ids.size() == sample.papers.size());
}

TEST_CASE("sample_balanced shortfall keeps everything available and reports it") {
    auto papers = synthetic_corpus({{"Biology", 40}, {"Physics", 200}});
    auto sample = sample_balanced(papers, 100, 3, {"Biology", "Physics"});
    CHECK(sample.papers.size() == 140);
    CHECK(sample.draws[0].discipline == "Biology");
    CHECK(sample.draws[0].selected == 40);
    CHECK(sample.draws[0].shortfall());
    CHECK(sample.draws[1].selected == 100);
    CHECK(!sample.draws[1].shortfall());
}

TEST_CASE("sample_balanced is a pure function of its arguments") {
    auto papers = synthetic_corpus({{"Biology", 50}, {"Physics", 50}, {"Chemistry", 50}});
    auto a = sample_balanced(papers, 20, 99, {"Biology", "Physics", "Chemistry"});
    auto b = sample_balanced(papers, 20, 99, {"Biology", "Physics", "Chemistry"});
    REQUIRE(a.papers.size() == b.papers.size());
    for (std::size_t i = 0; i < a.papers.size(); ++i)
        CHECK(a.papers[i].paper_id == b.papers[i].paper_id);

    auto c = sample_balanced(papers, 20, 100, {"Biology", "Physics", "Chemistry"});
    bool any_diff = false;
    for (std::size_t i = 0; i < a.papers.size(); ++i)
        if (a.papers[i].paper_id != c.papers[i].paper_id) any_diff = true;
    CHECK(any_diff);  // different seed, different draw
}

TEST_CASE("paper persistence round trip") {
    auto dir = test::fresh_tmp_dir("papers");
    auto papers = synthetic_corpus({{"Biology", 3}});
    papers[0].subdomain = "Ecology";
    papers[0].source_uri = "file://x";
    save_papers(dir / "p.jsonl", papers);
    auto loaded = load_papers(dir / "p.jsonl");
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[0].paper_id == papers[0].paper_id);
    CHECK(loaded[0].subdomain == "Ecology");
    CHECK(loaded[0].source_uri == "file://x");
    std::filesystem::remove_all(dir);
}
