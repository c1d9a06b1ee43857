#pragma once
// Prompt catalog: plain-text templates with [[PLACEHOLDER]] slots. Built-in
// defaults are embedded in the library; a directory of *.txt files (name =
// file stem) overrides them entry by entry.

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sciq {

class PromptCatalog {
public:
    /// Embedded default templates: qa_generation, refinement, answer,
    /// reasoning_type, validity, difficulty, json_example_generation,
    /// json_example_refinement.
    static PromptCatalog builtin();

    /// Load *.txt files from a directory; missing names fall back to the
    /// built-in defaults.
    static PromptCatalog load_dir(const std::filesystem::path& dir);

    bool has(std::string_view name) const;
    const std::string& text(std::string_view name) const;  // throws Error("UnknownTemplate")

    /// Replace [[KEY]] slots in a single pass; substituted text is never
    /// re-scanned. Unknown slots are left verbatim.
    std::string render(std::string_view name,
                       const std::map<std::string, std::string>& substitutions) const;

    std::vector<std::string> names() const;

private:
    std::map<std::string, std::string> templates_;
};

}  // namespace sciq
