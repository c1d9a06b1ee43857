#include "sciq/synth.hpp"

#include <algorithm>
#include <cctype>

namespace sciq {

using nlohmann::json;

namespace {

// Find the end of a balanced JSON value starting at `start` ('[' or '{'),
// honoring strings and escapes. Returns npos when unbalanced.
std::size_t find_balanced_end(std::string_view text, std::size_t start) {
    char open = text[start];
    char close = open == '[' ? ']' : '}';
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == open) {
            ++depth;
        } else if (c == close) {
            if (--depth == 0) return i;
        }
    }
    return std::string_view::npos;
}

bool looks_like_item(const json& obj) {
    return obj.is_object() && (obj.contains("question") || obj.contains("options") ||
                               obj.contains("answer"));
}

std::optional<ItemCandidate> candidate_from_json(const json& obj) {
    if (!obj.is_object()) return std::nullopt;
    ItemCandidate c;
    if (obj.contains("question") && obj["question"].is_string())
        c.question = obj["question"].get<std::string>();
    if (obj.contains("answer")) {
        if (obj["answer"].is_string()) c.answer = obj["answer"].get<std::string>();
        else c.answer = obj["answer"].dump();
    }
    if (obj.contains("rationale") && obj["rationale"].is_string())
        c.rationale = obj["rationale"].get<std::string>();
    if (obj.contains("options")) {
        const json& opts = obj["options"];
        if (opts.is_object()) {
            // nlohmann objects iterate in sorted key order, i.e. label order.
            for (auto it = opts.begin(); it != opts.end(); ++it) {
                if (!it.value().is_string()) return std::nullopt;
                c.options.emplace_back(it.key(), it.value().get<std::string>());
            }
        } else if (opts.is_array()) {
            char label = 'A';
            for (const auto& v : opts) {
                if (!v.is_string()) return std::nullopt;
                c.options.emplace_back(std::string(1, label++), v.get<std::string>());
            }
        }
    }
    return c;
}

std::vector<ItemCandidate> candidates_from_array(const json& arr) {
    // Every element must look like an item payload; an unrelated object
    // array earlier in the reply must not shadow the real one.
    std::vector<ItemCandidate> out;
    for (const auto& obj : arr) {
        if (!looks_like_item(obj)) return {};
        auto c = candidate_from_json(obj);
        if (!c) return {};
        out.push_back(std::move(*c));
    }
    return out;
}

}  // namespace

std::vector<ItemCandidate> parse_item_reply(const std::string& reply_text) {
    std::string_view text = reply_text;

    // First complete top-level array of objects wins.
    for (std::size_t pos = text.find('['); pos != std::string_view::npos;
         pos = text.find('[', pos + 1)) {
        std::size_t end = find_balanced_end(text, pos);
        if (end == std::string_view::npos) continue;
        json parsed = json::parse(text.substr(pos, end - pos + 1), nullptr, false);
        if (parsed.is_discarded() || !parsed.is_array() || parsed.empty()) continue;
        auto candidates = candidates_from_array(parsed);
        if (!candidates.empty()) return candidates;
    }

    // Fall back to a lone top-level object (refinement replies).
    for (std::size_t pos = text.find('{'); pos != std::string_view::npos;
         pos = text.find('{', pos + 1)) {
        std::size_t end = find_balanced_end(text, pos);
        if (end == std::string_view::npos) continue;
        json parsed = json::parse(text.substr(pos, end - pos + 1), nullptr, false);
        if (parsed.is_discarded() || !looks_like_item(parsed)) continue;
        auto c = candidate_from_json(parsed);
        if (c) return {std::move(*c)};
    }

    throw Error("NoStructuredPayload", "no complete JSON item payload in reply");
}

std::optional<McqItem> candidate_to_item(const ItemCandidate& candidate, const McqItem& meta,
                                         ItemStage stage, std::size_t expected_options,
                                         std::string* reason) {
    auto fail = [&](const char* why) {
        if (reason) *reason = why;
        return std::nullopt;
    };

    if (trim(candidate.question).empty()) return fail("empty-question");
    if (candidate.options.size() != expected_options) return fail("wrong-option-count");

    // Labels must be exactly A..(A+n-1), in any order in the payload.
    std::vector<std::pair<std::string, std::string>> sorted = candidate.options;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const std::string expected(1, static_cast<char>('A' + i));
        if (sorted[i].first != expected) return fail("non-contiguous-labels");
    }

    std::string answer = trim(candidate.answer);
    if (answer.size() != 1) return fail("bad-answer");
    char correct = static_cast<char>(std::toupper(static_cast<unsigned char>(answer[0])));
    if (correct < 'A' || static_cast<std::size_t>(correct - 'A') >= expected_options)
        return fail("bad-answer");

    McqItem item = meta;
    item.question = trim(candidate.question);
    item.options.clear();
    for (auto& [label, text] : sorted) item.options.push_back(text);
    item.correct_label = correct;
    item.rationale = trim(candidate.rationale);
    item.stage = stage;

    if (auto invalid = validate_item(item)) return fail(invalid->c_str());
    return item;
}

std::string item_payload_json(const McqItem& item) {
    json payload;
    payload["question"] = item.question;
    json options = json::object();
    for (std::size_t i = 0; i < item.options.size(); ++i)
        options[std::string(1, item.label_at(i))] = item.options[i];
    payload["options"] = options;
    payload["answer"] = std::string(1, item.correct_label);
    payload["rationale"] = item.rationale;
    return payload.dump(2);
}

GenerationResult generate_qas(const Paper& paper, const GenerationConfig& config,
                              Gateway& gateway, const PromptCatalog& prompts) {
    if (config.questions_per_paper < 1)
        throw Error("InvalidArgument", "questions_per_paper must be >= 1");

    ChatRequest request;
    request.model_id = config.model_id;
    request.user_prompt = prompts.render("qa_generation",
                                         {{"DOMAIN", paper.discipline},
                                          {"JSON example", prompts.text("json_example_generation")},
                                          {"PAPER", paper.full_text()}});
    request.temperature = config.temperature;
    request.max_tokens = config.max_tokens;
    request.sample_epoch = config.sample_epoch;

    ChatResponse response = gateway.complete(request);

    std::vector<ItemCandidate> candidates;
    try {
        candidates = parse_item_reply(response.texts.at(0));
    } catch (const Error& e) {
        if (e.code() == "NoStructuredPayload")
            throw Error("GenerationEmpty", "paper " + paper.paper_id + ": " + e.what());
        throw;
    }

    GenerationResult result;
    result.parsed = candidates.size();
    McqItem meta;
    meta.paper_id = paper.paper_id;
    meta.discipline = paper.discipline;
    meta.subdomain = paper.subdomain;

    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (result.items.size() >= static_cast<std::size_t>(config.questions_per_paper)) break;
        meta.item_id = paper.paper_id + "-q" + std::to_string(i + 1);
        std::string reason;
        auto item = candidate_to_item(candidates[i], meta, ItemStage::Draft, 4, &reason);
        if (!item) {
            ++result.dropped;
            result.drop_reasons.push_back(meta.item_id + ": " + reason);
            continue;
        }
        item->lineage.push_back({"generate", config.model_id, ""});
        result.items.push_back(std::move(*item));
    }

    if (result.items.empty())
        throw Error("GenerationEmpty",
                    "paper " + paper.paper_id + ": no candidate survived validation");
    return result;
}

McqItem refine(const McqItem& draft, const RefineConfig& config, Gateway& gateway,
               const PromptCatalog& prompts) {
    if (draft.stage != ItemStage::Draft)
        throw Error("InvalidArgument", "refine expects a draft item");

    const std::string prompt =
        prompts.render("refinement", {{"DOMAIN", draft.discipline},
                                      {"JSON example", prompts.text("json_example_refinement")},
                                      {"QA", item_payload_json(draft)}});
    const std::string draft_question_norm = normalize_ws(draft.question);

    std::string last_reason = "no attempt made";
    const int attempts = 1 + std::max(0, config.max_retries);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        ChatRequest request;
        request.model_id = config.model_id;
        request.user_prompt = prompt;
        request.temperature = config.temperature;
        request.max_tokens = config.max_tokens;
        // Each retry draws fresh samples instead of replaying a cached reply.
        request.sample_epoch = config.sample_epoch + static_cast<std::uint64_t>(attempt);

        std::vector<ItemCandidate> candidates;
        try {
            candidates = parse_item_reply(gateway.complete(request).texts.at(0));
        } catch (const Error& e) {
            last_reason = e.code();
            if (e.code() == "NoStructuredPayload") continue;
            throw;
        }

        std::string reason;
        auto item = candidate_to_item(candidates.front(), draft, ItemStage::Refined, 10, &reason);
        if (!item) {
            last_reason = reason;
            continue;
        }
        if (normalize_ws(item->question) == draft_question_norm) {
            last_reason = "question-not-paraphrased";
            continue;
        }
        item->lineage.push_back({"refine", config.model_id, ""});
        return *item;
    }
    throw Error("RefinementFailed", "item " + draft.item_id + " after " +
                                        std::to_string(attempts) + " attempts; last: " + last_reason);
}

}  // namespace sciq
