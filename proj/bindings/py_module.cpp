// Python bindings for the core operations: the reward kernel, answer
// extraction, agreement classification, permutation augmentation, dedup and
// metrics. Aimed at trainers and notebooks; the batch pipeline stays in the
// CLI.

#include "sciq/eval.hpp"
#include "sciq/filters.hpp"
#include "sciq/item.hpp"
#include "sciq/reward.hpp"
#include "sciq/store.hpp"
#include "sciq/voting.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <set>
#include <string>

namespace py = pybind11;
using namespace sciq;

namespace {

char label_from_str(const std::string& s) {
    if (s.size() != 1) throw Error("InvalidArgument", "label must be a single letter: " + s);
    return static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
}

std::optional<char> opt_label_from(const std::optional<std::string>& s) {
    if (!s) return std::nullopt;
    return label_from_str(*s);
}

std::string label_to_str(char c) { return std::string(1, c); }

std::set<char> label_set_from(const std::vector<std::string>& labels) {
    std::set<char> out;
    for (const auto& s : labels) out.insert(label_from_str(s));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "core operations for science MCQ synthesis, voting, rewards and evaluation";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    py::enum_<ItemStage>(m, "ItemStage")
        .value("DRAFT", ItemStage::Draft)
        .value("REFINED", ItemStage::Refined);

    py::enum_<AgreementClass>(m, "AgreementClass")
        .value("ALL_ALIGNED", AgreementClass::AllAligned)
        .value("MAJORITY_ALIGNED", AgreementClass::MajorityAligned)
        .value("MAJORITY_DIVERGENT", AgreementClass::MajorityDivergent)
        .value("ALL_DIVERGENT", AgreementClass::AllDivergent)
        .value("DISCARDED", AgreementClass::Discarded);

    py::class_<McqItem>(m, "McqItem")
        .def(py::init([](const std::string& item_id, const std::string& question,
                         const std::vector<std::string>& options, const std::string& correct) {
                 McqItem item;
                 item.item_id = item_id;
                 item.question = question;
                 item.options = options;
                 item.correct_label = label_from_str(correct);
                 item.stage = options.size() == 10 ? ItemStage::Refined : ItemStage::Draft;
                 return item;
             }),
             py::arg("item_id"), py::arg("question"), py::arg("options"),
             py::arg("correct_label"))
        .def_readwrite("item_id", &McqItem::item_id)
        .def_readwrite("paper_id", &McqItem::paper_id)
        .def_readwrite("discipline", &McqItem::discipline)
        .def_readwrite("subdomain", &McqItem::subdomain)
        .def_readwrite("question", &McqItem::question)
        .def_readwrite("options", &McqItem::options)
        .def_readwrite("rationale", &McqItem::rationale)
        .def_readwrite("stage", &McqItem::stage)
        .def_property(
            "correct_label",
            [](const McqItem& item) { return label_to_str(item.correct_label); },
            [](McqItem& item, const std::string& s) { item.correct_label = label_from_str(s); })
        .def_property(
            "agreement_class",
            [](const McqItem& item) { return item.agreement_class; },
            [](McqItem& item, std::optional<AgreementClass> cls) { item.agreement_class = cls; })
        .def_property_readonly(
            "correct_text", [](const McqItem& item) { return item.correct_text(); })
        .def("to_json", [](const McqItem& item) { return store::item_to_json(item).dump(); })
        .def_static("from_json", [](const std::string& text) {
            return store::item_from_json(nlohmann::json::parse(text));
        })
        .def("__repr__", [](const McqItem& item) {
            return "<McqItem " + item.item_id + " options=" + std::to_string(item.options.size()) +
                   " correct=" + label_to_str(item.correct_label) + ">";
        });

    m.def(
        "validate_item",
        [](const McqItem& item) { return validate_item(item); },
        py::arg("item"),
        "Reason code for an invariant violation, or None when the item is valid.");

    // --- reward kernel ---
    m.def(
        "reward_syn",
        [](std::optional<std::string> predicted, const std::string& y_syn) {
            return reward_syn(opt_label_from(predicted), label_from_str(y_syn));
        },
        py::arg("predicted_label"), py::arg("y_syn"),
        "1.0 iff the prediction matches the synthetic label, else 0.0.");

    m.def(
        "reward_episode",
        [](const McqItem& item, const std::string& response_text) {
            auto episode = reward_episode(item, response_text);
            return py::make_tuple(episode.reward, episode.extracted);
        },
        py::arg("item"), py::arg("response_text"),
        "Extract the final option from the response, then apply the reward. "
        "Returns (reward, extracted).");

    m.def(
        "shuffle_options",
        [](const McqItem& item, std::uint64_t seed, std::uint64_t epoch) {
            auto [shuffled, record] = shuffle_options(item, seed, epoch);
            py::dict rec;
            rec["item_id"] = record.item_id;
            rec["epoch"] = record.epoch;
            py::dict permutation;
            for (const auto& [from, to] : record.permutation)
                permutation[py::str(label_to_str(from))] = label_to_str(to);
            rec["permutation"] = permutation;
            rec["new_correct_label"] = label_to_str(record.new_correct_label);
            return py::make_tuple(shuffled, rec);
        },
        py::arg("item"), py::arg("seed"), py::arg("epoch"),
        "Deterministic per-epoch option shuffle. Returns (item, shuffle_record).");

    // --- extraction and evaluation ---
    m.def(
        "extract_answer",
        [](const std::string& response, const std::vector<std::string>& allowed) {
            auto got = extract_answer(response, label_set_from(allowed));
            return got ? std::optional<std::string>(label_to_str(*got)) : std::nullopt;
        },
        py::arg("response_text"), py::arg("allowed_labels"),
        "Final selected option letter, or None when no valid answer is present.");

    m.def("augment_permutations", &augment_permutations, py::arg("item"),
          "The 4 position variants of a 4-option item (correct answer at A, B, C, D).");

    m.def(
        "score_records",
        [](const std::vector<std::pair<bool, bool>>& extracted_correct) {
            std::vector<EvalRecord> records;
            for (const auto& [extracted, correct] : extracted_correct) {
                EvalRecord r;
                if (extracted) r.extracted_label = 'A';
                r.correct = correct;
                records.push_back(std::move(r));
            }
            auto metrics = score(records);
            py::dict out;
            out["accuracy"] = metrics.accuracy;
            out["extraction_rate"] = metrics.extraction_rate;
            out["n"] = metrics.n;
            return out;
        },
        py::arg("extracted_correct"),
        "Metrics over (extracted, correct) pairs; unextracted counts as incorrect.");

    m.def(
        "run_stats",
        [](const std::vector<double>& per_run) {
            auto stats = run_stats(std::span<const double>(per_run));
            return py::make_tuple(stats.mean, stats.sd);
        },
        py::arg("per_run_values"), "Mean and population standard deviation over runs.");

    // --- voting ---
    m.def(
        "classify_agreement",
        [](const std::vector<std::optional<std::string>>& choices, const std::string& y_syn) {
            std::vector<Vote> votes;
            for (const auto& choice : choices) {
                Vote vote;
                vote.choice = opt_label_from(choice);
                votes.push_back(std::move(vote));
            }
            return classify_agreement(votes, label_from_str(y_syn));
        },
        py::arg("choices"), py::arg("y_syn"),
        "Agreement class for a list of vote choices (None = unanswerable).");

    // --- filters ---
    m.def(
        "ngram_set",
        [](const std::string& text, std::size_t n) {
            auto grams = ngram_set(text, n);
            return std::set<std::string>(grams.begin(), grams.end());
        },
        py::arg("text"), py::arg("n") = 13,
        "All contiguous n-token windows after the fixed dedup tokenization.");

    m.def(
        "dedup_against",
        [](const std::vector<McqItem>& items, const std::vector<std::string>& references,
           std::size_t n) {
            auto result = dedup_against(items, references, n);
            return py::make_tuple(result.kept, result.dropped, result.overlap_rate);
        },
        py::arg("items"), py::arg("reference_questions"), py::arg("n") = 13,
        "Drop items sharing an n-gram with the references. Returns (kept, dropped, rate).");

    m.def(
        "heuristic_filter",
        [](const McqItem& item) {
            auto decision = heuristic_filter(item, PatternSet::builtin());
            return py::make_tuple(decision.keep, decision.reason);
        },
        py::arg("item"),
        "Apply the shipped keyword patterns. Returns (keep, reason_code).");

    m.attr("UNANSWERABLE_OPTION_TEXT") = kUnanswerableOptionText;
    m.attr("__version__") = "0.1.0";
}
