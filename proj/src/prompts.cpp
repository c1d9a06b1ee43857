#include "sciq/prompts.hpp"

#include "sciq/util.hpp"

namespace sciq {

namespace {

const char* kQaGeneration = R"PROMPT(You are an expert research scientist in [[DOMAIN]]. Your task is to extract or create three challenging and difficult, self-contained question-answer pairs from the provided academic paper. The QAs will be used as exam questions for PhD students and must be clear, extremely challenging, and context-independent, i.e., understandable on its own without referring back to the original paper.

Each QA pair must include:

1. Question:
- A clear, difficult, and standalone question.
- The question must include sufficient background information or context so that one can fully understand and attempt it without referring to the original paper.
- Define any abbreviations, notation, or domain-specific terminology used.
- DO NOT use phrases like "according to the paper" or "the proposed method."
- The question should be complex enough to require deep understanding of the subject.
- It should engage **advanced reasoning**, such as: Conceptual analysis, Theoretical or mathematical derivations, Methodological design, Causal reasoning or hypothesis testing, etc.

2. Options:
- Provide four answer choices.
- Only one option should be correct.
- The three incorrect options should be plausible but clearly wrong upon careful reasoning, ideally derived by subtly altering the logic or assumptions behind the correct answer.

3. Answer:
The correct option letter.

4. Rationale:
- A detailed explanation of why the correct answer is correct and why each incorrect option is wrong.
- DO NOT reference the original paper in any part of the rationale.
- If calculations are required, include the full step-by-step process.

Important:
- Questions must be self-contained, including any necessary context or definitions.
- Do not reference the original paper in any part of the question, options, or rationale.
- Aim for PhD-level difficulty, testing understanding of key technical ideas.
- Ensure that only one option is unambiguously correct.

Format your QA pairs in the following JSON format, here are examples:
[[JSON example]]

Here is the paper:

[[PAPER]]
)PROMPT";

const char* kRefinement = R"PROMPT(You are an expert research scientist in [[DOMAIN]].
Your task is to refine each provided multiple-choice question to increase its difficulty and test deeper reasoning appropriate for PhD-level understanding. Each item includes a question, answer options, and a solution. Use the provided answers and solution for reference, they may be incorrect.

Refinement Goals:
1. Expand Options with Subtle Variations
Rewrite the answer options to include 10 choices labeled A-J.
All options should seem plausible to someone with partial knowledge, but only one should be fully correct. Introduce subtle numerical or conceptual variations among options.
2. Remove Surface-Level Hints
Eliminate obvious formulas, definitions, or axioms from the question.
Assume the solver must recall or derive them independently. You may include these concepts in the solution rationale, but not in the question.
3. Increase Reasoning Depth
Replace direct or few-step problems with multi-step (>3) or causal reasoning.
Use reasoning chains (e.g., X leads to Y, which leads to Z, which explains W) or require intermediate inferences without giving all variables.
4. Rephrase to Introduce Diversity
Use varied question formats: causal, hypothetical, comparative, inferential, conditional, etc.
Maintain clarity and scientific rigor while diversifying expression.

Important:
- Each refined question should challenge deep understanding of core technical concepts, appropriate for advanced graduate-level assessment.
- The refined question must remain solvable using information provided or generally assumed background knowledge in the domain. Avoid ambiguity or underspecified problems.
- Ensure that only one option is unambiguously correct.
- If the original question is poorly written, ambiguous, or lacks depth, you may create a new question based on the same underlying concept or topic reflected in the provided QA.

Please only output the refined QA in the following JSON format:
[[JSON example]]

Here is the QA to refine:

[[QA]]
)PROMPT";

const char* kAnswer = R"PROMPT(Answer the following multiple-choice question. Reason step by step if needed, then give your final answer as a single option letter on the last line in the form:

Answer: <letter>

Question:
[[QUESTION]]

Options:
[[OPTIONS]]
)PROMPT";

const char* kReasoningType = R"PROMPT(Classify the following multiple-choice question into exactly one of these scientific reasoning types:

1. Mathematical calculations and derivations: Questions that require performing numerical computations or symbolic derivations.
2. Model design, method analysis, or conceptual understanding: Questions that involve understanding scientific models, evaluating methodologies, or grasping abstract concepts.
3. Causal reasoning and mechanism inference: Questions that ask about the underlying causes, mechanisms, or consequences of a phenomenon.

Reply with the single digit 1, 2, or 3 and nothing else.

Question:
[[QUESTION]]
)PROMPT";

const char* kValidity = R"PROMPT(Assess the validity of the following multiple-choice question. Classify it as either "good and clear" (well-posed, unambiguous, and answerable from the information given plus standard domain knowledge) or "unanswerable" (ill-formed, ambiguous, or missing necessary information).

Reply with exactly one of: good and clear / unanswerable

Question:
[[QUESTION]]

Options:
[[OPTIONS]]
)PROMPT";

const char* kDifficulty = R"PROMPT(Rate the difficulty of the following multiple-choice question on this five-level scale:

5 - Very Challenging: Expert-level (graduate/PhD) reasoning required.
4 - Difficult: Field-specific undergraduate-level understanding.
3 - Moderate: General background or non-specialist undergraduate-level knowledge.
2 - Easy: General science or high-school-level knowledge.
1 - Simple: Common-sense or minimal prior knowledge suffices.

Reply with a single integer from 1 to 5 and nothing else.

Question:
[[QUESTION]]

Options:
[[OPTIONS]]
)PROMPT";

const char* kJsonExampleGeneration = R"PROMPT([
  {
    "question": "A first-order reaction has a rate constant of 0.0231 min^-1 at 300 K. Approximately how long does it take for the reactant concentration to fall to one quarter of its initial value?",
    "options": {
      "A": "30 minutes",
      "B": "60 minutes",
      "C": "90 minutes",
      "D": "120 minutes"
    },
    "answer": "B",
    "rationale": "For a first-order reaction the half-life is t_1/2 = ln(2)/k = 0.693/0.0231, roughly 30 minutes. Reaching one quarter of the initial concentration takes two half-lives, about 60 minutes. Option A is a single half-life, C is three half-lives, and D would require a rate constant half as large."
  },
  {
    "question": "Two identical satellites orbit a planet in circular orbits of radii r and 4r. What is the ratio of the orbital speed of the inner satellite to that of the outer satellite?",
    "options": {
      "A": "1:2",
      "B": "2:1",
      "C": "4:1",
      "D": "1:4"
    },
    "answer": "B",
    "rationale": "For a circular orbit, v = sqrt(GM/r), so speed scales as 1/sqrt(r). The inner satellite at radius r moves sqrt(4) = 2 times faster than the satellite at 4r. Options A and D invert the dependence; option C assumes v scales as 1/r."
  }
])PROMPT";

const char* kJsonExampleRefinement = R"PROMPT({
  "question": "An enzyme-catalyzed reaction is studied under conditions where substrate concentration greatly exceeds the Michaelis constant. A competitive inhibitor is then added at a concentration equal to its dissociation constant. Relative to the uninhibited saturated rate, what initial rate is observed immediately after inhibitor addition, assuming substrate remains saturating?",
  "options": {
    "A": "Essentially unchanged, close to the original maximal rate",
    "B": "Reduced to one half of the maximal rate",
    "C": "Reduced to one third of the maximal rate",
    "D": "Reduced to one quarter of the maximal rate",
    "E": "Reduced to two thirds of the maximal rate",
    "F": "Zero, because the inhibitor blocks all active sites",
    "G": "Doubled, because the inhibitor stabilizes the transition state",
    "H": "Reduced in proportion to the square of the inhibitor concentration",
    "I": "Increased by half, due to allosteric activation",
    "J": "Oscillating between the maximal and half-maximal rate"
  },
  "answer": "A",
  "rationale": "A competitive inhibitor raises the apparent Michaelis constant but leaves the maximal rate unchanged; at saturating substrate the substrate outcompetes the inhibitor, so the observed rate stays near maximal. Options B-E describe partial inhibition levels that would require non-saturating substrate, F describes irreversible complete inhibition, G and I invert the effect, H assumes an incorrect rate law, and J has no mechanistic basis."
})PROMPT";

}  // namespace

PromptCatalog PromptCatalog::builtin() {
    PromptCatalog catalog;
    catalog.templates_ = {
        {"qa_generation", kQaGeneration},
        {"refinement", kRefinement},
        {"answer", kAnswer},
        {"reasoning_type", kReasoningType},
        {"validity", kValidity},
        {"difficulty", kDifficulty},
        {"json_example_generation", kJsonExampleGeneration},
        {"json_example_refinement", kJsonExampleRefinement},
    };
    return catalog;
}

PromptCatalog PromptCatalog::load_dir(const std::filesystem::path& dir) {
    PromptCatalog catalog = builtin();
    if (!std::filesystem::is_directory(dir))
        throw Error("FileNotFound", "prompt directory not found: " + dir.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        catalog.templates_[entry.path().stem().string()] = read_file(entry.path());
    }
    return catalog;
}

bool PromptCatalog::has(std::string_view name) const {
    return templates_.count(std::string(name)) > 0;
}

const std::string& PromptCatalog::text(std::string_view name) const {
    auto it = templates_.find(std::string(name));
    if (it == templates_.end()) throw Error("UnknownTemplate", std::string(name));
    return it->second;
}

std::string PromptCatalog::render(std::string_view name,
                                  const std::map<std::string, std::string>& substitutions) const {
    const std::string& tmpl = text(name);
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        std::size_t open = tmpl.find("[[", pos);
        if (open == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        std::size_t close = tmpl.find("]]", open + 2);
        if (close == std::string::npos) {
            out.append(tmpl, pos, std::string::npos);
            break;
        }
        out.append(tmpl, pos, open - pos);
        std::string key = tmpl.substr(open + 2, close - open - 2);
        auto it = substitutions.find(key);
        if (it != substitutions.end()) {
            out.append(it->second);
        } else {
            out.append(tmpl, open, close + 2 - open);  // keep unknown slot verbatim
        }
        pos = close + 2;
    }
    return out;
}

std::vector<std::string> PromptCatalog::names() const {
    std::vector<std::string> out;
    out.reserve(templates_.size());
    for (const auto& [name, _] : templates_) out.push_back(name);
    return out;
}

}  // namespace sciq
