#pragma once

#include <array>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ideoscale/hash.hpp"
#include "ideoscale/types.hpp"

namespace ideoscale {

enum class PromptKind { SingleJson, BatchList, FewShotBatch, NliHypothesis };

inline std::string_view to_string(PromptKind k) noexcept {
  switch (k) {
    case PromptKind::SingleJson: return "single_json";
    case PromptKind::BatchList: return "batch_list";
    case PromptKind::FewShotBatch: return "few_shot_batch";
    case PromptKind::NliHypothesis: return "nli_hypothesis";
  }
  return "?";
}

inline PromptKind parse_prompt_kind(std::string_view s) {
  if (s == "single_json") return PromptKind::SingleJson;
  if (s == "batch_list") return PromptKind::BatchList;
  if (s == "few_shot_batch") return PromptKind::FewShotBatch;
  if (s == "nli_hypothesis") return PromptKind::NliHypothesis;
  throw Error("prompt: unknown kind '" + std::string(s) + "'");
}

/// Placeholders: `{text}` (single_json), `{texts}` (batch kinds),
/// `{examples}` (few_shot_batch), `{}` (nli_hypothesis, the label slot).
struct PromptTemplate {
  std::string id;
  PromptKind kind = PromptKind::SingleJson;
  std::string body;
  std::vector<std::pair<std::string, IdeologyClass>> examples;
  std::string version = "1";

  /// Throws when the body lacks its kind's placeholders or the few-shot
  /// exemplars are not exactly one per class.
  void validate() const {
    const auto need = [&](std::string_view ph) {
      if (body.find(ph) == std::string::npos)
        throw Error("prompt " + id + ": body lacks placeholder " + std::string(ph));
    };
    switch (kind) {
      case PromptKind::SingleJson: need("{text}"); break;
      case PromptKind::BatchList: need("{texts}"); break;
      case PromptKind::FewShotBatch: {
        need("{texts}");
        need("{examples}");
        std::array<int, 3> per_class{};
        for (const auto& [t, c] : examples) ++per_class[index_of(c)];
        if (examples.size() != 3 || per_class != std::array<int, 3>{1, 1, 1})
          throw Error("prompt " + id + ": few-shot prompts need exactly one example per class");
        break;
      }
      case PromptKind::NliHypothesis: need("{}"); break;
    }
    if (kind != PromptKind::FewShotBatch && !examples.empty())
      throw Error("prompt " + id + ": only few_shot_batch prompts carry examples");
  }

  /// Content hash over kind, body and exemplars.
  std::string hash() const {
    std::string material = std::string(to_string(kind)) + '\0' + body;
    for (const auto& [t, c] : examples) material += '\0' + t + '\0' + std::string(to_string(c));
    return short_hash(material);
  }

  bool batched() const noexcept { return kind == PromptKind::BatchList || kind == PromptKind::FewShotBatch; }
};

namespace detail {
inline void replace_once(std::string& s, std::string_view placeholder, std::string_view value) {
  const auto pos = s.find(placeholder);
  if (pos != std::string::npos) s.replace(pos, placeholder.size(), value);
}
}  // namespace detail

/// Fills the template. Batch kinds number texts 1..N in input order, one
/// per line.
inline std::string render_prompt(const PromptTemplate& tpl, const std::vector<std::string>& texts) {
  tpl.validate();
  std::string out = tpl.body;
  switch (tpl.kind) {
    case PromptKind::SingleJson:
      if (texts.size() != 1) throw Error("prompt " + tpl.id + ": single_json renders exactly one text");
      detail::replace_once(out, "{text}", texts.front());
      return out;
    case PromptKind::NliHypothesis:
      if (!texts.empty()) throw Error("prompt " + tpl.id + ": hypothesis templates take no texts");
      return out;
    case PromptKind::BatchList:
    case PromptKind::FewShotBatch: {
      if (texts.empty()) throw Error("prompt " + tpl.id + ": batch prompt needs at least one text");
      if (tpl.kind == PromptKind::FewShotBatch) {
        std::string ex;
        for (std::size_t i = 0; i < tpl.examples.size(); ++i) {
          if (i) ex += ' ';
          ex += std::to_string(i + 1) + ". \"" + tpl.examples[i].first + "\" {text_number: " + std::to_string(i + 1) +
                ", label: " + std::string(display_label(tpl.examples[i].second)) + "}";
        }
        detail::replace_once(out, "{examples}", ex);
      }
      std::string list;
      for (std::size_t i = 0; i < texts.size(); ++i) list += "\n" + std::to_string(i + 1) + ". " + texts[i];
      detail::replace_once(out, "{texts}", list);
      return out;
    }
  }
  return out;
}

/// The instruction bodies used for the generative and zero-shot models,
/// verbatim. Zero-shot hypothesis templates carry the `{}` label slot.
namespace prompts {

inline constexpr std::string_view kSingleJsonInstruction =
    "You will be provided with a text from a party manifesto. Where does this text stand on the left to right wing "
    "scale, in terms of economic policy? Provide your response as a label of ideology, either right-wing, left-wing, "
    "or neutral. To label the text, start by first identifying the parts of the text that are about economic policy. "
    "Then, determine the label based on these parts of text. You will only respond with a JSON object with the "
    "label. Do not provide explanations.";

inline constexpr std::string_view kBatchInstruction =
    "You will be provided with multiple texts from party manifestos. Where does each text stand on the left to right "
    "wing scale, in terms of economic policy? Provide your response as a list of labels of ideology, either "
    "right-wing, left-wing, or neutral. For each text, provide the label in the format {text_number: N, label: "
    "your_label_here}. Do not provide explanations or any other text.";

inline constexpr std::string_view kBeliefDefinitions =
    "Right-wing beliefs emphasize free-market capitalism, low taxes, free trade, deregulation, privatization, "
    "individualism, promoting the private sector, and limited government intervention. Left-wing beliefs emphasize "
    "government intervention, wealth redistribution, protectionism, progressive taxation, expanded welfare "
    "programs, and government regulation. Neutral refers to apolitical or factual content. ";

inline constexpr std::string_view kHypothesis = "The political economic ideology expressed in this statement is {}.";
inline constexpr std::string_view kHypothesisImplicit =
    "The political economic ideology expressed (explicitly or implicitly) in this statement is {}.";

}  // namespace prompts

/// Shipped templates keyed by id.
inline std::map<std::string, PromptTemplate> builtin_prompts() {
  using namespace prompts;
  std::map<std::string, PromptTemplate> out;
  const auto add = [&](PromptTemplate t) { out.emplace(t.id, std::move(t)); };
  add({"single_json", PromptKind::SingleJson, "{text}\n\n" + std::string(kSingleJsonInstruction), {}, "1"});
  add({"batch_list", PromptKind::BatchList, std::string(kBatchInstruction) + " Here are the texts:{texts}", {}, "1"});
  add({"few_shot_batch", PromptKind::FewShotBatch,
       std::string(kBatchInstruction) + " Here are some examples: {examples} Here are the texts:{texts}",
       {{"We need to cut taxes and reduce regulations for businesses to stimulate economic growth.",
         IdeologyClass::Right},
        {"Investing in public and affordable healthcare is crucial for our citizens.", IdeologyClass::Left},
        {"In Britain today, living standards are higher than ever before in our history.", IdeologyClass::Neutral}},
       "1"});
  add({"nli_prompt1", PromptKind::NliHypothesis, std::string(kBeliefDefinitions) + std::string(kHypothesis), {}, "1"});
  add({"nli_prompt2", PromptKind::NliHypothesis, std::string(kBeliefDefinitions) + std::string(kHypothesisImplicit),
       {}, "1"});
  add({"nli_prompt3", PromptKind::NliHypothesis, std::string(kHypothesis), {}, "1"});
  add({"nli_prompt4", PromptKind::NliHypothesis, std::string(kHypothesisImplicit), {}, "1"});
  return out;
}

/// Template definition as it appears in experiment configs:
/// {"id", "kind", "body", "examples": [{"text", "label"}], "version"}.
inline PromptTemplate prompt_from_json(const nlohmann::json& j) {
  PromptTemplate t;
  t.id = j.at("id").get<std::string>();
  t.kind = parse_prompt_kind(j.at("kind").get<std::string>());
  t.body = j.at("body").get<std::string>();
  t.version = j.value("version", std::string("1"));
  if (j.contains("examples")) {
    for (const auto& e : j["examples"]) {
      auto cls = parse_class(e.at("label").get<std::string>());
      if (!cls) throw Error("prompt " + t.id + ": unknown example label");
      t.examples.emplace_back(e.at("text").get<std::string>(), *cls);
    }
  }
  t.validate();
  return t;
}

}  // namespace ideoscale
