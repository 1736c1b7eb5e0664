#include "archpipe/annotate.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>

#include "archpipe/prompts.hpp"
#include "archpipe/util.hpp"

namespace archpipe {

const std::string& pick_description_question(std::uint64_t seed) {
  const auto& pool = description_question_pool();
  return pool[seed % pool.size()];
}

std::vector<std::string> parse_aspect_list(std::string_view reply,
                                           std::size_t max_items) {
  auto open = reply.find('[');
  if (open == std::string_view::npos) return {};
  auto close = reply.find(']', open + 1);
  if (close == std::string_view::npos) return {};
  std::string_view inner = reply.substr(open + 1, close - open - 1);

  std::vector<std::string> items;
  std::size_t pos = 0;
  while (pos <= inner.size()) {
    auto comma = inner.find(',', pos);
    std::string_view piece = comma == std::string_view::npos
                                 ? inner.substr(pos)
                                 : inner.substr(pos, comma - pos);
    std::string item = to_lower(trim(piece));
    if (!item.empty()) items.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (items.size() > max_items) items.resize(max_items);
  return items;
}

bool description_opening_ok(std::string_view answer) {
  return starts_with(answer, "In this image, I can see") ||
         starts_with(answer, "This image shows");
}

bool aspect_opening_ok(std::string_view answer, const std::string& aspect) {
  return starts_with(answer, "In this image, the " + aspect) ||
         starts_with(answer, "This image shows that the " + aspect);
}

bool violates_name_ban(std::string_view answer, const std::string& formal_name) {
  if (formal_name.empty() || formal_name == kUnknownSentinel) return false;
  return contains_ci(answer, formal_name);
}

bool question_ok(std::string_view question, const AnnotateParams& params) {
  std::size_t words = word_count(question);
  if (words < params.question_min_words || words > params.question_max_words)
    return false;
  auto tokens = alnum_tokens(question);
  if (tokens.empty()) return false;
  return std::find(params.openers.begin(), params.openers.end(), tokens[0]) !=
         params.openers.end();
}

namespace {

std::map<std::string, std::string> metadata_bindings(const RefinedMetadata& md) {
  return {{"scene_formal_name", md.formal_name},
          {"scene_location", md.location},
          {"scene_year", md.year},
          {"scene_refined_description", md.refined_description}};
}

}  // namespace

std::string render_description_prompt(const RefinedMetadata& md,
                                      const std::string& question,
                                      unsigned detailed_words) {
  auto bindings = metadata_bindings(md);
  bindings["detailed_description_question"] = question;
  bindings["detailed_words"] = std::to_string(detailed_words);
  return prompt_template(prompt_ids::description_answer).render(bindings);
}

std::string render_aspect_select_prompt(const RefinedMetadata& md) {
  return prompt_template(prompt_ids::aspect_select).render(metadata_bindings(md));
}

std::string render_aspect_question_prompt(const RefinedMetadata& md,
                                          const std::string& aspect) {
  auto bindings = metadata_bindings(md);
  bindings["aspect"] = aspect;
  return prompt_template(prompt_ids::aspect_question).render(bindings);
}

std::string render_aspect_answer_prompt(const RefinedMetadata& md,
                                        const std::string& aspect,
                                        unsigned aspect_words) {
  return prompt_template(prompt_ids::aspect_answer)
      .render({{"aspect", aspect},
               {"scene_formal_name", md.formal_name},
               {"aspect_words", std::to_string(aspect_words)}});
}

namespace {

// One ask plus one re-ask; returns the first reply passing `valid`, else
// nullopt.
std::optional<std::string> ask_validated(
    LlmClient& llm, const std::string& prompt, const std::string& scene_id,
    std::uint64_t seed, const std::function<bool(const std::string&)>& valid) {
  LLMRequest req;
  req.prompt = prompt;
  req.seed = seed;
  for (int ask = 0; ask < 2; ++ask) {
    auto resp = llm.complete(req, "annotate", scene_id);
    std::string text = trim(resp.text);
    if (valid(text)) return text;
    req.seed = seed + 1;
  }
  return std::nullopt;
}

}  // namespace

AnnotateSceneResult annotate_scene(const SceneRecord& scene,
                                   const RefinedMetadata& metadata,
                                   const std::vector<ImageRef>& selected_images,
                                   const AnnotateParams& params, LlmClient& llm,
                                   std::uint64_t seed) {
  AnnotateSceneResult result;

  // Detailed description: one scene-level answer replicated to each image.
  const std::string& question = pick_description_question(seed);
  std::string desc_prompt =
      render_description_prompt(metadata, question, params.detailed_words);
  auto description = ask_validated(
      llm, desc_prompt, scene.scene_id, seed + 1, [&](const std::string& t) {
        return description_opening_ok(t) &&
               !violates_name_ban(t, metadata.formal_name) &&
               !has_unresolved_placeholder(t);
      });
  if (description) {
    for (const auto& image : selected_images) {
      VQAItem item;
      item.item_id = scene.scene_id + "#" + image.image_id + "#d0";
      item.scene_id = scene.scene_id;
      item.image_id = image.image_id;
      item.kind = ItemKind::detailed_description;
      item.question = question;
      item.answer = *description;
      item.template_id = prompt_ids::description_answer;
      item.seed = seed + 1;
      item.answer_words = word_count(item.answer);
      result.items.push_back(std::move(item));
    }
  } else {
    result.skipped.push_back("description: validation_failed");
  }

  // Aspect selection with one re-ask, then canonical fallback.
  std::string select_prompt = render_aspect_select_prompt(metadata);
  std::vector<std::string> aspects;
  {
    LLMRequest req;
    req.prompt = select_prompt;
    req.seed = seed + 3;
    for (int ask = 0; ask < 2 && aspects.empty(); ++ask) {
      auto resp = llm.complete(req, "annotate", scene.scene_id);
      aspects = parse_aspect_list(resp.text, params.max_aspects);
      req.seed = seed + 4;
    }
    if (aspects.empty()) {
      std::size_t n = std::min<std::size_t>(3, params.aspects.size());
      aspects.assign(params.aspects.begin(), params.aspects.begin() + n);
      result.skipped.push_back("aspect_selection: fallback_to_canonical");
    }
  }
  result.aspects = aspects;
  for (const auto& a : aspects)
    if (std::find(params.aspects.begin(), params.aspects.end(), a) ==
        params.aspects.end())
      result.noncanonical_aspects.push_back(a);

  // One QA pair per aspect, replicated per image.
  for (std::size_t k = 0; k < aspects.size(); ++k) {
    const std::string& aspect = aspects[k];
    std::uint64_t qa_seed = seed + 10 + 4 * k;

    auto q = ask_validated(llm, render_aspect_question_prompt(metadata, aspect),
                           scene.scene_id, qa_seed, [&](const std::string& t) {
                             return question_ok(t, params) &&
                                    !violates_name_ban(t, metadata.formal_name) &&
                                    !has_unresolved_placeholder(t);
                           });
    if (!q) {
      result.skipped.push_back("aspect:" + aspect + ": question_validation_failed");
      continue;
    }

    auto a = ask_validated(
        llm, render_aspect_answer_prompt(metadata, aspect, params.aspect_words),
        scene.scene_id, qa_seed + 2, [&](const std::string& t) {
          return aspect_opening_ok(t, aspect) &&
                 !violates_name_ban(t, metadata.formal_name) &&
                 !has_unresolved_placeholder(t);
        });
    if (!a) {
      result.skipped.push_back("aspect:" + aspect + ": answer_validation_failed");
      continue;
    }

    for (const auto& image : selected_images) {
      VQAItem item;
      item.item_id =
          scene.scene_id + "#" + image.image_id + "#a" + std::to_string(k);
      item.scene_id = scene.scene_id;
      item.image_id = image.image_id;
      item.kind = ItemKind::aspect_qa;
      item.aspect = aspect;
      item.question = *q;
      item.answer = *a;
      item.template_id = prompt_ids::aspect_answer;
      item.seed = qa_seed;
      item.answer_words = word_count(item.answer);
      result.items.push_back(std::move(item));
    }
  }

  result.expected_items = selected_images.size() * (1 + aspects.size());
  return result;
}

}  // namespace archpipe
