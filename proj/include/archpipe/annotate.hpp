#pragma once

#include <string>
#include <vector>

#include "archpipe/backends.hpp"
#include "archpipe/types.hpp"

namespace archpipe {

struct AnnotateParams {
  unsigned detailed_words = 150;
  unsigned aspect_words = 100;
  unsigned question_min_words = 5;
  unsigned question_max_words = 30;
  unsigned max_aspects = 5;
  std::vector<std::string> aspects;   // canonical list
  std::vector<std::string> openers;   // accepted question openers
};

// Uniform pool choice under seed: index = seed mod pool size.
const std::string& pick_description_question(std::uint64_t seed);

// Parses the first bracketed, comma-separated list in a reply; items are
// trimmed and lowercased, order preserved, truncated to max_items. Returns
// an empty list when no non-empty bracketed list is found.
std::vector<std::string> parse_aspect_list(std::string_view reply,
                                           std::size_t max_items);

// Validation predicates for generated text.
bool description_opening_ok(std::string_view answer);
bool aspect_opening_ok(std::string_view answer, const std::string& aspect);
bool violates_name_ban(std::string_view answer, const std::string& formal_name);
bool question_ok(std::string_view question, const AnnotateParams& params);

struct AnnotateSceneResult {
  std::vector<VQAItem> items;
  std::vector<std::string> aspects;              // as selected, ordered
  std::vector<std::string> noncanonical_aspects; // subset flagged off-list
  std::vector<std::string> skipped;              // "(kind[:aspect]) reason"
  std::size_t expected_items = 0;
};

// Full annotation for one scene: one detailed description plus one QA pair
// per selected aspect, each replicated to every selected image. Exactly one
// re-ask per failed validation, then the item is skipped and logged.
AnnotateSceneResult annotate_scene(const SceneRecord& scene,
                                   const RefinedMetadata& metadata,
                                   const std::vector<ImageRef>& selected_images,
                                   const AnnotateParams& params, LlmClient& llm,
                                   std::uint64_t seed);

// Prompt renderers (also used by the golden-file suite).
std::string render_description_prompt(const RefinedMetadata& md,
                                      const std::string& question,
                                      unsigned detailed_words);
std::string render_aspect_select_prompt(const RefinedMetadata& md);
std::string render_aspect_question_prompt(const RefinedMetadata& md,
                                          const std::string& aspect);
std::string render_aspect_answer_prompt(const RefinedMetadata& md,
                                        const std::string& aspect,
                                        unsigned aspect_words);

}  // namespace archpipe
