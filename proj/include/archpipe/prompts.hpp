#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace archpipe {

// A text template with {name} placeholders. Rendering binds every required
// placeholder exactly; unresolved known placeholders are an error, and
// substituted values are never re-scanned.
struct PromptTemplate {
  std::string template_id;
  std::string body;
  std::set<std::string> required_placeholders;

  std::string render(const std::map<std::string, std::string>& bindings) const;
};

// Placeholder names found in a template body ({identifier} occurrences).
std::set<std::string> scan_placeholders(std::string_view body);

// Bundled template registry, loaded byte-exact from resources/prompts/.
namespace prompt_ids {
inline constexpr const char* scene_classify = "scene_classify";
inline constexpr const char* known_check = "known_check";
inline constexpr const char* extract_description = "extract_description";
inline constexpr const char* extract_name = "extract_name";
inline constexpr const char* extract_country_year = "extract_country_year";
inline constexpr const char* description_answer = "description_answer";
inline constexpr const char* aspect_select = "aspect_select";
inline constexpr const char* aspect_question = "aspect_question";
inline constexpr const char* aspect_answer = "aspect_answer";
inline constexpr const char* judge_vanilla_system = "judge_vanilla_system";
inline constexpr const char* judge_architecture_system = "judge_architecture_system";
inline constexpr const char* judge_pair_user = "judge_pair_user";
inline constexpr const char* judge_best_of_user = "judge_best_of_user";
}  // namespace prompt_ids

const PromptTemplate& prompt_template(std::string_view template_id);

// True if any '{' + known placeholder name + '}' survives in `text`.
// Used as the placeholder-hygiene audit over emitted artifacts.
bool has_unresolved_placeholder(std::string_view text);

// The 16-entry detailed-description question pool.
const std::vector<std::string>& description_question_pool();

// The canonical aspect list (bundled; overridable via file in RunConfig).
const std::vector<std::string>& canonical_aspects();

const std::vector<std::string>& question_openers();

}  // namespace archpipe
