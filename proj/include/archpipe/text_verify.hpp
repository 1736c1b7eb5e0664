#pragma once

#include <string>
#include <utility>

#include "archpipe/backends.hpp"
#include "archpipe/types.hpp"

namespace archpipe {

// True when the reply is the "Unknown" sentinel: case-insensitive,
// surrounding whitespace and one trailing punctuation mark tolerated.
bool is_unknown_sentinel(std::string_view text);

// Fallback canonical name when extraction yields Unknown: the raw scene
// name with underscores replaced by spaces.
std::string fallback_formal_name(const std::string& scene_name);

// "Country, Year" parser: split on the first comma, trim both sides. Either
// side matching the sentinel becomes Unknown; the year must be a 1-4 digit
// token (one trailing punctuation mark tolerated) or it becomes Unknown.
// Replies with no comma yield (Unknown, Unknown) and `parsed` = false.
struct CountryYear {
  std::string location = "Unknown";
  std::string year = "Unknown";
  bool parsed = false;
};
CountryYear parse_country_year(std::string_view reply);

struct KnownCheckResult {
  bool known = false;
  bool parseable = true;
  std::string rendered_prompt;
};

// The knowledge gate; false means the scene drops with reason "llm_unknown".
KnownCheckResult llm_known_check(const SceneRecord& scene, LlmClient& llm,
                                 std::uint64_t seed);

std::string render_known_check_prompt(const SceneRecord& scene);
std::string render_extract_description_prompt(const SceneRecord& scene);
std::string render_extract_name_prompt(const SceneRecord& scene);
std::string render_extract_country_year_prompt(const SceneRecord& scene,
                                               const std::string& formal_name);

// Grounded extractors. Empty raw_wiki_text short-circuits the description
// extractor to Unknown with no backend call.
std::string extract_refined_description(const SceneRecord& scene, LlmClient& llm,
                                         std::uint64_t seed);
std::string extract_formal_name(const SceneRecord& scene, LlmClient& llm,
                                std::uint64_t seed);
std::pair<std::string, std::string> extract_country_year(
    const SceneRecord& scene, const std::string& formal_name, LlmClient& llm,
    std::uint64_t seed);

// Runs the three extractors in order (description, name, country/year).
RefinedMetadata run_wiki_extractor(const SceneRecord& scene, LlmClient& llm,
                                   std::uint64_t seed);

}  // namespace archpipe
