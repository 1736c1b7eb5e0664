#include "archpipe/text_verify.hpp"

#include <algorithm>
#include <cctype>

#include "archpipe/prompts.hpp"
#include "archpipe/scene_curation.hpp"
#include "archpipe/util.hpp"

namespace archpipe {

namespace {

bool is_punct_byte(char c) {
  return std::ispunct(static_cast<unsigned char>(c));
}

std::string strip_one_trailing_punct(std::string s) {
  if (!s.empty() && is_punct_byte(s.back())) s.pop_back();
  return s;
}

}  // namespace

bool is_unknown_sentinel(std::string_view text) {
  std::string t = strip_one_trailing_punct(trim(text));
  return to_lower(t) == "unknown";
}

std::string fallback_formal_name(const std::string& scene_name) {
  std::string out = scene_name;
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

CountryYear parse_country_year(std::string_view reply) {
  CountryYear out;
  auto comma = reply.find(',');
  if (comma == std::string_view::npos) return out;  // unparseable
  out.parsed = true;

  std::string left = trim(reply.substr(0, comma));
  std::string right = trim(reply.substr(comma + 1));

  if (!left.empty() && !is_unknown_sentinel(left)) out.location = left;

  std::string year = strip_one_trailing_punct(right);
  bool year_ok = !year.empty() && year.size() <= 4 &&
                 std::all_of(year.begin(), year.end(), [](unsigned char c) {
                   return std::isdigit(c);
                 });
  if (year_ok)
    out.year = year;
  else if (!is_unknown_sentinel(right) && !right.empty())
    log_warn("country/year reply has unusable year token: '" + right + "'");
  return out;
}

std::string render_known_check_prompt(const SceneRecord& scene) {
  return prompt_template(prompt_ids::known_check)
      .render({{"scene_name", scene.scene_name}});
}

std::string render_extract_description_prompt(const SceneRecord& scene) {
  return prompt_template(prompt_ids::extract_description)
      .render({{"scene_name", scene.scene_name},
               {"wiki_raw_data", scene.raw_wiki_text}});
}

std::string render_extract_name_prompt(const SceneRecord& scene) {
  return prompt_template(prompt_ids::extract_name)
      .render({{"scene_name", scene.scene_name},
               {"wiki_raw_data", scene.raw_wiki_text}});
}

std::string render_extract_country_year_prompt(const SceneRecord& scene,
                                               const std::string& formal_name) {
  return prompt_template(prompt_ids::extract_country_year)
      .render({{"scene_formal_name", formal_name},
               {"wiki_raw_data", scene.raw_wiki_text}});
}

KnownCheckResult llm_known_check(const SceneRecord& scene, LlmClient& llm,
                                 std::uint64_t seed) {
  KnownCheckResult result;
  result.rendered_prompt = render_known_check_prompt(scene);
  LLMRequest req;
  req.prompt = result.rendered_prompt;
  req.seed = seed;
  for (int ask = 0; ask < 2; ++ask) {
    auto resp = llm.complete(req, "verify", scene.scene_id);
    switch (normalize_yesno(resp.text)) {
      case YesNo::Yes:
        result.known = true;
        return result;
      case YesNo::No:
        result.known = false;
        return result;
      case YesNo::Unparseable:
        req.seed = seed + 1;
        break;
    }
  }
  result.parseable = false;
  return result;
}

std::string extract_refined_description(const SceneRecord& scene, LlmClient& llm,
                                        std::uint64_t seed) {
  if (trim(scene.raw_wiki_text).empty()) return kUnknownSentinel;
  LLMRequest req;
  req.prompt = render_extract_description_prompt(scene);
  req.seed = seed;
  auto resp = llm.complete(req, "verify", scene.scene_id);
  std::string text = trim(resp.text);
  if (is_unknown_sentinel(text)) return kUnknownSentinel;
  return text;
}

std::string extract_formal_name(const SceneRecord& scene, LlmClient& llm,
                                std::uint64_t seed) {
  LLMRequest req;
  req.prompt = render_extract_name_prompt(scene);
  req.seed = seed;
  auto resp = llm.complete(req, "verify", scene.scene_id);
  std::string text = trim(resp.text);
  if (text.empty() || is_unknown_sentinel(text))
    return fallback_formal_name(scene.scene_name);
  return text;
}

std::pair<std::string, std::string> extract_country_year(
    const SceneRecord& scene, const std::string& formal_name, LlmClient& llm,
    std::uint64_t seed) {
  LLMRequest req;
  req.prompt = render_extract_country_year_prompt(scene, formal_name);
  req.seed = seed;
  auto resp = llm.complete(req, "verify", scene.scene_id);
  CountryYear cy = parse_country_year(resp.text);
  if (!cy.parsed)
    log_warn("scene " + scene.scene_id +
             ": country/year reply unparseable, both fields Unknown");
  return {cy.location, cy.year};
}

RefinedMetadata run_wiki_extractor(const SceneRecord& scene, LlmClient& llm,
                                   std::uint64_t seed) {
  RefinedMetadata md;
  md.refined_description = extract_refined_description(scene, llm, seed);
  md.formal_name = extract_formal_name(scene, llm, seed + 1);
  auto [location, year] = extract_country_year(scene, md.formal_name, llm, seed + 2);
  md.location = location;
  md.year = year;
  return md;
}

}  // namespace archpipe
