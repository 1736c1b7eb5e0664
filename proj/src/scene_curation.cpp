#include "archpipe/scene_curation.hpp"

#include <cctype>
#include <fstream>

#include "archpipe/errors.hpp"
#include "archpipe/prompts.hpp"
#include "archpipe/resources.hpp"
#include "archpipe/util.hpp"

namespace archpipe {

void KeywordDicts::validate() const {
  for (const auto& t : arch_terms) {
    if (t != trim(t) || t != to_lower(t))
      throw ConfigError("dictionary term not lowercase/trimmed: '" + t + "'");
    if (nonarch_terms.count(t))
      throw ConfigError("dictionaries overlap on term '" + t + "'");
  }
  for (const auto& t : nonarch_terms)
    if (t != trim(t) || t != to_lower(t))
      throw ConfigError("dictionary term not lowercase/trimmed: '" + t + "'");
}

namespace {

std::set<std::string> read_term_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read dictionary file " + file.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  std::set<std::string> out;
  for (auto& line : parse_term_lines(text)) out.insert(to_lower(line));
  return out;
}

}  // namespace

KeywordDicts KeywordDicts::from_files(const std::filesystem::path& arch_file,
                                      const std::filesystem::path& nonarch_file) {
  KeywordDicts d;
  d.arch_terms = read_term_file(arch_file);
  d.nonarch_terms = read_term_file(nonarch_file);
  d.validate();
  return d;
}

KeywordDicts KeywordDicts::bundled() {
  KeywordDicts d;
  for (auto& t : parse_term_lines(resource_text("dictionaries/arch_terms.txt")))
    d.arch_terms.insert(to_lower(t));
  for (auto& t : parse_term_lines(resource_text("dictionaries/nonarch_terms.txt")))
    d.nonarch_terms.insert(to_lower(t));
  d.validate();
  return d;
}

KeywordVerdict classify_by_keywords(const SceneRecord& scene,
                                    const KeywordDicts& dicts) {
  std::vector<std::string> tokens = alnum_tokens(scene.scene_name);
  for (const auto& entry : scene.taxonomy) {
    auto more = alnum_tokens(entry);
    tokens.insert(tokens.end(), more.begin(), more.end());
  }
  // D_A checked first: an architectural hit wins even when a
  // non-architectural term also matches.
  for (const auto& tok : tokens)
    if (dicts.arch_terms.count(tok)) return KeywordVerdict::Arch;
  for (const auto& tok : tokens)
    if (dicts.nonarch_terms.count(tok)) return KeywordVerdict::NonArch;
  return KeywordVerdict::Undecided;
}

YesNo normalize_yesno(std::string_view text) {
  // Skip leading whitespace and punctuation (quotes etc.), then take the
  // first alphabetic run. Anything else up front is unparseable.
  std::size_t i = 0;
  while (i < text.size() &&
         (std::isspace(static_cast<unsigned char>(text[i])) ||
          std::ispunct(static_cast<unsigned char>(text[i]))))
    ++i;
  std::size_t j = i;
  while (j < text.size() && std::isalpha(static_cast<unsigned char>(text[j])))
    ++j;
  std::string token = to_lower(text.substr(i, j - i));
  if (token == "yes") return YesNo::Yes;
  if (token == "no") return YesNo::No;
  return YesNo::Unparseable;
}

std::string taxonomy_text(const SceneRecord& scene) {
  std::string out;
  for (std::size_t i = 0; i < scene.taxonomy.size(); ++i) {
    if (i) out += ", ";
    out += scene.taxonomy[i];
  }
  return out;
}

std::string render_classify_prompt(const SceneRecord& scene) {
  return prompt_template(prompt_ids::scene_classify)
      .render({{"scene_name", scene.scene_name},
               {"scene_taxonomy", taxonomy_text(scene)}});
}

LlmClassifyResult classify_by_llm(const SceneRecord& scene, LlmClient& llm,
                                  std::uint64_t seed) {
  LlmClassifyResult result;
  result.rendered_prompt = render_classify_prompt(scene);
  LLMRequest req;
  req.prompt = result.rendered_prompt;
  req.seed = seed;
  for (int ask = 0; ask < 2; ++ask) {
    auto resp = llm.complete(req, "classify", scene.scene_id);
    result.verdict = normalize_yesno(resp.text);
    if (result.verdict != YesNo::Unparseable) return result;
    req.seed = seed + 1;  // re-ask once with a shifted seed
  }
  return result;
}

}  // namespace archpipe
