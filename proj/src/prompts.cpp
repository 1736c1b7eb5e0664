#include "archpipe/prompts.hpp"

#include <cctype>
#include <mutex>
#include <unordered_map>

#include "archpipe/errors.hpp"
#include "archpipe/resources.hpp"

namespace archpipe {

namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// All placeholder names used across bundled templates; the hygiene audit
// looks for these and only these.
const std::set<std::string>& known_placeholder_names() {
  static const std::set<std::string> names = {
      "scene_name",        "scene_taxonomy",
      "wiki_raw_data",     "scene_formal_name",
      "scene_location",    "scene_year",
      "scene_refined_description", "detailed_description_question",
      "detailed_words",    "aspect",
      "aspect_words",      "system_prompt",
      "question",          "reference",
      "answer_1",          "answer_2",
      "candidate_count",   "candidate_blocks",
  };
  return names;
}

}  // namespace

std::set<std::string> scan_placeholders(std::string_view body) {
  std::set<std::string> out;
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      std::size_t j = i + 1;
      while (j < body.size() && is_ident_char(body[j])) ++j;
      if (j > i + 1 && j < body.size() && body[j] == '}') {
        out.insert(std::string(body.substr(i + 1, j - i - 1)));
        i = j + 1;
        continue;
      }
    }
    ++i;
  }
  return out;
}

std::string PromptTemplate::render(
    const std::map<std::string, std::string>& bindings) const {
  for (const auto& name : required_placeholders)
    if (!bindings.count(name))
      throw ConfigError("template '" + template_id +
                        "': unbound placeholder {" + name + "}");

  std::string out;
  out.reserve(body.size() + 256);
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      std::size_t j = i + 1;
      while (j < body.size() && is_ident_char(body[j])) ++j;
      if (j > i + 1 && j < body.size() && body[j] == '}') {
        std::string name(body.substr(i + 1, j - i - 1));
        auto it = bindings.find(name);
        if (it == bindings.end())
          throw ConfigError("template '" + template_id +
                            "': unknown placeholder {" + name + "}");
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out.push_back(body[i]);
    ++i;
  }
  return out;
}

const PromptTemplate& prompt_template(std::string_view template_id) {
  static std::mutex mutex;
  static std::unordered_map<std::string, PromptTemplate> cache;
  std::lock_guard<std::mutex> lock(mutex);
  std::string key(template_id);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  std::string body(resource_text("prompts/" + key + ".txt"));
  PromptTemplate t;
  t.template_id = key;
  t.body = std::move(body);
  t.required_placeholders = scan_placeholders(t.body);
  return cache.emplace(std::move(key), std::move(t)).first->second;
}

bool has_unresolved_placeholder(std::string_view text) {
  for (const auto& name : known_placeholder_names()) {
    std::string needle = "{" + name + "}";
    if (text.find(needle) != std::string_view::npos) return true;
  }
  return false;
}

const std::vector<std::string>& description_question_pool() {
  static const std::vector<std::string> pool =
      parse_term_lines(resource_text("question_pool.txt"));
  return pool;
}

const std::vector<std::string>& canonical_aspects() {
  static const std::vector<std::string> aspects =
      parse_term_lines(resource_text("aspects.txt"));
  return aspects;
}

const std::vector<std::string>& question_openers() {
  static const std::vector<std::string> openers =
      parse_term_lines(resource_text("question_openers.txt"));
  return openers;
}

}  // namespace archpipe
