#pragma once

#include <filesystem>
#include <set>
#include <string>

#include "archpipe/backends.hpp"
#include "archpipe/types.hpp"

namespace archpipe {

// Architectural / non-architectural keyword dictionaries. Entries are
// lowercase trimmed terms; the two sets must be disjoint.
struct KeywordDicts {
  std::set<std::string> arch_terms;
  std::set<std::string> nonarch_terms;

  void validate() const;  // throws ConfigError

  static KeywordDicts from_files(const std::filesystem::path& arch_file,
                                 const std::filesystem::path& nonarch_file);
  static KeywordDicts bundled();
};

enum class KeywordVerdict { Arch, NonArch, Undecided };
enum class YesNo { Yes, No, Unparseable };

// Whole-token, case-insensitive dictionary match over scene name and
// taxonomy. Architectural terms take precedence when both dictionaries hit.
KeywordVerdict classify_by_keywords(const SceneRecord& scene,
                                    const KeywordDicts& dicts);

// Leading-token yes/no parser: case-insensitive, tolerant of surrounding
// whitespace and punctuation, accepts only a leading "yes"/"no" token.
YesNo normalize_yesno(std::string_view text);

struct LlmClassifyResult {
  YesNo verdict = YesNo::Unparseable;
  std::string rendered_prompt;
};

// Renders the classification query and asks the text backend; one re-ask on
// an unparseable reply.
LlmClassifyResult classify_by_llm(const SceneRecord& scene, LlmClient& llm,
                                  std::uint64_t seed);

// {scene_taxonomy} binding: taxonomy entries joined with ", ".
std::string taxonomy_text(const SceneRecord& scene);

std::string render_classify_prompt(const SceneRecord& scene);

}  // namespace archpipe
