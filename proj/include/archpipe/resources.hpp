#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace archpipe {

namespace detail {
struct EmbeddedResource {
  const char* name;
  const unsigned char* data;
  std::size_t size;
};
extern const EmbeddedResource kEmbeddedResources[];
extern const std::size_t kEmbeddedResourceCount;
}  // namespace detail

// Bundled resource lookup by path relative to resources/ (e.g.
// "prompts/known_check.txt"). Throws ConfigError when absent.
std::string_view resource_text(std::string_view name);
bool has_resource(std::string_view name);

// Non-comment, non-empty lines of a line-oriented resource or file.
// Lines starting with '#' are comments.
std::vector<std::string> parse_term_lines(std::string_view text);

// Defaults bundled with the binary (resources/defaults.json).
struct Defaults {
  double alpha;
  double tau_c;
  unsigned point_count;
  unsigned top_k;
  unsigned image_cap;
  unsigned detailed_words;
  unsigned aspect_words;
  double split_ratio;
  unsigned retry_attempts;
  unsigned retry_backoff_ms;
  unsigned judge_permutations;
  unsigned question_min_words;
  unsigned question_max_words;
  unsigned max_aspects;
};

const Defaults& defaults();

}  // namespace archpipe
