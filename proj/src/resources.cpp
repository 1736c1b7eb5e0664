#include "archpipe/resources.hpp"

#include <nlohmann/json.hpp>

#include "archpipe/errors.hpp"
#include "archpipe/util.hpp"

namespace archpipe {

std::string_view resource_text(std::string_view name) {
  for (std::size_t i = 0; i < detail::kEmbeddedResourceCount; ++i) {
    const auto& r = detail::kEmbeddedResources[i];
    if (name == r.name)
      return std::string_view(reinterpret_cast<const char*>(r.data), r.size);
  }
  throw ConfigError("missing bundled resource: " + std::string(name));
}

bool has_resource(std::string_view name) {
  for (std::size_t i = 0; i < detail::kEmbeddedResourceCount; ++i)
    if (name == detail::kEmbeddedResources[i].name) return true;
  return false;
}

std::vector<std::string> parse_term_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line =
        nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos);
    std::string t = trim(line);
    if (!t.empty() && t[0] != '#') out.push_back(std::move(t));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

const Defaults& defaults() {
  static const Defaults d = [] {
    auto j = nlohmann::json::parse(resource_text("defaults.json"));
    Defaults v{};
    v.alpha = j.at("alpha").get<double>();
    v.tau_c = j.at("tau_c").get<double>();
    v.point_count = j.at("point_count").get<unsigned>();
    v.top_k = j.at("top_k").get<unsigned>();
    v.image_cap = j.at("image_cap").get<unsigned>();
    v.detailed_words = j.at("detailed_words").get<unsigned>();
    v.aspect_words = j.at("aspect_words").get<unsigned>();
    v.split_ratio = j.at("split_ratio").get<double>();
    v.retry_attempts = j.at("retry_attempts").get<unsigned>();
    v.retry_backoff_ms = j.at("retry_backoff_ms").get<unsigned>();
    v.judge_permutations = j.at("judge_permutations").get<unsigned>();
    v.question_min_words = j.at("question_min_words").get<unsigned>();
    v.question_max_words = j.at("question_max_words").get<unsigned>();
    v.max_aspects = j.at("max_aspects").get<unsigned>();
    return v;
  }();
  return d;
}

}  // namespace archpipe
