#include "archpipe/types.hpp"

#include <algorithm>

#include "archpipe/errors.hpp"

namespace archpipe {

std::size_t BinaryMask::popcount() const {
  std::size_t n = 0;
  for (auto b : bits) n += (b != 0);
  return n;
}

std::string to_string(SceneStatus s) {
  switch (s) {
    case SceneStatus::fresh: return "new";
    case SceneStatus::classified_arch: return "classified_arch";
    case SceneStatus::classified_nonarch: return "classified_nonarch";
    case SceneStatus::images_filtered: return "images_filtered";
    case SceneStatus::verified: return "verified";
    case SceneStatus::annotated: return "annotated";
    case SceneStatus::dropped: return "dropped";
  }
  return "unknown";
}

SceneStatus scene_status_from_string(const std::string& s) {
  if (s == "new") return SceneStatus::fresh;
  if (s == "classified_arch") return SceneStatus::classified_arch;
  if (s == "classified_nonarch") return SceneStatus::classified_nonarch;
  if (s == "images_filtered") return SceneStatus::images_filtered;
  if (s == "verified") return SceneStatus::verified;
  if (s == "annotated") return SceneStatus::annotated;
  if (s == "dropped") return SceneStatus::dropped;
  throw WorkspaceError("unknown scene status: " + s);
}

bool is_legal_transition(SceneStatus from, SceneStatus to) {
  if (from == SceneStatus::dropped || from == SceneStatus::classified_nonarch)
    return false;  // terminal states
  if (to == SceneStatus::dropped) return true;
  switch (from) {
    case SceneStatus::fresh:
      return to == SceneStatus::classified_arch ||
             to == SceneStatus::classified_nonarch;
    case SceneStatus::classified_arch:
      return to == SceneStatus::images_filtered;
    case SceneStatus::images_filtered:
      return to == SceneStatus::verified;
    case SceneStatus::verified:
      return to == SceneStatus::annotated;
    default:
      return false;
  }
}

std::string to_string(ItemKind k) {
  return k == ItemKind::detailed_description ? "detailed_description"
                                             : "aspect_qa";
}

ItemKind item_kind_from_string(const std::string& s) {
  if (s == "detailed_description") return ItemKind::detailed_description;
  if (s == "aspect_qa") return ItemKind::aspect_qa;
  throw WorkspaceError("unknown item kind: " + s);
}

void FilterParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("alpha must be in (0,1)");
  if (!(tau_c > 0.0 && tau_c < 1.0))
    throw ConfigError("tau_c must be in (0,1)");
  if (point_count < 1) throw ConfigError("point_count must be >= 1");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (image_cap < 1) throw ConfigError("image_cap must be >= 1");
}

json to_json(const ImageRef& r) {
  return json{{"scene_id", r.scene_id},
              {"image_id", r.image_id},
              {"width", r.width},
              {"height", r.height},
              {"path", r.path}};
}

ImageRef image_ref_from_json(const json& j) {
  ImageRef r;
  r.scene_id = j.at("scene_id").get<std::string>();
  r.image_id = j.at("image_id").get<std::string>();
  r.width = j.at("width").get<std::uint32_t>();
  r.height = j.at("height").get<std::uint32_t>();
  r.path = j.value("path", "");
  return r;
}

json to_json(const SceneRecord& r) {
  json images = json::array();
  for (const auto& im : r.images) images.push_back(to_json(im));
  json j{{"scene_id", r.scene_id},
         {"scene_name", r.scene_name},
         {"taxonomy", r.taxonomy},
         {"raw_wiki_text", r.raw_wiki_text},
         {"images", std::move(images)},
         {"status", to_string(r.status)}};
  if (!r.drop_reason.empty()) j["drop_reason"] = r.drop_reason;
  return j;
}

SceneRecord scene_record_from_json(const json& j) {
  SceneRecord r;
  r.scene_id = j.at("scene_id").get<std::string>();
  r.scene_name = j.at("scene_name").get<std::string>();
  if (j.contains("taxonomy"))
    r.taxonomy = j.at("taxonomy").get<std::vector<std::string>>();
  r.raw_wiki_text = j.value("raw_wiki_text", "");
  if (j.contains("images"))
    for (const auto& im : j.at("images")) {
      ImageRef ref = image_ref_from_json(im);
      if (ref.scene_id.empty()) ref.scene_id = r.scene_id;
      r.images.push_back(std::move(ref));
    }
  r.status = scene_status_from_string(j.value("status", "new"));
  r.drop_reason = j.value("drop_reason", "");
  return r;
}

json to_json(const RefinedMetadata& m) {
  return json{{"formal_name", m.formal_name},
              {"location", m.location},
              {"year", m.year},
              {"refined_description", m.refined_description}};
}

RefinedMetadata refined_metadata_from_json(const json& j) {
  RefinedMetadata m;
  m.formal_name = j.value("formal_name", "Unknown");
  m.location = j.value("location", "Unknown");
  m.year = j.value("year", "Unknown");
  m.refined_description = j.value("refined_description", "Unknown");
  return m;
}

json to_json(const VQAItem& i) {
  json j{{"item_id", i.item_id},
         {"scene_id", i.scene_id},
         {"image_id", i.image_id},
         {"kind", to_string(i.kind)}};
  if (i.kind == ItemKind::aspect_qa) j["aspect"] = i.aspect;
  j["question"] = i.question;
  j["answer"] = i.answer;
  j["template_id"] = i.template_id;
  j["seed"] = i.seed;
  j["answer_words"] = i.answer_words;
  return j;
}

VQAItem vqa_item_from_json(const json& j) {
  VQAItem i;
  i.item_id = j.at("item_id").get<std::string>();
  i.scene_id = j.at("scene_id").get<std::string>();
  i.image_id = j.at("image_id").get<std::string>();
  i.kind = item_kind_from_string(j.at("kind").get<std::string>());
  i.aspect = j.value("aspect", "");
  i.question = j.at("question").get<std::string>();
  i.answer = j.at("answer").get<std::string>();
  i.template_id = j.value("template_id", "");
  i.seed = j.value("seed", std::uint64_t{0});
  i.answer_words = j.value("answer_words", std::size_t{0});
  return i;
}

json to_json(const ImageScore& s) {
  json j{{"image", to_json(s.image)},
         {"coarse_ratio", s.coarse_ratio},
         {"passed_coarse", s.passed_coarse},
         {"selected", s.selected}};
  if (s.fine_ratio) j["fine_ratio"] = *s.fine_ratio;
  return j;
}

ImageScore image_score_from_json(const json& j) {
  ImageScore s;
  s.image = image_ref_from_json(j.at("image"));
  s.coarse_ratio = j.at("coarse_ratio").get<double>();
  s.passed_coarse = j.at("passed_coarse").get<bool>();
  s.selected = j.at("selected").get<bool>();
  if (j.contains("fine_ratio")) s.fine_ratio = j.at("fine_ratio").get<double>();
  return s;
}

}  // namespace archpipe
