#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace archpipe {

using json = nlohmann::ordered_json;

struct ImageRef {
  std::string scene_id;
  std::string image_id;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::string path;  // path or URI of the source image

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
  bool valid() const { return width >= 1 && height >= 1; }
};

// Row-major per-pixel confidence grid, values in [0, 1].
struct ConfidenceMap {
  ImageRef image;
  std::vector<float> values;

  float at(std::uint32_t x, std::uint32_t y) const {
    return values[static_cast<std::size_t>(y) * image.width + x];
  }
  bool dims_match() const { return values.size() == image.pixel_count(); }
};

enum class MaskKind { sky, coarse, fine };

// Row-major 0/1 grid aligned with its image.
struct BinaryMask {
  ImageRef image;
  std::vector<std::uint8_t> bits;
  MaskKind kind = MaskKind::coarse;

  std::uint8_t at(std::uint32_t x, std::uint32_t y) const {
    return bits[static_cast<std::size_t>(y) * image.width + x];
  }
  bool dims_match() const { return bits.size() == image.pixel_count(); }
  std::size_t popcount() const;
};

struct Point {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  bool operator==(const Point&) const = default;
};

enum class SceneStatus {
  fresh,  // "new" in serialized form
  classified_arch,
  classified_nonarch,
  images_filtered,
  verified,
  annotated,
  dropped,
};

std::string to_string(SceneStatus s);
SceneStatus scene_status_from_string(const std::string& s);

// A status transition is legal when it advances one step along the pipeline
// or drops out. classified_nonarch is terminal.
bool is_legal_transition(SceneStatus from, SceneStatus to);

struct SceneRecord {
  std::string scene_id;
  std::string scene_name;
  std::vector<std::string> taxonomy;
  std::string raw_wiki_text;
  std::vector<ImageRef> images;
  SceneStatus status = SceneStatus::fresh;
  std::string drop_reason;  // non-empty iff status == dropped
};

// Distilled metadata fields; "Unknown" is the sentinel for absent knowledge.
struct RefinedMetadata {
  std::string formal_name = "Unknown";
  std::string location = "Unknown";
  std::string year = "Unknown";
  std::string refined_description = "Unknown";

  bool all_unknown_except_name() const {
    return location == "Unknown" && year == "Unknown" &&
           refined_description == "Unknown";
  }
};

inline constexpr const char* kUnknownSentinel = "Unknown";

enum class ItemKind { detailed_description, aspect_qa };

std::string to_string(ItemKind k);
ItemKind item_kind_from_string(const std::string& s);

struct VQAItem {
  std::string item_id;
  std::string scene_id;
  std::string image_id;
  ItemKind kind = ItemKind::detailed_description;
  std::string aspect;  // set iff kind == aspect_qa
  std::string question;
  std::string answer;
  std::string template_id;
  std::uint64_t seed = 0;
  std::size_t answer_words = 0;
};

struct FilterParams {
  double alpha = 0.8;       // quantile level for the global threshold
  double tau_c = 0.3;       // coarse survival threshold on r^c
  std::uint32_t point_count = 10;
  std::uint32_t top_k = 8;
  std::uint32_t image_cap = 200;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

struct ImageScore {
  ImageRef image;
  double coarse_ratio = 0.0;
  std::optional<double> fine_ratio;
  bool passed_coarse = false;
  bool selected = false;
};

json to_json(const ImageRef& r);
ImageRef image_ref_from_json(const json& j);
json to_json(const SceneRecord& r);
SceneRecord scene_record_from_json(const json& j);
json to_json(const RefinedMetadata& m);
RefinedMetadata refined_metadata_from_json(const json& j);
json to_json(const VQAItem& i);
VQAItem vqa_item_from_json(const json& j);
json to_json(const ImageScore& s);
ImageScore image_score_from_json(const json& j);

}  // namespace archpipe
