#include "archpipe/assemble.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "archpipe/errors.hpp"
#include "archpipe/util.hpp"

namespace archpipe {

json DatasetStats::to_json() const {
  return json{{"total_items", total_items},
              {"unique_scenes", unique_scenes},
              {"max_images_per_scene", max_images_per_scene},
              {"avg_questions_per_scene", avg_questions_per_scene},
              {"pct_detailed", pct_detailed},
              {"pct_aspect", pct_aspect},
              {"avg_answer_words", avg_answer_words}};
}

json DatasetManifest::to_json() const {
  json split = json::object();
  for (const auto& [scene, s] : split_assignment)
    split[scene] = s == Split::train ? "train" : "test";
  json item_ids = json::array();
  for (const auto& item : items) item_ids.push_back(item.item_id);
  return json{{"config_hash", config_hash},
              {"split_seed", split_seed},
              {"split_ratio", split_ratio},
              {"split_assignment", std::move(split)},
              {"stats", stats.to_json()},
              {"items", std::move(item_ids)}};
}

DatasetManifest split_dataset(const std::vector<VQAItem>& items, double ratio,
                              std::uint64_t seed) {
  if (items.empty()) throw ConfigError("cannot split an empty item set");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw ConfigError("split ratio must be in (0,1)");

  DatasetManifest manifest;
  manifest.items = items;
  manifest.split_seed = seed;
  manifest.split_ratio = ratio;

  std::map<std::string, std::size_t> per_scene_counts;
  for (const auto& item : items) ++per_scene_counts[item.scene_id];

  std::vector<std::string> scenes;
  for (const auto& [scene, _] : per_scene_counts) scenes.push_back(scene);
  std::sort(scenes.begin(), scenes.end());
  seeded_shuffle(scenes, seed);

  if (scenes.size() == 1) {
    log_warn("single-scene corpus: everything assigned to train");
    manifest.split_assignment[scenes[0]] = Split::train;
    return manifest;
  }

  const double total = static_cast<double>(items.size());
  std::size_t train_items = 0;
  bool target_met = false;
  for (const auto& scene : scenes) {
    if (!target_met) {
      manifest.split_assignment[scene] = Split::train;
      train_items += per_scene_counts[scene];
      target_met = static_cast<double>(train_items) / total >= ratio;
    } else {
      manifest.split_assignment[scene] = Split::test;
    }
  }
  if (train_items == items.size())
    log_warn("split ratio consumed every scene; test split is empty");
  return manifest;
}

DatasetStats compute_stats(const DatasetManifest& manifest) {
  DatasetStats stats;
  stats.total_items = manifest.items.size();

  std::map<std::string, std::set<std::string>> images_by_scene;
  std::size_t detailed = 0;
  std::size_t words = 0;
  for (const auto& item : manifest.items) {
    images_by_scene[item.scene_id].insert(item.image_id);
    if (item.kind == ItemKind::detailed_description) ++detailed;
    words += word_count(item.answer);
  }
  stats.unique_scenes = images_by_scene.size();
  for (const auto& [_, images] : images_by_scene)
    stats.max_images_per_scene = std::max(stats.max_images_per_scene, images.size());
  if (stats.unique_scenes > 0)
    stats.avg_questions_per_scene =
        static_cast<double>(stats.total_items) / static_cast<double>(stats.unique_scenes);
  if (stats.total_items > 0) {
    stats.pct_detailed =
        100.0 * static_cast<double>(detailed) / static_cast<double>(stats.total_items);
    stats.pct_aspect = 100.0 *
                       static_cast<double>(stats.total_items - detailed) /
                       static_cast<double>(stats.total_items);
    stats.avg_answer_words =
        static_cast<double>(words) / static_cast<double>(stats.total_items);
  }
  return stats;
}

std::string stats_table(const DatasetStats& stats) {
  char buf[64];
  std::ostringstream out;
  out << "Total VQA items              " << stats.total_items << '\n';
  out << "Unique scenes                " << stats.unique_scenes << '\n';
  out << "Max images per scene         " << stats.max_images_per_scene << '\n';
  std::snprintf(buf, sizeof(buf), "%.1f", stats.avg_questions_per_scene);
  out << "Avg. questions per scene     " << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.0f%%", stats.pct_detailed);
  out << "Question type: description   " << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.0f%%", stats.pct_aspect);
  out << "Question type: aspect        " << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.1f", stats.avg_answer_words);
  out << "Avg. answer length (words)   " << buf << '\n';
  return out.str();
}

void export_conversations(const DatasetManifest& manifest, Split split,
                          const std::map<std::string, std::string>& image_paths,
                          std::ostream& out) {
  for (const auto& item : manifest.items) {
    auto it = manifest.split_assignment.find(item.scene_id);
    if (it == manifest.split_assignment.end() || it->second != split) continue;
    auto path_it = image_paths.find(item.image_id);
    const std::string& image =
        path_it != image_paths.end() && !path_it->second.empty()
            ? path_it->second
            : item.image_id;
    json record{{"id", item.item_id},
                {"image", image},
                {"conversations",
                 json::array({json{{"from", "human"},
                                   {"value", "<image>\n" + item.question}},
                              json{{"from", "gpt"}, {"value", item.answer}}})}};
    out << record.dump() << '\n';
  }
}

json FusedSequence::to_json() const {
  json segs = json::array();
  for (const auto& s : segments) {
    json seg{{"question", s.question}, {"answer", s.answer}, {"kind", s.kind}};
    if (!s.aspect.empty()) seg["aspect"] = s.aspect;
    segs.push_back(std::move(seg));
  }
  json spec = json::array();
  for (const auto& group : mask_spec) spec.push_back(group);
  return json{{"image_id", image_id},
              {"scene_id", scene_id},
              {"segments", std::move(segs)},
              {"mask_spec", std::move(spec)}};
}

FusedSequence pack_fused(const DatasetManifest& manifest,
                         const std::string& image_id) {
  std::vector<const VQAItem*> owned;
  for (const auto& item : manifest.items)
    if (item.image_id == image_id) owned.push_back(&item);
  if (owned.empty())
    throw ConfigError("no items for image " + image_id);

  // Description first, then aspect pairs in selection order; item ids encode
  // that order (…#d0 before …#a0, #a1, …).
  std::stable_sort(owned.begin(), owned.end(),
                   [](const VQAItem* a, const VQAItem* b) {
                     bool da = a->kind == ItemKind::detailed_description;
                     bool db = b->kind == ItemKind::detailed_description;
                     if (da != db) return da;
                     return a->item_id < b->item_id;
                   });

  FusedSequence fused;
  fused.image_id = image_id;
  fused.scene_id = owned.front()->scene_id;
  for (std::size_t k = 0; k < owned.size(); ++k) {
    const auto* item = owned[k];
    fused.segments.push_back(
        {item->question, item->answer, to_string(item->kind), item->aspect});
    // Span 0 is the image slot; each answer attends to its own question and
    // the image, never to other segments.
    fused.mask_spec.push_back({0, 1 + 2 * k, 2 + 2 * k});
  }
  return fused;
}

std::vector<std::string> image_ids_in_split(const DatasetManifest& manifest,
                                            Split split) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  for (const auto& item : manifest.items) {
    auto it = manifest.split_assignment.find(item.scene_id);
    if (it == manifest.split_assignment.end() || it->second != split) continue;
    if (seen.insert(item.image_id).second) out.push_back(item.image_id);
  }
  return out;
}

}  // namespace archpipe
