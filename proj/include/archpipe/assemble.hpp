#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "archpipe/types.hpp"

namespace archpipe {

struct DatasetStats {
  std::size_t total_items = 0;
  std::size_t unique_scenes = 0;
  std::size_t max_images_per_scene = 0;
  double avg_questions_per_scene = 0.0;
  double pct_detailed = 0.0;
  double pct_aspect = 0.0;
  double avg_answer_words = 0.0;

  json to_json() const;
};

enum class Split { train, test };

struct DatasetManifest {
  std::vector<VQAItem> items;                  // accepted items only
  std::map<std::string, Split> split_assignment;  // by scene
  DatasetStats stats;
  std::string config_hash;
  std::uint64_t split_seed = 0;
  double split_ratio = 0.0;

  json to_json() const;
};

// Scene-level split: scenes shuffled under seed, assigned to train until the
// train item share first meets `ratio`; the rest become test. A single-scene
// corpus goes entirely to train with a warning.
DatasetManifest split_dataset(const std::vector<VQAItem>& items, double ratio,
                              std::uint64_t seed);

DatasetStats compute_stats(const DatasetManifest& manifest);

// Renders a small human-readable table of the stats.
std::string stats_table(const DatasetStats& stats);

// One conversation record per item, one JSON object per line, stable key
// order: {id, image, conversations:[{from:"human", value:"<image>\n"+Q},
// {from:"gpt", value:A}]}. `image_paths` maps image_id -> exported path.
void export_conversations(const DatasetManifest& manifest, Split split,
                          const std::map<std::string, std::string>& image_paths,
                          std::ostream& out);

struct FusedSegment {
  std::string question;
  std::string answer;
  std::string kind;
  std::string aspect;
};

// All annotations of one image packed into a single sequence. Span index 0
// is the shared image slot; segment k owns spans 1+2k (question) and 2+2k
// (answer). mask_spec lists, per segment, the span group its answer attends
// to: {image slot, own question, own answer}.
struct FusedSequence {
  std::string image_id;
  std::string scene_id;
  std::vector<FusedSegment> segments;
  std::vector<std::vector<std::size_t>> mask_spec;

  json to_json() const;
};

// Deterministic packing order: the detailed description first, then aspect
// QA pairs in selection order (item_id order within the image).
FusedSequence pack_fused(const DatasetManifest& manifest,
                         const std::string& image_id);

std::vector<std::string> image_ids_in_split(const DatasetManifest& manifest,
                                            Split split);

}  // namespace archpipe
