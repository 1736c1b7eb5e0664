#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "archpipe/audit.hpp"
#include "archpipe/types.hpp"

namespace archpipe {

// Everything the pipeline knows about one scene, persisted as a single JSON
// file and rewritten atomically on every stage advance.
struct SceneState {
  SceneRecord record;
  json classify;            // {"method","verdict"}
  json filter;              // {"mode","alpha_c","cap_seed","capped","scores":[...]}
  std::optional<RefinedMetadata> metadata;
  bool metadata_all_unknown = false;
  std::vector<std::string> aspects;
  std::vector<std::string> noncanonical_aspects;
  std::vector<VQAItem> items;
  std::vector<std::string> skipped_items;
  std::size_t expected_items = 0;
  json triage;              // item_id -> "accept"|"reject"

  json to_json() const;
  static SceneState from_json(const json& j);

  std::vector<ImageRef> selected_images() const;
};

// Directory-backed run state:
//   config.json   immutable snapshot (config + seeds + dictionary hashes)
//   state.json    mutable run progress (completed stages)
//   scenes/<id>.json
//   locks/<id>.lock
//   audit.jsonl
//   exports/
class Workspace {
 public:
  // Creates the directory layout and writes the config snapshot. Fails if a
  // snapshot already exists with different content.
  static Workspace init(const std::filesystem::path& root, const json& config,
                        const std::vector<SceneRecord>& scenes);

  static Workspace load(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  const json& config() const { return config_; }
  std::string config_hash() const;

  AuditLog& audit() { return *audit_; }

  std::vector<std::string> scene_ids() const;
  SceneState read_scene(const std::string& scene_id) const;

  // Validates the status transition, persists atomically (write temp file,
  // then rename), appends an audit row. Holding the per-scene lock is the
  // caller's job via SceneLock.
  void advance_scene(const std::string& stage, SceneState state,
                     SceneStatus new_status, const std::string& drop_reason = "");

  // Rewrites a scene state without a status change (triage marks).
  void update_scene(const SceneState& state);

  bool stage_completed(const std::string& stage) const;
  void mark_stage_completed(const std::string& stage);

  std::filesystem::path exports_dir() const { return root_ / "exports"; }
  std::filesystem::path scene_file(const std::string& scene_id) const;

 private:
  Workspace() = default;

  void write_scene_file(const SceneState& state) const;

  std::filesystem::path root_;
  json config_;
  std::shared_ptr<AuditLog> audit_;
};

// Per-scene lock file holding the owner pid; stale locks from dead processes
// are reclaimed. Released on destruction.
class SceneLock {
 public:
  SceneLock(const std::filesystem::path& lock_dir, const std::string& scene_id);
  ~SceneLock();
  SceneLock(const SceneLock&) = delete;
  SceneLock& operator=(const SceneLock&) = delete;

 private:
  std::filesystem::path file_;
};

// Atomic file write used across the workspace: temp file + rename.
void atomic_write(const std::filesystem::path& file, const std::string& content);

// Test hook: when the environment variable ARCHPIPE_CRASH_AFTER_COMMITS is a
// positive integer k, the process hard-exits immediately after the k-th
// committed scene write, simulating a crash between commits.
void crash_hook_after_commit();

}  // namespace archpipe
