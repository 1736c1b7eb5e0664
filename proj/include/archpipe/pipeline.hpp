#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "archpipe/annotate.hpp"
#include "archpipe/backends.hpp"
#include "archpipe/image_filter.hpp"
#include "archpipe/scene_curation.hpp"
#include "archpipe/types.hpp"
#include "archpipe/workspace.hpp"

namespace archpipe {

struct BackendChoice {
  std::string kind = "stub";  // stub | file | http
  std::string dir;            // file adapters
  // stub knobs
  std::vector<std::string> arch_deny;
  std::vector<std::string> known_deny;
  double sky_fraction = 0.0;
  double geometry_constant = -1.0;
  unsigned segmentation_radius = 1;
};

struct AblationFlags {
  bool cf = true;   // coarse filtering
  bool ff = true;   // fine filtering
  bool lkc = true;  // knowledge gate
  bool wde = true;  // wiki-data extractor
};

// The immutable run configuration, serialized into the workspace snapshot.
struct RunConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  int llm_concurrency = 0;  // 0 = unlimited

  BackendChoice llm;
  BackendChoice geometry;
  BackendChoice sky;
  BackendChoice segmentation;

  FilterParams filter;
  AblationFlags ablation;
  AnnotateParams annotate;
  double split_ratio;
  RetryPolicy retry;
  bool dump_masks = false;  // write sky/coarse/fine masks under <ws>/masks/

  std::string arch_dict_file;     // empty = bundled starter dictionary
  std::string nonarch_dict_file;  // empty = bundled starter dictionary
  std::string aspects_file;       // empty = bundled canonical list

  RunConfig();

  void validate() const;
  FilterMode filter_mode() const;

  json to_json() const;  // canonical snapshot (includes dictionary hashes)
  static RunConfig from_json(const json& j);

  KeywordDicts load_dicts() const;
  std::vector<std::string> load_aspects() const;
};

// Builds the backend bundle; HTTP endpoints and the API key come from the
// environment (ARCHPIPE_LLM_URL, ARCHPIPE_GEOMETRY_URL, ARCHPIPE_SKY_URL,
// ARCHPIPE_SEGMENTATION_URL, ARCHPIPE_API_KEY).
Backends make_backends(const RunConfig& config, AuditLog* audit,
                       LlmClient::Sleeper sleeper = nullptr);

// Reads the scene input manifest (a JSON array of scene records, or JSONL).
std::vector<SceneRecord> load_scene_manifest(const std::filesystem::path& file);

struct StageOptions {
  bool dry_run = false;
  int workers = 1;
  // Dry-run prompt sink: empty prints to stdout, otherwise one file per
  // rendered prompt lands in this directory.
  std::string dump_prompts_dir;
};

struct StageSummary {
  std::string stage;
  int eligible = 0;
  int advanced = 0;
  int dropped = 0;

  std::string text() const;
};

StageSummary run_classify(Workspace& ws, const RunConfig& config,
                          const Backends& backends, const StageOptions& opts);
StageSummary run_filter(Workspace& ws, const RunConfig& config,
                        const Backends& backends, const StageOptions& opts);
StageSummary run_verify(Workspace& ws, const RunConfig& config,
                        const Backends& backends, const StageOptions& opts);
StageSummary run_annotate(Workspace& ws, const RunConfig& config,
                          const Backends& backends, const StageOptions& opts);

// Applies triage marks, splits by scene, computes stats, writes
// exports/{train,test}.jsonl, fused_train.jsonl, stats.json, stats.txt and
// manifest.json.
StageSummary run_assemble(Workspace& ws, const RunConfig& config,
                          const StageOptions& opts);

// Per-status counts plus a drop-reason histogram, as printable text.
std::string workspace_status(const Workspace& ws);

// Triage: sample item ids into a marks file / apply accept-reject marks.
int triage_sample(Workspace& ws, std::size_t n, std::uint64_t seed,
                  const std::filesystem::path& out_file);
int triage_apply(Workspace& ws, const std::filesystem::path& marks_file);

// Stage prerequisite table for the CLI ("filter" needs "classify", ...).
std::vector<std::string> stage_prerequisites(const std::string& stage);

}  // namespace archpipe
