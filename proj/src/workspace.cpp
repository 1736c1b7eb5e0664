#include "archpipe/workspace.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>

#include <signal.h>
#include <unistd.h>

#include "archpipe/errors.hpp"
#include "archpipe/util.hpp"

namespace archpipe {

namespace fs = std::filesystem;

json SceneState::to_json() const {
  json j{{"record", archpipe::to_json(record)}};
  if (!classify.is_null()) j["classify"] = classify;
  if (!filter.is_null()) j["filter"] = filter;
  if (metadata) {
    j["metadata"] = archpipe::to_json(*metadata);
    j["metadata_all_unknown"] = metadata_all_unknown;
  }
  if (!aspects.empty()) j["aspects"] = aspects;
  if (!noncanonical_aspects.empty())
    j["noncanonical_aspects"] = noncanonical_aspects;
  if (!items.empty()) {
    json arr = json::array();
    for (const auto& item : items) arr.push_back(archpipe::to_json(item));
    j["items"] = std::move(arr);
    j["expected_items"] = expected_items;
  }
  if (!skipped_items.empty()) j["skipped_items"] = skipped_items;
  if (!triage.is_null() && !triage.empty()) j["triage"] = triage;
  return j;
}

SceneState SceneState::from_json(const json& j) {
  SceneState s;
  s.record = scene_record_from_json(j.at("record"));
  s.classify = j.value("classify", json());
  s.filter = j.value("filter", json());
  if (j.contains("metadata")) {
    s.metadata = refined_metadata_from_json(j.at("metadata"));
    s.metadata_all_unknown = j.value("metadata_all_unknown", false);
  }
  if (j.contains("aspects"))
    s.aspects = j.at("aspects").get<std::vector<std::string>>();
  if (j.contains("noncanonical_aspects"))
    s.noncanonical_aspects =
        j.at("noncanonical_aspects").get<std::vector<std::string>>();
  if (j.contains("items"))
    for (const auto& item : j.at("items"))
      s.items.push_back(vqa_item_from_json(item));
  s.expected_items = j.value("expected_items", std::size_t{0});
  if (j.contains("skipped_items"))
    s.skipped_items = j.at("skipped_items").get<std::vector<std::string>>();
  s.triage = j.value("triage", json::object());
  return s;
}

std::vector<ImageRef> SceneState::selected_images() const {
  std::vector<ImageRef> out;
  if (filter.is_null() || !filter.contains("scores")) return out;
  for (const auto& row : filter.at("scores")) {
    ImageScore score = image_score_from_json(row);
    if (score.selected) out.push_back(score.image);
  }
  return out;
}

void atomic_write(const fs::path& file, const std::string& content) {
  fs::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw WorkspaceError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw WorkspaceError("short write to " + tmp.string());
  }
  fs::rename(tmp, file);
}

void crash_hook_after_commit() {
  static std::atomic<long> commits{0};
  const char* env = std::getenv("ARCHPIPE_CRASH_AFTER_COMMITS");
  if (!env) return;
  long limit = std::strtol(env, nullptr, 10);
  if (limit <= 0) return;
  if (++commits >= limit) _exit(86);
}

Workspace Workspace::init(const fs::path& root, const json& config,
                          const std::vector<SceneRecord>& scenes) {
  fs::create_directories(root / "scenes");
  fs::create_directories(root / "locks");
  fs::create_directories(root / "exports");

  std::string snapshot = config.dump(2);
  fs::path config_file = root / "config.json";
  if (fs::exists(config_file)) {
    std::ifstream in(config_file, std::ios::binary);
    std::string existing((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
    if (existing != snapshot)
      throw WorkspaceError(
          "workspace already initialized with a different config snapshot");
  } else {
    atomic_write(config_file, snapshot);
  }
  if (!fs::exists(root / "state.json"))
    atomic_write(root / "state.json", json{{"completed_stages", json::array()}}.dump(2));

  Workspace ws;
  ws.root_ = root;
  ws.config_ = config;
  ws.audit_ = std::make_shared<AuditLog>(root / "audit.jsonl");

  for (const auto& scene : scenes) {
    fs::path file = ws.scene_file(scene.scene_id);
    if (fs::exists(file)) continue;  // re-init keeps committed state
    SceneState state;
    state.record = scene;
    ws.write_scene_file(state);
  }
  return ws;
}

Workspace Workspace::load(const fs::path& root) {
  fs::path config_file = root / "config.json";
  if (!fs::exists(config_file))
    throw WorkspaceError("no workspace at " + root.string() +
                         " (missing config.json)");
  std::ifstream in(config_file, std::ios::binary);
  Workspace ws;
  ws.root_ = root;
  ws.config_ = json::parse(in);
  ws.audit_ = std::make_shared<AuditLog>(root / "audit.jsonl");
  return ws;
}

std::string Workspace::config_hash() const {
  return to_hex16(fnv1a64(config_.dump()));
}

fs::path Workspace::scene_file(const std::string& scene_id) const {
  return root_ / "scenes" / (scene_id + ".json");
}

std::vector<std::string> Workspace::scene_ids() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_ / "scenes")) {
    if (entry.path().extension() != ".json") continue;
    ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

SceneState Workspace::read_scene(const std::string& scene_id) const {
  std::ifstream in(scene_file(scene_id), std::ios::binary);
  if (!in) throw WorkspaceError("missing scene state for " + scene_id);
  return SceneState::from_json(json::parse(in));
}

void Workspace::write_scene_file(const SceneState& state) const {
  atomic_write(scene_file(state.record.scene_id), state.to_json().dump(2));
}

void Workspace::advance_scene(const std::string& stage, SceneState state,
                              SceneStatus new_status,
                              const std::string& drop_reason) {
  SceneStatus old_status = read_scene(state.record.scene_id).record.status;
  if (!is_legal_transition(old_status, new_status))
    throw WorkspaceError("illegal transition " + to_string(old_status) + " -> " +
                         to_string(new_status) + " for scene " +
                         state.record.scene_id);
  state.record.status = new_status;
  if (new_status == SceneStatus::dropped) {
    if (drop_reason.empty())
      throw WorkspaceError("dropped scenes need a machine-readable reason");
    state.record.drop_reason = drop_reason;
  }
  write_scene_file(state);
  audit_->transition(stage, state.record.scene_id, to_string(old_status),
                     to_string(new_status), drop_reason);
  crash_hook_after_commit();
}

void Workspace::update_scene(const SceneState& state) {
  write_scene_file(state);
}

bool Workspace::stage_completed(const std::string& stage) const {
  std::ifstream in(root_ / "state.json", std::ios::binary);
  if (!in) return false;
  json state = json::parse(in);
  for (const auto& s : state.value("completed_stages", json::array()))
    if (s.get<std::string>() == stage) return true;
  return false;
}

void Workspace::mark_stage_completed(const std::string& stage) {
  json state{{"completed_stages", json::array()}};
  {
    std::ifstream in(root_ / "state.json", std::ios::binary);
    if (in) state = json::parse(in);
  }
  auto& arr = state["completed_stages"];
  for (const auto& s : arr)
    if (s.get<std::string>() == stage) return;
  arr.push_back(stage);
  atomic_write(root_ / "state.json", state.dump(2));
}

SceneLock::SceneLock(const fs::path& lock_dir, const std::string& scene_id)
    : file_(lock_dir / (scene_id + ".lock")) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::ifstream existing(file_);
    if (existing) {
      long pid = 0;
      existing >> pid;
      existing.close();
      bool alive = pid > 0 && (::kill(static_cast<pid_t>(pid), 0) == 0);
      if (alive)
        throw WorkspaceError("scene " + scene_id + " is locked by pid " +
                             std::to_string(pid));
      fs::remove(file_);  // stale lock from a dead process
    }
    std::ofstream out(file_, std::ios::binary | std::ios::trunc);
    if (out) {
      out << ::getpid();
      return;
    }
  }
  throw WorkspaceError("cannot create lock file " + file_.string());
}

SceneLock::~SceneLock() {
  std::error_code ec;
  fs::remove(file_, ec);
}

}  // namespace archpipe
