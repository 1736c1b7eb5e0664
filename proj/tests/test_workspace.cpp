#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "archpipe/errors.hpp"
#include "archpipe/workspace.hpp"

using namespace archpipe;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::current_path() / ("t_ws_" + name);
  fs::remove_all(dir);
  return dir;
}

SceneRecord make_scene(const std::string& id) {
  SceneRecord s;
  s.scene_id = id;
  s.scene_name = id;
  s.images.push_back({id, id + "_img0", 4, 4, ""});
  return s;
}

json tiny_config() { return json{{"seed", 1}, {"note", "test"}}; }

}  // namespace

TEST_SUITE("workspace") {

TEST_CASE("init creates layout and scene files") {
  auto root = temp_dir("init");
  auto ws = Workspace::init(root, tiny_config(), {make_scene("a"), make_scene("b")});
  CHECK(fs::exists(root / "config.json"));
  CHECK(fs::exists(root / "scenes" / "a.json"));
  auto ids = ws.scene_ids();
  REQUIRE(ids.size() == 2);
  CHECK(ids[0] == "a");
  CHECK(ws.read_scene("a").record.status == SceneStatus::fresh);
}

TEST_CASE("re-init with a different config is rejected") {
  auto root = temp_dir("reinit");
  Workspace::init(root, tiny_config(), {make_scene("a")});
  CHECK_THROWS_AS(Workspace::init(root, json{{"seed", 2}}, {}), WorkspaceError);
  // Same config is fine and keeps committed state.
  auto ws = Workspace::init(root, tiny_config(), {make_scene("a")});
  CHECK(ws.scene_ids().size() == 1);
}

TEST_CASE("legal transition chain appends ordered audit rows") {
  auto root = temp_dir("chain");
  auto ws = Workspace::init(root, tiny_config(), {make_scene("a")});

  auto advance = [&](SceneStatus to) {
    auto st = ws.read_scene("a");
    ws.advance_scene("stage", st, to);
  };
  advance(SceneStatus::classified_arch);
  advance(SceneStatus::images_filtered);
  advance(SceneStatus::verified);
  advance(SceneStatus::annotated);

  std::ifstream in(root / "audit.jsonl");
  std::string line;
  std::vector<json> rows;
  while (std::getline(in, line)) rows.push_back(json::parse(line));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].at("from") == "new");
  CHECK(rows[0].at("to") == "classified_arch");
  CHECK(rows[3].at("to") == "annotated");
}

TEST_CASE("illegal jumps are rejected") {
  auto root = temp_dir("illegal");
  auto ws = Workspace::init(root, tiny_config(), {make_scene("a")});
  auto st = ws.read_scene("a");
  ws.advance_scene("stage", st, SceneStatus::classified_arch);
  st = ws.read_scene("a");
  CHECK_THROWS_AS(ws.advance_scene("stage", st, SceneStatus::annotated),
                  WorkspaceError);
  // Terminal states stay terminal.
  auto root2 = temp_dir("terminal");
  auto ws2 = Workspace::init(root2, tiny_config(), {make_scene("b")});
  auto st2 = ws2.read_scene("b");
  ws2.advance_scene("stage", st2, SceneStatus::classified_nonarch);
  st2 = ws2.read_scene("b");
  CHECK_THROWS_AS(ws2.advance_scene("stage", st2, SceneStatus::images_filtered),
                  WorkspaceError);
}

TEST_CASE("drops require a reason and record it") {
  auto root = temp_dir("drop");
  auto ws = Workspace::init(root, tiny_config(), {make_scene("a")});
  auto st = ws.read_scene("a");
  CHECK_THROWS_AS(ws.advance_scene("stage", st, SceneStatus::dropped),
                  WorkspaceError);
  ws.advance_scene("stage", st, SceneStatus::dropped, "llm_unknown");
  CHECK(ws.read_scene("a").record.drop_reason == "llm_unknown");
}

TEST_CASE("interrupted temp write leaves the committed state intact") {
  auto root = temp_dir("crash");
  auto ws = Workspace::init(root, tiny_config(), {make_scene("a")});
  auto st = ws.read_scene("a");
  ws.advance_scene("stage", st, SceneStatus::classified_arch);

  // Simulate a crash between temp-write and rename: a stale .tmp file next
  // to the committed state must not disturb loading.
  std::ofstream(ws.scene_file("a").string() + ".tmp") << "{garbage";
  auto ws2 = Workspace::load(root);
  CHECK(ws2.read_scene("a").record.status == SceneStatus::classified_arch);
}

TEST_CASE("scene lock blocks a live pid and reclaims a stale one") {
  auto root = temp_dir("lock");
  fs::create_directories(root / "locks");
  {
    SceneLock lock(root / "locks", "a");
    CHECK(fs::exists(root / "locks" / "a.lock"));
    CHECK_THROWS_AS(SceneLock(root / "locks", "a"), WorkspaceError);
  }
  CHECK_FALSE(fs::exists(root / "locks" / "a.lock"));

  // A lock held by a dead pid is reclaimed.
  std::ofstream(root / "locks" / "b.lock") << 999999999;
  SceneLock reclaimed(root / "locks", "b");
  CHECK(fs::exists(root / "locks" / "b.lock"));
}

TEST_CASE("stage completion markers persist") {
  auto root = temp_dir("stages");
  auto ws = Workspace::init(root, tiny_config(), {make_scene("a")});
  CHECK_FALSE(ws.stage_completed("classify"));
  ws.mark_stage_completed("classify");
  CHECK(ws.stage_completed("classify"));
  auto ws2 = Workspace::load(root);
  CHECK(ws2.stage_completed("classify"));
  CHECK_FALSE(ws2.stage_completed("filter"));
}

TEST_CASE("scene state round trips through JSON") {
  SceneState st;
  st.record = make_scene("rt");
  st.record.taxonomy = {"arch", "landmark"};
  st.record.raw_wiki_text = "wiki";
  st.classify = json{{"method", "keywords"}, {"verdict", "arch"}};
  RefinedMetadata md;
  md.formal_name = "RT";
  st.metadata = md;
  st.aspects = {"architectural style"};
  VQAItem item;
  item.item_id = "rt#img#d0";
  item.scene_id = "rt";
  item.image_id = "img";
  item.question = "Q";
  item.answer = "A";
  st.items.push_back(item);
  st.expected_items = 1;

  auto restored = SceneState::from_json(st.to_json());
  CHECK(restored.record.scene_id == "rt");
  CHECK(restored.record.taxonomy == st.record.taxonomy);
  CHECK(restored.metadata->formal_name == "RT");
  REQUIRE(restored.items.size() == 1);
  CHECK(restored.items[0].answer == "A");
  CHECK(restored.aspects == st.aspects);
}

}  // TEST_SUITE
