#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "archpipe/errors.hpp"
#include "archpipe/pipeline.hpp"
#include "archpipe/stub_backends.hpp"

using namespace archpipe;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::current_path() / ("t_pipe_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig fixture_config() {
  RunConfig config;
  config.seed = 424242;
  config.filter.tau_c = 0.1;
  config.split_ratio = 0.6;
  config.llm.arch_deny = {"zzyx"};
  config.llm.known_deny = {"folly"};
  config.sky.sky_fraction = -1.0;  // per-image sky bands
  return config;
}

fs::path fixture_scenes() {
  return fs::path(ARCHPIPE_SOURCE_DIR) / "tests" / "fixtures" / "scenes.json";
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing " << file.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

Workspace run_all(const fs::path& root, const RunConfig& config) {
  auto scenes = load_scene_manifest(fixture_scenes());
  Workspace ws = Workspace::init(root, config.to_json(), scenes);
  Backends backends =
      make_backends(config, &ws.audit(), [](std::chrono::milliseconds) {});
  StageOptions opts;
  run_classify(ws, config, backends, opts);
  run_filter(ws, config, backends, opts);
  run_verify(ws, config, backends, opts);
  run_annotate(ws, config, backends, opts);
  run_assemble(ws, config, opts);
  return ws;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("fixture corpus routes every scene to its expected fate") {
  auto root = temp_dir("routes");
  auto ws = run_all(root, fixture_config());

  CHECK(ws.read_scene("forest_trail").record.status ==
        SceneStatus::classified_nonarch);
  CHECK(ws.read_scene("zzyx_q7").record.status == SceneStatus::classified_nonarch);
  CHECK(ws.read_scene("zzyx_q7").classify.at("method") == "llm");

  auto folly = ws.read_scene("ruined_folly");
  CHECK(folly.record.status == SceneStatus::dropped);
  CHECK(folly.record.drop_reason == "llm_unknown");

  auto arc = ws.read_scene("arc_de_triomf");
  CHECK(arc.record.status == SceneStatus::annotated);
  CHECK_FALSE(arc.items.empty());
  REQUIRE(arc.metadata.has_value());
  CHECK(arc.metadata->formal_name == "Arc de Triomf");

  CHECK(ws.read_scene("stone_chapel").record.status == SceneStatus::annotated);
  CHECK(ws.read_scene("harbor_beacon").record.status == SceneStatus::annotated);

  auto mill = ws.read_scene("old_mill_house");
  CHECK(mill.record.status == SceneStatus::annotated);
  REQUIRE(mill.metadata.has_value());
  CHECK(mill.metadata->formal_name == "Old Mill House");
  CHECK(mill.metadata->refined_description == "Unknown");
  CHECK(mill.metadata_all_unknown);
}

TEST_CASE("exports exist, are non-empty, and conserve item counts") {
  auto root = temp_dir("exports");
  auto ws = run_all(root, fixture_config());

  auto train = read_file(ws.exports_dir() / "train.jsonl");
  auto test = read_file(ws.exports_dir() / "test.jsonl");
  CHECK_FALSE(train.empty());

  std::size_t exported = static_cast<std::size_t>(
      std::count(train.begin(), train.end(), '\n') +
      std::count(test.begin(), test.end(), '\n'));
  std::size_t accepted = 0;
  for (const auto& id : ws.scene_ids()) {
    auto st = ws.read_scene(id);
    if (st.record.status == SceneStatus::annotated) accepted += st.items.size();
  }
  CHECK(exported == accepted);

  // Scene-disjoint split.
  auto manifest = json::parse(read_file(ws.exports_dir() / "manifest.json"));
  for (const auto& [scene, split] : manifest.at("split_assignment").items())
    CHECK((split == "train" || split == "test"));
}

TEST_CASE("rerun with the same seed is byte-identical") {
  auto root1 = temp_dir("rerun1");
  auto root2 = temp_dir("rerun2");
  auto ws1 = run_all(root1, fixture_config());
  auto ws2 = run_all(root2, fixture_config());
  for (const char* name :
       {"train.jsonl", "test.jsonl", "fused_train.jsonl", "stats.json",
        "manifest.json"}) {
    CHECK_MESSAGE(read_file(ws1.exports_dir() / name) ==
                      read_file(ws2.exports_dir() / name),
                  "export differs: " << name);
  }
  CHECK(read_file(root1 / "audit.jsonl") == read_file(root2 / "audit.jsonl"));
}

TEST_CASE("resuming a completed workspace is a no-op with identical exports") {
  auto root = temp_dir("resume");
  auto ws = run_all(root, fixture_config());
  auto before = read_file(ws.exports_dir() / "train.jsonl");

  // Run the whole chain again over the same workspace.
  auto config = fixture_config();
  Backends backends =
      make_backends(config, &ws.audit(), [](std::chrono::milliseconds) {});
  StageOptions opts;
  auto s1 = run_classify(ws, config, backends, opts);
  CHECK(s1.eligible == 0);  // everything already past "new"
  run_filter(ws, config, backends, opts);
  run_verify(ws, config, backends, opts);
  run_annotate(ws, config, backends, opts);
  run_assemble(ws, config, opts);
  CHECK(read_file(ws.exports_dir() / "train.jsonl") == before);
}

TEST_CASE("ablation toggles change the audit trail as documented") {
  // no-cf/no-ff: random mode in the audit.
  {
    auto root = temp_dir("ablate_random");
    auto config = fixture_config();
    config.ablation.cf = false;
    config.ablation.ff = false;
    auto ws = run_all(root, config);
    auto audit = read_file(root / "audit.jsonl");
    CHECK(audit.find("\"detail\":\"mode:random\"") != std::string::npos);
    CHECK(audit.find("\"detail\":\"mode:full\"") == std::string::npos);
  }
  // no-ff alone: coarse-only mode.
  {
    auto root = temp_dir("ablate_coarse");
    auto config = fixture_config();
    config.ablation.ff = false;
    auto ws = run_all(root, config);
    auto audit = read_file(root / "audit.jsonl");
    CHECK(audit.find("\"detail\":\"mode:coarse-only\"") != std::string::npos);
  }
  // no-lkc: knowledge gate skipped; the unknown scene now survives.
  {
    auto root = temp_dir("ablate_lkc");
    auto config = fixture_config();
    config.ablation.lkc = false;
    auto ws = run_all(root, config);
    auto audit = read_file(root / "audit.jsonl");
    CHECK(audit.find("known_check_skipped") != std::string::npos);
    CHECK(ws.read_scene("ruined_folly").record.status != SceneStatus::dropped);
  }
  // no-wde: extractor bypassed, raw fields pass through.
  {
    auto root = temp_dir("ablate_wde");
    auto config = fixture_config();
    config.ablation.wde = false;
    auto ws = run_all(root, config);
    auto audit = read_file(root / "audit.jsonl");
    CHECK(audit.find("wiki_extractor_bypassed") != std::string::npos);
    auto arc = ws.read_scene("arc_de_triomf");
    REQUIRE(arc.metadata.has_value());
    CHECK(arc.metadata->formal_name == "Arc_de_Triomf_at_night");
    CHECK(arc.metadata->refined_description == arc.record.raw_wiki_text);
  }
}

TEST_CASE("full-pipeline selection is a subset of coarse-only survivors") {
  auto root_full = temp_dir("mono_full");
  auto root_coarse = temp_dir("mono_coarse");
  auto config_full = fixture_config();
  auto config_coarse = fixture_config();
  config_coarse.ablation.ff = false;
  auto ws_full = run_all(root_full, config_full);
  auto ws_coarse = run_all(root_coarse, config_coarse);

  for (const auto& id : ws_full.scene_ids()) {
    auto full = ws_full.read_scene(id);
    if (full.filter.is_null() || !full.filter.contains("scores")) continue;
    auto coarse = ws_coarse.read_scene(id);
    REQUIRE(coarse.filter.contains("scores"));
    std::set<std::string> coarse_survivors;
    for (const auto& row : coarse.filter.at("scores"))
      if (row.at("passed_coarse").get<bool>())
        coarse_survivors.insert(row.at("image").at("image_id").get<std::string>());
    for (const auto& row : full.filter.at("scores"))
      if (row.at("selected").get<bool>())
        CHECK(coarse_survivors.count(row.at("image").at("image_id")) == 1);
  }
}

TEST_CASE("triage rejects drop items from the next assembly") {
  auto root = temp_dir("triage");
  auto ws = run_all(root, fixture_config());
  auto before = read_file(ws.exports_dir() / "train.jsonl") +
                read_file(ws.exports_dir() / "test.jsonl");
  std::size_t before_count =
      static_cast<std::size_t>(std::count(before.begin(), before.end(), '\n'));

  // Reject one concrete item.
  auto arc = ws.read_scene("arc_de_triomf");
  REQUIRE_FALSE(arc.items.empty());
  std::string victim = arc.items[0].item_id;
  auto marks = root / "marks.tsv";
  {
    std::ofstream out(marks);
    out << victim << "\treject\n";
  }
  CHECK(triage_apply(ws, marks) == 1);

  auto config = fixture_config();
  StageOptions opts;
  run_assemble(ws, config, opts);
  auto after = read_file(ws.exports_dir() / "train.jsonl") +
               read_file(ws.exports_dir() / "test.jsonl");
  std::size_t after_count =
      static_cast<std::size_t>(std::count(after.begin(), after.end(), '\n'));
  CHECK(after_count == before_count - 1);
  CHECK(after.find(victim) == std::string::npos);
}

TEST_CASE("triage sampling writes a deterministic marks template") {
  auto root = temp_dir("triage_sample");
  auto ws = run_all(root, fixture_config());
  auto out1 = root / "sample1.tsv";
  auto out2 = root / "sample2.tsv";
  int n1 = triage_sample(ws, 5, 7, out1);
  int n2 = triage_sample(ws, 5, 7, out2);
  CHECK(n1 == 5);
  CHECK(n1 == n2);
  CHECK(read_file(out1) == read_file(out2));
}

TEST_CASE("dry run renders prompts without mutating state") {
  auto root = temp_dir("dry");
  auto scenes = load_scene_manifest(fixture_scenes());
  auto config = fixture_config();
  Workspace ws = Workspace::init(root, config.to_json(), scenes);
  Backends backends =
      make_backends(config, &ws.audit(), [](std::chrono::milliseconds) {});
  StageOptions opts;
  opts.dry_run = true;
  auto summary = run_classify(ws, config, backends, opts);
  CHECK(summary.eligible == 7);
  for (const auto& id : ws.scene_ids())
    CHECK(ws.read_scene(id).record.status == SceneStatus::fresh);
  CHECK_FALSE(ws.stage_completed("classify"));
}

TEST_CASE("multi-worker runs produce the same exports as single-worker") {
  auto root1 = temp_dir("workers1");
  auto root4 = temp_dir("workers4");
  auto config = fixture_config();
  auto ws1 = run_all(root1, config);

  auto scenes = load_scene_manifest(fixture_scenes());
  Workspace ws4 = Workspace::init(root4, config.to_json(), scenes);
  Backends backends =
      make_backends(config, &ws4.audit(), [](std::chrono::milliseconds) {});
  StageOptions opts;
  opts.workers = 4;
  run_classify(ws4, config, backends, opts);
  run_filter(ws4, config, backends, opts);
  run_verify(ws4, config, backends, opts);
  run_annotate(ws4, config, backends, opts);
  run_assemble(ws4, config, opts);

  for (const char* name : {"train.jsonl", "test.jsonl", "fused_train.jsonl"})
    CHECK(read_file(ws1.exports_dir() / name) ==
          read_file(ws4.exports_dir() / name));
}

TEST_CASE("prompt dumping writes one file per rendered prompt") {
  auto root = temp_dir("dump_prompts");
  auto scenes = load_scene_manifest(fixture_scenes());
  auto config = fixture_config();
  Workspace ws = Workspace::init(root, config.to_json(), scenes);
  Backends backends =
      make_backends(config, &ws.audit(), [](std::chrono::milliseconds) {});
  StageOptions opts;
  opts.dry_run = true;
  opts.dump_prompts_dir = (root / "prompts").string();
  run_classify(ws, config, backends, opts);
  auto file = root / "prompts" / "classify.zzyx_q7.scene_classify.txt";
  REQUIRE(fs::exists(file));
  auto text = read_file(file);
  CHECK(text.find("Zzyx_Q7") != std::string::npos);
  CHECK(text.find("is an architectural structure?") != std::string::npos);
}

TEST_CASE("config snapshot is immutable once the workspace exists") {
  auto root = temp_dir("immutable");
  auto scenes = load_scene_manifest(fixture_scenes());
  auto config = fixture_config();
  Workspace::init(root, config.to_json(), scenes);
  auto changed = fixture_config();
  changed.seed = 1;
  CHECK_THROWS_AS(Workspace::init(root, changed.to_json(), scenes),
                  WorkspaceError);
}

TEST_CASE("unparseable classification replies drop the scene with a reason") {
  auto root = temp_dir("unparseable");
  auto scenes = load_scene_manifest(fixture_scenes());
  auto config = fixture_config();
  Workspace ws = Workspace::init(root, config.to_json(), scenes);

  // Scripted stub: the undecided scenes get nonsense replies on every ask.
  auto stub = std::make_shared<StubLlm>();
  for (const auto& id : ws.scene_ids()) {
    auto record = ws.read_scene(id).record;
    stub->script(render_classify_prompt(record), "maybe");
  }
  Backends backends;
  backends.llm = std::make_shared<LlmClient>(
      stub, config.retry, &ws.audit(), 0, [](std::chrono::milliseconds) {});
  StageOptions opts;
  run_classify(ws, config, backends, opts);

  auto mill = ws.read_scene("old_mill_house");  // undecided by keywords
  CHECK(mill.record.status == SceneStatus::dropped);
  CHECK(mill.record.drop_reason == "llm_unparseable");
  // Keyword-decided scenes are untouched by the stub.
  CHECK(ws.read_scene("arc_de_triomf").record.status ==
        SceneStatus::classified_arch);
}

TEST_CASE("backend-fatal CLI runs exit with code 4") {
  auto root = temp_dir("exit4");
  fs::create_directories(root);
  fs::path empty_llm_dir = root / "llm_data";
  fs::create_directories(empty_llm_dir / "llm");

  std::string cli = ARCHPIPE_CLI_PATH;
  std::string scenes = fixture_scenes().string();
  auto ws = root / "ws";
  std::string init_cmd = cli + " --workspace " + ws.string() + " init --scenes " +
                         scenes + " --seed 1 --llm file --llm-dir " +
                         empty_llm_dir.string() + " > /dev/null 2>&1";
  REQUIRE(std::system(init_cmd.c_str()) == 0);
  // classify needs the text model for undecided scenes; the file backend has
  // no recorded replies, which is a non-retryable backend failure.
  std::string run_cmd = cli + " --workspace " + ws.string() +
                        " run classify > /dev/null 2>&1";
  int rc = std::system(run_cmd.c_str());
  REQUIRE(rc != -1);
  CHECK(WEXITSTATUS(rc) == 4);
}

TEST_CASE("config validation rejects ff without cf") {
  auto config = fixture_config();
  config.ablation.cf = false;
  config.ablation.ff = true;
  CHECK_THROWS_AS(config.validate(), ConfigError);
}

}  // TEST_SUITE
