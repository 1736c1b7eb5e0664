#include "archpipe/pipeline.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "archpipe/assemble.hpp"
#include "archpipe/errors.hpp"
#include "archpipe/file_backends.hpp"
#include "archpipe/http_backends.hpp"
#include "archpipe/prompts.hpp"
#include "archpipe/resources.hpp"
#include "archpipe/stub_backends.hpp"
#include "archpipe/text_verify.hpp"
#include "archpipe/util.hpp"

namespace archpipe {

namespace fs = std::filesystem;

RunConfig::RunConfig() {
  const Defaults& d = defaults();
  filter.alpha = d.alpha;
  filter.tau_c = d.tau_c;
  filter.point_count = d.point_count;
  filter.top_k = d.top_k;
  filter.image_cap = d.image_cap;
  annotate.detailed_words = d.detailed_words;
  annotate.aspect_words = d.aspect_words;
  annotate.question_min_words = d.question_min_words;
  annotate.question_max_words = d.question_max_words;
  annotate.max_aspects = d.max_aspects;
  split_ratio = d.split_ratio;
  retry.attempts = static_cast<int>(d.retry_attempts);
  retry.initial_backoff = std::chrono::milliseconds(d.retry_backoff_ms);
}

void RunConfig::validate() const {
  filter.validate();
  if (!(split_ratio > 0.0 && split_ratio < 1.0))
    throw ConfigError("split ratio must be in (0,1)");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (retry.attempts < 1) throw ConfigError("retry attempts must be >= 1");
  if (!ablation.cf && ablation.ff)
    throw ConfigError("fine filtering requires coarse filtering (--no-cf implies --no-ff)");
  for (const auto* c : {&llm, &geometry, &sky, &segmentation}) {
    if (c->kind != "stub" && c->kind != "file" && c->kind != "http")
      throw ConfigError("unknown backend kind: " + c->kind);
    if (c->kind == "file" && c->dir.empty())
      throw ConfigError("file backend needs a data directory");
  }
}

FilterMode RunConfig::filter_mode() const {
  if (ablation.cf && ablation.ff) return FilterMode::full;
  if (ablation.cf) return FilterMode::coarse_only;
  return FilterMode::random;
}

namespace {

json backend_to_json(const BackendChoice& c) {
  return json{{"kind", c.kind},
              {"dir", c.dir},
              {"arch_deny", c.arch_deny},
              {"known_deny", c.known_deny},
              {"sky_fraction", c.sky_fraction},
              {"geometry_constant", c.geometry_constant},
              {"segmentation_radius", c.segmentation_radius}};
}

BackendChoice backend_from_json(const json& j) {
  BackendChoice c;
  c.kind = j.value("kind", "stub");
  c.dir = j.value("dir", "");
  if (j.contains("arch_deny"))
    c.arch_deny = j.at("arch_deny").get<std::vector<std::string>>();
  if (j.contains("known_deny"))
    c.known_deny = j.at("known_deny").get<std::vector<std::string>>();
  c.sky_fraction = j.value("sky_fraction", 0.0);
  c.geometry_constant = j.value("geometry_constant", -1.0);
  c.segmentation_radius = j.value("segmentation_radius", 1u);
  return c;
}

std::string file_or_resource_hash(const std::string& file,
                                  const char* resource_name) {
  if (file.empty()) return to_hex16(fnv1a64(resource_text(resource_name)));
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + file);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return to_hex16(fnv1a64(content));
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

}  // namespace

json RunConfig::to_json() const {
  return json{
      {"version", 1},
      {"seed", seed},
      {"workers", workers},
      {"llm_concurrency", llm_concurrency},
      {"backends",
       json{{"llm", backend_to_json(llm)},
            {"geometry", backend_to_json(geometry)},
            {"sky", backend_to_json(sky)},
            {"segmentation", backend_to_json(segmentation)}}},
      {"filter",
       json{{"alpha", filter.alpha},
            {"tau_c", filter.tau_c},
            {"point_count", filter.point_count},
            {"top_k", filter.top_k},
            {"image_cap", filter.image_cap}}},
      {"ablation",
       json{{"cf", ablation.cf},
            {"ff", ablation.ff},
            {"lkc", ablation.lkc},
            {"wde", ablation.wde}}},
      {"annotate",
       json{{"detailed_words", annotate.detailed_words},
            {"aspect_words", annotate.aspect_words},
            {"question_min_words", annotate.question_min_words},
            {"question_max_words", annotate.question_max_words},
            {"max_aspects", annotate.max_aspects}}},
      {"split_ratio", split_ratio},
      {"retry",
       json{{"attempts", retry.attempts},
            {"backoff_ms", retry.initial_backoff.count()}}},
      {"dump_masks", dump_masks},
      {"dictionaries",
       json{{"arch_file", arch_dict_file},
            {"nonarch_file", nonarch_dict_file},
            {"arch_hash",
             file_or_resource_hash(arch_dict_file, "dictionaries/arch_terms.txt")},
            {"nonarch_hash",
             file_or_resource_hash(nonarch_dict_file,
                                   "dictionaries/nonarch_terms.txt")}}},
      {"aspects_file", aspects_file}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.workers = j.value("workers", 1);
  c.llm_concurrency = j.value("llm_concurrency", 0);
  const auto& b = j.at("backends");
  c.llm = backend_from_json(b.at("llm"));
  c.geometry = backend_from_json(b.at("geometry"));
  c.sky = backend_from_json(b.at("sky"));
  c.segmentation = backend_from_json(b.at("segmentation"));
  const auto& f = j.at("filter");
  c.filter.alpha = f.at("alpha").get<double>();
  c.filter.tau_c = f.at("tau_c").get<double>();
  c.filter.point_count = f.at("point_count").get<std::uint32_t>();
  c.filter.top_k = f.at("top_k").get<std::uint32_t>();
  c.filter.image_cap = f.at("image_cap").get<std::uint32_t>();
  const auto& a = j.at("ablation");
  c.ablation.cf = a.at("cf").get<bool>();
  c.ablation.ff = a.at("ff").get<bool>();
  c.ablation.lkc = a.at("lkc").get<bool>();
  c.ablation.wde = a.at("wde").get<bool>();
  const auto& an = j.at("annotate");
  c.annotate.detailed_words = an.at("detailed_words").get<unsigned>();
  c.annotate.aspect_words = an.at("aspect_words").get<unsigned>();
  c.annotate.question_min_words = an.at("question_min_words").get<unsigned>();
  c.annotate.question_max_words = an.at("question_max_words").get<unsigned>();
  c.annotate.max_aspects = an.at("max_aspects").get<unsigned>();
  c.split_ratio = j.at("split_ratio").get<double>();
  c.retry.attempts = j.at("retry").at("attempts").get<int>();
  c.retry.initial_backoff =
      std::chrono::milliseconds(j.at("retry").at("backoff_ms").get<long long>());
  c.dump_masks = j.value("dump_masks", false);
  c.arch_dict_file = j.at("dictionaries").value("arch_file", "");
  c.nonarch_dict_file = j.at("dictionaries").value("nonarch_file", "");
  c.aspects_file = j.value("aspects_file", "");
  return c;
}

KeywordDicts RunConfig::load_dicts() const {
  KeywordDicts bundled = KeywordDicts::bundled();
  auto read_side = [](const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot read dictionary file " + file);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    std::set<std::string> out;
    for (auto& line : parse_term_lines(text)) out.insert(to_lower(line));
    return out;
  };
  KeywordDicts d;
  d.arch_terms =
      arch_dict_file.empty() ? bundled.arch_terms : read_side(arch_dict_file);
  d.nonarch_terms = nonarch_dict_file.empty() ? bundled.nonarch_terms
                                              : read_side(nonarch_dict_file);
  d.validate();
  return d;
}

std::vector<std::string> RunConfig::load_aspects() const {
  if (aspects_file.empty()) return canonical_aspects();
  std::ifstream in(aspects_file, std::ios::binary);
  if (!in) throw ConfigError("cannot read aspects file " + aspects_file);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  auto aspects = parse_term_lines(text);
  if (aspects.empty()) throw ConfigError("aspects file is empty");
  for (auto& a : aspects) a = to_lower(a);
  return aspects;
}

Backends make_backends(const RunConfig& config, AuditLog* audit,
                       LlmClient::Sleeper sleeper) {
  Backends b;
  b.audit = audit;

  std::shared_ptr<LlmBackend> llm_backend;
  if (config.llm.kind == "stub") {
    StubLlm::Options opts;
    opts.arch_deny = config.llm.arch_deny;
    opts.known_deny = config.llm.known_deny;
    llm_backend = std::make_shared<StubLlm>(opts);
  } else if (config.llm.kind == "file") {
    llm_backend = std::make_shared<FileLlm>(config.llm.dir);
  } else {
    HttpOptions http;
    http.base_url = env_or("ARCHPIPE_LLM_URL", "http://localhost:8080");
    http.api_key = env_or("ARCHPIPE_API_KEY", "");
    llm_backend = std::make_shared<HttpLlm>(http);
  }
  b.llm = std::make_shared<LlmClient>(llm_backend, config.retry, audit,
                                      config.llm_concurrency, std::move(sleeper));

  if (config.geometry.kind == "stub")
    b.geometry = std::make_shared<StubGeometry>(config.seed,
                                                config.geometry.geometry_constant);
  else if (config.geometry.kind == "file")
    b.geometry = std::make_shared<FileGeometry>(config.geometry.dir);
  else {
    HttpOptions http;
    http.base_url = env_or("ARCHPIPE_GEOMETRY_URL", "http://localhost:8081");
    http.api_key = env_or("ARCHPIPE_API_KEY", "");
    b.geometry = std::make_shared<HttpGeometry>(http);
  }

  if (config.sky.kind == "stub")
    b.sky = std::make_shared<StubSky>(config.sky.sky_fraction, config.seed);
  else if (config.sky.kind == "file")
    b.sky = std::make_shared<FileSky>(config.sky.dir);
  else {
    HttpOptions http;
    http.base_url = env_or("ARCHPIPE_SKY_URL", "http://localhost:8082");
    http.api_key = env_or("ARCHPIPE_API_KEY", "");
    b.sky = std::make_shared<HttpSky>(http);
  }

  if (config.segmentation.kind == "stub")
    b.segmentation =
        std::make_shared<StubSegmentation>(config.segmentation.segmentation_radius);
  else if (config.segmentation.kind == "file")
    b.segmentation = std::make_shared<FileSegmentation>(config.segmentation.dir);
  else {
    HttpOptions http;
    http.base_url = env_or("ARCHPIPE_SEGMENTATION_URL", "http://localhost:8083");
    http.api_key = env_or("ARCHPIPE_API_KEY", "");
    b.segmentation = std::make_shared<HttpSegmentation>(http);
  }
  return b;
}

std::vector<SceneRecord> load_scene_manifest(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read scene manifest " + file.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  std::vector<SceneRecord> scenes;
  std::string trimmed = trim(text);
  if (!trimmed.empty() && trimmed[0] == '[') {
    for (const auto& j : json::parse(trimmed)) scenes.push_back(scene_record_from_json(j));
  } else {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (trim(line).empty()) continue;
      scenes.push_back(scene_record_from_json(json::parse(line)));
    }
  }
  std::set<std::string> ids;
  for (const auto& s : scenes) {
    if (s.scene_id.empty()) throw ConfigError("scene with empty scene_id");
    if (!ids.insert(s.scene_id).second)
      throw ConfigError("duplicate scene_id " + s.scene_id);
    for (const auto& im : s.images)
      if (!im.valid())
        throw ConfigError("image " + im.image_id + " has invalid dims");
  }
  return scenes;
}

std::string StageSummary::text() const {
  std::ostringstream out;
  out << "stage=" << stage << " eligible=" << eligible
      << " advanced=" << advanced << " dropped=" << dropped;
  return out.str();
}

namespace {

// Runs fn over scene ids; sequential for workers <= 1, otherwise a small
// worker pool. The first exception wins and is rethrown after join.
void for_each_scene(const std::vector<std::string>& ids, int workers,
                    const std::function<void(const std::string&)>& fn) {
  if (workers <= 1 || ids.size() <= 1) {
    for (const auto& id : ids) fn(id);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= ids.size()) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error) return;
      }
      try {
        fn(ids[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  int n = std::min<int>(workers, static_cast<int>(ids.size()));
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Dry-run prompt sink: stdout by default, one file per prompt when a dump
// directory is configured.
void emit_prompt(const StageOptions& opts, const std::string& stage,
                 const std::string& scene_id, const std::string& name,
                 const std::string& text) {
  if (opts.dump_prompts_dir.empty()) {
    std::cout << "--- " << stage << ":" << name << " prompt for " << scene_id
              << " ---\n"
              << text << "\n";
    return;
  }
  fs::create_directories(opts.dump_prompts_dir);
  std::ofstream out(fs::path(opts.dump_prompts_dir) /
                        (stage + "." + scene_id + "." + name + ".txt"),
                    std::ios::binary | std::ios::trunc);
  out << text;
}

json filter_result_to_json(const FilterSceneResult& res) {
  json scores = json::array();
  for (const auto& s : res.scores) scores.push_back(to_json(s));
  json j{{"mode", to_string(res.mode)},
         {"cap_seed", res.cap_seed},
         {"capped", res.capped},
         {"scores", std::move(scores)}};
  if (res.alpha_c) j["alpha_c"] = *res.alpha_c;
  return j;
}

}  // namespace

StageSummary run_classify(Workspace& ws, const RunConfig& config,
                          const Backends& backends, const StageOptions& opts) {
  StageSummary summary;
  summary.stage = "classify";
  KeywordDicts dicts = config.load_dicts();

  std::atomic<int> eligible{0}, advanced{0}, dropped{0};
  auto ids = ws.scene_ids();
  for_each_scene(ids, opts.dry_run ? 1 : opts.workers, [&](const std::string& id) {
    SceneState st = ws.read_scene(id);
    if (st.record.status != SceneStatus::fresh) return;
    ++eligible;

    KeywordVerdict kv = classify_by_keywords(st.record, dicts);
    if (opts.dry_run) {
      if (kv == KeywordVerdict::Undecided)
        emit_prompt(opts, "classify", id, "scene_classify",
                    render_classify_prompt(st.record));
      else
        std::cout << "classify " << id << ": decided by keywords\n";
      return;
    }

    SceneLock lock(ws.root() / "locks", id);
    if (kv == KeywordVerdict::Arch) {
      st.classify = json{{"method", "keywords"}, {"verdict", "arch"}};
      ws.advance_scene("classify", st, SceneStatus::classified_arch);
      ++advanced;
      return;
    }
    if (kv == KeywordVerdict::NonArch) {
      st.classify = json{{"method", "keywords"}, {"verdict", "nonarch"}};
      ws.advance_scene("classify", st, SceneStatus::classified_nonarch);
      ++advanced;
      return;
    }

    auto res = classify_by_llm(st.record, *backends.llm,
                               derive_seed(config.seed, id, "classify"));
    switch (res.verdict) {
      case YesNo::Yes:
        st.classify = json{{"method", "llm"}, {"verdict", "arch"}};
        ws.advance_scene("classify", st, SceneStatus::classified_arch);
        ++advanced;
        break;
      case YesNo::No:
        st.classify = json{{"method", "llm"}, {"verdict", "nonarch"}};
        ws.advance_scene("classify", st, SceneStatus::classified_nonarch);
        ++advanced;
        break;
      case YesNo::Unparseable:
        st.classify = json{{"method", "llm"}, {"verdict", "unparseable"}};
        ws.advance_scene("classify", st, SceneStatus::dropped, "llm_unparseable");
        ++dropped;
        break;
    }
  });

  summary.eligible = eligible;
  summary.advanced = advanced;
  summary.dropped = dropped;
  if (!opts.dry_run) ws.mark_stage_completed("classify");
  return summary;
}

StageSummary run_filter(Workspace& ws, const RunConfig& config,
                        const Backends& backends, const StageOptions& opts) {
  StageSummary summary;
  summary.stage = "filter";
  FilterMode mode = config.filter_mode();

  std::atomic<int> eligible{0}, advanced{0}, dropped{0};
  for_each_scene(ws.scene_ids(), opts.dry_run ? 1 : opts.workers,
                 [&](const std::string& id) {
    SceneState st = ws.read_scene(id);
    if (st.record.status != SceneStatus::classified_arch) return;
    ++eligible;

    if (opts.dry_run) {
      std::cout << "filter " << id << ": mode=" << to_string(mode) << ", "
                << st.record.images.size() << " images (cap "
                << config.filter.image_cap << ")\n";
      return;
    }

    SceneLock lock(ws.root() / "locks", id);
    FilterParams params = config.filter;
    params.seed = config.seed;
    ws.audit().note("filter", id, "mode:" + to_string(mode));
    fs::path mask_dir = ws.root() / "masks";
    FilterSceneResult res =
        filter_scene(st.record, params, backends, mode,
                     config.dump_masks ? &mask_dir : nullptr);
    st.filter = filter_result_to_json(res);
    if (!res.drop_reason.empty()) {
      ws.advance_scene("filter", st, SceneStatus::dropped, res.drop_reason);
      ++dropped;
    } else {
      ws.advance_scene("filter", st, SceneStatus::images_filtered);
      ++advanced;
    }
  });

  summary.eligible = eligible;
  summary.advanced = advanced;
  summary.dropped = dropped;
  if (!opts.dry_run) ws.mark_stage_completed("filter");
  return summary;
}

StageSummary run_verify(Workspace& ws, const RunConfig& config,
                        const Backends& backends, const StageOptions& opts) {
  StageSummary summary;
  summary.stage = "verify";

  std::atomic<int> eligible{0}, advanced{0}, dropped{0};
  for_each_scene(ws.scene_ids(), opts.dry_run ? 1 : opts.workers,
                 [&](const std::string& id) {
    SceneState st = ws.read_scene(id);
    if (st.record.status != SceneStatus::images_filtered) return;
    ++eligible;

    if (opts.dry_run) {
      if (config.ablation.lkc)
        emit_prompt(opts, "verify", id, "known_check",
                    render_known_check_prompt(st.record));
      if (config.ablation.wde) {
        emit_prompt(opts, "verify", id, "extract_description",
                    render_extract_description_prompt(st.record));
        emit_prompt(opts, "verify", id, "extract_name",
                    render_extract_name_prompt(st.record));
      }
      return;
    }

    SceneLock lock(ws.root() / "locks", id);
    std::uint64_t seed = derive_seed(config.seed, id, "verify");

    if (config.ablation.lkc) {
      auto kc = llm_known_check(st.record, *backends.llm, seed);
      if (!kc.parseable) {
        ws.advance_scene("verify", st, SceneStatus::dropped, "llm_unparseable");
        ++dropped;
        return;
      }
      if (!kc.known) {
        ws.advance_scene("verify", st, SceneStatus::dropped, "llm_unknown");
        ++dropped;
        return;
      }
    } else {
      ws.audit().note("verify", id, "known_check_skipped");
    }

    RefinedMetadata md;
    if (config.ablation.wde) {
      md = run_wiki_extractor(st.record, *backends.llm, seed + 10);
    } else {
      md.formal_name = st.record.scene_name;
      md.refined_description = trim(st.record.raw_wiki_text).empty()
                                   ? std::string(kUnknownSentinel)
                                   : st.record.raw_wiki_text;
      ws.audit().note("verify", id, "wiki_extractor_bypassed");
    }
    st.metadata = md;
    st.metadata_all_unknown = md.all_unknown_except_name();
    if (st.metadata_all_unknown)
      ws.audit().note("verify", id, "metadata_all_unknown");
    ws.advance_scene("verify", st, SceneStatus::verified);
    ++advanced;
  });

  summary.eligible = eligible;
  summary.advanced = advanced;
  summary.dropped = dropped;
  if (!opts.dry_run) ws.mark_stage_completed("verify");
  return summary;
}

StageSummary run_annotate(Workspace& ws, const RunConfig& config,
                          const Backends& backends, const StageOptions& opts) {
  StageSummary summary;
  summary.stage = "annotate";

  AnnotateParams params = config.annotate;
  params.aspects = config.load_aspects();
  params.openers = question_openers();

  std::atomic<int> eligible{0}, advanced{0}, dropped{0};
  for_each_scene(ws.scene_ids(), opts.dry_run ? 1 : opts.workers,
                 [&](const std::string& id) {
    SceneState st = ws.read_scene(id);
    if (st.record.status != SceneStatus::verified) return;
    ++eligible;

    std::uint64_t seed = derive_seed(config.seed, id, "annotate");
    if (opts.dry_run) {
      const std::string& q = pick_description_question(seed);
      emit_prompt(opts, "annotate", id, "description_answer",
                  render_description_prompt(*st.metadata, q, params.detailed_words));
      emit_prompt(opts, "annotate", id, "aspect_select",
                  render_aspect_select_prompt(*st.metadata));
      return;
    }

    SceneLock lock(ws.root() / "locks", id);
    auto selected = st.selected_images();
    if (selected.empty()) {
      ws.advance_scene("annotate", st, SceneStatus::dropped,
                       "no_images_after_filtering");
      ++dropped;
      return;
    }
    auto res =
        annotate_scene(st.record, *st.metadata, selected, params, *backends.llm, seed);
    st.items = res.items;
    st.aspects = res.aspects;
    st.noncanonical_aspects = res.noncanonical_aspects;
    st.skipped_items = res.skipped;
    st.expected_items = res.expected_items;
    for (const auto& s : res.skipped) ws.audit().note("annotate", id, s);
    ws.advance_scene("annotate", st, SceneStatus::annotated);
    ++advanced;
  });

  summary.eligible = eligible;
  summary.advanced = advanced;
  summary.dropped = dropped;
  if (!opts.dry_run) ws.mark_stage_completed("annotate");
  return summary;
}

StageSummary run_assemble(Workspace& ws, const RunConfig& config,
                          const StageOptions& opts) {
  StageSummary summary;
  summary.stage = "assemble";

  std::vector<VQAItem> accepted;
  std::map<std::string, std::string> image_paths;
  for (const auto& id : ws.scene_ids()) {
    SceneState st = ws.read_scene(id);
    if (st.record.status != SceneStatus::annotated) continue;
    ++summary.eligible;
    for (const auto& im : st.record.images) image_paths[im.image_id] = im.path;
    for (const auto& item : st.items) {
      bool rejected = st.triage.is_object() && st.triage.contains(item.item_id) &&
                      st.triage.at(item.item_id).get<std::string>() == "reject";
      if (!rejected) accepted.push_back(item);
    }
  }
  if (opts.dry_run) {
    std::cout << "assemble: would package " << accepted.size() << " items from "
              << summary.eligible << " scenes\n";
    return summary;
  }
  if (accepted.empty())
    throw ConfigError("assemble: no accepted items (run annotate first?)");

  DatasetManifest manifest = split_dataset(
      accepted, config.split_ratio, derive_seed(config.seed, "dataset", "split"));
  manifest.config_hash = ws.config_hash();
  manifest.stats = compute_stats(manifest);

  auto exports = ws.exports_dir();
  fs::create_directories(exports);

  std::ostringstream train_out, test_out;
  export_conversations(manifest, Split::train, image_paths, train_out);
  export_conversations(manifest, Split::test, image_paths, test_out);
  atomic_write(exports / "train.jsonl", train_out.str());
  atomic_write(exports / "test.jsonl", test_out.str());

  std::ostringstream fused_out;
  for (const auto& image_id : image_ids_in_split(manifest, Split::train))
    fused_out << pack_fused(manifest, image_id).to_json().dump() << '\n';
  atomic_write(exports / "fused_train.jsonl", fused_out.str());

  atomic_write(exports / "stats.json", manifest.stats.to_json().dump(2) + "\n");
  atomic_write(exports / "stats.txt", stats_table(manifest.stats));
  atomic_write(exports / "manifest.json", manifest.to_json().dump(2) + "\n");

  summary.advanced = static_cast<int>(accepted.size());
  ws.mark_stage_completed("assemble");
  return summary;
}

std::string workspace_status(const Workspace& ws) {
  std::map<std::string, int> by_status;
  std::map<std::string, int> drop_reasons;
  std::size_t items = 0;
  for (const auto& id : ws.scene_ids()) {
    SceneState st = ws.read_scene(id);
    ++by_status[to_string(st.record.status)];
    if (st.record.status == SceneStatus::dropped)
      ++drop_reasons[st.record.drop_reason];
    items += st.items.size();
  }
  std::ostringstream out;
  out << "scenes by status:\n";
  for (const auto& [status, n] : by_status)
    out << "  " << status << ": " << n << '\n';
  if (!drop_reasons.empty()) {
    out << "drop reasons:\n";
    for (const auto& [reason, n] : drop_reasons)
      out << "  " << reason << ": " << n << '\n';
  }
  out << "annotated items: " << items << '\n';
  return out.str();
}

int triage_sample(Workspace& ws, std::size_t n, std::uint64_t seed,
                  const fs::path& out_file) {
  std::vector<std::string> item_ids;
  for (const auto& id : ws.scene_ids()) {
    SceneState st = ws.read_scene(id);
    if (st.record.status != SceneStatus::annotated) continue;
    for (const auto& item : st.items) item_ids.push_back(item.item_id);
  }
  seeded_shuffle(item_ids, seed);
  if (item_ids.size() > n) item_ids.resize(n);
  std::sort(item_ids.begin(), item_ids.end());
  std::ostringstream out;
  for (const auto& id : item_ids) out << id << "\taccept\n";
  atomic_write(out_file, out.str());
  return static_cast<int>(item_ids.size());
}

int triage_apply(Workspace& ws, const fs::path& marks_file) {
  std::ifstream in(marks_file, std::ios::binary);
  if (!in) throw ConfigError("cannot read marks file " + marks_file.string());

  std::map<std::string, std::map<std::string, std::string>> by_scene;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    std::istringstream fields(line);
    std::string item_id, mark;
    fields >> item_id >> mark;
    if (mark != "accept" && mark != "reject")
      throw ConfigError("marks file line " + std::to_string(row) +
                        ": verdict must be accept or reject");
    auto hash_pos = item_id.find('#');
    if (hash_pos == std::string::npos)
      throw ConfigError("marks file line " + std::to_string(row) +
                        ": not an item id: " + item_id);
    by_scene[item_id.substr(0, hash_pos)][item_id] = mark;
  }

  int applied = 0;
  for (const auto& [scene_id, marks] : by_scene) {
    SceneLock lock(ws.root() / "locks", scene_id);
    SceneState st = ws.read_scene(scene_id);
    if (!st.triage.is_object()) st.triage = json::object();
    for (const auto& [item_id, mark] : marks) {
      st.triage[item_id] = mark;
      ++applied;
    }
    ws.update_scene(st);
    ws.audit().note("triage", scene_id,
                    "marks_applied:" + std::to_string(marks.size()));
  }
  return applied;
}

std::vector<std::string> stage_prerequisites(const std::string& stage) {
  if (stage == "filter") return {"classify"};
  if (stage == "verify") return {"classify", "filter"};
  if (stage == "annotate") return {"classify", "filter", "verify"};
  if (stage == "assemble") return {"classify", "filter", "verify", "annotate"};
  if (stage == "triage") return {"annotate"};
  return {};
}

}  // namespace archpipe
