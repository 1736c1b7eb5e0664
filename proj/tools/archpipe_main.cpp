#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "archpipe/errors.hpp"
#include "archpipe/evaluate.hpp"
#include "archpipe/pipeline.hpp"
#include "archpipe/resources.hpp"
#include "archpipe/util.hpp"

namespace {

using namespace archpipe;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPrerequisite = 3;
constexpr int kExitBackend = 4;

struct GlobalArgs {
  std::string workspace;
  bool dry_run = false;
  int workers = 0;  // 0 = use config value
  std::string dump_prompts_dir;
};

Workspace open_workspace(const GlobalArgs& args) {
  if (args.workspace.empty())
    throw ConfigError("--workspace is required for this command");
  return Workspace::load(args.workspace);
}

RunConfig config_of(const Workspace& ws) {
  RunConfig config = RunConfig::from_json(ws.config());
  config.validate();
  return config;
}

void check_prerequisites(const Workspace& ws, const std::string& stage) {
  for (const auto& pre : stage_prerequisites(stage))
    if (!ws.stage_completed(pre))
      throw WorkspaceError("stage '" + stage + "' requires completed stage '" +
                           pre + "'");
}

StageOptions stage_options(const GlobalArgs& args, const RunConfig& config) {
  StageOptions opts;
  opts.dry_run = args.dry_run || !args.dump_prompts_dir.empty();
  opts.workers = args.workers > 0 ? args.workers : config.workers;
  opts.dump_prompts_dir = args.dump_prompts_dir;
  return opts;
}

int run_stage(const GlobalArgs& args, const std::string& stage) {
  Workspace ws = open_workspace(args);
  RunConfig config = config_of(ws);
  std::cout << "config_hash=" << ws.config_hash() << "\n";
  check_prerequisites(ws, stage);
  StageOptions opts = stage_options(args, config);
  Backends backends = make_backends(config, &ws.audit());

  auto run_one = [&](const std::string& s) {
    StageSummary summary;
    if (s == "classify")
      summary = run_classify(ws, config, backends, opts);
    else if (s == "filter")
      summary = run_filter(ws, config, backends, opts);
    else if (s == "verify")
      summary = run_verify(ws, config, backends, opts);
    else if (s == "annotate")
      summary = run_annotate(ws, config, backends, opts);
    else if (s == "assemble")
      summary = run_assemble(ws, config, opts);
    std::cout << summary.text() << "\n";
  };

  if (stage == "all") {
    for (const char* s : {"classify", "filter", "verify", "annotate", "assemble"})
      run_one(s);
  } else {
    run_one(stage);
  }
  return kExitOk;
}

int run_init(const std::string& workspace, const std::string& scenes_file,
             RunConfig config) {
  config.validate();
  auto scenes = load_scene_manifest(scenes_file);
  Workspace ws = Workspace::init(workspace, config.to_json(), scenes);
  std::cout << "initialized workspace at " << workspace << " with "
            << scenes.size() << " scenes\n"
            << "config_hash=" << ws.config_hash() << "\n";
  return kExitOk;
}

int run_evaluate_cmd(const std::string& input_file, const std::string& output_file,
                     const std::string& judge, int permutations,
                     std::uint64_t seed, bool best_of,
                     const std::vector<std::string>& aspects,
                     const std::string& backend_kind, const std::string& backend_dir) {
  EvalOptions options;
  options.judge.system_prompt = judge == "architecture"
                                    ? JudgePromptKind::architecture
                                    : JudgePromptKind::vanilla;
  options.judge.permutations = permutations;
  options.judge.seed = seed;
  options.best_of = best_of;
  options.aspects = aspects;

  RunConfig config;
  config.llm.kind = backend_kind;
  config.llm.dir = backend_dir;
  config.seed = seed;
  Backends backends = make_backends(config, nullptr);

  std::ifstream in(input_file, std::ios::binary);
  if (!in) throw ConfigError("cannot read evaluation input " + input_file);
  auto items = load_eval_items(in);
  if (items.empty()) throw ConfigError("evaluation input is empty");

  EvalReport report = run_evaluation(items, options, *backends.llm);
  json out = json{{"judge", judge},
                  {"permutations", permutations},
                  {"seed", seed},
                  {"mode", best_of ? "best_of_n" : "paired_scores"}};
  out["report"] = report.to_json();
  std::string text = out.dump(2) + "\n";
  if (output_file.empty() || output_file == "-") {
    std::cout << text;
  } else {
    std::ofstream of(output_file, std::ios::binary | std::ios::trunc);
    of << text;
    std::cout << "report written to " << output_file << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"archpipe: architecture VQA dataset pipeline"};
  app.require_subcommand(1);

  GlobalArgs global;
  app.add_option("--workspace,-w", global.workspace, "workspace directory");
  app.add_flag("--dry-run", global.dry_run,
               "render prompts and plan calls without contacting backends");
  app.add_option("--dump-prompts", global.dump_prompts_dir,
                 "write dry-run prompts into this directory (implies --dry-run)");
  app.add_option("--workers", global.workers, "scene worker threads");

  // init -------------------------------------------------------------------
  auto* init = app.add_subcommand("init", "create a workspace from a scene manifest");
  std::string scenes_file;
  RunConfig init_config;
  std::string llm_kind = "stub", geometry_kind = "stub", sky_kind = "stub",
              segmentation_kind = "stub";
  std::string llm_dir, geometry_dir, sky_dir, segmentation_dir;
  bool no_cf = false, no_ff = false, no_lkc = false, no_wde = false;
  init->add_option("--scenes", scenes_file, "scene manifest (JSON array or JSONL)")
      ->required();
  init->add_option("--seed", init_config.seed, "global run seed");
  init->add_option("--workers", init_config.workers, "default worker count");
  init->add_option("--llm-concurrency", init_config.llm_concurrency,
                   "max in-flight text-model requests (0 = unlimited)");
  init->add_option("--alpha", init_config.filter.alpha, "confidence quantile level");
  init->add_option("--tau-c", init_config.filter.tau_c, "coarse survival threshold");
  init->add_option("--points", init_config.filter.point_count, "prompt points per image");
  init->add_option("--top-k", init_config.filter.top_k, "images kept per scene");
  init->add_option("--image-cap", init_config.filter.image_cap, "per-scene image cap");
  init->add_option("--ratio", init_config.split_ratio, "train split ratio");
  init->add_option("--detailed-words", init_config.annotate.detailed_words,
                   "target words for descriptions");
  init->add_option("--aspect-words", init_config.annotate.aspect_words,
                   "target words for aspect answers");
  init->add_option("--arch-dict", init_config.arch_dict_file,
                   "architectural keyword dictionary file");
  init->add_option("--nonarch-dict", init_config.nonarch_dict_file,
                   "non-architectural keyword dictionary file");
  init->add_option("--aspects-file", init_config.aspects_file,
                   "canonical aspect list file");
  init->add_option("--llm", llm_kind, "llm backend kind (stub|file|http)");
  init->add_option("--llm-dir", llm_dir, "llm file-backend directory");
  init->add_option("--geometry", geometry_kind, "geometry backend kind");
  init->add_option("--geometry-dir", geometry_dir, "geometry file-backend directory");
  init->add_option("--sky", sky_kind, "sky backend kind");
  init->add_option("--sky-dir", sky_dir, "sky file-backend directory");
  init->add_option("--segmentation", segmentation_kind, "segmentation backend kind");
  init->add_option("--segmentation-dir", segmentation_dir,
                   "segmentation file-backend directory");
  init->add_option("--stub-sky-fraction", init_config.sky.sky_fraction,
                   "stub sky: top-row fraction (<0 derives per image)");
  init->add_option("--stub-arch-deny", init_config.llm.arch_deny,
                   "stub llm: scene-name markers judged non-architectural");
  init->add_option("--stub-known-deny", init_config.llm.known_deny,
                   "stub llm: scene-name markers judged unknown");
  init->add_flag("--dump-masks", init_config.dump_masks,
                 "write sky/coarse/fine masks under <workspace>/masks/");
  init->add_flag("--no-cf", no_cf, "ablation: disable coarse filtering");
  init->add_flag("--no-ff", no_ff, "ablation: disable fine filtering");
  init->add_flag("--no-lkc", no_lkc, "ablation: disable the knowledge gate");
  init->add_flag("--no-wde", no_wde, "ablation: bypass the wiki-data extractor");

  // run --------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "run one pipeline stage (or `all`)");
  std::string stage;
  run->add_option("stage", stage, "classify|filter|verify|annotate|assemble|all")
      ->required()
      ->check(CLI::IsMember(
          {"classify", "filter", "verify", "annotate", "assemble", "all"}));

  // status -----------------------------------------------------------------
  auto* status = app.add_subcommand("status", "per-stage counts and drop reasons");

  // triage -----------------------------------------------------------------
  auto* triage = app.add_subcommand("triage", "manual screening marks");
  std::size_t sample_n = 0;
  std::string sample_out, apply_file;
  std::uint64_t triage_seed = 0;
  triage->add_option("--sample", sample_n, "sample N item ids into a marks file");
  triage->add_option("--out", sample_out, "marks file to write (with --sample)");
  triage->add_option("--seed", triage_seed, "sampling seed");
  triage->add_option("--apply", apply_file, "apply a marks file (item_id accept|reject)");

  // evaluate ---------------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate", "judge-based scoring and n-gram metrics");
  std::string eval_input, eval_output = "-", judge = "vanilla";
  int permutations = static_cast<int>(defaults().judge_permutations);
  std::uint64_t eval_seed = 0;
  bool best_of = false;
  std::vector<std::string> rubric_aspects = {"creativity", "level of detail",
                                             "logical consistency",
                                             "domain expertise"};
  std::string eval_backend = "stub", eval_backend_dir;
  evaluate->add_option("--input", eval_input, "JSONL of evaluation items")->required();
  evaluate->add_option("--output", eval_output, "report file ('-' for stdout)");
  evaluate->add_option("--judge", judge, "judge system prompt")
      ->check(CLI::IsMember({"vanilla", "architecture"}));
  evaluate->add_option("--permutations", permutations, "candidate orderings per item");
  evaluate->add_option("--seed", eval_seed, "evaluation seed");
  evaluate->add_flag("--best-of", best_of, "best-of-N preference voting");
  evaluate->add_option("--aspects", rubric_aspects, "rubric dimensions (best-of mode)");
  evaluate->add_option("--backend", eval_backend, "judge backend kind (stub|file|http)");
  evaluate->add_option("--backend-dir", eval_backend_dir, "judge file-backend directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (init->parsed()) {
      init_config.llm.kind = llm_kind;
      init_config.llm.dir = llm_dir;
      init_config.geometry.kind = geometry_kind;
      init_config.geometry.dir = geometry_dir;
      init_config.sky.kind = sky_kind;
      init_config.sky.dir = sky_dir;
      init_config.segmentation.kind = segmentation_kind;
      init_config.segmentation.dir = segmentation_dir;
      init_config.ablation.cf = !no_cf;
      init_config.ablation.ff = !no_ff && !no_cf;
      if (no_cf && !no_ff)
        log_warn("--no-cf implies --no-ff: fine filtering disabled");
      init_config.ablation.lkc = !no_lkc;
      init_config.ablation.wde = !no_wde;
      if (global.workspace.empty())
        throw ConfigError("--workspace is required for init");
      return run_init(global.workspace, scenes_file, init_config);
    }
    if (run->parsed()) return run_stage(global, stage);
    if (status->parsed()) {
      Workspace ws = open_workspace(global);
      std::cout << "config_hash=" << ws.config_hash() << "\n"
                << workspace_status(ws);
      return kExitOk;
    }
    if (triage->parsed()) {
      Workspace ws = open_workspace(global);
      std::cout << "config_hash=" << ws.config_hash() << "\n";
      check_prerequisites(ws, "triage");
      if (sample_n > 0) {
        if (sample_out.empty())
          throw ConfigError("--sample needs --out <marks file>");
        int n = triage_sample(ws, sample_n, triage_seed, sample_out);
        std::cout << "sampled " << n << " items into " << sample_out << "\n";
        return kExitOk;
      }
      if (!apply_file.empty()) {
        int n = triage_apply(ws, apply_file);
        std::cout << "applied " << n << " marks\n";
        return kExitOk;
      }
      throw ConfigError("triage needs --sample N --out FILE or --apply FILE");
    }
    if (evaluate->parsed())
      return run_evaluate_cmd(eval_input, eval_output, judge, permutations,
                              eval_seed, best_of, rubric_aspects, eval_backend,
                              eval_backend_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const WorkspaceError& e) {
    std::cerr << "workspace error: " << e.what() << "\n";
    auto text = std::string(e.what());
    return text.find("requires completed stage") != std::string::npos
               ? kExitPrerequisite
               : kExitConfig;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBackend;
  }
  return kExitOk;
}
