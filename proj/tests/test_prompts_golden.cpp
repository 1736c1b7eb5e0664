#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "archpipe/annotate.hpp"
#include "archpipe/evaluate.hpp"
#include "archpipe/prompts.hpp"
#include "archpipe/scene_curation.hpp"
#include "archpipe/text_verify.hpp"

using namespace archpipe;

namespace {

std::string golden(const std::string& name) {
  std::filesystem::path file = std::filesystem::path(ARCHPIPE_SOURCE_DIR) /
                               "tests" / "golden" / "prompts" /
                               (name + ".golden.txt");
  std::ifstream in(file, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing golden file " << file.string());
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

SceneRecord fixture_scene() {
  SceneRecord s;
  s.scene_id = "arc_de_triomf";
  s.scene_name = "Arc de Triomf";
  s.taxonomy = {"triumphal arches", "Barcelona"};
  s.raw_wiki_text =
      "The Arc de Triomf is a triumphal arch in Barcelona built as the main "
      "access gate for the 1888 Barcelona World Fair";
  return s;
}

RefinedMetadata fixture_metadata() {
  RefinedMetadata md;
  md.formal_name = "Arc de Triomf";
  md.location = "Spain";
  md.year = "1888";
  md.refined_description = "A reddish brickwork triumphal arch in Neo-Mudejar style.";
  return md;
}

}  // namespace

TEST_SUITE("prompts_golden") {

TEST_CASE("scene classification prompt") {
  CHECK(render_classify_prompt(fixture_scene()) == golden("scene_classify"));
}

TEST_CASE("knowledge-gate prompt") {
  CHECK(render_known_check_prompt(fixture_scene()) == golden("known_check"));
}

TEST_CASE("description extractor prompt") {
  CHECK(render_extract_description_prompt(fixture_scene()) ==
        golden("extract_description"));
}

TEST_CASE("name extractor prompt") {
  CHECK(render_extract_name_prompt(fixture_scene()) == golden("extract_name"));
}

TEST_CASE("country/year extractor prompt") {
  CHECK(render_extract_country_year_prompt(fixture_scene(), "Arc de Triomf") ==
        golden("extract_country_year"));
}

TEST_CASE("detailed description prompt") {
  const auto& pool = description_question_pool();
  CHECK(render_description_prompt(fixture_metadata(), pool[0], 150) ==
        golden("description_answer"));
}

TEST_CASE("aspect selection prompt") {
  CHECK(render_aspect_select_prompt(fixture_metadata()) == golden("aspect_select"));
}

TEST_CASE("aspect question prompt") {
  CHECK(render_aspect_question_prompt(fixture_metadata(), "architectural style") ==
        golden("aspect_question"));
}

TEST_CASE("aspect answer prompt") {
  CHECK(render_aspect_answer_prompt(fixture_metadata(), "architectural style", 100) ==
        golden("aspect_answer"));
}

TEST_CASE("judge system prompts are byte-exact") {
  JudgeConfig vanilla;
  vanilla.system_prompt = JudgePromptKind::vanilla;
  CHECK(vanilla.system_prompt_text() == golden("judge_vanilla_system"));
  JudgeConfig architecture;
  architecture.system_prompt = JudgePromptKind::architecture;
  CHECK(architecture.system_prompt_text() == golden("judge_architecture_system"));
}

TEST_CASE("rendered pairwise judge prompt") {
  JudgeConfig cfg;
  CHECK(render_judge_pair_prompt(cfg, "What architectural style is shown?",
                                 "Neo-Mudejar brick arch.",
                                 "A brick triumphal arch.",
                                 "A Gothic cathedral.") ==
        golden("judge_pair_user"));
}

TEST_CASE("rendered best-of judge prompt with aspect rubric") {
  JudgeConfig cfg;
  cfg.system_prompt = JudgePromptKind::architecture;
  CHECK(render_judge_best_of_prompt(cfg, "What architectural style is shown?",
                                    "level of detail",
                                    {"A brick triumphal arch.",
                                     "A Gothic cathedral."}) ==
        golden("judge_best_of_user"));
}

TEST_CASE("question pool carries the sixteen bundled templates") {
  const auto& pool = description_question_pool();
  REQUIRE(pool.size() == 16);
  CHECK(pool[0] ==
        "Describe the architectural features and design elements of the "
        "architecture in the following image in detail.");
  CHECK(pool[15] ==
        "Carefully observe the building in the image and share the details of "
        "its architectural design and features.");
}

TEST_CASE("canonical aspect list is the bundled seven") {
  const auto& aspects = canonical_aspects();
  REQUIRE(aspects.size() == 7);
  CHECK(aspects[0] == "architectural style");
  CHECK(aspects[6] == "architectural materials");
}

}  // TEST_SUITE
