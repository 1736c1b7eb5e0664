#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "archpipe/backends.hpp"
#include "archpipe/metrics.hpp"
#include "archpipe/types.hpp"

namespace archpipe {

enum class JudgePromptKind { vanilla, architecture };

struct JudgeConfig {
  JudgePromptKind system_prompt = JudgePromptKind::vanilla;
  int permutations = 2;
  int score_min = 0;
  int score_max = 10;
  std::uint64_t seed = 0;

  const std::string& system_prompt_text() const;
};

enum class VerdictMode { paired_scores, best_of_n };

struct Verdict {
  std::string item_id;
  VerdictMode mode = VerdictMode::paired_scores;
  std::optional<std::pair<int, int>> scores;  // paired_scores only
  std::optional<std::string> winner;          // best_of_n only, candidate id
  int permutation_index = 0;
  std::string aspect;
  std::string raw_reply;
  bool valid = true;
};

// First-line parser for paired scores: exactly two whitespace-separated
// integer tokens; values outside [0,10] are clamped with a warning.
std::optional<std::pair<int, int>> parse_score_line(std::string_view reply,
                                                    int lo, int hi);

// First-line parser for best-of votes: exactly one integer token anywhere in
// the first line, in [1, candidate_count].
std::optional<int> parse_vote_line(std::string_view reply, int candidate_count);

// Candidate presentation order for one permutation: a seeded shuffle of the
// name-sorted candidates, rotated left by the permutation index so every
// permutation sees a different order.
std::vector<std::string> permuted_order(const std::vector<std::string>& names,
                                        std::uint64_t seed, int permutation);

std::string render_judge_pair_prompt(const JudgeConfig& cfg,
                                     const std::string& question,
                                     const std::string& reference,
                                     const std::string& answer_1,
                                     const std::string& answer_2);

std::string render_judge_best_of_prompt(const JudgeConfig& cfg,
                                        const std::string& question,
                                        const std::string& aspect,
                                        const std::vector<std::string>& answers);

// Scores two answers against the reference; one re-ask on an unparseable
// first line, then the verdict is marked invalid (excluded from aggregates
// but counted).
Verdict judge_pair(const std::string& item_id, const std::string& question,
                   const std::string& reference, const std::string& answer_a,
                   const std::string& answer_b, const JudgeConfig& cfg,
                   LlmClient& llm);

// Best-of-N vote per permutation over anonymized candidates; winners are
// mapped back to candidate ids through the permutation.
std::vector<Verdict> judge_best_of(const std::string& item_id,
                                   const std::string& question,
                                   const std::map<std::string, std::string>& candidates,
                                   const std::string& aspect,
                                   const JudgeConfig& cfg, LlmClient& llm);

struct PreferenceCell {
  std::size_t wins = 0;
  double share = 0.0;  // within-aspect share of valid verdicts, percent
};

// (aspect, candidate) -> wins and within-aspect share. Invalid verdicts are
// excluded from the denominator; aspects with zero valid verdicts produce an
// empty row with a warning.
std::map<std::string, std::map<std::string, PreferenceCell>> tally_preferences(
    const std::vector<Verdict>& verdicts);

struct EvalItem {
  std::string item_id;
  std::string question;
  std::string reference;
  std::map<std::string, std::string> candidates;  // name -> answer
};

std::vector<EvalItem> load_eval_items(std::istream& in);

struct EvalReport {
  json to_json() const;
  std::vector<Verdict> verdicts;
  std::map<std::string, std::pair<double, std::size_t>> score_aggregates;
  std::map<std::string, std::map<std::string, PreferenceCell>> preferences;
  std::map<std::string, NgramMetrics> metric_means;  // candidate -> means
  std::size_t invalid_verdicts = 0;
};

struct EvalOptions {
  JudgeConfig judge;
  bool best_of = false;
  std::vector<std::string> aspects;  // rubric dimensions for best-of mode
};

EvalReport run_evaluation(const std::vector<EvalItem>& items,
                          const EvalOptions& options, LlmClient& llm);

}  // namespace archpipe
