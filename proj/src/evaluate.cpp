#include "archpipe/evaluate.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <set>
#include <sstream>

#include "archpipe/errors.hpp"
#include "archpipe/prompts.hpp"
#include "archpipe/resources.hpp"
#include "archpipe/util.hpp"

namespace archpipe {

const std::string& JudgeConfig::system_prompt_text() const {
  static const std::string vanilla(
      resource_text("prompts/judge_vanilla_system.txt"));
  static const std::string architecture(
      resource_text("prompts/judge_architecture_system.txt"));
  return system_prompt == JudgePromptKind::vanilla ? vanilla : architecture;
}

namespace {

std::string_view first_line(std::string_view reply) {
  auto nl = reply.find('\n');
  return nl == std::string_view::npos ? reply : reply.substr(0, nl);
}

std::vector<std::string> whitespace_tokens(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::optional<int> parse_int_token(const std::string& tok) {
  if (tok.empty()) return std::nullopt;
  std::size_t i = tok[0] == '-' ? 1 : 0;
  if (i == tok.size()) return std::nullopt;
  long v = 0;
  for (; i < tok.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(tok[i]))) return std::nullopt;
    v = v * 10 + (tok[i] - '0');
    if (v > 1000000) return std::nullopt;
  }
  return static_cast<int>(tok[0] == '-' ? -v : v);
}

}  // namespace

std::optional<std::pair<int, int>> parse_score_line(std::string_view reply,
                                                    int lo, int hi) {
  auto tokens = whitespace_tokens(first_line(reply));
  if (tokens.size() != 2) return std::nullopt;
  auto a = parse_int_token(tokens[0]);
  auto b = parse_int_token(tokens[1]);
  if (!a || !b) return std::nullopt;
  auto clamp_score = [&](int v) {
    if (v < lo || v > hi) {
      log_warn("judge score " + std::to_string(v) + " outside [" +
               std::to_string(lo) + "," + std::to_string(hi) + "], clamped");
      return std::clamp(v, lo, hi);
    }
    return v;
  };
  return std::make_pair(clamp_score(*a), clamp_score(*b));
}

std::optional<int> parse_vote_line(std::string_view reply, int candidate_count) {
  auto tokens = whitespace_tokens(first_line(reply));
  std::vector<int> ints;
  for (const auto& t : tokens)
    if (auto v = parse_int_token(t)) ints.push_back(*v);
  if (ints.size() != 1) return std::nullopt;
  if (ints[0] < 1 || ints[0] > candidate_count) return std::nullopt;
  return ints[0];
}

std::vector<std::string> permuted_order(const std::vector<std::string>& names,
                                        std::uint64_t seed, int permutation) {
  std::vector<std::string> order = names;
  std::sort(order.begin(), order.end());
  seeded_shuffle(order, seed);
  if (!order.empty()) {
    auto shift = static_cast<std::size_t>(permutation) % order.size();
    std::rotate(order.begin(), order.begin() + shift, order.end());
  }
  return order;
}

std::string render_judge_pair_prompt(const JudgeConfig& cfg,
                                     const std::string& question,
                                     const std::string& reference,
                                     const std::string& answer_1,
                                     const std::string& answer_2) {
  return prompt_template(prompt_ids::judge_pair_user)
      .render({{"system_prompt", cfg.system_prompt_text()},
               {"question", question},
               {"reference", reference},
               {"answer_1", answer_1},
               {"answer_2", answer_2}});
}

std::string render_judge_best_of_prompt(const JudgeConfig& cfg,
                                        const std::string& question,
                                        const std::string& aspect,
                                        const std::vector<std::string>& answers) {
  std::string blocks;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    std::string n = std::to_string(i + 1);
    if (i) blocks += "\n\n";
    blocks += "[The Start of Assistant " + n + "'s Answer]\n" + answers[i] +
              "\n[The End of Assistant " + n + "'s Answer]";
  }
  return prompt_template(prompt_ids::judge_best_of_user)
      .render({{"system_prompt", cfg.system_prompt_text()},
               {"candidate_count", std::to_string(answers.size())},
               {"aspect", aspect},
               {"question", question},
               {"candidate_blocks", blocks}});
}

Verdict judge_pair(const std::string& item_id, const std::string& question,
                   const std::string& reference, const std::string& answer_a,
                   const std::string& answer_b, const JudgeConfig& cfg,
                   LlmClient& llm) {
  Verdict v;
  v.item_id = item_id;
  v.mode = VerdictMode::paired_scores;

  LLMRequest req;
  req.prompt = render_judge_pair_prompt(cfg, question, reference, answer_a, answer_b);
  req.seed = derive_seed(cfg.seed, item_id, "judge_pair");
  for (int ask = 0; ask < 2; ++ask) {
    auto resp = llm.complete(req, "evaluate", item_id);
    v.raw_reply = resp.text;
    if (auto scores = parse_score_line(resp.text, cfg.score_min, cfg.score_max)) {
      v.scores = scores;
      return v;
    }
    req.seed += 1;
  }
  v.valid = false;
  return v;
}

std::vector<Verdict> judge_best_of(
    const std::string& item_id, const std::string& question,
    const std::map<std::string, std::string>& candidates,
    const std::string& aspect, const JudgeConfig& cfg, LlmClient& llm) {
  if (candidates.size() < 2)
    throw ConfigError("best-of judging needs at least 2 candidates");

  std::vector<std::string> names;
  for (const auto& [name, _] : candidates) names.push_back(name);
  std::uint64_t order_seed = derive_seed(cfg.seed, item_id, "order:" + aspect);

  std::vector<Verdict> verdicts;
  for (int p = 0; p < cfg.permutations; ++p) {
    std::vector<std::string> order = permuted_order(names, order_seed, p);
    std::vector<std::string> answers;
    for (const auto& name : order) answers.push_back(candidates.at(name));

    Verdict v;
    v.item_id = item_id;
    v.mode = VerdictMode::best_of_n;
    v.permutation_index = p;
    v.aspect = aspect;

    LLMRequest req;
    req.prompt = render_judge_best_of_prompt(cfg, question, aspect, answers);
    req.seed = derive_seed(cfg.seed, item_id, "vote:" + aspect) + static_cast<std::uint64_t>(p);
    bool decided = false;
    for (int ask = 0; ask < 2 && !decided; ++ask) {
      auto resp = llm.complete(req, "evaluate", item_id);
      v.raw_reply = resp.text;
      if (auto vote = parse_vote_line(resp.text, static_cast<int>(order.size()))) {
        v.winner = order[static_cast<std::size_t>(*vote - 1)];
        decided = true;
      }
      req.seed += 1;
    }
    if (!decided) v.valid = false;
    verdicts.push_back(std::move(v));
  }
  return verdicts;
}

std::map<std::string, std::map<std::string, PreferenceCell>> tally_preferences(
    const std::vector<Verdict>& verdicts) {
  std::map<std::string, std::map<std::string, PreferenceCell>> table;
  std::map<std::string, std::size_t> valid_per_aspect;
  std::set<std::string> aspects_seen;

  for (const auto& v : verdicts) {
    if (v.mode != VerdictMode::best_of_n) continue;
    aspects_seen.insert(v.aspect);
    if (!v.valid || !v.winner) continue;
    ++table[v.aspect][*v.winner].wins;
    ++valid_per_aspect[v.aspect];
  }
  for (const auto& aspect : aspects_seen) {
    if (valid_per_aspect[aspect] == 0) {
      log_warn("aspect '" + aspect + "' has no valid verdicts");
      table[aspect];  // empty row
      continue;
    }
    double denom = static_cast<double>(valid_per_aspect[aspect]);
    for (auto& [_, cell] : table[aspect])
      cell.share = 100.0 * static_cast<double>(cell.wins) / denom;
  }
  return table;
}

std::vector<EvalItem> load_eval_items(std::istream& in) {
  std::vector<EvalItem> items;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j = json::parse(line);
    EvalItem item;
    item.item_id = j.at("item_id").get<std::string>();
    item.question = j.at("question").get<std::string>();
    item.reference = j.value("reference", "");
    for (const auto& [name, answer] : j.at("candidates").items())
      item.candidates[name] = answer.get<std::string>();
    items.push_back(std::move(item));
  }
  return items;
}

EvalReport run_evaluation(const std::vector<EvalItem>& items,
                          const EvalOptions& options, LlmClient& llm) {
  EvalReport report;

  // Auxiliary n-gram metrics against the reference.
  std::map<std::string, NgramMetrics> sums;
  std::map<std::string, std::size_t> counts;
  for (const auto& item : items) {
    if (item.reference.empty()) continue;
    for (const auto& [name, answer] : item.candidates) {
      NgramMetrics m = ngram_metrics(answer, item.reference);
      auto& s = sums[name];
      s.gleu += m.gleu;
      s.rouge1 += m.rouge1;
      s.rouge2 += m.rouge2;
      s.rougeL += m.rougeL;
      s.meteor_lite += m.meteor_lite;
      ++counts[name];
    }
  }
  for (auto& [name, s] : sums) {
    double n = static_cast<double>(counts[name]);
    report.metric_means[name] = {s.gleu / n, s.rouge1 / n, s.rouge2 / n,
                                 s.rougeL / n, s.meteor_lite / n};
  }

  if (options.best_of) {
    for (const auto& item : items) {
      for (const auto& aspect : options.aspects) {
        auto verdicts = judge_best_of(item.item_id, item.question,
                                      item.candidates, aspect, options.judge, llm);
        for (auto& v : verdicts) {
          if (!v.valid) ++report.invalid_verdicts;
          report.verdicts.push_back(std::move(v));
        }
      }
    }
    report.preferences = tally_preferences(report.verdicts);
    return report;
  }

  // Paired scoring: every permutation swaps the presentation order.
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& item : items) {
    if (item.candidates.size() != 2)
      throw ConfigError("paired scoring needs exactly 2 candidates per item (item " +
                        item.item_id + ")");
    std::vector<std::string> names;
    for (const auto& [name, _] : item.candidates) names.push_back(name);
    std::uint64_t order_seed = derive_seed(options.judge.seed, item.item_id, "order");

    for (int p = 0; p < options.judge.permutations; ++p) {
      auto order = permuted_order(names, order_seed, p);
      Verdict v = judge_pair(item.item_id + "#p" + std::to_string(p), item.question,
                             item.reference, item.candidates.at(order[0]),
                             item.candidates.at(order[1]), options.judge, llm);
      v.permutation_index = p;
      if (v.valid && v.scores) {
        acc[order[0]].first += v.scores->first;
        acc[order[0]].second += 1;
        acc[order[1]].first += v.scores->second;
        acc[order[1]].second += 1;
      } else {
        ++report.invalid_verdicts;
      }
      report.verdicts.push_back(std::move(v));
    }
  }
  for (const auto& [name, sum_count] : acc)
    report.score_aggregates[name] = {
        sum_count.second ? sum_count.first / static_cast<double>(sum_count.second) : 0.0,
        sum_count.second};
  return report;
}

json EvalReport::to_json() const {
  json verdicts_json = json::array();
  for (const auto& v : verdicts) {
    json jv{{"item_id", v.item_id},
            {"mode", v.mode == VerdictMode::paired_scores ? "paired_scores"
                                                          : "best_of_n"},
            {"permutation_index", v.permutation_index},
            {"valid", v.valid}};
    if (!v.aspect.empty()) jv["aspect"] = v.aspect;
    if (v.scores) jv["scores"] = json::array({v.scores->first, v.scores->second});
    if (v.winner) jv["winner"] = *v.winner;
    jv["raw_reply"] = v.raw_reply;
    verdicts_json.push_back(std::move(jv));
  }

  json aggregates = json::object();
  for (const auto& [name, mean_count] : score_aggregates)
    aggregates[name] = json{{"mean", mean_count.first},
                            {"valid_count", mean_count.second}};

  json prefs = json::object();
  for (const auto& [aspect, row] : preferences) {
    json r = json::object();
    for (const auto& [cand, cell] : row)
      r[cand] = json{{"wins", cell.wins}, {"share_pct", cell.share}};
    prefs[aspect] = std::move(r);
  }

  json metrics = json::object();
  for (const auto& [name, m] : metric_means)
    metrics[name] = json{{"gleu", m.gleu},
                         {"rouge1", m.rouge1},
                         {"rouge2", m.rouge2},
                         {"rougeL", m.rougeL},
                         {"meteor_lite", m.meteor_lite}};

  return json{{"verdicts", std::move(verdicts_json)},
              {"score_aggregates", std::move(aggregates)},
              {"preferences", std::move(prefs)},
              {"metrics", std::move(metrics)},
              {"invalid_verdicts", invalid_verdicts}};
}

}  // namespace archpipe
