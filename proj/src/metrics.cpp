#include "archpipe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "archpipe/util.hpp"

namespace archpipe {

std::vector<std::string> metric_tokens(std::string_view text) {
  return alnum_tokens(text);
}

std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string lite_stem(std::string_view token) {
  std::string t(token);
  auto ends_with = [&](std::string_view suf) {
    return t.size() > suf.size() &&
           t.compare(t.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (t.size() > 5 && ends_with("ing")) return t.substr(0, t.size() - 3);
  if (t.size() > 4 && ends_with("ed")) return t.substr(0, t.size() - 2);
  if (t.size() > 4 && ends_with("ly")) return t.substr(0, t.size() - 2);
  if (t.size() > 4 && ends_with("es")) return t.substr(0, t.size() - 2);
  if (t.size() > 3 && ends_with("s")) return t.substr(0, t.size() - 1);
  return t;
}

namespace {

using Counter = std::map<std::vector<std::string>, std::size_t>;

void add_ngrams(const std::vector<std::string>& tokens, std::size_t n,
                Counter& counter, std::size_t& total) {
  if (tokens.size() < n) return;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string> gram(tokens.begin() + i, tokens.begin() + i + n);
    ++counter[std::move(gram)];
    ++total;
  }
}

double overlap_f1(const std::vector<std::string>& hyp,
                  const std::vector<std::string>& ref, std::size_t n) {
  Counter hc, rc;
  std::size_t htotal = 0, rtotal = 0;
  add_ngrams(hyp, n, hc, htotal);
  add_ngrams(ref, n, rc, rtotal);
  if (htotal == 0 || rtotal == 0) return 0.0;
  std::size_t match = 0;
  for (const auto& [gram, count] : hc) {
    auto it = rc.find(gram);
    if (it != rc.end()) match += std::min(count, it->second);
  }
  if (match == 0) return 0.0;
  double p = static_cast<double>(match) / static_cast<double>(htotal);
  double r = static_cast<double>(match) / static_cast<double>(rtotal);
  return 2.0 * p * r / (p + r);
}

double gleu_score(const std::vector<std::string>& hyp,
                  const std::vector<std::string>& ref) {
  Counter hc, rc;
  std::size_t htotal = 0, rtotal = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    add_ngrams(hyp, n, hc, htotal);
    add_ngrams(ref, n, rc, rtotal);
  }
  if (htotal == 0 || rtotal == 0) return 0.0;
  std::size_t match = 0;
  for (const auto& [gram, count] : hc) {
    auto it = rc.find(gram);
    if (it != rc.end()) match += std::min(count, it->second);
  }
  double p = static_cast<double>(match) / static_cast<double>(htotal);
  double r = static_cast<double>(match) / static_cast<double>(rtotal);
  return std::min(p, r);
}

double rouge_l(const std::vector<std::string>& hyp,
               const std::vector<std::string>& ref) {
  if (hyp.empty() || ref.empty()) return 0.0;
  double lcs = static_cast<double>(lcs_length(hyp, ref));
  if (lcs == 0.0) return 0.0;
  double p = lcs / static_cast<double>(hyp.size());
  double r = lcs / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

double meteor_lite_score(const std::vector<std::string>& hyp,
                         const std::vector<std::string>& ref) {
  if (hyp.empty() || ref.empty()) return 0.0;

  // Two-stage greedy alignment: exact tokens first, then stems. match_of[i]
  // is the reference position aligned to hypothesis position i.
  std::vector<int> match_of(hyp.size(), -1);
  std::vector<bool> ref_used(ref.size(), false);
  for (std::size_t i = 0; i < hyp.size(); ++i)
    for (std::size_t j = 0; j < ref.size(); ++j)
      if (!ref_used[j] && hyp[i] == ref[j]) {
        match_of[i] = static_cast<int>(j);
        ref_used[j] = true;
        break;
      }
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    if (match_of[i] >= 0) continue;
    std::string hs = lite_stem(hyp[i]);
    for (std::size_t j = 0; j < ref.size(); ++j)
      if (!ref_used[j] && hs == lite_stem(ref[j])) {
        match_of[i] = static_cast<int>(j);
        ref_used[j] = true;
        break;
      }
  }

  std::size_t matches = 0;
  std::size_t chunks = 0;
  int prev = -2;
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    if (match_of[i] < 0) {
      prev = -2;
      continue;
    }
    ++matches;
    if (match_of[i] != prev + 1) ++chunks;
    prev = match_of[i];
  }
  if (matches == 0) return 0.0;

  double p = static_cast<double>(matches) / static_cast<double>(hyp.size());
  double r = static_cast<double>(matches) / static_cast<double>(ref.size());
  double fmean = 10.0 * p * r / (r + 9.0 * p);
  double frag = static_cast<double>(chunks - 1) / static_cast<double>(matches);
  double penalty = 0.5 * frag * frag * frag;
  return fmean * (1.0 - penalty);
}

}  // namespace

NgramMetrics ngram_metrics(std::string_view hypothesis,
                           std::string_view reference) {
  NgramMetrics m;
  auto hyp = metric_tokens(hypothesis);
  auto ref = metric_tokens(reference);
  if (hyp.empty() || ref.empty()) {
    log_warn("ngram_metrics: empty hypothesis or reference, all metrics 0");
    return m;
  }
  m.gleu = gleu_score(hyp, ref);
  m.rouge1 = overlap_f1(hyp, ref, 1);
  m.rouge2 = overlap_f1(hyp, ref, 2);
  m.rougeL = rouge_l(hyp, ref);
  m.meteor_lite = meteor_lite_score(hyp, ref);
  return m;
}

}  // namespace archpipe
