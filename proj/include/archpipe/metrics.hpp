#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace archpipe {

// Case-folded tokens split on whitespace and punctuation (any
// non-alphanumeric byte separates).
std::vector<std::string> metric_tokens(std::string_view text);

struct NgramMetrics {
  double gleu = 0.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double meteor_lite = 0.0;
};

// Sentence-level metrics between one hypothesis and one reference.
//   gleu        min(precision, recall) over the joint 1..4-gram multisets
//   rouge1/2    clipped unigram/bigram overlap F1
//   rougeL      LCS-based F1
//   meteor_lite unigram harmonic mean (recall-weighted 9:1) with exact+stem
//               matching and a fragmentation penalty of
//               0.5*((chunks-1)/matches)^3; no synonym dictionary. The
//               penalty is zero for a contiguous alignment so that
//               meteor_lite(x,x) == 1; this differs from canonical METEOR
//               and is reported under the distinct "meteor_lite" label.
// Empty hypothesis or reference yields all zeros with a warning.
NgramMetrics ngram_metrics(std::string_view hypothesis, std::string_view reference);

// Longest common subsequence length over token sequences.
std::size_t lcs_length(const std::vector<std::string>& a,
                       const std::vector<std::string>& b);

// The suffix-stripping stemmer used by meteor_lite.
std::string lite_stem(std::string_view token);

}  // namespace archpipe
