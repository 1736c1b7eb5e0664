#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "archpipe/backends.hpp"

namespace archpipe {

// Deterministic text backend. Replies are pure functions of (prompt, seed):
// scripted replies keyed on the prompt's FNV-1a hash take precedence, then a
// synthesizer that recognizes the bundled templates and fabricates plausible,
// validation-passing replies. Optional marker lists steer the Yes/No gates so
// fixtures can exercise every path.
class StubLlm : public LlmBackend {
 public:
  struct Options {
    // Scene-name markers (case-insensitive substrings) answered "No" by the
    // architectural-structure gate.
    std::vector<std::string> arch_deny;
    // Scene-name markers answered "NO" by the knowledge gate.
    std::vector<std::string> known_deny;
  };

  StubLlm() = default;
  explicit StubLlm(Options opts) : opts_(std::move(opts)) {}

  // Exact-prompt script; the stub replies with `reply` whenever the prompt
  // hashes to the same value.
  void script(const std::string& prompt, const std::string& reply);
  void script_hash(std::uint64_t prompt_hash, const std::string& reply);

  // Fault injection: the next `n` calls fail with a retryable error.
  void fail_next(int n);

  LLMResponse complete_once(const LLMRequest& req) override;
  std::string id() const override { return "stub-llm"; }

  int calls() const { return calls_; }

 private:
  std::string synthesize(const LLMRequest& req) const;

  Options opts_;
  std::map<std::uint64_t, std::string> scripted_;
  std::mutex mutex_;
  int fail_budget_ = 0;
  int calls_ = 0;
};

// Hash-derived confidence maps with a per-image quality bias, so that some
// images in a scene read as well-reconstructed and others as poor.
class StubGeometry : public GeometryBackend {
 public:
  explicit StubGeometry(std::uint64_t seed = 0, double constant = -1.0)
      : seed_(seed), constant_(constant) {}

  ConfidenceBatch confidence_batch(const std::string& scene_id,
                                   const std::vector<ImageRef>& images) override;
  std::string id() const override { return "stub-geometry"; }

 private:
  std::uint64_t seed_;
  double constant_;  // >= 0 forces a uniform constant map
};

// Marks the top `fraction` of rows as sky. fraction < 0 derives a per-image
// fraction in {0, .1, .2, .3} from the image id.
class StubSky : public SkyBackend {
 public:
  explicit StubSky(double fraction = 0.0, std::uint64_t seed = 0)
      : fraction_(fraction), seed_(seed) {}

  BinaryMask sky_mask(const ImageRef& image) override;
  std::string id() const override { return "stub-sky"; }

 private:
  double fraction_;
  std::uint64_t seed_;
};

// Returns the morphological dilation of the prompt points (square structuring
// element with the given radius; radius 1 is the 3x3 dilation).
class StubSegmentation : public SegmentationBackend {
 public:
  explicit StubSegmentation(std::uint32_t radius = 1) : radius_(radius) {}

  BinaryMask fine_mask(const ImageRef& image,
                       const std::vector<Point>& points) override;
  std::string id() const override { return "stub-segmentation"; }

 private:
  std::uint32_t radius_;
};

}  // namespace archpipe
