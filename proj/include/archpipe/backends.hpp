#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "archpipe/audit.hpp"
#include "archpipe/types.hpp"

namespace archpipe {

struct LLMRequest {
  std::string prompt;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  int max_tokens = 1024;
};

struct LLMResponse {
  std::string text;  // verbatim backend text, never trimmed here
  std::string backend_id;
  std::chrono::milliseconds latency{0};
  int attempts = 1;
};

class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual LLMResponse complete_once(const LLMRequest& req) = 0;
  virtual std::string id() const = 0;
};

struct ConfidenceBatch {
  // One entry per requested image, same order; nullopt marks a per-image
  // failure (partial batch) that the caller may drop or retry.
  std::vector<std::optional<ConfidenceMap>> maps;
  // Opaque reconstruction artifact; stored, never interpreted.
  std::vector<std::uint8_t> artifact;
};

class GeometryBackend {
 public:
  virtual ~GeometryBackend() = default;
  virtual ConfidenceBatch confidence_batch(const std::string& scene_id,
                                           const std::vector<ImageRef>& images) = 0;
  virtual std::string id() const = 0;
};

class SkyBackend {
 public:
  virtual ~SkyBackend() = default;
  virtual BinaryMask sky_mask(const ImageRef& image) = 0;
  virtual std::string id() const = 0;
};

class SegmentationBackend {
 public:
  virtual ~SegmentationBackend() = default;
  virtual BinaryMask fine_mask(const ImageRef& image,
                               const std::vector<Point>& points) = 0;
  virtual std::string id() const = 0;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
};

// Wraps an LlmBackend with retry/backoff, audit logging of every attempt,
// and an optional concurrent-request cap. Shareable across scene workers.
class LlmClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  LlmClient(std::shared_ptr<LlmBackend> backend, RetryPolicy policy,
            AuditLog* audit = nullptr, int max_concurrent = 0,
            Sleeper sleeper = nullptr);

  // Retries transport failures per policy; throws after the final attempt.
  // Precondition: non-empty prompt.
  LLMResponse complete(const LLMRequest& req, const std::string& stage,
                       const std::string& scene_id);

  const RetryPolicy& policy() const { return policy_; }

 private:
  std::shared_ptr<LlmBackend> backend_;
  RetryPolicy policy_;
  AuditLog* audit_;
  Sleeper sleeper_;
  struct Limiter;
  std::shared_ptr<Limiter> limiter_;
};

// Boundary checks shared by all adapters.
void require_dims(const ConfidenceMap& map);
void require_dims(const BinaryMask& mask);
void require_points_in_bounds(const ImageRef& image,
                              const std::vector<Point>& points);

// Bundle handed to pipeline stages.
struct Backends {
  std::shared_ptr<LlmClient> llm;
  std::shared_ptr<GeometryBackend> geometry;
  std::shared_ptr<SkyBackend> sky;
  std::shared_ptr<SegmentationBackend> segmentation;
  AuditLog* audit = nullptr;
};

}  // namespace archpipe
