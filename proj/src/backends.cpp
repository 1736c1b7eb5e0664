#include "archpipe/backends.hpp"

#include <condition_variable>
#include <mutex>
#include <thread>

#include "archpipe/errors.hpp"
#include "archpipe/util.hpp"

namespace archpipe {

struct LlmClient::Limiter {
  explicit Limiter(int max) : slots(max) {}
  std::mutex mutex;
  std::condition_variable cv;
  int slots;

  void acquire() {
    std::unique_lock<std::mutex> lock(mutex);
    cv.wait(lock, [&] { return slots > 0; });
    --slots;
  }
  void release() {
    {
      std::lock_guard<std::mutex> lock(mutex);
      ++slots;
    }
    cv.notify_one();
  }
};

LlmClient::LlmClient(std::shared_ptr<LlmBackend> backend, RetryPolicy policy,
                     AuditLog* audit, int max_concurrent, Sleeper sleeper)
    : backend_(std::move(backend)),
      policy_(policy),
      audit_(audit),
      sleeper_(std::move(sleeper)) {
  if (!sleeper_)
    sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (max_concurrent > 0) limiter_ = std::make_shared<Limiter>(max_concurrent);
}

LLMResponse LlmClient::complete(const LLMRequest& req, const std::string& stage,
                                const std::string& scene_id) {
  if (req.prompt.empty())
    throw BackendError(BackendError::Kind::bad_request, "empty prompt");

  const std::uint64_t phash = fnv1a64(req.prompt);
  auto backoff = policy_.initial_backoff;
  for (int attempt = 1; attempt <= policy_.attempts; ++attempt) {
    if (limiter_) limiter_->acquire();
    try {
      auto start = std::chrono::steady_clock::now();
      LLMResponse resp = backend_->complete_once(req);
      resp.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      resp.attempts = attempt;
      if (resp.backend_id.empty()) resp.backend_id = backend_->id();
      if (limiter_) limiter_->release();
      if (audit_) audit_->call(stage, scene_id, phash, attempt, "ok");
      return resp;
    } catch (const BackendError& e) {
      if (limiter_) limiter_->release();
      if (audit_) audit_->call(stage, scene_id, phash, attempt, "error");
      if (!e.retryable() || attempt == policy_.attempts) throw;
      sleeper_(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) * policy_.multiplier));
    }
  }
  throw BackendError(BackendError::Kind::unreachable, "retries exhausted");
}

void require_dims(const ConfidenceMap& map) {
  if (!map.dims_match())
    throw BackendError(BackendError::Kind::dimension_mismatch,
                       "confidence map dims != image dims for " + map.image.image_id);
  for (float v : map.values)
    if (!(v >= 0.0f && v <= 1.0f))
      throw BackendError(BackendError::Kind::bad_request,
                         "confidence value outside [0,1] for " + map.image.image_id);
}

void require_dims(const BinaryMask& mask) {
  if (!mask.dims_match())
    throw BackendError(BackendError::Kind::dimension_mismatch,
                       "mask dims != image dims for " + mask.image.image_id);
  for (auto b : mask.bits)
    if (b > 1)
      throw BackendError(BackendError::Kind::bad_request,
                         "mask bit outside {0,1} for " + mask.image.image_id);
}

void require_points_in_bounds(const ImageRef& image,
                              const std::vector<Point>& points) {
  for (const auto& p : points)
    if (p.x >= image.width || p.y >= image.height)
      throw BackendError(BackendError::Kind::point_out_of_bounds,
                         "prompt point outside image " + image.image_id);
}

}  // namespace archpipe
