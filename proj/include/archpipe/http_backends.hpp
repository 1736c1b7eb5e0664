#pragma once

#include <string>

#include "archpipe/backends.hpp"

namespace archpipe {

// JSON-over-HTTP adapters. Endpoints (all POST):
//   /complete    {prompt, temperature, seed, max_tokens} -> {text}
//   /confidence  {scene_id, image_ids:[...]}
//                -> {maps:{image_id: base64 f32le payload}, artifact: base64}
//   /sky         {image_id} -> {mask: base64 u8 payload}
//   /segment     {image_id, points:[[x,y],...]} -> {mask: base64 u8 payload}
// Payload dims are those of the requesting image; mismatches are rejected at
// the boundary. An optional API key is sent as a bearer token.

struct HttpOptions {
  std::string base_url;  // e.g. http://localhost:8080
  std::string api_key;
  int timeout_seconds = 30;
};

class HttpLlm : public LlmBackend {
 public:
  explicit HttpLlm(HttpOptions opts) : opts_(std::move(opts)) {}
  LLMResponse complete_once(const LLMRequest& req) override;
  std::string id() const override { return "http-llm"; }

 private:
  HttpOptions opts_;
};

class HttpGeometry : public GeometryBackend {
 public:
  explicit HttpGeometry(HttpOptions opts) : opts_(std::move(opts)) {}
  ConfidenceBatch confidence_batch(const std::string& scene_id,
                                   const std::vector<ImageRef>& images) override;
  std::string id() const override { return "http-geometry"; }

 private:
  HttpOptions opts_;
};

class HttpSky : public SkyBackend {
 public:
  explicit HttpSky(HttpOptions opts) : opts_(std::move(opts)) {}
  BinaryMask sky_mask(const ImageRef& image) override;
  std::string id() const override { return "http-sky"; }

 private:
  HttpOptions opts_;
};

class HttpSegmentation : public SegmentationBackend {
 public:
  explicit HttpSegmentation(HttpOptions opts) : opts_(std::move(opts)) {}
  BinaryMask fine_mask(const ImageRef& image,
                       const std::vector<Point>& points) override;
  std::string id() const override { return "http-segmentation"; }

 private:
  HttpOptions opts_;
};

}  // namespace archpipe
