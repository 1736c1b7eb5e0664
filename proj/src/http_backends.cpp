#include "archpipe/http_backends.hpp"

#include <httplib.h>

#include "archpipe/errors.hpp"
#include "archpipe/grid_io.hpp"
#include "archpipe/util.hpp"

namespace archpipe {

namespace {

json post_json(const HttpOptions& opts, const std::string& path,
               const json& body) {
  httplib::Client client(opts.base_url);
  client.set_connection_timeout(opts.timeout_seconds, 0);
  client.set_read_timeout(opts.timeout_seconds, 0);
  httplib::Headers headers;
  if (!opts.api_key.empty())
    headers.emplace("Authorization", "Bearer " + opts.api_key);

  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
      throw BackendError(BackendError::Kind::timeout,
                         "timeout on " + opts.base_url + path);
    throw BackendError(BackendError::Kind::unreachable,
                       "cannot reach " + opts.base_url + path);
  }
  if (res->status == 429)
    throw BackendError(BackendError::Kind::rate_limited,
                       "rate limited on " + path);
  if (res->status != 200)
    throw BackendError(BackendError::Kind::unreachable,
                       "HTTP " + std::to_string(res->status) + " on " + path);
  try {
    return json::parse(res->body);
  } catch (const std::exception& e) {
    throw BackendError(BackendError::Kind::bad_request,
                       std::string("malformed JSON reply: ") + e.what());
  }
}

std::vector<std::uint8_t> decode_mask_payload(const json& reply,
                                              const ImageRef& image) {
  auto bytes = base64_decode(reply.at("mask").get<std::string>());
  if (bytes.size() != image.pixel_count())
    throw BackendError(BackendError::Kind::dimension_mismatch,
                       "mask payload size != image dims for " + image.image_id);
  return bytes;
}

}  // namespace

LLMResponse HttpLlm::complete_once(const LLMRequest& req) {
  json body{{"prompt", req.prompt},
            {"temperature", req.temperature},
            {"seed", req.seed},
            {"max_tokens", req.max_tokens}};
  json reply = post_json(opts_, "/complete", body);
  LLMResponse resp;
  resp.text = reply.at("text").get<std::string>();
  resp.backend_id = id();
  return resp;
}

ConfidenceBatch HttpGeometry::confidence_batch(
    const std::string& scene_id, const std::vector<ImageRef>& images) {
  if (images.empty())
    throw BackendError(BackendError::Kind::bad_request, "empty image batch");
  json ids = json::array();
  for (const auto& im : images) ids.push_back(im.image_id);
  json reply =
      post_json(opts_, "/confidence", json{{"scene_id", scene_id}, {"image_ids", ids}});

  ConfidenceBatch batch;
  const auto& maps = reply.at("maps");
  for (const auto& im : images) {
    if (!maps.contains(im.image_id)) {
      batch.maps.push_back(std::nullopt);
      continue;
    }
    auto bytes = base64_decode(maps.at(im.image_id).get<std::string>());
    ConfidenceMap map;
    map.image = im;
    map.values = f32_grid_from_bytes(bytes);
    if (map.values.size() != im.pixel_count())
      throw BackendError(BackendError::Kind::dimension_mismatch,
                         "confidence payload size != image dims for " + im.image_id);
    require_dims(map);
    batch.maps.push_back(std::move(map));
  }
  if (reply.contains("artifact"))
    batch.artifact = base64_decode(reply.at("artifact").get<std::string>());
  return batch;
}

BinaryMask HttpSky::sky_mask(const ImageRef& image) {
  json reply = post_json(opts_, "/sky", json{{"image_id", image.image_id}});
  BinaryMask mask;
  mask.image = image;
  mask.kind = MaskKind::sky;
  mask.bits = decode_mask_payload(reply, image);
  require_dims(mask);
  return mask;
}

BinaryMask HttpSegmentation::fine_mask(const ImageRef& image,
                                       const std::vector<Point>& points) {
  if (points.empty())
    throw BackendError(BackendError::Kind::bad_request, "no prompt points");
  require_points_in_bounds(image, points);
  json pts = json::array();
  for (const auto& p : points) pts.push_back(json::array({p.x, p.y}));
  json reply = post_json(opts_, "/segment",
                         json{{"image_id", image.image_id}, {"points", pts}});
  BinaryMask mask;
  mask.image = image;
  mask.kind = MaskKind::fine;
  mask.bits = decode_mask_payload(reply, image);
  require_dims(mask);
  return mask;
}

}  // namespace archpipe
