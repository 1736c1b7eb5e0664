#include "archpipe/file_backends.hpp"

#include <fstream>

#include "archpipe/errors.hpp"
#include "archpipe/grid_io.hpp"
#include "archpipe/util.hpp"

namespace archpipe {

namespace {

void check_grid_dims(const ImageRef& image, std::uint32_t w, std::uint32_t h) {
  if (w != image.width || h != image.height)
    throw BackendError(BackendError::Kind::dimension_mismatch,
                       "grid dims != image dims for " + image.image_id);
}

}  // namespace

LLMResponse FileLlm::complete_once(const LLMRequest& req) {
  auto file = root_ / "llm" / (to_hex16(fnv1a64(req.prompt)) + ".txt");
  std::ifstream in(file, std::ios::binary);
  if (!in)
    throw BackendError(BackendError::Kind::not_found,
                       "no recorded reply for prompt hash " +
                           to_hex16(fnv1a64(req.prompt)));
  LLMResponse resp;
  resp.text.assign(std::istreambuf_iterator<char>(in),
                   std::istreambuf_iterator<char>());
  resp.backend_id = id();
  return resp;
}

ConfidenceBatch FileGeometry::confidence_batch(
    const std::string& scene_id, const std::vector<ImageRef>& images) {
  if (images.empty())
    throw BackendError(BackendError::Kind::bad_request, "empty image batch");
  ConfidenceBatch batch;
  for (const auto& im : images) {
    auto file = root_ / "confidence" / scene_id / (im.image_id + ".f32");
    if (!std::filesystem::exists(file)) {
      batch.maps.push_back(std::nullopt);  // partial batch; caller decides
      continue;
    }
    std::uint32_t w = 0, h = 0;
    ConfidenceMap map;
    map.image = im;
    map.values = load_f32_grid(file, w, h);
    check_grid_dims(im, w, h);
    require_dims(map);
    batch.maps.push_back(std::move(map));
  }
  auto artifact_file = root_ / "confidence" / scene_id / "artifact.bin";
  if (std::filesystem::exists(artifact_file)) {
    std::ifstream in(artifact_file, std::ios::binary);
    batch.artifact.assign(std::istreambuf_iterator<char>(in),
                          std::istreambuf_iterator<char>());
  }
  return batch;
}

BinaryMask FileSky::sky_mask(const ImageRef& image) {
  auto file = root_ / "sky" / (image.image_id + ".u8");
  std::uint32_t w = 0, h = 0;
  BinaryMask mask;
  mask.image = image;
  mask.kind = MaskKind::sky;
  mask.bits = load_u8_grid(file, w, h);
  check_grid_dims(image, w, h);
  require_dims(mask);
  return mask;
}

BinaryMask FileSegmentation::fine_mask(const ImageRef& image,
                                       const std::vector<Point>& points) {
  if (points.empty())
    throw BackendError(BackendError::Kind::bad_request, "no prompt points");
  require_points_in_bounds(image, points);
  auto file = root_ / "fine" / (image.image_id + ".u8");
  std::uint32_t w = 0, h = 0;
  BinaryMask mask;
  mask.image = image;
  mask.kind = MaskKind::fine;
  mask.bits = load_u8_grid(file, w, h);
  check_grid_dims(image, w, h);
  require_dims(mask);
  return mask;
}

}  // namespace archpipe
