#pragma once

#include <filesystem>

#include "archpipe/backends.hpp"

namespace archpipe {

// Precomputed-file adapters. Directory layout under the data root:
//   confidence/<scene_id>/<image_id>.f32 (+ .json sidecar)
//   confidence/<scene_id>/artifact.bin   (optional opaque blob)
//   sky/<image_id>.u8                    (+ .json sidecar)
//   fine/<image_id>.u8                   (+ .json sidecar)
//   llm/<prompt_fnv1a64_hex>.txt

class FileLlm : public LlmBackend {
 public:
  explicit FileLlm(std::filesystem::path root) : root_(std::move(root)) {}
  LLMResponse complete_once(const LLMRequest& req) override;
  std::string id() const override { return "file-llm"; }

 private:
  std::filesystem::path root_;
};

class FileGeometry : public GeometryBackend {
 public:
  explicit FileGeometry(std::filesystem::path root) : root_(std::move(root)) {}
  ConfidenceBatch confidence_batch(const std::string& scene_id,
                                   const std::vector<ImageRef>& images) override;
  std::string id() const override { return "file-geometry"; }

 private:
  std::filesystem::path root_;
};

class FileSky : public SkyBackend {
 public:
  explicit FileSky(std::filesystem::path root) : root_(std::move(root)) {}
  BinaryMask sky_mask(const ImageRef& image) override;
  std::string id() const override { return "file-sky"; }

 private:
  std::filesystem::path root_;
};

class FileSegmentation : public SegmentationBackend {
 public:
  explicit FileSegmentation(std::filesystem::path root) : root_(std::move(root)) {}
  BinaryMask fine_mask(const ImageRef& image,
                       const std::vector<Point>& points) override;
  std::string id() const override { return "file-segmentation"; }

 private:
  std::filesystem::path root_;
};

}  // namespace archpipe
