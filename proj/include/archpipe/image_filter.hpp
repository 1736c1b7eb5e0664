#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "archpipe/backends.hpp"
#include "archpipe/types.hpp"

namespace archpipe {

enum class FilterMode { full, coarse_only, random };

std::string to_string(FilterMode m);
FilterMode filter_mode_from_string(const std::string& s);

// Nearest-rank alpha-quantile (the ceil(alpha*n)-th smallest) over the
// multiset of non-sky confidence values pooled across all images. `sky` is
// aligned one-to-one with `maps`. Throws DropScene-style condition via
// return: nullopt means no non-sky pixel exists collection-wide.
std::optional<float> global_threshold(const std::vector<ConfidenceMap>& maps,
                                      const std::vector<BinaryMask>& sky,
                                      double alpha);

// Bit 1 exactly where value >= alpha_c; sky pixels forced to 0 when a sky
// mask is supplied.
BinaryMask coarse_mask(const ConfidenceMap& map, float alpha_c,
                       const BinaryMask* sky = nullptr);

// Set-bit fraction over the full H*W resolution (sky pixels included in the
// denominator).
double mask_ratio(const BinaryMask& mask);

// n points drawn uniformly without replacement from set-bit positions; with
// replacement only when fewer than n bits are set. Empty masks yield an
// empty list (the image is excluded from the fine stage).
std::vector<Point> sample_prompt_points(const BinaryMask& mask, std::uint32_t n,
                                        std::uint64_t seed);

struct FilterSceneResult {
  std::vector<ImageScore> scores;
  std::optional<float> alpha_c;
  FilterMode mode = FilterMode::full;
  std::string drop_reason;  // non-empty when the whole scene drops out
  std::uint64_t cap_seed = 0;
  bool capped = false;
};

// Full coarse-to-fine selection for one scene: confidences -> pooled
// quantile -> coarse masks -> tau_c survival -> point prompts -> fine masks
// -> TopK by fine ratio (ties broken by ascending image_id). Per-image
// backend failures drop the image, not the scene, unless none remain.
// Every backend call lands in the audit trail. When mask_dump_dir is set,
// sky/coarse/fine masks are written there in the u8 grid format.
FilterSceneResult filter_scene(const SceneRecord& scene,
                               const FilterParams& params,
                               const Backends& backends,
                               FilterMode mode = FilterMode::full,
                               const std::filesystem::path* mask_dump_dir = nullptr);

// Uniform subsample of at most `cap` images under `seed` (order preserved).
std::vector<ImageRef> cap_images(const std::vector<ImageRef>& images,
                                 std::uint32_t cap, std::uint64_t seed);

}  // namespace archpipe
