#include "archpipe/image_filter.hpp"

#include <algorithm>
#include <cmath>

#include "archpipe/errors.hpp"
#include "archpipe/grid_io.hpp"
#include "archpipe/util.hpp"

namespace archpipe {

std::string to_string(FilterMode m) {
  switch (m) {
    case FilterMode::full: return "full";
    case FilterMode::coarse_only: return "coarse-only";
    case FilterMode::random: return "random";
  }
  return "full";
}

FilterMode filter_mode_from_string(const std::string& s) {
  if (s == "full") return FilterMode::full;
  if (s == "coarse-only") return FilterMode::coarse_only;
  if (s == "random") return FilterMode::random;
  throw ConfigError("unknown filter mode: " + s);
}

std::optional<float> global_threshold(const std::vector<ConfidenceMap>& maps,
                                      const std::vector<BinaryMask>& sky,
                                      double alpha) {
  if (maps.size() != sky.size())
    throw BackendError(BackendError::Kind::dimension_mismatch,
                       "maps/sky lists not aligned");
  std::vector<float> pool;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto& map = maps[i];
    const auto& s = sky[i];
    if (map.values.size() != s.bits.size())
      throw BackendError(BackendError::Kind::dimension_mismatch,
                         "sky mask dims != map dims for " + map.image.image_id);
    for (std::size_t p = 0; p < map.values.size(); ++p)
      if (!s.bits[p]) pool.push_back(map.values[p]);
  }
  if (pool.empty()) return std::nullopt;

  // Nearest-rank quantile: the ceil(alpha*n)-th smallest, 1-indexed.
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(alpha * static_cast<double>(pool.size())));
  rank = std::clamp<std::size_t>(rank, 1, pool.size());
  std::nth_element(pool.begin(), pool.begin() + (rank - 1), pool.end());
  return pool[rank - 1];
}

BinaryMask coarse_mask(const ConfidenceMap& map, float alpha_c,
                       const BinaryMask* sky) {
  BinaryMask mask;
  mask.image = map.image;
  mask.kind = MaskKind::coarse;
  mask.bits.resize(map.values.size());
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    bool on = map.values[i] >= alpha_c;
    if (sky && sky->bits[i]) on = false;
    mask.bits[i] = on ? 1 : 0;
  }
  return mask;
}

double mask_ratio(const BinaryMask& mask) {
  if (mask.bits.empty()) return 0.0;
  return static_cast<double>(mask.popcount()) /
         static_cast<double>(mask.bits.size());
}

std::vector<Point> sample_prompt_points(const BinaryMask& mask, std::uint32_t n,
                                        std::uint64_t seed) {
  std::vector<Point> support;
  for (std::uint32_t y = 0; y < mask.image.height; ++y)
    for (std::uint32_t x = 0; x < mask.image.width; ++x)
      if (mask.at(x, y)) support.push_back({x, y});
  if (support.empty()) return {};

  SplitMix64 rng(seed);
  std::vector<Point> out;
  out.reserve(n);
  if (support.size() >= n) {
    // Partial Fisher-Yates: first n slots of a seeded shuffle.
    for (std::uint32_t i = 0; i < n; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.next_below(support.size() - i));
      std::swap(support[i], support[j]);
      out.push_back(support[i]);
    }
  } else {
    for (std::uint32_t i = 0; i < n; ++i)
      out.push_back(support[rng.next_below(support.size())]);
  }
  return out;
}

std::vector<ImageRef> cap_images(const std::vector<ImageRef>& images,
                                 std::uint32_t cap, std::uint64_t seed) {
  if (images.size() <= cap) return images;
  std::vector<std::size_t> idx(images.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  SplitMix64 rng(seed);
  for (std::uint32_t i = 0; i < cap; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.next_below(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());  // keep original order
  std::vector<ImageRef> out;
  out.reserve(cap);
  for (auto i : idx) out.push_back(images[i]);
  return out;
}

namespace {

// Ranking comparator: higher ratio first, then ascending image_id.
bool ranks_before(double ratio_a, const std::string& id_a, double ratio_b,
                  const std::string& id_b) {
  if (ratio_a != ratio_b) return ratio_a > ratio_b;
  return id_a < id_b;
}

}  // namespace

FilterSceneResult filter_scene(const SceneRecord& scene,
                               const FilterParams& params,
                               const Backends& backends, FilterMode mode,
                               const std::filesystem::path* mask_dump_dir) {
  params.validate();
  FilterSceneResult result;
  result.mode = mode;
  result.cap_seed = derive_seed(params.seed, scene.scene_id, "image_cap");

  if (scene.images.empty()) {
    result.drop_reason = "no_images_after_filtering";
    return result;
  }

  std::vector<ImageRef> images = scene.images;
  if (images.size() > params.image_cap) {
    images = cap_images(images, params.image_cap, result.cap_seed);
    result.capped = true;
  }

  if (mode == FilterMode::random) {
    std::vector<std::size_t> idx(images.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    seeded_shuffle(idx, derive_seed(params.seed, scene.scene_id, "random_select"));
    std::size_t keep = std::min<std::size_t>(params.top_k, images.size());
    std::vector<bool> chosen(images.size(), false);
    for (std::size_t i = 0; i < keep; ++i) chosen[idx[i]] = true;
    for (std::size_t i = 0; i < images.size(); ++i) {
      ImageScore s;
      s.image = images[i];
      s.selected = chosen[i];
      result.scores.push_back(std::move(s));
    }
    return result;
  }

  auto audit_call = [&](const std::string& descriptor, const std::string& outcome) {
    if (backends.audit)
      backends.audit->call("filter", scene.scene_id, fnv1a64(descriptor), 1, outcome);
  };
  std::filesystem::path dump_scene_dir;
  if (mask_dump_dir) {
    dump_scene_dir = *mask_dump_dir / scene.scene_id;
    std::filesystem::create_directories(dump_scene_dir);
  }
  auto dump_mask = [&](const BinaryMask& mask, const char* kind) {
    if (!mask_dump_dir) return;
    save_u8_grid(dump_scene_dir / (mask.image.image_id + "." + kind + ".u8"),
                 mask.bits, mask.image.width, mask.image.height);
  };

  // Coarse stage: confidences, sky masks, pooled quantile.
  ConfidenceBatch batch;
  try {
    batch = backends.geometry->confidence_batch(scene.scene_id, images);
    audit_call("confidence:" + scene.scene_id, "ok");
  } catch (const BackendError&) {
    audit_call("confidence:" + scene.scene_id, "error");
    throw;
  }
  std::vector<ConfidenceMap> maps;
  std::vector<BinaryMask> skies;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!batch.maps[i]) {
      if (backends.audit)
        backends.audit->note("filter", scene.scene_id,
                             "image_dropped_no_confidence:" + images[i].image_id);
      continue;
    }
    try {
      BinaryMask sky = backends.sky->sky_mask(images[i]);
      audit_call("sky:" + images[i].image_id, "ok");
      dump_mask(sky, "sky");
      maps.push_back(std::move(*batch.maps[i]));
      skies.push_back(std::move(sky));
    } catch (const BackendError&) {
      audit_call("sky:" + images[i].image_id, "error");
      if (backends.audit)
        backends.audit->note("filter", scene.scene_id,
                             "image_dropped_no_sky_mask:" + images[i].image_id);
    }
  }
  if (maps.empty()) {
    result.drop_reason = "no_images_after_filtering";
    return result;
  }

  result.alpha_c = global_threshold(maps, skies, params.alpha);
  if (!result.alpha_c) {
    result.drop_reason = "no_structure_pixels";
    return result;
  }

  struct Candidate {
    std::size_t score_index;
    BinaryMask coarse;
  };
  std::vector<Candidate> survivors;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    BinaryMask cmask = coarse_mask(maps[i], *result.alpha_c, &skies[i]);
    dump_mask(cmask, "coarse");
    ImageScore s;
    s.image = maps[i].image;
    s.coarse_ratio = mask_ratio(cmask);
    s.passed_coarse = s.coarse_ratio >= params.tau_c;
    result.scores.push_back(s);
    if (s.passed_coarse)
      survivors.push_back({result.scores.size() - 1, std::move(cmask)});
  }

  if (mode == FilterMode::coarse_only) {
    std::sort(survivors.begin(), survivors.end(),
              [&](const Candidate& a, const Candidate& b) {
                return ranks_before(result.scores[a.score_index].coarse_ratio,
                                    result.scores[a.score_index].image.image_id,
                                    result.scores[b.score_index].coarse_ratio,
                                    result.scores[b.score_index].image.image_id);
              });
    std::size_t keep = std::min<std::size_t>(params.top_k, survivors.size());
    for (std::size_t i = 0; i < keep; ++i)
      result.scores[survivors[i].score_index].selected = true;
    if (keep == 0) result.drop_reason = "no_images_after_filtering";
    return result;
  }

  // Fine stage: point prompts and segmentation coverage.
  struct Ranked {
    std::size_t score_index;
    double fine_ratio;
  };
  std::vector<Ranked> ranked;
  for (auto& cand : survivors) {
    auto& score = result.scores[cand.score_index];
    std::uint64_t point_seed =
        derive_seed(params.seed, scene.scene_id, "points:" + score.image.image_id);
    auto points = sample_prompt_points(cand.coarse, params.point_count, point_seed);
    if (points.empty()) {
      if (backends.audit)
        backends.audit->note("filter", scene.scene_id,
                             "image_excluded_empty_coarse_mask:" + score.image.image_id);
      continue;
    }
    try {
      BinaryMask fine = backends.segmentation->fine_mask(score.image, points);
      audit_call("segment:" + score.image.image_id, "ok");
      dump_mask(fine, "fine");
      score.fine_ratio = mask_ratio(fine);
      ranked.push_back({cand.score_index, *score.fine_ratio});
    } catch (const BackendError&) {
      audit_call("segment:" + score.image.image_id, "error");
      if (backends.audit)
        backends.audit->note("filter", scene.scene_id,
                             "image_dropped_no_fine_mask:" + score.image.image_id);
    }
  }

  std::sort(ranked.begin(), ranked.end(), [&](const Ranked& a, const Ranked& b) {
    return ranks_before(a.fine_ratio, result.scores[a.score_index].image.image_id,
                        b.fine_ratio, result.scores[b.score_index].image.image_id);
  });
  std::size_t keep = std::min<std::size_t>(params.top_k, ranked.size());
  for (std::size_t i = 0; i < keep; ++i)
    result.scores[ranked[i].score_index].selected = true;
  if (keep == 0) result.drop_reason = "no_images_after_filtering";
  return result;
}

}  // namespace archpipe
