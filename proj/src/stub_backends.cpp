#include "archpipe/stub_backends.hpp"

#include <algorithm>
#include <optional>

#include "archpipe/errors.hpp"
#include "archpipe/util.hpp"

namespace archpipe {

namespace {

const char* kWordBank[] = {
    "masonry",   "facade",     "cornice",    "pilasters",  "ashlar",
    "buttresses", "fenestration", "parapet",  "voussoirs",  "pediment",
    "entablature", "colonnade", "tracery",    "mullions",   "stonework",
    "brickwork", "vaulting",   "archivolt",  "spandrels",  "rustication",
    "balustrade", "finials",   "moulding",   "portico",    "gable",
    "eaves",     "keystone",   "lintel",     "plinth",     "frieze"};
constexpr std::size_t kWordBankSize = sizeof(kWordBank) / sizeof(kWordBank[0]);

std::string filler_words(SplitMix64& rng, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out.push_back(' ');
    out += kWordBank[rng.next_below(kWordBankSize)];
  }
  out.push_back('.');
  return out;
}

std::optional<std::string> between(const std::string& text,
                                   const std::string& after,
                                   const std::string& before) {
  auto a = text.find(after);
  if (a == std::string::npos) return std::nullopt;
  a += after.size();
  auto b = text.find(before, a);
  if (b == std::string::npos) return std::nullopt;
  return text.substr(a, b - a);
}

bool matches_any(const std::string& text,
                 const std::vector<std::string>& markers) {
  for (const auto& m : markers)
    if (contains_ci(text, m)) return true;
  return false;
}

// First integer following "approximately " in the prompt, or fallback.
std::size_t parse_target_words(const std::string& prompt, std::size_t fallback) {
  auto pos = prompt.find("approximately ");
  if (pos == std::string::npos) return fallback;
  pos += 14;
  std::size_t n = 0, digits = 0;
  while (pos < prompt.size() && std::isdigit(static_cast<unsigned char>(prompt[pos]))) {
    n = n * 10 + static_cast<std::size_t>(prompt[pos] - '0');
    ++pos;
    ++digits;
  }
  return digits ? n : fallback;
}

const char* kCountries[] = {"France", "Italy", "Spain", "China", "Unknown"};
const char* kYears[] = {"1836", "1909", "1552", "1999", "Unknown"};

const char* kCanonicalAspects[] = {
    "architectural style",      "architectural elements",
    "architectural details",    "architectural context",
    "architectural innovation", "architectural symbolism",
    "architectural materials"};

}  // namespace

void StubLlm::script(const std::string& prompt, const std::string& reply) {
  scripted_[fnv1a64(prompt)] = reply;
}

void StubLlm::script_hash(std::uint64_t prompt_hash, const std::string& reply) {
  scripted_[prompt_hash] = reply;
}

void StubLlm::fail_next(int n) {
  std::lock_guard<std::mutex> lock(mutex_);
  fail_budget_ = n;
}

LLMResponse StubLlm::complete_once(const LLMRequest& req) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    ++calls_;
    if (fail_budget_ > 0) {
      --fail_budget_;
      throw BackendError(BackendError::Kind::unreachable, "injected fault");
    }
  }
  LLMResponse resp;
  resp.backend_id = id();
  auto it = scripted_.find(fnv1a64(req.prompt));
  resp.text = it != scripted_.end() ? it->second : synthesize(req);
  return resp;
}

std::string StubLlm::synthesize(const LLMRequest& req) const {
  const std::string& p = req.prompt;
  SplitMix64 rng(fnv1a64(p) ^ req.seed);

  // Architectural-structure gate.
  if (p.find("is an architectural structure?") != std::string::npos) {
    auto name = between(p, "Do you think ", ", categorized under");
    return name && matches_any(*name, opts_.arch_deny) ? "No" : "Yes";
  }

  // Knowledge gate.
  if (p.find("Respond with only 'YES' or 'NO'") != std::string::npos) {
    auto name = between(p, "Do you know the ", "? Respond");
    return name && matches_any(*name, opts_.known_deny) ? "NO" : "YES";
  }

  // Refined-description extractor. Grounded: empty material reads Unknown.
  if (p.find("return a concise description") != std::string::npos) {
    auto mat_pos = p.find("The material is as follows: ");
    std::string material =
        mat_pos == std::string::npos ? "" : p.substr(mat_pos + 28);
    if (trim(material).size() < 10) return "Unknown.";
    std::string body = filler_words(rng, 10);
    return "A landmark with " + body;
  }

  // Name extractor.
  if (p.find("Please refine the architecture's name") != std::string::npos) {
    auto material = p.find("The material is as follows: ");
    if (material == std::string::npos || trim(p.substr(material + 28)).size() < 10)
      return "Unknown";
    auto raw = between(p, "This architecture's raw name is: ", ". Please refine");
    if (!raw) return "Unknown";
    std::string name = *raw;
    std::replace(name.begin(), name.end(), '_', ' ');
    // Strip the embellishments the corpus carries around canonical names.
    std::string lower = to_lower(name);
    const std::string prefix = "remote view of the ";
    if (lower.rfind(prefix, 0) == 0) name = name.substr(prefix.size());
    lower = to_lower(name);
    const std::string suffix = " at night";
    if (lower.size() > suffix.size() &&
        lower.compare(lower.size() - suffix.size(), suffix.size(), suffix) == 0)
      name = name.substr(0, name.size() - suffix.size());
    return name;
  }

  // Country/year extractor. The material sits between the introduction
  // marker and the trailing format instruction.
  if (p.find("The answer format should be: Country, Year") != std::string::npos) {
    auto material = between(p, "Introduction: ", ". The answer format");
    if (!material || trim(*material).size() < 10) return "Unknown, Unknown";
    std::string country = kCountries[rng.next_below(4)];  // skip Unknown here
    std::string year = kYears[rng.next_below(5)];
    return country + ", " + year;
  }

  // Detailed description answer.
  if (p.find("Please answer the following question about the") != std::string::npos) {
    std::size_t target = parse_target_words(p, 150);
    bool first_opening = (rng.next() & 1) == 0;
    std::string opening = first_opening ? "In this image, I can see "
                                        : "This image shows ";
    std::size_t opening_words = word_count(opening);
    std::size_t rest = target > opening_words ? target - opening_words : 1;
    return opening + filler_words(rng, rest);
  }

  // Aspect selection.
  if (p.find("Please select up to five essential aspects") != std::string::npos) {
    std::vector<std::string> pool(std::begin(kCanonicalAspects),
                                  std::end(kCanonicalAspects));
    seeded_shuffle(pool, rng.next());
    std::size_t k = 1 + rng.next_below(5);
    std::string out = "[";
    for (std::size_t i = 0; i < k; ++i) {
      if (i) out += ", ";
      out += pool[i];
    }
    return out + "]";
  }

  // Aspect question.
  if (p.find("Create a concise, clear question about the") != std::string::npos) {
    auto aspect = between(p, "clear question about the ", " of the architecture.");
    return "What " + (aspect ? *aspect : std::string("architectural elements")) +
           " can you observe in this architecture?";
  }

  // Aspect answer.
  if (p.find("Please provide a detailed analysis of the") != std::string::npos) {
    auto aspect = between(p, "detailed analysis of the ", " of the ");
    std::string a = aspect ? *aspect : "architectural elements";
    std::size_t target = parse_target_words(p, 100);
    bool first_opening = (rng.next() & 1) == 0;
    std::string opening = first_opening
                              ? "In this image, the " + a + " "
                              : "This image shows that the " + a + " ";
    std::size_t opening_words = word_count(opening);
    std::size_t rest = target > opening_words ? target - opening_words : 1;
    return opening + "is defined by " + filler_words(rng, rest > 3 ? rest - 3 : 1);
  }

  // Best-of judge vote: pick by answer content so the winner is independent
  // of presentation order.
  if (p.find("Vote for the single best response") != std::string::npos) {
    std::uint64_t best_hash = 0;
    int best_index = 1;
    int index = 1;
    std::size_t pos = 0;
    while (true) {
      std::string open = "[The Start of Assistant " + std::to_string(index) + "'s Answer]\n";
      std::string close = "\n[The End of Assistant " + std::to_string(index) + "'s Answer]";
      auto a = p.find(open, pos);
      if (a == std::string::npos) break;
      a += open.size();
      auto b = p.find(close, a);
      if (b == std::string::npos) break;
      std::uint64_t h = fnv1a64(p.substr(a, b - a));
      if (index == 1 || h > best_hash) {
        best_hash = h;
        best_index = index;
      }
      pos = b + close.size();
      ++index;
    }
    return std::to_string(best_index) + "\nStub vote.";
  }

  // Pairwise judge scores.
  if (p.find("[The Start of Assistant 1's Answer]") != std::string::npos) {
    int s1 = static_cast<int>(3 + rng.next_below(8));
    int s2 = static_cast<int>(3 + rng.next_below(8));
    return std::to_string(s1) + " " + std::to_string(s2) + "\nStub rationale.";
  }

  return "OK";
}

ConfidenceBatch StubGeometry::confidence_batch(
    const std::string& scene_id, const std::vector<ImageRef>& images) {
  if (images.empty())
    throw BackendError(BackendError::Kind::bad_request, "empty image batch");
  ConfidenceBatch batch;
  batch.maps.reserve(images.size());
  for (const auto& im : images) {
    ConfidenceMap map;
    map.image = im;
    map.values.resize(im.pixel_count());
    if (constant_ >= 0.0) {
      std::fill(map.values.begin(), map.values.end(),
                static_cast<float>(constant_));
    } else {
      std::uint64_t image_key = fnv1a64(scene_id) ^ fnv1a64(im.image_id) ^ seed_;
      double bias = SplitMix64(image_key).next_unit();  // image quality level
      for (std::size_t i = 0; i < map.values.size(); ++i) {
        double u = SplitMix64(image_key ^ (0x9e3779b97f4a7c15ull * (i + 1))).next_unit();
        double v = 0.15 + 0.55 * bias + 0.45 * (u - 0.5);
        map.values[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
    require_dims(map);
    batch.maps.push_back(std::move(map));
  }
  std::string tag = "stub-artifact:" + scene_id;
  batch.artifact.assign(tag.begin(), tag.end());
  return batch;
}

BinaryMask StubSky::sky_mask(const ImageRef& image) {
  double frac = fraction_;
  if (frac < 0.0) {
    std::uint64_t h = fnv1a64(image.image_id) ^ seed_;
    frac = static_cast<double>(h % 4) / 10.0;
  }
  BinaryMask mask;
  mask.image = image;
  mask.kind = MaskKind::sky;
  mask.bits.assign(image.pixel_count(), 0);
  auto sky_rows = static_cast<std::uint32_t>(frac * image.height + 1e-9);
  sky_rows = std::min(sky_rows, image.height);
  for (std::uint32_t y = 0; y < sky_rows; ++y)
    for (std::uint32_t x = 0; x < image.width; ++x)
      mask.bits[static_cast<std::size_t>(y) * image.width + x] = 1;
  require_dims(mask);
  return mask;
}

BinaryMask StubSegmentation::fine_mask(const ImageRef& image,
                                       const std::vector<Point>& points) {
  if (points.empty())
    throw BackendError(BackendError::Kind::bad_request, "no prompt points");
  require_points_in_bounds(image, points);
  BinaryMask mask;
  mask.image = image;
  mask.kind = MaskKind::fine;
  mask.bits.assign(image.pixel_count(), 0);
  const std::int64_t r = radius_;
  for (const auto& p : points) {
    for (std::int64_t dy = -r; dy <= r; ++dy) {
      for (std::int64_t dx = -r; dx <= r; ++dx) {
        std::int64_t x = static_cast<std::int64_t>(p.x) + dx;
        std::int64_t y = static_cast<std::int64_t>(p.y) + dy;
        if (x < 0 || y < 0 || x >= static_cast<std::int64_t>(image.width) ||
            y >= static_cast<std::int64_t>(image.height))
          continue;
        mask.bits[static_cast<std::size_t>(y) * image.width +
                  static_cast<std::size_t>(x)] = 1;
      }
    }
  }
  require_dims(mask);
  return mask;
}

}  // namespace archpipe
