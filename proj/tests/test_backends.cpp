#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "archpipe/errors.hpp"
#include "archpipe/file_backends.hpp"
#include "archpipe/grid_io.hpp"
#include "archpipe/stub_backends.hpp"
#include "archpipe/util.hpp"

using namespace archpipe;
namespace fs = std::filesystem;

namespace {

ImageRef make_image(const std::string& id, std::uint32_t w, std::uint32_t h) {
  return ImageRef{"scene1", id, w, h, "images/" + id + ".jpg"};
}

fs::path temp_dir(const std::string& name) {
  fs::path dir = fs::current_path() / ("t_backends_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("backends") {

TEST_CASE("confidence batch: one map per image, matching dims") {
  StubGeometry geometry(7);
  std::vector<ImageRef> images{make_image("a", 8, 6), make_image("b", 4, 4),
                               make_image("c", 5, 3)};
  auto batch = geometry.confidence_batch("scene1", images);
  REQUIRE(batch.maps.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(batch.maps[i].has_value());
    CHECK(batch.maps[i]->image.image_id == images[i].image_id);
    CHECK(batch.maps[i]->values.size() == images[i].pixel_count());
  }
  CHECK_FALSE(batch.artifact.empty());
}

TEST_CASE("constant stub geometry yields uniform maps") {
  StubGeometry geometry(0, 0.5);
  auto batch = geometry.confidence_batch("s", {make_image("a", 3, 3)});
  for (float v : batch.maps[0]->values) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("stub geometry is deterministic") {
  StubGeometry g1(11), g2(11);
  auto b1 = g1.confidence_batch("s", {make_image("a", 6, 6)});
  auto b2 = g2.confidence_batch("s", {make_image("a", 6, 6)});
  CHECK(b1.maps[0]->values == b2.maps[0]->values);
}

TEST_CASE("stub sky: all-ground and all-sky") {
  auto image = make_image("a", 4, 4);
  CHECK(StubSky(0.0).sky_mask(image).popcount() == 0);
  CHECK(StubSky(1.0).sky_mask(image).popcount() == 16);
}

TEST_CASE("stub segmentation equals brute-force 3x3 dilation") {
  auto image = make_image("a", 10, 8);
  std::vector<Point> points{{0, 0}, {5, 4}, {9, 7}, {5, 5}};
  auto mask = StubSegmentation(1).fine_mask(image, points);

  // Brute-force dilation oracle.
  std::vector<std::uint8_t> expected(image.pixel_count(), 0);
  for (std::uint32_t y = 0; y < image.height; ++y)
    for (std::uint32_t x = 0; x < image.width; ++x)
      for (const auto& p : points)
        if (std::abs(static_cast<int>(x) - static_cast<int>(p.x)) <= 1 &&
            std::abs(static_cast<int>(y) - static_cast<int>(p.y)) <= 1)
          expected[y * image.width + x] = 1;
  CHECK(mask.bits == expected);
}

TEST_CASE("single point with zero-radius stub sets exactly one bit") {
  auto image = make_image("a", 4, 4);
  auto mask = StubSegmentation(0).fine_mask(image, {{0, 0}});
  CHECK(mask.popcount() == 1);
  CHECK(mask.at(0, 0) == 1);
}

TEST_CASE("out-of-bounds point is rejected") {
  auto image = make_image("a", 4, 4);
  try {
    StubSegmentation().fine_mask(image, {{4, 0}});
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.kind == BackendError::Kind::point_out_of_bounds);
  }
}

TEST_CASE("scripted stub reply keyed on prompt hash") {
  auto llm = std::make_shared<StubLlm>();
  llm->script("ping", "pong");
  LlmClient client(llm, RetryPolicy{}, nullptr, 0,
                   [](std::chrono::milliseconds) {});
  LLMRequest req;
  req.prompt = "ping";
  CHECK(client.complete(req, "test", "s").text == "pong");
}

TEST_CASE("empty prompt is a precondition error") {
  LlmClient client(std::make_shared<StubLlm>(), RetryPolicy{});
  LLMRequest req;
  CHECK_THROWS_AS(client.complete(req, "test", "s"), BackendError);
}

TEST_CASE("transient failure then success under retry policy") {
  auto llm = std::make_shared<StubLlm>();
  llm->script("hello", "world");
  llm->fail_next(1);
  RetryPolicy policy;
  policy.attempts = 3;
  int sleeps = 0;
  LlmClient client(llm, policy, nullptr, 0,
                   [&](std::chrono::milliseconds) { ++sleeps; });
  LLMRequest req;
  req.prompt = "hello";
  auto resp = client.complete(req, "test", "s");
  CHECK(resp.text == "world");
  CHECK(resp.attempts == 2);
  CHECK(sleeps == 1);
}

TEST_CASE("retries exhaust after the configured attempts") {
  auto llm = std::make_shared<StubLlm>();
  llm->fail_next(10);
  RetryPolicy policy;
  policy.attempts = 3;
  LlmClient client(llm, policy, nullptr, 0, [](std::chrono::milliseconds) {});
  LLMRequest req;
  req.prompt = "x";
  CHECK_THROWS_AS(client.complete(req, "test", "s"), BackendError);
  CHECK(llm->calls() == 3);
}

TEST_CASE("the concurrency limiter bounds in-flight requests") {
  // Backend that tracks its own concurrency high-water mark.
  class SlowBackend : public LlmBackend {
   public:
    LLMResponse complete_once(const LLMRequest&) override {
      int now = ++in_flight;
      int seen = peak.load();
      while (now > seen && !peak.compare_exchange_weak(seen, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
      --in_flight;
      return {"ok", "slow", {}, 1};
    }
    std::string id() const override { return "slow"; }
    std::atomic<int> in_flight{0};
    std::atomic<int> peak{0};
  };

  auto backend = std::make_shared<SlowBackend>();
  LlmClient client(backend, RetryPolicy{}, nullptr, /*max_concurrent=*/2,
                   [](std::chrono::milliseconds) {});
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&] {
      LLMRequest req;
      req.prompt = "p";
      client.complete(req, "test", "s");
    });
  for (auto& t : threads) t.join();
  CHECK(backend->peak.load() <= 2);
  CHECK(backend->peak.load() >= 1);
}

TEST_CASE("audit trail records every attempt") {
  auto dir = temp_dir("audit");
  AuditLog audit(dir / "audit.jsonl");
  auto llm = std::make_shared<StubLlm>();
  llm->script("q", "a");
  llm->fail_next(1);
  LlmClient client(llm, RetryPolicy{}, &audit, 0, [](std::chrono::milliseconds) {});
  LLMRequest req;
  req.prompt = "q";
  client.complete(req, "verify", "scene9");

  std::ifstream in(dir / "audit.jsonl");
  std::string line;
  std::vector<json> rows;
  while (std::getline(in, line)) rows.push_back(json::parse(line));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].at("outcome") == "error");
  CHECK(rows[0].at("attempt") == 1);
  CHECK(rows[1].at("outcome") == "ok");
  CHECK(rows[1].at("attempt") == 2);
  CHECK(rows[0].at("scene_id") == "scene9");
  CHECK(rows[0].at("prompt_hash") == to_hex16(fnv1a64("q")));
}

TEST_CASE("file adapter round trips fixture grids byte-exactly") {
  auto dir = temp_dir("file");
  fs::create_directories(dir / "confidence" / "scene1");
  fs::create_directories(dir / "sky");

  auto image = make_image("img1", 2, 2);
  std::vector<float> values{0.1f, 0.2f, 0.3f, 0.4f};
  save_f32_grid(dir / "confidence" / "scene1" / "img1.f32", values, 2, 2);

  FileGeometry geometry(dir);
  auto batch = geometry.confidence_batch("scene1", {image});
  REQUIRE(batch.maps[0].has_value());
  CHECK(batch.maps[0]->values == values);

  // Checkerboard sky mask round trip.
  std::vector<std::uint8_t> cb{1, 0, 0, 1};
  save_u8_grid(dir / "sky" / "img1.u8", cb, 2, 2);
  FileSky sky(dir);
  CHECK(sky.sky_mask(image).bits == cb);
}

TEST_CASE("file adapter marks missing images as partial batch") {
  auto dir = temp_dir("partial");
  fs::create_directories(dir / "confidence" / "scene1");
  save_f32_grid(dir / "confidence" / "scene1" / "present.f32", {0.5f}, 1, 1);
  FileGeometry geometry(dir);
  auto batch = geometry.confidence_batch(
      "scene1", {make_image("present", 1, 1), make_image("absent", 1, 1)});
  CHECK(batch.maps[0].has_value());
  CHECK_FALSE(batch.maps[1].has_value());
}

TEST_CASE("file adapter rejects dimension mismatches at the boundary") {
  auto dir = temp_dir("dims");
  fs::create_directories(dir / "confidence" / "scene1");
  save_f32_grid(dir / "confidence" / "scene1" / "img1.f32", {0.5f, 0.5f}, 2, 1);
  FileGeometry geometry(dir);
  CHECK_THROWS_AS(geometry.confidence_batch("scene1", {make_image("img1", 3, 1)}),
                  BackendError);
}

}  // TEST_SUITE
