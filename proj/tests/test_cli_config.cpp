#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "bathyscope/cli/config.hpp"

using namespace bathyscope;
using nlohmann::json;

TEST_CASE("defaults load from an empty object") {
  auto cfg = PipelineConfig::from_json(json::object());
  CHECK(cfg.run_id == "run");
  CHECK((cfg.net.unet_filters == std::vector<int64_t>{8, 16, 32, 64}));
  CHECK(cfg.train.spec.epochs == 30);
  CHECK(cfg.train.spec.lr0 == doctest::Approx(2.5e-4));
  CHECK(cfg.data.d_max == doctest::Approx(14.556));
}

TEST_CASE("unknown keys are rejected with their name") {
  auto j = json{{"scene", {{"depht_mode", "ramp"}}}};
  try {
    PipelineConfig::from_json(j);
    FAIL("expected rejection");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("scene.depht_mode") != std::string::npos);
  }
  CHECK_THROWS_AS(PipelineConfig::from_json(json{{"trian", json::object()}}),
                  std::invalid_argument);
}

TEST_CASE("scene accepts nested arrays and dotted band keys") {
  auto nested = PipelineConfig::from_json(json{
      {"scene", {{"size", {32, 48}}, {"depth_range", {0.5, 4.0}}, {"k_att", {0.2, 0.1, 0.9}}}}});
  CHECK(nested.scene.scene.height == 32);
  CHECK(nested.scene.scene.width == 48);
  CHECK((nested.scene.optics.k_att == std::vector<double>{0.2, 0.1, 0.9}));

  auto dotted = PipelineConfig::from_json(
      json{{"scene", {{"k_att.b0", 0.2}, {"k_att.b1", 0.1}, {"k_att.b2", 0.9}}}});
  CHECK((dotted.scene.optics.k_att == std::vector<double>{0.2, 0.1, 0.9}));
}

TEST_CASE("loss and variant selections parse") {
  auto cfg = PipelineConfig::from_json(json{
      {"loss", {{"kind", "bw_rmse"}, {"decay", "exp"}, {"d_max_dist", 12.0}}},
      {"net", {{"variant", "self_cross"}}}});
  CHECK(cfg.train.spec.loss.kind == LossKind::kBwRmse);
  CHECK(cfg.train.spec.loss.decay == DecayKind::kExp);
  CHECK(cfg.train.spec.loss.d_max_dist == 12.0);
  CHECK(cfg.net.variant == AttentionVariant::kSelfCross);

  CHECK_THROWS_AS(PipelineConfig::from_json(json{{"loss", {{"kind", "huber"}}}}),
                  std::invalid_argument);
}

TEST_CASE("round-trip through to_json preserves the resolved config") {
  auto j = json{{"run_id", "abc"},
                {"scene_b", {{"depth_mode", "bimodal"}, {"seed", 9}}},
                {"train", {{"epochs", 3}, {"paper_protocol", true}}}};
  auto cfg = PipelineConfig::from_json(j);
  auto cfg2 = PipelineConfig::from_json(cfg.to_json());
  CHECK(cfg2.run_id == "abc");
  REQUIRE(cfg2.scene_b.has_value());
  CHECK(cfg2.scene_b->scene.mode == DepthMode::kBimodal);
  CHECK(cfg2.train.spec.epochs == 3);
  CHECK(cfg2.train.paper_protocol);
  CHECK(cfg.to_json() == cfg2.to_json());
}

TEST_CASE("environment override and seed override") {
  auto cfg = PipelineConfig::from_json(json{{"output_dir", "from_file"}});
  setenv("BATHYSCOPE_OUT", "/tmp/elsewhere", 1);
  cfg.apply_env();
  CHECK(cfg.output_dir == "/tmp/elsewhere");
  unsetenv("BATHYSCOPE_OUT");

  cfg.override_seed(321);
  CHECK(cfg.net.seed == 321);
  CHECK(cfg.train.spec.seed == 321);
  CHECK(cfg.scene.scene.seed == 321);
}

TEST_CASE("config file loading reports missing and malformed files") {
  CHECK_THROWS_AS(PipelineConfig::load("/no/such/config.json"), std::runtime_error);
  const auto path =
      (std::filesystem::temp_directory_path() / "bathyscope_test" / "broken.json").string();
  std::filesystem::create_directories(std::filesystem::path(path).parent_path());
  std::ofstream(path) << "{ not json";
  CHECK_THROWS_AS(PipelineConfig::load(path), std::runtime_error);
}
