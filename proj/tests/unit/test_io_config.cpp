#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "mupo/config.hpp"
#include "mupo/errors.hpp"
#include "mupo/io.hpp"

using namespace mupo;

namespace {

std::string expect_config_error(const std::string& text) {
  try {
    config::parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  ADD_FAILURE() << "expected ConfigError for: " << text;
  return {};
}

}  // namespace

TEST(Jsonl, TruthRoundTripIsByteExact) {
  sim::ScenarioConfig sc;
  sc.duration = 20.0;
  sim::Rng rng(3);
  const sim::Track tr = sim::generate_track(sc, rng);
  const auto truth = sim::truth_at_measurements(tr, sc);
  std::ostringstream a;
  io::write_truth(a, truth);
  std::istringstream in(a.str());
  const auto back = io::read_truth(in);
  ASSERT_EQ(back.size(), truth.size());
  EXPECT_EQ(back[5].x, truth[5].x);
  EXPECT_EQ(back[5].model, truth[5].model);
  std::ostringstream b;
  io::write_truth(b, back);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, 10), "{\"model\":\"");
}

TEST(Jsonl, MeasurementAndEstimateRoundTrips) {
  std::vector<geo::PolarMeasurement> zs{{200e3, 0.1234567890123, 87.5, 1.0},
                                        {200.5e3, -3.0, 1e-3, 2.0}};
  std::ostringstream a;
  io::write_measurements(a, zs);
  std::istringstream in(a.str());
  const auto back = io::read_measurements(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].theta, zs[0].theta);
  std::ostringstream b;
  io::write_measurements(b, back);
  EXPECT_EQ(a.str(), b.str());

  std::vector<track::TrackEstimate> es(2);
  es[0].t = 1.0;
  es[0].position = {1.0 / 3.0, -2.0};
  es[1].t = 2.0;
  es[1].source = track::Source::Fused;
  es[1].confidence = 0.25;
  std::ostringstream c;
  io::write_estimates(c, es);
  std::istringstream cin(c.str());
  const auto eb = io::read_estimates(cin);
  EXPECT_EQ(eb[0].position, es[0].position);
  EXPECT_EQ(eb[1].source, track::Source::Fused);
  std::ostringstream d;
  io::write_estimates(d, eb);
  EXPECT_EQ(c.str(), d.str());
}

TEST(Jsonl, MalformedLineIsAConfigError) {
  std::istringstream in("{\"rho\":1,\"snr\":1,\"t\":1,\"theta\":0}\n{oops\n");
  try {
    io::read_measurements(in);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream missing("{\"rho\":1}\n");
  EXPECT_THROW(io::read_measurements(missing), ConfigError);
}

TEST(Pgm, HeaderScalingAndNorthUp) {
  raster::Plane p(2, 3);
  p.at(0, 0) = 1.0f;  // south-west
  p.at(1, 2) = 2.0f;  // north-east
  std::ostringstream os;
  io::write_pgm(os, p);
  const std::string s = os.str();
  const std::string header = "P5\n3 2\n255\n";
  ASSERT_EQ(s.size(), header.size() + 6);
  EXPECT_EQ(s.substr(0, header.size()), header);
  const auto px = [&](int i) { return static_cast<unsigned char>(s[header.size() + i]); };
  // First written row is the top (north) row.
  EXPECT_EQ(px(2), 255);
  EXPECT_EQ(px(3), 128);
  EXPECT_EQ(px(0) + px(1) + px(4) + px(5), 0);

  raster::Plane zero(1, 2);
  std::ostringstream z;
  io::write_pgm(z, zero);
  EXPECT_EQ(z.str(), std::string("P5\n2 1\n255\n") + std::string(2, '\0'));
}

TEST(RunConfig, EmptyDocumentGivesDefaults) {
  const config::RunConfig a = config::parse_run_config("{}");
  const config::RunConfig d = config::default_run_config();
  EXPECT_EQ(config::to_json(a), config::to_json(d));
  EXPECT_EQ(a.raster.window_length, 4);
  EXPECT_EQ(a.net.stride, 32);
}

TEST(RunConfig, CanonicalJsonRoundTrip) {
  config::RunConfig cfg = config::default_run_config();
  cfg.raster.window_length = 6;
  cfg.eval.n_runs = 3;
  cfg.net.optimizer.learning_rate = 2.5e-4;
  const std::string text = config::to_json(cfg);
  const config::RunConfig back = config::parse_run_config(text);
  EXPECT_EQ(config::to_json(back), text);
  EXPECT_EQ(back.raster.window_length, 6);
  EXPECT_EQ(back.net, cfg.net);
}

TEST(RunConfig, DigestTracksContent) {
  config::RunConfig a = config::default_run_config();
  config::RunConfig b = a;
  EXPECT_EQ(config::config_digest(a), config::config_digest(b));
  EXPECT_EQ(config::config_digest(a).size(), 16u);
  b.eval.seed += 1;
  EXPECT_NE(config::config_digest(a), config::config_digest(b));
  EXPECT_EQ(config::fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(config::fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(RunConfig, RejectsUnknownKeysAndBadVersions) {
  EXPECT_NE(expect_config_error(R"({"bogus": 1})").find("bogus"), std::string::npos);
  EXPECT_NE(expect_config_error(R"({"raster": {"window": 4}})").find("window"), std::string::npos);
  expect_config_error(R"({"schema_version": 2})");
  expect_config_error(R"({"raster": {"mode": "elastic"}})");
  expect_config_error(R"({"net": {"stride": 12}})");
  expect_config_error(R"({"imm_preset": "nope"})");
}

TEST(RunConfig, MalformedJsonNamesLineAndColumn) {
  const std::string msg = expect_config_error("{\n  \"eval\": {\n    \"n_runs\": ,\n  }\n}");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column"), std::string::npos) << msg;
}

TEST(RunConfig, LineColumn) {
  EXPECT_EQ(config::line_column("ab\ncd", 0), (std::pair<long, long>{1, 1}));
  EXPECT_EQ(config::line_column("ab\ncd", 4), (std::pair<long, long>{2, 2}));
}

TEST(RunConfig, ScenarioPresets) {
  const auto heavy = config::scenario_preset("maneuver-heavy", 5);
  ASSERT_TRUE(heavy.fixed_schedule.has_value());
  EXPECT_EQ(heavy.fixed_schedule->size(), 5u);
  EXPECT_NO_THROW(config::scenario_preset("random", 5));
  EXPECT_NO_THROW(config::scenario_preset("cv", 5));
  EXPECT_THROW(config::scenario_preset("loop", 5), ConfigError);
}
