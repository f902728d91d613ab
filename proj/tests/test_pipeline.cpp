#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "modmi/error.hpp"
#include "modmi/pipeline.hpp"
#include "modmi/quantizer.hpp"
#include "modmi/rng.hpp"
#include "modmi/synthetic.hpp"
#include "test_support.hpp"

using namespace modmi;

namespace {

FeatureMatrix gaussian(std::size_t rows, std::size_t dims, std::uint64_t seed, double rate = 25.0) {
  Rng rng(seed);
  std::vector<float> v(rows * dims);
  for (auto& f : v) f = static_cast<float>(rng.normal());
  return FeatureMatrix(rows, dims, v, rate);
}

LabelSequence random_labels(std::size_t rows, std::uint32_t alphabet, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint32_t> s(rows);
  for (auto& v : s) v = static_cast<std::uint32_t>(rng.below(alphabet));
  return LabelSequence(s, alphabet);
}

std::vector<StreamInput> three_streams(std::size_t rows = 600) {
  return {{"V", gaussian(rows, 3, 10), std::nullopt},
          {"T", random_labels(rows, 12, 11), std::nullopt},
          {"S", gaussian(rows, 4, 12), std::nullopt}};
}

}  // namespace

TEST_CASE("analysis equals running the modules by hand") {
  const auto inputs = three_streams();
  AnalysisConfig config;
  config.default_clusters = 100;
  config.seed = 1;
  const auto report = analyze_streams(inputs, config);

  KMeansOptions opt;
  opt.k = 100;
  opt.seed = 1;
  const auto& v = std::get<FeatureMatrix>(inputs[0].data);
  const auto& s = std::get<FeatureMatrix>(inputs[2].data);
  const auto cv = assign(fit(v, opt), v);
  const auto cs = assign(fit(s, opt), s);
  const auto& t = std::get<LabelSequence>(inputs[1].data);
  const auto expected = info_diagram(cv, t, cs);

  REQUIRE(report.diagram);
  const auto got = flatten(*report.diagram), want = flatten(expected);
  for (std::size_t i = 0; i < got.size(); ++i) {
    INFO(got[i].first);
    CHECK(got[i].second == want[i].second);
  }
  CHECK(report.roles == Roles{"V", "T", "S"});
  CHECK(report.entropy_of("S") == expected.h_s);
  CHECK(report.mi_of("S", "T") == expected.i_ts);
  REQUIRE(report.streams.size() == 3);
  CHECK(report.streams[0].k == 100u);
  CHECK(report.streams[0].distinct_clusters == 100u);
  CHECK(report.streams[0].codebook_digest->size() == 16);
  CHECK(!report.streams[1].k);
}

TEST_CASE("two streams report H, H and I only") {
  const std::vector<StreamInput> inputs{{"audio", gaussian(300, 2, 3), 20u},
                                        {"text", random_labels(300, 5, 4), std::nullopt}};
  const auto report = analyze_streams(inputs, AnalysisConfig{});
  CHECK(!report.diagram);
  CHECK(!report.roles);
  CHECK(report.entropies.size() == 2);
  CHECK(report.pairwise.size() == 1);
  CHECK(report.streams[0].k == 20u);
  const auto j = to_json(report);
  CHECK(!j["quantities"].contains("I3"));
  CHECK(!j["quantities"].contains("regions"));
  CHECK(j["quantities"]["I2"].contains("audio,text"));
  const double h = report.entropy_of("text");
  CHECK(report.conditionals.size() == 2);
  CHECK(std::abs(h - report.mi_of("text", "audio") - j["quantities"]["cond"]["H(text|audio)"].get<double>()) < 1e-12);
}

TEST_CASE("pre-discretized xor triple") {
  const auto x = exhaustive_stream(JointPmf::xor_triple(), 3);
  const std::vector<StreamInput> inputs{{"V", x[0], std::nullopt},
                                        {"T", x[1], std::nullopt},
                                        {"S", x[2], std::nullopt}};
  const auto report = analyze_streams(inputs, AnalysisConfig{});
  REQUIRE(report.diagram);
  CHECK(report.diagram->i_vts == -1.0);
  CHECK(report.diagram->i_tv == 0.0);
}

TEST_CASE("roles come from names, else from order") {
  CHECK(assign_roles({"audio", "Video", "phones"}) == Roles{"Video", "phones", "audio"});
  CHECK(assign_roles({"a", "b", "c"}) == Roles{"a", "b", "c"});
  CHECK(assign_roles({"audio", "speech", "text"}) == Roles{"audio", "speech", "text"});
}

TEST_CASE("streams at different rates are aligned before quantization") {
  const std::vector<StreamInput> inputs{{"S", gaussian(400, 2, 5, 50.0), 10u},
                                        {"T", random_labels(190, 4, 6), std::nullopt}};
  const auto report = analyze_streams(inputs, AnalysisConfig{});
  CHECK(report.streams[0].frames == 190);
  CHECK(report.streams[1].frames == 190);
}

TEST_CASE("sweep keeps the text entropy fixed") {
  const std::vector<std::vector<double>> centers{{0, 0}, {30, 0}, {0, 30}};
  const auto blobs = gen_gaussian_mixture(centers, 2.0, 700, 17);
  const std::vector<StreamInput> inputs{{"S", blobs.features, std::nullopt},
                                        {"T", blobs.components, std::nullopt}};
  AnalysisConfig config;
  config.seed = 2;
  const auto reports = sweep_clusters(inputs, config, {100, 2000});
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].entropy_of("T") == reports[1].entropy_of("T"));
  CHECK(reports[1].streams[0].k == 2000u);
  CHECK(reports[0].entropy_of("S") < reports[1].entropy_of("S"));
  for (const auto& r : reports)
    CHECK(r.entropy_of("S") <= std::log2(static_cast<double>(*r.streams[0].k)) + 1e-12);

  auto fixed = config;
  fixed.default_clusters = 100;
  const auto single = analyze_streams(inputs, fixed);
  CHECK(to_json(single)["quantities"] == to_json(reports[0])["quantities"]);
  CHECK_THROWS_AS(sweep_clusters(inputs, config, {}), Error);
}

TEST_CASE("sweep over a continuous gaussian stream") {
  const auto inputs = three_streams(2000);
  AnalysisConfig config;
  config.seed = 9;
  const auto reports = sweep_clusters(inputs, config, {10, 50, 100});
  for (std::size_t i = 1; i < reports.size(); ++i) {
    CHECK(reports[i].entropy_of("S") >= reports[i - 1].entropy_of("S"));
    CHECK(reports[i].entropy_of("T") == reports[0].entropy_of("T"));
  }
}

TEST_CASE("reports are deterministic and round-trip through JSON") {
  const auto inputs = three_streams();
  AnalysisConfig config;
  config.default_clusters = 30;
  config.seed = 77;
  config.normalize = true;
  config.log_base = LogBase::E;
  const auto a = analyze_streams(inputs, config);
  const auto b = analyze_streams(inputs, config);
  CHECK(to_json(a).dump() == to_json(b).dump());

  const auto back = report_from_json(to_json(a));
  CHECK(back.config == config);
  CHECK(to_json(back) == to_json(a));
  CHECK(back.diagram->regions.center == a.diagram->regions.center);
  CHECK(config_from_json(to_json(config)) == config);
  CHECK_THROWS_AS(report_from_json(nlohmann::json{{"config", 1}}), Error);
}

TEST_CASE("errors name the stream") {
  const std::vector<StreamInput> too_many_k{{"S", gaussian(20, 2, 1), 50u},
                                            {"T", random_labels(20, 3, 1), std::nullopt}};
  try {
    analyze_streams(too_many_k, AnalysisConfig{});
    FAIL("expected infeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
    CHECK(std::string(e.what()).find("stream 'S'") != std::string::npos);
  }
  const std::vector<StreamInput> labelled_k{{"S", gaussian(20, 2, 1), 5u},
                                            {"T", random_labels(20, 3, 1), 4u}};
  CHECK_THROWS_AS(analyze_streams(labelled_k, AnalysisConfig{}), Error);
  CHECK_THROWS_AS(analyze_streams({too_many_k[1]}, AnalysisConfig{}), Error);
}

TEST_CASE("analyze from a manifest") {
  test::TempDir dir("pipeline_manifest");
  const auto x = exhaustive_stream(JointPmf::xor_triple(), 2);
  write_labels_text(x[0], dir / "v.txt");
  write_labels(x[1], dir / "t.lbl");
  write_labels_text(x[2], dir / "s.txt");
  test::write_text(dir / "m.json", R"({"target_rate_hz": 25, "streams": [
    {"name": "video", "path": "v.txt", "kind": "labels", "sample_rate_hz": 25},
    {"name": "text", "path": "t.lbl", "kind": "labels", "sample_rate_hz": 25, "alphabet_size": 69},
    {"name": "audio", "path": "s.txt", "kind": "labels", "sample_rate_hz": 25}]})");
  const auto report = analyze(load_manifest(dir / "m.json"), AnalysisConfig{});
  CHECK(report.diagram->i_vts == -1.0);
  CHECK(report.roles == Roles{"video", "text", "audio"});
}
