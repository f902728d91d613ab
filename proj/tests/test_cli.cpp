#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "modmi/cli.hpp"
#include "modmi/ingestion.hpp"
#include "modmi/pipeline.hpp"
#include "modmi/rng.hpp"
#include "test_support.hpp"

using namespace modmi;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> result;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) result.push_back(line);
  return result;
}

std::vector<std::string> words(const std::string& line) {
  std::vector<std::string> result;
  std::istringstream in(line);
  for (std::string w; in >> w;) result.push_back(w);
  return result;
}

void write_gaussian(const std::filesystem::path& path, std::size_t rows, std::size_t dims,
                    std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(rows * dims);
  for (auto& f : v) f = static_cast<float>(rng.normal());
  write_feature_matrix(FeatureMatrix(rows, dims, v), path);
}

}  // namespace

TEST_CASE("fit and assign") {
  test::TempDir dir("cli_fit");
  write_gaussian(dir / "x.fmx", 500, 4, 1);
  const auto a = run({"fit", (dir / "x.fmx").string(), "--clusters", "20", "--seed", "3", "--out",
                      (dir / "a.kmc").string()});
  CHECK(a.code == 0);
  CHECK(a.out.rfind("k=20 iterations=", 0) == 0);
  const auto b = run({"fit", (dir / "x.fmx").string(), "--clusters", "20", "--seed", "3", "--out",
                      (dir / "b.kmc").string()});
  CHECK(b.code == 0);
  CHECK(test::read_text(dir / "a.kmc") == test::read_text(dir / "b.kmc"));

  const auto c = run({"assign", (dir / "x.fmx").string(), "--codebook", (dir / "a.kmc").string(),
                      "--out", (dir / "x.lbl").string()});
  CHECK(c.code == 0);
  const auto labels = read_labels(dir / "x.lbl");
  CHECK(labels.rows() == 500);
  CHECK(labels.alphabet_size() == 20);

  const auto bad = run({"fit", (dir / "x.fmx").string(), "--clusters", "501", "--out",
                        (dir / "c.kmc").string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("infeasible k") != std::string::npos);
  CHECK(run({"fit", (dir / "missing.fmx").string(), "--out", (dir / "c.kmc").string()}).code == 1);
  CHECK(run({"fit"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("analyze the xor dataset") {
  test::TempDir dir("cli_xor");
  REQUIRE(run({"synth", "xor", "--out-dir", dir.path().string()}).code == 0);
  const auto manifest = (dir / "manifest.json").string();
  const auto table = run({"analyze", manifest});
  REQUIRE(table.code == 0);
  const auto rows = lines(table.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "H(T) H(S) H(V) I(T;V) I(T;S) I(V;S) I(V;T;S)");
  CHECK(rows[1] == "1.0000 1.0000 1.0000 0.0000 0.0000 0.0000 -1.0000");

  const auto svg = run({"analyze", manifest, "--format", "svg"});
  CHECK(svg.out.find("<svg") != std::string::npos);
  CHECK(svg.out.find("-1.0000") != std::string::npos);

  CHECK(run({"analyze", (dir / "nope.json").string()}).code == 1);
  CHECK(run({"analyze", manifest, "--format", "xml"}).code == 2);
}

TEST_CASE("json output matches the table and round-trips through report") {
  test::TempDir dir("cli_json");
  REQUIRE(run({"synth", "gaussian", "--out-dir", dir.path().string(), "--frames", "600"}).code == 0);
  const auto manifest = (dir / "manifest.json").string();
  const auto json_path = (dir / "r.json").string();
  REQUIRE(run({"analyze", manifest, "--clusters", "40", "--format", "json", "--out", json_path}).code == 0);
  const auto report = report_from_json(nlohmann::json::parse(test::read_text(json_path)));
  CHECK(report.config.clusters_override == 40u);
  REQUIRE(report.diagram);

  const auto table = run({"analyze", manifest, "--clusters", "40"});
  const auto values = words(lines(table.out)[1]);
  const auto& q = *report.diagram;
  const double expected[] = {q.h_t, q.h_s, q.h_v, q.i_tv, q.i_ts, q.i_vs, q.i_vts};
  REQUIRE(values.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) CHECK(std::abs(std::stod(values[i]) - expected[i]) <= 5e-5);

  const auto rerendered = run({"report", json_path});
  CHECK(rerendered.code == 0);
  CHECK(rerendered.out == table.out);
  const auto again = run({"report", json_path, "--format", "json"});
  CHECK(again.out == test::read_text(json_path));
}

TEST_CASE("sweep") {
  test::TempDir dir("cli_sweep");
  REQUIRE(run({"synth", "gaussian", "--out-dir", dir.path().string(), "--frames", "800"}).code == 0);
  const auto manifest = (dir / "manifest.json").string();
  const auto sweep = run({"sweep", manifest, "--ks", "100,200"});
  REQUIRE(sweep.code == 0);
  const auto rows = lines(sweep.out);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == "Clusters H(T) H(S) H(V) I(T;V) I(T;S) I(V;S) I(V;T;S)");
  const auto r100 = words(rows[1]), r200 = words(rows[2]);
  CHECK(r100[0] == "100");
  CHECK(r200[0] == "200");
  CHECK(r100[1] == r200[1]);

  const auto single = run({"sweep", manifest, "--ks", "100"});
  const auto analyzed = run({"analyze", manifest, "--clusters", "100"});
  CHECK(lines(single.out)[1] == "100 " + lines(analyzed.out)[1]);

  CHECK(run({"sweep", manifest, "--ks", ""}).code == 2);
  CHECK(run({"sweep", manifest, "--ks", "10,x"}).code == 2);
  const auto js = run({"sweep", manifest, "--ks", "10,20", "--format", "json"});
  CHECK(nlohmann::json::parse(js.out).size() == 2);
}

TEST_CASE("synth blobs recovers the components") {
  test::TempDir dir("cli_blobs");
  REQUIRE(run({"synth", "blobs", "--out-dir", dir.path().string(), "--per-center", "300"}).code == 0);
  const auto table = run({"analyze", (dir / "manifest.json").string()});
  REQUIRE(table.code == 0);
  const auto rows = lines(table.out);
  CHECK(rows[0] == "H(S) H(T) I(S;T)");
  const auto v = words(rows[1]);
  CHECK(std::abs(std::stod(v[2]) - std::log2(3.0)) < 1e-4);
}
