#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "modmi/error.hpp"
#include "modmi/quantizer.hpp"
#include "modmi/rng.hpp"
#include "modmi/synthetic.hpp"
#include "test_support.hpp"

using namespace modmi;

namespace {

FeatureMatrix from_rows(const std::vector<std::vector<float>>& rows) {
  std::vector<float> v;
  for (const auto& r : rows) v.insert(v.end(), r.begin(), r.end());
  return FeatureMatrix(rows.size(), rows.front().size(), v);
}

Codebook handmade(std::uint32_t dims, const std::vector<std::vector<float>>& centroids) {
  Codebook cb;
  cb.k = static_cast<std::uint32_t>(centroids.size());
  cb.dims = dims;
  for (const auto& c : centroids) cb.centroids.insert(cb.centroids.end(), c.begin(), c.end());
  return cb;
}

// Random small instance; values on a coarse grid so duplicates occur.
FeatureMatrix random_instance(Rng& rng) {
  const std::size_t n = 5 + rng.below(200), d = 1 + rng.below(5);
  std::vector<float> v(n * d);
  const bool coarse = rng.uniform() < 0.5;
  for (auto& f : v)
    f = coarse ? static_cast<float>(rng.below(4)) : static_cast<float>(rng.normal() * 3.0);
  return FeatureMatrix(n, d, v);
}

}  // namespace

TEST_CASE("separable data") {
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({0.0f, 0.0f});
  for (int i = 0; i < 10; ++i) rows.push_back({10.0f, 10.0f});
  KMeansOptions opt;
  opt.k = 2;
  const auto cb = fit(from_rows(rows), opt);
  std::set<std::vector<float>> got;
  for (std::uint32_t c = 0; c < 2; ++c) got.insert({cb.centroid(c)[0], cb.centroid(c)[1]});
  CHECK(got == std::set<std::vector<float>>{{0.0f, 0.0f}, {10.0f, 10.0f}});
  CHECK(cb.final_distortion == 0.0);
}

TEST_CASE("k = 1 gives the column means") {
  Rng rng(12);
  const auto x = random_instance(rng);
  KMeansOptions opt;
  opt.k = 1;
  const auto cb = fit(x, opt);
  for (std::size_t j = 0; j < x.dims(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) mean += x.row(i)[j];
    mean /= static_cast<double>(x.rows());
    CHECK(cb.centroid(0)[j] == doctest::Approx(mean).epsilon(1e-6));
  }
}

TEST_CASE("three gaussian blobs") {
  const std::vector<std::vector<double>> centers{{0, 0}, {100, 0}, {0, 100}};
  const auto blobs = gen_gaussian_mixture(centers, 0.1, 100, 19);
  REQUIRE(blobs.features.rows() == 300);
  KMeansOptions opt;
  opt.k = 3;
  opt.seed = 7;
  const auto cb = fit(blobs.features, opt);
  const auto labels = assign(cb, blobs.features);

  // sample mean of every blob, computed straight from the generator output
  std::vector<std::array<double, 2>> blob_mean(3, {0.0, 0.0});
  for (std::size_t i = 0; i < 300; ++i) {
    blob_mean[blobs.components[i]][0] += blobs.features.row(i)[0] / 100.0;
    blob_mean[blobs.components[i]][1] += blobs.features.row(i)[1] / 100.0;
  }
  for (std::uint32_t c = 0; c < 3; ++c) {
    const auto centroid = cb.centroid(c);
    const auto owner = std::min_element(centers.begin(), centers.end(), [&](auto& a, auto& b) {
      return std::hypot(a[0] - centroid[0], a[1] - centroid[1]) <
             std::hypot(b[0] - centroid[0], b[1] - centroid[1]);
    });
    const auto blob = static_cast<std::size_t>(owner - centers.begin());
    CHECK(std::hypot((*owner)[0] - centroid[0], (*owner)[1] - centroid[1]) < 0.1);
    CHECK(centroid[0] == doctest::Approx(blob_mean[blob][0]).epsilon(1e-5));
    CHECK(centroid[1] == doctest::Approx(blob_mean[blob][1]).epsilon(1e-5));
  }
  // labels constant within each blob
  std::vector<std::set<std::uint32_t>> seen(3);
  for (std::size_t i = 0; i < 300; ++i) seen[blobs.components[i]].insert(labels[i]);
  for (const auto& s : seen) CHECK(s.size() == 1);
}

TEST_CASE("assign: nearest centroid, lowest index on ties") {
  const auto cb = handmade(2, {{9, 9}, {-1, 0}, {5, 5}, {3, 4}, {1, 0}});
  const auto x = from_rows({{3, 4}, {0, 0}, {0, 7}});
  const auto labels = assign(cb, x);
  CHECK(labels.alphabet_size() == 5);
  CHECK(labels[0] == 3);
  CHECK(labels[1] == 1);  // equidistant from 1 and 4
  CHECK(labels[2] == 3);
  CHECK_THROWS_AS(assign(cb, from_rows({{1, 2, 3}})), Error);
}

TEST_CASE("infeasible k") {
  const auto x = from_rows({{1, 1}, {1, 1}, {2, 2}, {-0.0f, 0}, {0, 0}});
  CHECK(count_distinct_rows(x) == 3);
  KMeansOptions opt;
  opt.k = 4;
  try {
    fit(x, opt);
    FAIL("expected infeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
  }
  opt.k = 3;
  CHECK(fit(x, opt).final_distortion == 0.0);
}

TEST_CASE("codebook files") {
  test::TempDir dir("kmc");
  Rng rng(4);
  KMeansOptions opt;
  opt.k = 4;
  opt.seed = 99;
  opt.normalize = true;
  const auto cb = fit(random_instance(rng), opt);
  save_codebook(cb, dir / "cb.kmc");
  const auto back = load_codebook(dir / "cb.kmc");
  CHECK(same_model(cb, back));
  CHECK(back.seed == 99);
  CHECK(back.normalization == cb.normalization);

  auto bytes = test::read_text(dir / "cb.kmc");
  bytes.pop_back();
  test::write_text(dir / "short.kmc", bytes);
  try {
    load_codebook(dir / "short.kmc");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SizeMismatch);
  }
  test::write_text(dir / "magic.kmc", "KMC2" + bytes.substr(4));
  CHECK_THROWS_AS(load_codebook(dir / "magic.kmc"), Error);

  Codebook big;
  big.k = 2000;
  big.dims = 768;
  big.centroids.assign(2000u * 768u, 0.5f);
  CHECK(serialize_codebook(big).size() == 21u + 2000u * 768u * 4u);
  big.normalization = std::vector<DimensionScale>(768);
  CHECK(serialize_codebook(big).size() == 21u + 768u * 8u + 2000u * 768u * 4u);
}

TEST_CASE("property: Lloyd contract on random instances") {
  Rng rng(2718);
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = random_instance(rng);
    const auto distinct = count_distinct_rows(x);
    KMeansOptions opt;
    opt.k = 1 + static_cast<std::uint32_t>(rng.below(std::min<std::size_t>(distinct, 12)));
    opt.seed = rng.next();
    opt.tol = 1e-9;
    const auto cb = fit(x, opt);

    for (std::size_t i = 1; i < cb.distortion_history.size(); ++i)
      CHECK(cb.distortion_history[i] <= cb.distortion_history[i - 1]);
    CHECK(cb.final_distortion >= 0.0);
    CHECK(cb.final_distortion == cb.distortion_history.back());

    const auto labels = assign(cb, x);
    std::set<std::uint32_t> used(labels.symbols().begin(), labels.symbols().end());
    CHECK(used.size() == opt.k);
    CHECK(assign(cb, x) == labels);

    // second run and a different thread count give identical bits
    auto opt2 = opt;
    opt2.threads = 3;
    const auto again = fit(x, opt2);
    CHECK(same_model(cb, again));
    CHECK(again.distortion_history == cb.distortion_history);

    if (distinct <= 12) {
      auto full = opt;
      full.k = static_cast<std::uint32_t>(distinct);
      CHECK(fit(x, full).final_distortion == 0.0);
    }
  }
}

TEST_CASE("normalization makes clustering scale invariant") {
  const std::vector<std::vector<double>> centers{{0, 0}, {5, 0}, {0, 5}};
  const auto base = gen_gaussian_mixture(centers, 0.3, 50, 2);
  std::vector<float> scaled(base.features.values().begin(), base.features.values().end());
  for (std::size_t i = 0; i < scaled.size(); i += 2) scaled[i] *= 1024.0f;
  const FeatureMatrix stretched(base.features.rows(), 2, scaled);

  KMeansOptions opt;
  opt.k = 3;
  opt.seed = 5;
  opt.normalize = true;
  const auto a = assign(fit(base.features, opt), base.features);
  const auto b = assign(fit(stretched, opt), stretched);
  CHECK(std::equal(a.symbols().begin(), a.symbols().end(), b.symbols().begin(), b.symbols().end()));
}

TEST_CASE("large instance uses several threads deterministically") {
  Rng rng(1);
  std::vector<float> v(5000 * 8);
  for (auto& f : v) f = static_cast<float>(rng.normal());
  const FeatureMatrix x(5000, 8, v);
  KMeansOptions opt;
  opt.k = 40;
  opt.seed = 3;
  opt.threads = 1;
  const auto one = fit(x, opt);
  opt.threads = 8;
  const auto many = fit(x, opt);
  CHECK(same_model(one, many));
  CHECK(assign(one, x, 1) == assign(many, x, 7));
  for (std::size_t i = 1; i < one.distortion_history.size(); ++i)
    CHECK(one.distortion_history[i] <= one.distortion_history[i - 1]);
}
