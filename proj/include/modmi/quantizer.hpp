#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "modmi/ingestion.hpp"

namespace modmi {

struct KMeansOptions {
  std::uint32_t k = 2000;
  std::uint64_t seed = 0;
  double tol = 1e-4;          // stop when relative distortion decrease < tol
  std::uint32_t max_iter = 300;
  bool normalize = false;     // per-dimension z-score before clustering
  std::size_t threads = 0;    // 0: default_thread_count()
};

struct DimensionScale {
  float mean = 0.0f;
  float stddev = 1.0f;
  friend bool operator==(const DimensionScale&, const DimensionScale&) = default;
};

// Trained K-means model. Only k, dims, seed, normalization and centroids are
// persisted; the training statistics are zero on a loaded codebook.
struct Codebook {
  std::uint32_t k = 0;
  std::uint32_t dims = 0;
  std::uint64_t seed = 0;
  std::vector<float> centroids;                        // k x dims, row-major
  std::optional<std::vector<DimensionScale>> normalization;

  std::uint32_t iterations_run = 0;
  double final_distortion = 0.0;                       // mean squared distance
  std::vector<double> distortion_history;              // one entry per accepted step

  std::span<const float> centroid(std::size_t c) const {
    return std::span<const float>(centroids).subspan(c * dims, dims);
  }
};

// True when the persisted fields agree bit for bit.
bool same_model(const Codebook& a, const Codebook& b);

// Number of distinct rows of X, counting no further than `cap`.
std::size_t count_distinct_rows(const FeatureMatrix& x, std::size_t cap = SIZE_MAX);

// k-means++ seeding followed by Lloyd iterations with empty-cluster repair.
// Throws Error(Infeasible) when k exceeds the number of distinct rows.
Codebook fit(const FeatureMatrix& x, const KMeansOptions& options);

// Nearest centroid by squared Euclidean distance, ties to the lowest index.
// Output alphabet is k. Throws Error(Precondition) on a dimension mismatch.
LabelSequence assign(const Codebook& cb, const FeatureMatrix& x, std::size_t threads = 0);

// KMC1 file format.
std::vector<char> serialize_codebook(const Codebook& cb);
Codebook deserialize_codebook(const std::vector<char>& bytes);
void save_codebook(const Codebook& cb, const std::filesystem::path& path);
Codebook load_codebook(const std::filesystem::path& path);

// FNV-1a over the KMC1 encoding, as 16 hex digits.
std::string codebook_digest(const Codebook& cb);

}  // namespace modmi
