#include "modmi/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_map>

#include "byte_io.hpp"
#include "modmi/error.hpp"
#include "modmi/parallel.hpp"
#include "modmi/rng.hpp"

namespace modmi {

namespace {

constexpr std::string_view kCodebookMagic = "KMC1";

std::uint32_t canonical_bits(float v) {
  return v == 0.0f ? 0u : std::bit_cast<std::uint32_t>(v);  // -0 and +0 are one point
}

double squared_distance(std::span<const float> a, std::span<const float> b) {
  double sum = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    sum += diff * diff;
  }
  return sum;
}

std::vector<DimensionScale> compute_normalization(const FeatureMatrix& x) {
  std::vector<DimensionScale> scales(x.dims());
  const double n = static_cast<double>(x.rows());
  for (std::size_t j = 0; j < x.dims(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) mean += x.row(i)[j];
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double d = x.row(i)[j] - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / n);
    scales[j].mean = static_cast<float>(mean);
    scales[j].stddev = sd > 0.0 && static_cast<float>(sd) > 0.0f ? static_cast<float>(sd) : 1.0f;
  }
  return scales;
}

// Points in the space the codebook lives in (z-scored if requested).
std::vector<float> working_points(const FeatureMatrix& x,
                                  const std::optional<std::vector<DimensionScale>>& scales) {
  std::vector<float> z(x.values().begin(), x.values().end());
  if (!scales) return z;
  const std::size_t d = x.dims();
  for (std::size_t i = 0; i < z.size(); ++i) {
    const auto& s = (*scales)[i % d];
    z[i] = static_cast<float>((static_cast<double>(z[i]) - s.mean) / s.stddev);
  }
  return z;
}

// Lloyd state over a fixed point set.
class Lloyd {
 public:
  Lloyd(std::vector<float> points, std::size_t dims, std::uint32_t k, std::size_t threads)
      : z_(std::move(points)), n_(z_.size() / dims), d_(dims), k_(k), threads_(threads) {}

  std::span<const float> point(std::size_t i) const {
    return std::span<const float>(z_).subspan(i * d_, d_);
  }

  std::vector<float> seed_plus_plus(Rng& rng) const {
    std::vector<float> centroids;
    centroids.reserve(std::size_t{k_} * d_);
    auto add = [&](std::size_t i) {
      const auto p = point(i);
      centroids.insert(centroids.end(), p.begin(), p.end());
    };
    add(rng.below(n_));
    std::vector<double> nearest(n_);
    parallel_for(n_, threads_, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i)
        nearest[i] = squared_distance(point(i), std::span<const float>(centroids).first(d_));
    });
    for (std::uint32_t c = 1; c < k_; ++c) {
      double total = 0.0;
      for (double v : nearest) total += v;
      if (!(total > 0.0))
        throw Error(ErrorKind::Infeasible, "infeasible k: fewer than k distinct points");
      const double target = rng.uniform() * total;
      std::size_t chosen = n_;
      double cum = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        if (nearest[i] <= 0.0) continue;
        cum += nearest[i];
        chosen = i;
        if (cum > target) break;
      }
      add(chosen);
      const auto latest = std::span<const float>(centroids).subspan(std::size_t{c} * d_, d_);
      parallel_for(n_, threads_, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
          nearest[i] = std::min(nearest[i], squared_distance(point(i), latest));
      });
    }
    return centroids;
  }

  void assign(const std::vector<float>& centroids, std::vector<std::uint32_t>& labels,
              std::vector<double>& dist) const {
    labels.resize(n_);
    dist.resize(n_);
    parallel_for(n_, threads_, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const auto p = point(i);
        std::uint32_t best = 0;
        double best_d = squared_distance(p, std::span<const float>(centroids).first(d_));
        for (std::uint32_t c = 1; c < k_; ++c) {
          const double dc =
              squared_distance(p, std::span<const float>(centroids).subspan(std::size_t{c} * d_, d_));
          if (dc < best_d) {
            best_d = dc;
            best = c;
          }
        }
        labels[i] = best;
        dist[i] = best_d;
      }
    });
  }

  // Assign, and while any cluster is empty move the point farthest from its
  // centroid (taken from a cluster with more than one member) into it.
  // Returns mean squared distance under the final plain assignment.
  double assign_with_repair(std::vector<float>& centroids, std::vector<std::uint32_t>& labels,
                            std::vector<double>& dist) const {
    for (;;) {
      assign(centroids, labels, dist);
      std::vector<std::size_t> counts(k_, 0);
      for (auto l : labels) ++counts[l];
      bool repaired = false;
      for (std::uint32_t c = 0; c < k_; ++c) {
        if (counts[c] != 0) continue;
        std::size_t far = n_;
        for (std::size_t i = 0; i < n_; ++i) {
          if (counts[labels[i]] < 2) continue;
          if (far == n_ || dist[i] > dist[far]) far = i;
        }
        if (far == n_) throw std::logic_error("k-means repair found no donor cluster");
        --counts[labels[far]];
        ++counts[c];
        labels[far] = c;
        dist[far] = 0.0;
        const auto p = point(far);
        std::copy(p.begin(), p.end(), centroids.begin() + std::size_t{c} * d_);
        repaired = true;
      }
      if (!repaired) break;
    }
    double sum = 0.0;
    for (double v : dist) sum += v;
    return sum / static_cast<double>(n_);
  }

  // Cluster means. Each cluster sums its members in ascending point order, so
  // the result does not depend on how clusters are spread over threads.
  std::vector<float> means(const std::vector<std::uint32_t>& labels) const {
    std::vector<std::size_t> start(k_ + 1, 0);
    for (auto l : labels) ++start[l + 1];
    for (std::uint32_t c = 0; c < k_; ++c) start[c + 1] += start[c];
    std::vector<std::size_t> order(n_);
    {
      auto fill = start;
      for (std::size_t i = 0; i < n_; ++i) order[fill[labels[i]]++] = i;
    }
    std::vector<float> centroids(std::size_t{k_} * d_);
    parallel_for(k_, threads_, [&](std::size_t b, std::size_t e) {
      std::vector<double> acc(d_);
      for (std::size_t c = b; c < e; ++c) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t m = start[c]; m < start[c + 1]; ++m) {
          const auto p = point(order[m]);
          for (std::size_t j = 0; j < d_; ++j) acc[j] += p[j];
        }
        const double count = static_cast<double>(start[c + 1] - start[c]);
        for (std::size_t j = 0; j < d_; ++j)
          centroids[c * d_ + j] = static_cast<float>(acc[j] / count);
      }
    });
    return centroids;
  }

 private:
  std::vector<float> z_;
  std::size_t n_;
  std::size_t d_;
  std::uint32_t k_;
  std::size_t threads_;
};

}  // namespace

bool same_model(const Codebook& a, const Codebook& b) {
  return serialize_codebook(a) == serialize_codebook(b);
}

std::size_t count_distinct_rows(const FeatureMatrix& x, std::size_t cap) {
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
  std::size_t distinct = 0;
  auto same_row = [&](std::size_t a, std::size_t b) {
    const auto ra = x.row(a), rb = x.row(b);
    for (std::size_t j = 0; j < ra.size(); ++j)
      if (canonical_bits(ra[j]) != canonical_bits(rb[j])) return false;
    return true;
  };
  for (std::size_t i = 0; i < x.rows() && distinct < cap; ++i) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (float v : x.row(i)) {
      h ^= canonical_bits(v);
      h *= 0x100000001b3ULL;
    }
    auto& bucket = buckets[h];
    if (std::none_of(bucket.begin(), bucket.end(), [&](std::size_t r) { return same_row(r, i); })) {
      bucket.push_back(i);
      ++distinct;
    }
  }
  return distinct;
}

Codebook fit(const FeatureMatrix& x, const KMeansOptions& options) {
  if (options.k < 1) throw Error(ErrorKind::Precondition, "k must be at least 1");
  if (options.max_iter < 1) throw Error(ErrorKind::Precondition, "max_iter must be at least 1");
  if (!(options.tol > 0.0)) throw Error(ErrorKind::Precondition, "tol must be positive");
  const std::size_t distinct = count_distinct_rows(x, options.k);
  if (distinct < options.k)
    throw Error(ErrorKind::Infeasible, "infeasible k: k=" + std::to_string(options.k) +
                                           " exceeds the " + std::to_string(distinct) +
                                           " distinct rows");

  Codebook cb;
  cb.k = options.k;
  cb.dims = static_cast<std::uint32_t>(x.dims());
  cb.seed = options.seed;
  if (options.normalize) cb.normalization = compute_normalization(x);

  const std::size_t threads = options.threads ? options.threads : default_thread_count();
  const Lloyd lloyd(working_points(x, cb.normalization), x.dims(), options.k, threads);
  Rng rng(options.seed);

  std::vector<float> centroids = lloyd.seed_plus_plus(rng);
  std::vector<std::uint32_t> labels;
  std::vector<double> dist;
  double distortion = lloyd.assign_with_repair(centroids, labels, dist);
  cb.distortion_history.push_back(distortion);

  std::vector<std::uint32_t> next_labels;
  for (std::uint32_t it = 1; it <= options.max_iter && distortion > 0.0; ++it) {
    std::vector<float> next = lloyd.means(labels);
    const double next_distortion = lloyd.assign_with_repair(next, next_labels, dist);
    // float rounding of the means can in principle undo a converged step
    if (next_distortion > distortion) break;
    const bool moved = next_labels != labels;
    const double improvement = (distortion - next_distortion) / distortion;
    centroids = std::move(next);
    labels.swap(next_labels);
    distortion = next_distortion;
    cb.distortion_history.push_back(distortion);
    cb.iterations_run = it;
    if (!moved || improvement < options.tol) break;
  }

  std::vector<std::size_t> counts(options.k, 0);
  for (auto l : labels) ++counts[l];
  if (std::find(counts.begin(), counts.end(), 0u) != counts.end())
    throw std::logic_error("k-means finished with an empty cluster");

  cb.centroids = std::move(centroids);
  cb.final_distortion = distortion;
  return cb;
}

LabelSequence assign(const Codebook& cb, const FeatureMatrix& x, std::size_t threads) {
  if (x.dims() != cb.dims)
    throw Error(ErrorKind::Precondition, "dimension mismatch: codebook has " +
                                             std::to_string(cb.dims) + " dims, features have " +
                                             std::to_string(x.dims()));
  if (!threads) threads = default_thread_count();
  const Lloyd lloyd(working_points(x, cb.normalization), x.dims(), cb.k, threads);
  std::vector<std::uint32_t> labels;
  std::vector<double> dist;
  lloyd.assign(cb.centroids, labels, dist);
  return LabelSequence(std::move(labels), cb.k, x.sample_rate_hz(), x.modality_tag());
}

std::vector<char> serialize_codebook(const Codebook& cb) {
  detail::ByteWriter out;
  out.magic(kCodebookMagic);
  out.u32(cb.k);
  out.u32(cb.dims);
  out.u64(cb.seed);
  out.u8(cb.normalization ? 1 : 0);
  if (cb.normalization) {
    for (const auto& s : *cb.normalization) {
      out.f32(s.mean);
      out.f32(s.stddev);
    }
  }
  for (float v : cb.centroids) out.f32(v);
  return out.bytes();
}

Codebook deserialize_codebook(const std::vector<char>& bytes) {
  detail::ByteReader in(bytes);
  if (!in.magic(kCodebookMagic)) throw Error(ErrorKind::Format, "not a KMC1 codebook");
  Codebook cb;
  cb.k = in.u32();
  cb.dims = in.u32();
  cb.seed = in.u64();
  const std::uint8_t flag = in.u8();
  if (cb.k == 0 || cb.dims == 0) throw Error(ErrorKind::Format, "codebook with zero k or dims");
  if (flag > 1) throw Error(ErrorKind::Format, "bad normalization flag");
  const std::uint64_t expected =
      (flag ? std::uint64_t{cb.dims} * 8 : 0) + std::uint64_t{cb.k} * cb.dims * 4;
  if (in.remaining() != expected)
    throw Error(ErrorKind::SizeMismatch, "codebook payload holds " +
                                             std::to_string(in.remaining()) + " bytes, expected " +
                                             std::to_string(expected));
  if (flag) {
    std::vector<DimensionScale> scales(cb.dims);
    for (auto& s : scales) {
      s.mean = in.f32();
      s.stddev = in.f32();
    }
    cb.normalization = std::move(scales);
  }
  cb.centroids.resize(std::size_t{cb.k} * cb.dims);
  for (auto& v : cb.centroids) {
    v = in.f32();
    if (!std::isfinite(v)) throw Error(ErrorKind::Data, "non-finite centroid value");
  }
  return cb;
}

void save_codebook(const Codebook& cb, const std::filesystem::path& path) {
  detail::write_file(path, serialize_codebook(cb));
}

Codebook load_codebook(const std::filesystem::path& path) {
  try {
    return deserialize_codebook(detail::read_file(path));
  } catch (const Error& e) {
    throw e.with_context(path.string());
  }
}

std::string codebook_digest(const Codebook& cb) {
  return detail::hex64(detail::fnv1a64(serialize_codebook(cb)));
}

}  // namespace modmi
