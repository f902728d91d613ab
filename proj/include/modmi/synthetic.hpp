#pragma once

#include <cstdint>
#include <vector>

#include "modmi/infotheory.hpp"
#include "modmi/ingestion.hpp"

namespace modmi {

// Dense joint probability table, first variable most significant.
class JointPmf {
 public:
  // Throws Error(Data) on negative/non-finite entries, a size mismatch or a
  // total that is not 1 within 1e-12.
  JointPmf(std::vector<std::uint32_t> alphabet_sizes, std::vector<double> probs);

  // Normalizes non-negative integer weights (not all zero).
  static JointPmf from_weights(std::vector<std::uint32_t> alphabet_sizes,
                               const std::vector<std::uint64_t>& weights);
  static JointPmf uniform(std::vector<std::uint32_t> alphabet_sizes);
  // X, Y fair independent bits, Z = X xor Y.
  static JointPmf xor_triple();

  std::size_t arity() const noexcept { return alphabets_.size(); }
  const std::vector<std::uint32_t>& alphabet_sizes() const noexcept { return alphabets_; }
  const std::vector<double>& probs() const noexcept { return probs_; }

  std::vector<std::uint32_t> decode(std::size_t flat) const;
  std::size_t encode(const std::vector<std::uint32_t>& tuple) const;

 private:
  std::vector<std::uint32_t> alphabets_;
  std::vector<double> probs_;
};

// Exact quantities by enumeration of the dense table. Each one is evaluated
// from its own defining sum (e.g. conditional MI as
// sum p(x,y,z) log p(z)p(x,y,z) / (p(x,z)p(y,z))), never through the
// entropy-difference shortcuts the estimators use. Arity 2 tables are read as
// (V, T) with a constant S. Throws Error(Precondition) for other arities.
InfoQuantities oracle_quantities(const JointPmf& pmf, LogBase base = LogBase::Two);

// Exact entropy of the marginal over `coords`.
double oracle_entropy(const JointPmf& pmf, const std::vector<std::size_t>& coords,
                      LogBase base = LogBase::Two);

// n i.i.d. frames by inverse CDF; one stream per variable, tagged x0, x1, ...
std::vector<LabelSequence> sample_discrete(const JointPmf& pmf, std::size_t n_frames,
                                           std::uint64_t seed);

// Streams whose empirical joint equals the pmf exactly: every tuple repeated
// in proportion to its probability, the whole block repeated `copies` times.
// Throws Error(Precondition) if the pmf is not rational with denominator
// <= 10^6.
std::vector<LabelSequence> exhaustive_stream(const JointPmf& pmf, std::size_t copies = 1);

struct GaussianMixtureSample {
  FeatureMatrix features;
  LabelSequence components;  // ground-truth component of every row
};

// n_per_center rows around every center; rows cycle through the centers.
GaussianMixtureSample gen_gaussian_mixture(const std::vector<std::vector<double>>& centers,
                                           double stddev, std::size_t n_per_center,
                                           std::uint64_t seed);

}  // namespace modmi
