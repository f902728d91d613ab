#include "modmi/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "modmi/error.hpp"
#include "modmi/rng.hpp"

namespace modmi {

JointPmf::JointPmf(std::vector<std::uint32_t> alphabet_sizes, std::vector<double> probs)
    : alphabets_(std::move(alphabet_sizes)), probs_(std::move(probs)) {
  if (alphabets_.empty()) throw Error(ErrorKind::Data, "pmf needs at least one variable");
  std::size_t cells = 1;
  for (auto a : alphabets_) {
    if (a == 0) throw Error(ErrorKind::Data, "zero alphabet size");
    cells *= a;
  }
  if (probs_.size() != cells)
    throw Error(ErrorKind::Data, "pmf table has " + std::to_string(probs_.size()) +
                                     " entries, expected " + std::to_string(cells));
  double total = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) throw Error(ErrorKind::Data, "invalid probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorKind::Data, "pmf is not normalized");
}

JointPmf JointPmf::from_weights(std::vector<std::uint32_t> alphabet_sizes,
                                const std::vector<std::uint64_t>& weights) {
  const std::uint64_t total = std::accumulate(weights.begin(), weights.end(), std::uint64_t{0});
  if (total == 0) throw Error(ErrorKind::Data, "all weights are zero");
  std::vector<double> probs(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i)
    probs[i] = static_cast<double>(weights[i]) / static_cast<double>(total);
  return JointPmf(std::move(alphabet_sizes), std::move(probs));
}

JointPmf JointPmf::uniform(std::vector<std::uint32_t> alphabet_sizes) {
  std::size_t cells = 1;
  for (auto a : alphabet_sizes) cells *= a;
  return from_weights(std::move(alphabet_sizes), std::vector<std::uint64_t>(cells, 1));
}

JointPmf JointPmf::xor_triple() {
  std::vector<std::uint64_t> w(8, 0);
  for (std::uint32_t x = 0; x < 2; ++x)
    for (std::uint32_t y = 0; y < 2; ++y) w[x * 4 + y * 2 + (x ^ y)] = 1;
  return from_weights({2, 2, 2}, w);
}

std::vector<std::uint32_t> JointPmf::decode(std::size_t flat) const {
  std::vector<std::uint32_t> tuple(alphabets_.size());
  for (std::size_t v = alphabets_.size(); v-- > 0;) {
    tuple[v] = static_cast<std::uint32_t>(flat % alphabets_[v]);
    flat /= alphabets_[v];
  }
  return tuple;
}

std::size_t JointPmf::encode(const std::vector<std::uint32_t>& tuple) const {
  std::size_t flat = 0;
  for (std::size_t v = 0; v < alphabets_.size(); ++v) flat = flat * alphabets_[v] + tuple[v];
  return flat;
}

// --- oracle ------------------------------------------------------------------

namespace {

// Dense three-variable table p[x][y][z] with helpers for its marginals.
class Table3 {
 public:
  explicit Table3(const JointPmf& pmf) {
    if (pmf.arity() != 2 && pmf.arity() != 3)
      throw Error(ErrorKind::Precondition, "oracle supports arity 2 or 3");
    const auto& a = pmf.alphabet_sizes();
    nx_ = a[0];
    ny_ = a[1];
    nz_ = pmf.arity() == 3 ? a[2] : 1;
    p_ = pmf.probs();  // arity 2 flattens identically with nz = 1
    px_.assign(nx_, 0);
    py_.assign(ny_, 0);
    pz_.assign(nz_, 0);
    pxy_.assign(nx_ * ny_, 0);
    pxz_.assign(nx_ * nz_, 0);
    pyz_.assign(ny_ * nz_, 0);
    for (std::size_t x = 0; x < nx_; ++x)
      for (std::size_t y = 0; y < ny_; ++y)
        for (std::size_t z = 0; z < nz_; ++z) {
          const double p = at(x, y, z);
          px_[x] += p;
          py_[y] += p;
          pz_[z] += p;
          pxy_[x * ny_ + y] += p;
          pxz_[x * nz_ + z] += p;
          pyz_[y * nz_ + z] += p;
        }
  }

  double at(std::size_t x, std::size_t y, std::size_t z) const {
    return p_[(x * ny_ + y) * nz_ + z];
  }

  // Sum of f(x, y, z) * p(x, y, z) over the support.
  template <typename F>
  double expect(F&& f) const {
    double sum = 0.0;
    for (std::size_t x = 0; x < nx_; ++x)
      for (std::size_t y = 0; y < ny_; ++y)
        for (std::size_t z = 0; z < nz_; ++z) {
          const double p = at(x, y, z);
          if (p > 0.0) sum += p * f(x, y, z, p);
        }
    return sum;
  }

  std::size_t nx_, ny_, nz_;
  std::vector<double> p_, px_, py_, pz_, pxy_, pxz_, pyz_;
};

double plogp_sum(const std::vector<double>& probs, LogBase base) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * log_in(p, base);
  return h;
}

}  // namespace

double oracle_entropy(const JointPmf& pmf, const std::vector<std::size_t>& coords, LogBase base) {
  std::vector<std::size_t> radix;
  std::size_t cells = 1;
  for (auto c : coords) {
    if (c >= pmf.arity()) throw Error(ErrorKind::Precondition, "coordinate out of range");
    cells *= pmf.alphabet_sizes()[c];
  }
  std::vector<double> marginal(cells, 0.0);
  for (std::size_t flat = 0; flat < pmf.probs().size(); ++flat) {
    const auto tuple = pmf.decode(flat);
    std::size_t m = 0;
    for (auto c : coords) m = m * pmf.alphabet_sizes()[c] + tuple[c];
    marginal[m] += pmf.probs()[flat];
  }
  return plogp_sum(marginal, base);
}

InfoQuantities oracle_quantities(const JointPmf& pmf, LogBase base) {
  const Table3 t(pmf);
  const auto L = [base](double v) { return log_in(v, base); };
  const auto nz = t.nz_, ny = t.ny_;
  // Variables: x = V, y = T, z = S.
  InfoQuantities q;
  q.log_base = base;
  q.h_v = plogp_sum(t.px_, base);
  q.h_t = plogp_sum(t.py_, base);
  q.h_s = plogp_sum(t.pz_, base);

  q.i_tv = t.expect([&](auto x, auto y, auto, double) {
    return L(t.pxy_[x * ny + y] / (t.px_[x] * t.py_[y]));
  });
  q.i_ts = t.expect([&](auto, auto y, auto z, double) {
    return L(t.pyz_[y * nz + z] / (t.py_[y] * t.pz_[z]));
  });
  q.i_vs = t.expect([&](auto x, auto, auto z, double) {
    return L(t.pxz_[x * nz + z] / (t.px_[x] * t.pz_[z]));
  });

  q.h_s_given_t = -t.expect([&](auto, auto y, auto z, double) {
    return L(t.pyz_[y * nz + z] / t.py_[y]);
  });
  q.h_v_given_t = -t.expect([&](auto x, auto y, auto, double) {
    return L(t.pxy_[x * ny + y] / t.py_[y]);
  });
  q.h_t_given_s = -t.expect([&](auto, auto y, auto z, double) {
    return L(t.pyz_[y * nz + z] / t.pz_[z]);
  });
  q.h_t_given_v = -t.expect([&](auto x, auto y, auto, double) {
    return L(t.pxy_[x * ny + y] / t.px_[x]);
  });
  q.h_v_given_s = -t.expect([&](auto x, auto, auto z, double) {
    return L(t.pxz_[x * nz + z] / t.pz_[z]);
  });
  q.h_s_given_v = -t.expect([&](auto x, auto, auto z, double) {
    return L(t.pxz_[x * nz + z] / t.px_[x]);
  });

  auto& r = q.regions;
  r.v_only = -t.expect([&](auto, auto y, auto z, double p) { return L(p / t.pyz_[y * nz + z]); });
  r.t_only = -t.expect([&](auto x, auto, auto z, double p) { return L(p / t.pxz_[x * nz + z]); });
  r.s_only = -t.expect([&](auto x, auto y, auto, double p) { return L(p / t.pxy_[x * ny + y]); });
  r.vt_only = t.expect([&](auto x, auto y, auto z, double p) {
    return L(t.pz_[z] * p / (t.pxz_[x * nz + z] * t.pyz_[y * nz + z]));
  });
  r.ts_only = t.expect([&](auto x, auto y, auto z, double p) {
    return L(t.px_[x] * p / (t.pxy_[x * ny + y] * t.pxz_[x * nz + z]));
  });
  r.vs_only = t.expect([&](auto x, auto y, auto z, double p) {
    return L(t.py_[y] * p / (t.pxy_[x * ny + y] * t.pyz_[y * nz + z]));
  });
  r.center = q.i_tv - r.vt_only;
  q.i_vts = r.center;
  return q;
}

// --- generators --------------------------------------------------------------

namespace {

std::vector<LabelSequence> to_streams(const JointPmf& pmf,
                                      std::vector<std::vector<std::uint32_t>> columns) {
  std::vector<LabelSequence> streams;
  for (std::size_t v = 0; v < columns.size(); ++v)
    streams.emplace_back(std::move(columns[v]), pmf.alphabet_sizes()[v], kDefaultRateHz,
                         "x" + std::to_string(v));
  return streams;
}

}  // namespace

std::vector<LabelSequence> sample_discrete(const JointPmf& pmf, std::size_t n_frames,
                                           std::uint64_t seed) {
  if (n_frames == 0) throw Error(ErrorKind::Precondition, "n_frames must be at least 1");
  const auto& probs = pmf.probs();
  std::vector<double> cdf(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cdf.begin());
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (probs[i] > 0.0) last = i;

  Rng rng(seed);
  std::vector<std::vector<std::uint32_t>> columns(pmf.arity(),
                                                  std::vector<std::uint32_t>(n_frames));
  for (std::size_t f = 0; f < n_frames; ++f) {
    const double u = rng.uniform();
    std::size_t cell = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) -
                                                cdf.begin());
    cell = std::min(cell, last);  // u beyond the rounded total
    const auto tuple = pmf.decode(cell);
    for (std::size_t v = 0; v < tuple.size(); ++v) columns[v][f] = tuple[v];
  }
  return to_streams(pmf, std::move(columns));
}

std::vector<LabelSequence> exhaustive_stream(const JointPmf& pmf, std::size_t copies) {
  if (copies == 0) throw Error(ErrorKind::Precondition, "copies must be at least 1");
  constexpr std::uint64_t kMaxDenominator = 1'000'000;
  const auto& probs = pmf.probs();
  std::vector<std::uint64_t> counts(probs.size());
  std::uint64_t denominator = 1;
  for (; denominator <= kMaxDenominator; ++denominator) {
    bool integral = true;
    for (std::size_t i = 0; i < probs.size() && integral; ++i) {
      const double scaled = probs[i] * static_cast<double>(denominator);
      const double rounded = std::round(scaled);
      integral = std::abs(scaled - rounded) <= 1e-9;
      counts[i] = static_cast<std::uint64_t>(rounded);
    }
    if (integral) break;
  }
  if (denominator > kMaxDenominator)
    throw Error(ErrorKind::Precondition, "pmf is not rational with a small denominator");

  std::vector<std::vector<std::uint32_t>> columns(pmf.arity());
  for (std::size_t c = 0; c < copies; ++c) {
    for (std::size_t cell = 0; cell < counts.size(); ++cell) {
      if (counts[cell] == 0) continue;
      const auto tuple = pmf.decode(cell);
      for (std::uint64_t r = 0; r < counts[cell]; ++r)
        for (std::size_t v = 0; v < tuple.size(); ++v) columns[v].push_back(tuple[v]);
    }
  }
  return to_streams(pmf, std::move(columns));
}

GaussianMixtureSample gen_gaussian_mixture(const std::vector<std::vector<double>>& centers,
                                           double stddev, std::size_t n_per_center,
                                           std::uint64_t seed) {
  if (centers.empty()) throw Error(ErrorKind::Precondition, "need at least one center");
  if (!(stddev >= 0.0)) throw Error(ErrorKind::Precondition, "stddev must be non-negative");
  if (n_per_center == 0) throw Error(ErrorKind::Precondition, "n_per_center must be positive");
  const std::size_t dims = centers.front().size();
  for (const auto& c : centers)
    if (c.size() != dims || dims == 0)
      throw Error(ErrorKind::Precondition, "centers must share a positive dimension");

  Rng rng(seed);
  const std::size_t rows = centers.size() * n_per_center;
  std::vector<float> values;
  values.reserve(rows * dims);
  std::vector<std::uint32_t> components;
  components.reserve(rows);
  for (std::size_t r = 0; r < n_per_center; ++r) {
    for (std::size_t c = 0; c < centers.size(); ++c) {
      for (double mu : centers[c])
        values.push_back(static_cast<float>(stddev == 0.0 ? mu : mu + stddev * rng.normal()));
      components.push_back(static_cast<std::uint32_t>(c));
    }
  }
  return {FeatureMatrix(rows, dims, std::move(values), kDefaultRateHz, "S"),
          LabelSequence(std::move(components), static_cast<std::uint32_t>(centers.size()),
                        kDefaultRateHz, "T")};
}

}  // namespace modmi
