#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace modmi {

inline constexpr double kDefaultRateHz = 25.0;

// Continuous L x d feature stream of one modality, row-major.
class FeatureMatrix {
 public:
  // Throws Error(Data) on empty shape, non-finite values or a bad rate.
  FeatureMatrix(std::size_t rows, std::size_t dims, std::vector<float> values,
                double sample_rate_hz = kDefaultRateHz, std::string modality_tag = {});

  std::size_t rows() const noexcept { return rows_; }
  std::size_t dims() const noexcept { return dims_; }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }
  const std::string& modality_tag() const noexcept { return tag_; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<const float> row(std::size_t i) const noexcept {
    return std::span<const float>(values_).subspan(i * dims_, dims_);
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_;
  std::size_t dims_;
  std::vector<float> values_;
  double sample_rate_hz_;
  std::string tag_;
};

// Discrete symbol stream: text labels or cluster ids.
class LabelSequence {
 public:
  // Throws Error(Data) if empty, a symbol is >= alphabet_size, or the rate is bad.
  LabelSequence(std::vector<std::uint32_t> symbols, std::uint32_t alphabet_size,
                double sample_rate_hz = kDefaultRateHz, std::string modality_tag = {});

  // alphabet_size = 1 + max symbol.
  static LabelSequence from_symbols(std::vector<std::uint32_t> symbols,
                                    double sample_rate_hz = kDefaultRateHz,
                                    std::string modality_tag = {});

  std::size_t rows() const noexcept { return symbols_.size(); }
  std::uint32_t alphabet_size() const noexcept { return alphabet_size_; }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }
  const std::string& modality_tag() const noexcept { return tag_; }
  std::span<const std::uint32_t> symbols() const noexcept { return symbols_; }
  std::uint32_t operator[](std::size_t i) const noexcept { return symbols_[i]; }

  friend bool operator==(const LabelSequence&, const LabelSequence&) = default;

 private:
  std::vector<std::uint32_t> symbols_;
  std::uint32_t alphabet_size_;
  double sample_rate_hz_;
  std::string tag_;
};

// Label streams sharing one length and one frame rate.
class AlignedDataset {
 public:
  // Throws Error(Alignment) if lengths or rates differ.
  explicit AlignedDataset(std::vector<LabelSequence> streams);

  std::size_t length() const noexcept { return streams_.front().rows(); }
  double sample_rate_hz() const noexcept { return streams_.front().sample_rate_hz(); }
  const std::vector<LabelSequence>& streams() const noexcept { return streams_; }
  // Lookup by modality tag; throws Error(Precondition) if absent.
  const LabelSequence& stream(const std::string& tag) const;

 private:
  std::vector<LabelSequence> streams_;
};

// --- files -----------------------------------------------------------------

FeatureMatrix read_feature_matrix(const std::filesystem::path& path,
                                  double sample_rate_hz = kDefaultRateHz,
                                  std::string modality_tag = {});
void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path);

// Accepts LBL1 binary (detected by magic) or one decimal integer per line.
// A larger alphabet_override widens the alphabet; a smaller one is an error.
LabelSequence read_labels(const std::filesystem::path& path,
                          std::optional<std::uint32_t> alphabet_override = std::nullopt,
                          double sample_rate_hz = kDefaultRateHz,
                          std::string modality_tag = {});
void write_labels(const LabelSequence& s, const std::filesystem::path& path);
void write_labels_text(const LabelSequence& s, const std::filesystem::path& path);

// --- alignment ---------------------------------------------------------------

// Output length and source index used by resample_nearest.
std::size_t resampled_length(std::size_t rows, double source_rate_hz, double target_rate_hz);
std::size_t resample_source_index(std::size_t i, std::size_t rows, double source_rate_hz,
                                  double target_rate_hz);

FeatureMatrix resample_nearest(const FeatureMatrix& m, double target_rate_hz);
LabelSequence resample_nearest(const LabelSequence& s, double target_rate_hz);

// First `rows` frames. rows must be in [1, current rows].
FeatureMatrix truncate(const FeatureMatrix& m, std::size_t rows);
LabelSequence truncate(const LabelSequence& s, std::size_t rows);

// Resample all streams to the target rate, then cut to the shortest length.
AlignedDataset align(const std::vector<LabelSequence>& streams, double target_rate_hz);

// --- manifest ----------------------------------------------------------------

enum class StreamKind { Features, Labels };

struct StreamSpec {
  std::string name;
  std::filesystem::path path;  // resolved against the manifest directory
  StreamKind kind = StreamKind::Labels;
  double sample_rate_hz = kDefaultRateHz;
  std::optional<std::uint32_t> alphabet_size;
  std::optional<std::uint32_t> clusters;
};

struct Manifest {
  std::optional<double> target_rate_hz;
  std::vector<StreamSpec> streams;
};

Manifest load_manifest(const std::filesystem::path& path);

}  // namespace modmi
