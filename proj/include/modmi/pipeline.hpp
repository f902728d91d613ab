#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "modmi/infotheory.hpp"
#include "modmi/ingestion.hpp"

namespace modmi {

struct AnalysisConfig {
  double target_rate_hz = kDefaultRateHz;
  std::uint32_t default_clusters = 2000;          // continuous streams without their own count
  std::optional<std::uint32_t> clusters_override;  // beats every per-stream count
  std::uint64_t seed = 0;
  double tol = 1e-4;
  std::uint32_t max_iter = 300;
  bool normalize = false;
  LogBase log_base = LogBase::Two;

  friend bool operator==(const AnalysisConfig&, const AnalysisConfig&) = default;
};

nlohmann::json to_json(const AnalysisConfig& config);
AnalysisConfig config_from_json(const nlohmann::json& j);

// One modality handed to the pipeline. Only feature streams may carry a
// cluster count.
struct StreamInput {
  std::string name;
  std::variant<FeatureMatrix, LabelSequence> data;
  std::optional<std::uint32_t> clusters;
};

struct StreamSummary {
  std::string name;
  StreamKind kind = StreamKind::Labels;
  std::size_t frames = 0;                         // aligned length
  std::optional<std::size_t> dims;
  std::optional<std::uint32_t> k;
  std::optional<std::uint32_t> distinct_clusters;  // cluster ids actually used
  std::optional<std::string> codebook_digest;
  std::optional<std::uint32_t> iterations;
  std::optional<double> distortion;

  friend bool operator==(const StreamSummary&, const StreamSummary&) = default;
};

// Stream names playing video, text and speech in the three-way diagram.
struct Roles {
  std::string v, t, s;
  friend bool operator==(const Roles&, const Roles&) = default;
};

struct InfoReport {
  AnalysisConfig config;
  std::vector<StreamSummary> streams;
  LogBase log_base = LogBase::Two;
  std::vector<std::pair<std::string, double>> entropies;     // stream name -> H
  std::vector<std::pair<std::string, double>> pairwise;      // "a,b" -> I(a;b)
  std::vector<std::pair<std::string, double>> conditionals;  // "H(a|b)" -> value
  std::optional<Roles> roles;                                // three streams only
  std::optional<InfoQuantities> diagram;                     // three streams only

  double entropy_of(const std::string& name) const;
  double mi_of(const std::string& a, const std::string& b) const;
};

nlohmann::json to_json(const InfoReport& report);
InfoReport report_from_json(const nlohmann::json& j);

// Picks the V/T/S roles from stream names (v/video/visual, t/text/phone*,
// s/speech/audio, case-insensitive); falls back to input order V, T, S.
Roles assign_roles(const std::vector<std::string>& names);

// Resample to the target rate, truncate to the shortest stream, quantize the
// feature streams with one codebook each, then compute every quantity.
// Accepts two or three streams.
InfoReport analyze_streams(const std::vector<StreamInput>& inputs, const AnalysisConfig& config);

std::vector<StreamInput> load_inputs(const Manifest& manifest);
InfoReport analyze(const Manifest& manifest, const AnalysisConfig& config);

// One report per cluster count, applied to every feature stream.
std::vector<InfoReport> sweep_clusters(const Manifest& manifest, const AnalysisConfig& config,
                                       const std::vector<std::uint32_t>& ks);
std::vector<InfoReport> sweep_clusters(const std::vector<StreamInput>& inputs,
                                       const AnalysisConfig& config,
                                       const std::vector<std::uint32_t>& ks);

}  // namespace modmi
