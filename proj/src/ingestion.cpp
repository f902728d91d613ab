#include "modmi/ingestion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "byte_io.hpp"
#include "modmi/error.hpp"

namespace modmi {

namespace {

constexpr std::string_view kFeatureMagic = "FMX1";
constexpr std::string_view kLabelMagic = "LBL1";

void check_rate(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate))
    throw Error(ErrorKind::Data, "sample rate must be a positive finite number");
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t dims, std::vector<float> values,
                             double sample_rate_hz, std::string modality_tag)
    : rows_(rows),
      dims_(dims),
      values_(std::move(values)),
      sample_rate_hz_(sample_rate_hz),
      tag_(std::move(modality_tag)) {
  if (rows_ == 0 || dims_ == 0) throw Error(ErrorKind::Data, "feature matrix must be non-empty");
  if (values_.size() != rows_ * dims_)
    throw Error(ErrorKind::SizeMismatch, "expected " + std::to_string(rows_ * dims_) +
                                             " values, got " + std::to_string(values_.size()));
  check_rate(sample_rate_hz_);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      throw Error(ErrorKind::Data, "non-finite value at row " + std::to_string(i / dims_) +
                                       ", col " + std::to_string(i % dims_));
  }
}

LabelSequence::LabelSequence(std::vector<std::uint32_t> symbols, std::uint32_t alphabet_size,
                             double sample_rate_hz, std::string modality_tag)
    : symbols_(std::move(symbols)),
      alphabet_size_(alphabet_size),
      sample_rate_hz_(sample_rate_hz),
      tag_(std::move(modality_tag)) {
  if (symbols_.empty()) throw Error(ErrorKind::Data, "label sequence must be non-empty");
  check_rate(sample_rate_hz_);
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    if (symbols_[i] >= alphabet_size_)
      throw Error(ErrorKind::Data, "symbol " + std::to_string(symbols_[i]) + " at frame " +
                                       std::to_string(i) + " exceeds alphabet size " +
                                       std::to_string(alphabet_size_));
  }
}

LabelSequence LabelSequence::from_symbols(std::vector<std::uint32_t> symbols,
                                          double sample_rate_hz, std::string modality_tag) {
  if (symbols.empty()) throw Error(ErrorKind::Data, "label sequence must be non-empty");
  const std::uint32_t alphabet = *std::max_element(symbols.begin(), symbols.end()) + 1;
  return LabelSequence(std::move(symbols), alphabet, sample_rate_hz, std::move(modality_tag));
}

AlignedDataset::AlignedDataset(std::vector<LabelSequence> streams) : streams_(std::move(streams)) {
  if (streams_.empty()) throw Error(ErrorKind::Alignment, "aligned dataset needs a stream");
  for (const auto& s : streams_) {
    if (s.rows() != streams_.front().rows())
      throw Error(ErrorKind::Alignment, "stream '" + s.modality_tag() + "' has " +
                                            std::to_string(s.rows()) + " frames, expected " +
                                            std::to_string(streams_.front().rows()));
    if (s.sample_rate_hz() != streams_.front().sample_rate_hz())
      throw Error(ErrorKind::Alignment, "stream '" + s.modality_tag() + "' has a different rate");
  }
}

const LabelSequence& AlignedDataset::stream(const std::string& tag) const {
  for (const auto& s : streams_)
    if (s.modality_tag() == tag) return s;
  throw Error(ErrorKind::Precondition, "no stream named '" + tag + "'");
}

// --- FMX1 --------------------------------------------------------------------

FeatureMatrix read_feature_matrix(const std::filesystem::path& path, double sample_rate_hz,
                                  std::string modality_tag) {
  const auto bytes = detail::read_file(path);
  detail::ByteReader in(bytes);
  if (!in.magic(kFeatureMagic))
    throw Error(ErrorKind::Format, path.string() + ": not an FMX1 feature file");
  if (in.remaining() < 8) throw Error(ErrorKind::Format, path.string() + ": truncated header");
  const std::uint32_t rows = in.u32();
  const std::uint32_t dims = in.u32();
  const std::uint64_t expected = std::uint64_t{rows} * dims * 4;
  if (in.remaining() != expected)
    throw Error(ErrorKind::SizeMismatch, path.string() + ": header declares " +
                                             std::to_string(rows) + "x" + std::to_string(dims) +
                                             " floats but payload holds " +
                                             std::to_string(in.remaining()) + " bytes");
  std::vector<float> values(std::size_t{rows} * dims);
  for (auto& v : values) v = in.f32();
  try {
    return FeatureMatrix(rows, dims, std::move(values), sample_rate_hz, std::move(modality_tag));
  } catch (const Error& e) {
    throw e.with_context(path.string());
  }
}

void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
  detail::ByteWriter out;
  out.magic(kFeatureMagic);
  out.u32(static_cast<std::uint32_t>(m.rows()));
  out.u32(static_cast<std::uint32_t>(m.dims()));
  for (float v : m.values()) out.f32(v);
  detail::write_file(path, out.bytes());
}

// --- labels ------------------------------------------------------------------

namespace {

std::vector<std::uint32_t> parse_label_text(const std::vector<char>& bytes,
                                            const std::filesystem::path& path) {
  std::vector<std::uint32_t> symbols;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    ++line_no;
    std::size_t end = pos;
    while (end < bytes.size() && bytes[end] != '\n') ++end;
    std::string_view line(bytes.data() + pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto fail = [&](const std::string& why) {
      return Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    if (line.empty()) {
      if (pos >= bytes.size()) break;  // tolerate a single trailing blank line
      throw fail("empty line");
    }
    if (line.front() == '-') throw fail("negative symbol '" + std::string(line) + "'");
    std::uint32_t value = 0;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
    if (ec == std::errc::result_out_of_range) throw fail("symbol out of range");
    if (ec != std::errc() || ptr != line.data() + line.size())
      throw fail("not a non-negative integer: '" + std::string(line) + "'");
    symbols.push_back(value);
  }
  return symbols;
}

}  // namespace

LabelSequence read_labels(const std::filesystem::path& path,
                          std::optional<std::uint32_t> alphabet_override, double sample_rate_hz,
                          std::string modality_tag) {
  const auto bytes = detail::read_file(path);
  std::vector<std::uint32_t> symbols;
  std::uint32_t alphabet = 0;
  if (bytes.size() >= 4 && std::string_view(bytes.data(), 4) == kLabelMagic) {
    detail::ByteReader in(bytes);
    in.magic(kLabelMagic);
    if (in.remaining() < 8) throw Error(ErrorKind::Format, path.string() + ": truncated header");
    const std::uint32_t rows = in.u32();
    alphabet = in.u32();
    if (in.remaining() != std::uint64_t{rows} * 4)
      throw Error(ErrorKind::SizeMismatch, path.string() + ": header declares " +
                                               std::to_string(rows) + " symbols but payload holds " +
                                               std::to_string(in.remaining()) + " bytes");
    symbols.resize(rows);
    for (auto& s : symbols) s = in.u32();
  } else {
    symbols = parse_label_text(bytes, path);
  }
  if (symbols.empty()) throw Error(ErrorKind::Data, path.string() + ": no labels");

  const std::uint32_t observed = *std::max_element(symbols.begin(), symbols.end()) + 1;
  alphabet = std::max(alphabet, observed);
  if (alphabet_override) {
    if (*alphabet_override < alphabet)
      throw Error(ErrorKind::Data, path.string() + ": alphabet_size " +
                                       std::to_string(*alphabet_override) +
                                       " is smaller than required " + std::to_string(alphabet));
    alphabet = *alphabet_override;
  }
  try {
    return LabelSequence(std::move(symbols), alphabet, sample_rate_hz, std::move(modality_tag));
  } catch (const Error& e) {
    throw e.with_context(path.string());
  }
}

void write_labels(const LabelSequence& s, const std::filesystem::path& path) {
  detail::ByteWriter out;
  out.magic(kLabelMagic);
  out.u32(static_cast<std::uint32_t>(s.rows()));
  out.u32(s.alphabet_size());
  for (auto v : s.symbols()) out.u32(v);
  detail::write_file(path, out.bytes());
}

void write_labels_text(const LabelSequence& s, const std::filesystem::path& path) {
  std::string text;
  for (auto v : s.symbols()) {
    text += std::to_string(v);
    text += '\n';
  }
  detail::write_file(path, std::vector<char>(text.begin(), text.end()));
}

// --- resampling ----------------------------------------------------------------

std::size_t resampled_length(std::size_t rows, double source_rate_hz, double target_rate_hz) {
  if (source_rate_hz == target_rate_hz) return rows;
  const double exact = static_cast<double>(rows) * target_rate_hz / source_rate_hz;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(exact)));
}

std::size_t resample_source_index(std::size_t i, std::size_t rows, double source_rate_hz,
                                  double target_rate_hz) {
  if (source_rate_hz == target_rate_hz) return std::min(i, rows - 1);
  const double pos = (static_cast<double>(i) + 0.5) * source_rate_hz / target_rate_hz;
  return std::min(rows - 1, static_cast<std::size_t>(std::floor(pos)));
}

FeatureMatrix resample_nearest(const FeatureMatrix& m, double target_rate_hz) {
  check_rate(target_rate_hz);
  const std::size_t out_rows = resampled_length(m.rows(), m.sample_rate_hz(), target_rate_hz);
  std::vector<float> values;
  values.reserve(out_rows * m.dims());
  for (std::size_t i = 0; i < out_rows; ++i) {
    const auto src = m.row(resample_source_index(i, m.rows(), m.sample_rate_hz(), target_rate_hz));
    values.insert(values.end(), src.begin(), src.end());
  }
  return FeatureMatrix(out_rows, m.dims(), std::move(values), target_rate_hz, m.modality_tag());
}

LabelSequence resample_nearest(const LabelSequence& s, double target_rate_hz) {
  check_rate(target_rate_hz);
  const std::size_t out_rows = resampled_length(s.rows(), s.sample_rate_hz(), target_rate_hz);
  std::vector<std::uint32_t> symbols(out_rows);
  for (std::size_t i = 0; i < out_rows; ++i)
    symbols[i] = s[resample_source_index(i, s.rows(), s.sample_rate_hz(), target_rate_hz)];
  return LabelSequence(std::move(symbols), s.alphabet_size(), target_rate_hz, s.modality_tag());
}

FeatureMatrix truncate(const FeatureMatrix& m, std::size_t rows) {
  if (rows == 0 || rows > m.rows())
    throw Error(ErrorKind::Precondition, "cannot truncate to " + std::to_string(rows) + " rows");
  if (rows == m.rows()) return m;
  const auto v = m.values().first(rows * m.dims());
  return FeatureMatrix(rows, m.dims(), std::vector<float>(v.begin(), v.end()), m.sample_rate_hz(),
                       m.modality_tag());
}

LabelSequence truncate(const LabelSequence& s, std::size_t rows) {
  if (rows == 0 || rows > s.rows())
    throw Error(ErrorKind::Precondition, "cannot truncate to " + std::to_string(rows) + " rows");
  if (rows == s.rows()) return s;
  const auto v = s.symbols().first(rows);
  return LabelSequence(std::vector<std::uint32_t>(v.begin(), v.end()), s.alphabet_size(),
                       s.sample_rate_hz(), s.modality_tag());
}

AlignedDataset align(const std::vector<LabelSequence>& streams, double target_rate_hz) {
  if (streams.size() < 2) throw Error(ErrorKind::Precondition, "align needs at least 2 streams");
  std::vector<LabelSequence> resampled;
  resampled.reserve(streams.size());
  for (const auto& s : streams) resampled.push_back(resample_nearest(s, target_rate_hz));
  std::size_t common = resampled.front().rows();
  for (const auto& s : resampled) common = std::min(common, s.rows());
  if (common == 0) throw Error(ErrorKind::Alignment, "aligned length is zero");
  for (auto& s : resampled) {
    if (s.rows() != common) {
      spdlog::info("truncating stream '{}' from {} to {} frames", s.modality_tag(), s.rows(),
                   common);
      s = truncate(s, common);
    }
  }
  return AlignedDataset(std::move(resampled));
}

// --- manifest ------------------------------------------------------------------

Manifest load_manifest(const std::filesystem::path& path) {
  using nlohmann::json;
  const auto bytes = detail::read_file(path);
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Manifest, path.string() + ": invalid JSON: " + e.what());
  }
  auto fail = [&](const std::string& why) {
    return Error(ErrorKind::Manifest, path.string() + ": " + why);
  };
  if (!doc.is_object()) throw fail("top level must be an object");

  Manifest manifest;
  if (doc.contains("target_rate_hz")) {
    if (!doc["target_rate_hz"].is_number() || !(doc["target_rate_hz"].get<double>() > 0))
      throw fail("target_rate_hz must be a positive number");
    manifest.target_rate_hz = doc["target_rate_hz"].get<double>();
  }
  if (!doc.contains("streams") || !doc["streams"].is_array())
    throw fail("missing \"streams\" array");

  const auto base = path.parent_path();
  std::set<std::string> seen;
  std::size_t index = 0;
  for (const auto& entry : doc["streams"]) {
    std::string label = "stream #" + std::to_string(index++);
    if (!entry.is_object()) throw fail(label + ": must be an object");
    if (entry.contains("name") && entry["name"].is_string())
      label = "stream '" + entry["name"].get<std::string>() + "'";
    auto require = [&](const char* field) -> const json& {
      if (!entry.contains(field)) throw fail(label + ": missing field \"" + field + "\"");
      return entry[field];
    };
    auto positive_int = [&](const char* field) -> std::uint32_t {
      const auto& v = entry[field];
      if (!v.is_number_integer() || v.get<std::int64_t>() < 1 ||
          v.get<std::int64_t>() > UINT32_MAX)
        throw fail(label + ": \"" + field + "\" must be a positive integer");
      return static_cast<std::uint32_t>(v.get<std::int64_t>());
    };

    StreamSpec spec;
    const auto& name = require("name");
    if (!name.is_string() || name.get<std::string>().empty())
      throw fail(label + ": \"name\" must be a non-empty string");
    spec.name = name.get<std::string>();
    if (!seen.insert(spec.name).second) throw fail(label + ": duplicate stream name");

    const auto& p = require("path");
    if (!p.is_string()) throw fail(label + ": \"path\" must be a string");
    spec.path = std::filesystem::path(p.get<std::string>());
    if (spec.path.is_relative()) spec.path = base / spec.path;

    const auto& kind = require("kind");
    if (kind == "features") {
      spec.kind = StreamKind::Features;
    } else if (kind == "labels") {
      spec.kind = StreamKind::Labels;
    } else {
      throw fail(label + ": unknown kind " + kind.dump() + " (expected \"features\" or \"labels\")");
    }

    const auto& rate = require("sample_rate_hz");
    if (!rate.is_number() || !(rate.get<double>() > 0))
      throw fail(label + ": \"sample_rate_hz\" must be a positive number");
    spec.sample_rate_hz = rate.get<double>();

    if (entry.contains("alphabet_size")) {
      if (spec.kind != StreamKind::Labels)
        throw fail(label + ": \"alphabet_size\" only applies to label streams");
      spec.alphabet_size = positive_int("alphabet_size");
    }
    if (entry.contains("clusters")) {
      if (spec.kind != StreamKind::Features)
        throw fail(label + ": \"clusters\" only applies to feature streams");
      spec.clusters = positive_int("clusters");
    }
    if (!std::filesystem::exists(spec.path))
      throw fail(label + ": file not found: " + spec.path.string());
    manifest.streams.push_back(std::move(spec));
  }
  if (manifest.streams.empty()) throw fail("no streams");
  return manifest;
}

}  // namespace modmi
