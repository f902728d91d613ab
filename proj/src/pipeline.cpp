#include "modmi/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <spdlog/spdlog.h>

#include "modmi/error.hpp"
#include "modmi/quantizer.hpp"
#include "modmi/rng.hpp"

namespace modmi {

using nlohmann::json;

// --- config ------------------------------------------------------------------

json to_json(const AnalysisConfig& c) {
  json j;
  j["target_rate_hz"] = c.target_rate_hz;
  j["default_clusters"] = c.default_clusters;
  j["clusters_override"] = c.clusters_override ? json(*c.clusters_override) : json(nullptr);
  j["seed"] = c.seed;
  j["tol"] = c.tol;
  j["max_iter"] = c.max_iter;
  j["normalize"] = c.normalize;
  j["log_base"] = to_string(c.log_base);
  j["rng"] = Rng::kName;
  return j;
}

AnalysisConfig config_from_json(const json& j) {
  try {
    AnalysisConfig c;
    c.target_rate_hz = j.at("target_rate_hz").get<double>();
    c.default_clusters = j.at("default_clusters").get<std::uint32_t>();
    if (j.contains("clusters_override") && !j["clusters_override"].is_null())
      c.clusters_override = j["clusters_override"].get<std::uint32_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.tol = j.at("tol").get<double>();
    c.max_iter = j.at("max_iter").get<std::uint32_t>();
    c.normalize = j.at("normalize").get<bool>();
    c.log_base = parse_log_base(j.at("log_base").get<std::string>());
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("bad config in report: ") + e.what());
  }
}

// --- report keys -------------------------------------------------------------

namespace {

std::string pair_key(const std::string& a, const std::string& b) { return a + "," + b; }
std::string cond_key(const std::string& a, const std::string& b) {
  return "H(" + a + "|" + b + ")";
}

struct DiagramKeys {
  std::string v_only, t_only, s_only, vt_only, ts_only, vs_only, center;
};

DiagramKeys diagram_keys(const Roles& r) {
  return {"H(" + r.v + "|" + r.t + "," + r.s + ")",
          "H(" + r.t + "|" + r.v + "," + r.s + ")",
          "H(" + r.s + "|" + r.v + "," + r.t + ")",
          "I(" + r.v + ";" + r.t + "|" + r.s + ")",
          "I(" + r.t + ";" + r.s + "|" + r.v + ")",
          "I(" + r.v + ";" + r.s + "|" + r.t + ")",
          "I(" + r.v + ";" + r.t + ";" + r.s + ")"};
}

const char* kind_name(StreamKind k) { return k == StreamKind::Features ? "features" : "labels"; }

}  // namespace

double InfoReport::entropy_of(const std::string& name) const {
  for (const auto& [n, v] : entropies)
    if (n == name) return v;
  throw Error(ErrorKind::Precondition, "report has no stream '" + name + "'");
}

double InfoReport::mi_of(const std::string& a, const std::string& b) const {
  for (const auto& [key, v] : pairwise)
    if (key == pair_key(a, b) || key == pair_key(b, a)) return v;
  throw Error(ErrorKind::Precondition, "report has no I(" + a + ";" + b + ")");
}

json to_json(const InfoReport& r) {
  json j;
  j["config"] = to_json(r.config);
  j["streams"] = json::array();
  for (const auto& s : r.streams) {
    json e;
    e["name"] = s.name;
    e["kind"] = kind_name(s.kind);
    e["L"] = s.frames;
    if (s.dims) e["d"] = *s.dims;
    if (s.k) e["k"] = *s.k;
    if (s.distinct_clusters) e["distinct_clusters"] = *s.distinct_clusters;
    if (s.codebook_digest) e["codebook_digest"] = *s.codebook_digest;
    if (s.iterations) e["iterations"] = *s.iterations;
    if (s.distortion) e["distortion"] = *s.distortion;
    j["streams"].push_back(std::move(e));
  }
  json q;
  q["log_base"] = to_string(r.log_base);
  q["H"] = json::object();
  for (const auto& [k, v] : r.entropies) q["H"][k] = v;
  q["I2"] = json::object();
  for (const auto& [k, v] : r.pairwise) q["I2"][k] = v;
  q["cond"] = json::object();
  for (const auto& [k, v] : r.conditionals) q["cond"][k] = v;
  if (r.roles && r.diagram) {
    q["roles"] = {{"V", r.roles->v}, {"T", r.roles->t}, {"S", r.roles->s}};
    q["I3"] = r.diagram->i_vts;
    const auto keys = diagram_keys(*r.roles);
    const auto& g = r.diagram->regions;
    q["regions"] = {{keys.v_only, g.v_only},   {keys.t_only, g.t_only},
                    {keys.s_only, g.s_only},   {keys.vt_only, g.vt_only},
                    {keys.ts_only, g.ts_only}, {keys.vs_only, g.vs_only},
                    {keys.center, g.center}};
  }
  j["quantities"] = std::move(q);
  return j;
}

InfoReport report_from_json(const json& j) {
  try {
    InfoReport r;
    r.config = config_from_json(j.at("config"));
    for (const auto& e : j.at("streams")) {
      StreamSummary s;
      s.name = e.at("name").get<std::string>();
      s.kind = e.at("kind").get<std::string>() == "features" ? StreamKind::Features
                                                             : StreamKind::Labels;
      s.frames = e.at("L").get<std::size_t>();
      if (e.contains("d")) s.dims = e["d"].get<std::size_t>();
      if (e.contains("k")) s.k = e["k"].get<std::uint32_t>();
      if (e.contains("distinct_clusters"))
        s.distinct_clusters = e["distinct_clusters"].get<std::uint32_t>();
      if (e.contains("codebook_digest")) s.codebook_digest = e["codebook_digest"].get<std::string>();
      if (e.contains("iterations")) s.iterations = e["iterations"].get<std::uint32_t>();
      if (e.contains("distortion")) s.distortion = e["distortion"].get<double>();
      r.streams.push_back(std::move(s));
    }
    const auto& q = j.at("quantities");
    r.log_base = parse_log_base(q.at("log_base").get<std::string>());
    for (const auto& s : r.streams) r.entropies.emplace_back(s.name, q.at("H").at(s.name).get<double>());
    for (const auto& [k, v] : q.at("I2").items()) r.pairwise.emplace_back(k, v.get<double>());
    for (const auto& [k, v] : q.at("cond").items()) r.conditionals.emplace_back(k, v.get<double>());
    if (q.contains("roles")) {
      Roles roles{q["roles"].at("V").get<std::string>(), q["roles"].at("T").get<std::string>(),
                  q["roles"].at("S").get<std::string>()};
      const auto keys = diagram_keys(roles);
      const auto& g = q.at("regions");
      const auto& c = q.at("cond");
      InfoQuantities d;
      d.log_base = r.log_base;
      d.h_v = r.entropy_of(roles.v);
      d.h_t = r.entropy_of(roles.t);
      d.h_s = r.entropy_of(roles.s);
      d.i_tv = r.mi_of(roles.t, roles.v);
      d.i_ts = r.mi_of(roles.t, roles.s);
      d.i_vs = r.mi_of(roles.v, roles.s);
      d.i_vts = q.at("I3").get<double>();
      d.h_s_given_t = c.at(cond_key(roles.s, roles.t)).get<double>();
      d.h_v_given_t = c.at(cond_key(roles.v, roles.t)).get<double>();
      d.h_t_given_s = c.at(cond_key(roles.t, roles.s)).get<double>();
      d.h_t_given_v = c.at(cond_key(roles.t, roles.v)).get<double>();
      d.h_v_given_s = c.at(cond_key(roles.v, roles.s)).get<double>();
      d.h_s_given_v = c.at(cond_key(roles.s, roles.v)).get<double>();
      d.regions.v_only = g.at(keys.v_only).get<double>();
      d.regions.t_only = g.at(keys.t_only).get<double>();
      d.regions.s_only = g.at(keys.s_only).get<double>();
      d.regions.vt_only = g.at(keys.vt_only).get<double>();
      d.regions.ts_only = g.at(keys.ts_only).get<double>();
      d.regions.vs_only = g.at(keys.vs_only).get<double>();
      d.regions.center = g.at(keys.center).get<double>();
      r.roles = std::move(roles);
      r.diagram = d;
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed report: ") + e.what());
  }
}

namespace {

LabelSequence retag(const LabelSequence& seq, const std::string& name) {
  return LabelSequence(std::vector<std::uint32_t>(seq.symbols().begin(), seq.symbols().end()),
                       seq.alphabet_size(), seq.sample_rate_hz(), name);
}

}  // namespace

// --- roles -------------------------------------------------------------------

Roles assign_roles(const std::vector<std::string>& names) {
  if (names.size() != 3) throw Error(ErrorKind::Precondition, "roles need exactly 3 streams");
  auto role_of = [](std::string name) -> char {
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (name == "v" || name == "video" || name == "visual" || name == "lip" || name == "lips")
      return 'V';
    if (name == "t" || name == "text" || name == "phone" || name == "phones" ||
        name == "phoneme" || name == "phonemes")
      return 'T';
    if (name == "s" || name == "speech" || name == "audio") return 'S';
    return '?';
  };
  std::optional<std::string> v, t, s;
  for (const auto& n : names) {
    const char role = role_of(n);
    auto* slot = role == 'V' ? &v : role == 'T' ? &t : role == 'S' ? &s : nullptr;
    if (!slot || *slot) return {names[0], names[1], names[2]};
    *slot = n;
  }
  return {*v, *t, *s};
}

// --- analysis ----------------------------------------------------------------

std::vector<StreamInput> load_inputs(const Manifest& manifest) {
  std::vector<StreamInput> inputs;
  for (const auto& spec : manifest.streams) {
    try {
      if (spec.kind == StreamKind::Features) {
        inputs.push_back({spec.name, read_feature_matrix(spec.path, spec.sample_rate_hz, spec.name),
                          spec.clusters});
      } else {
        inputs.push_back({spec.name,
                          read_labels(spec.path, spec.alphabet_size, spec.sample_rate_hz, spec.name),
                          std::nullopt});
      }
    } catch (const Error& e) {
      throw e.with_context("stream '" + spec.name + "'");
    }
  }
  return inputs;
}

InfoReport analyze_streams(const std::vector<StreamInput>& inputs, const AnalysisConfig& config) {
  if (inputs.size() < 2 || inputs.size() > 3)
    throw Error(ErrorKind::Precondition, "analysis takes 2 or 3 streams, got " +
                                             std::to_string(inputs.size()));
  if (!(config.target_rate_hz > 0.0))
    throw Error(ErrorKind::Precondition, "target rate must be positive");
  std::set<std::string> names;
  for (const auto& in : inputs)
    if (!names.insert(in.name).second)
      throw Error(ErrorKind::Precondition, "duplicate stream name '" + in.name + "'");

  // Resample everything, then cut to the common length.
  std::vector<std::variant<FeatureMatrix, LabelSequence>> resampled;
  std::size_t common = SIZE_MAX;
  for (const auto& in : inputs) {
    if (std::holds_alternative<LabelSequence>(in.data) && in.clusters)
      throw Error(ErrorKind::Precondition,
                  "stream '" + in.name + "': cluster count given for a label stream");
    resampled.push_back(std::visit(
        [&](const auto& s) -> std::variant<FeatureMatrix, LabelSequence> {
          return resample_nearest(s, config.target_rate_hz);
        },
        in.data));
    common = std::min(common, std::visit([](const auto& s) { return s.rows(); }, resampled.back()));
  }

  InfoReport report;
  report.config = config;
  report.log_base = config.log_base;
  std::vector<LabelSequence> labels;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& in = inputs[i];
    try {
      StreamSummary summary;
      summary.name = in.name;
      summary.frames = common;
      if (auto* features = std::get_if<FeatureMatrix>(&resampled[i])) {
        if (features->rows() != common)
          spdlog::info("truncating stream '{}' from {} to {} frames", in.name, features->rows(),
                       common);
        const FeatureMatrix x = truncate(*features, common);
        KMeansOptions options;
        options.k = config.clusters_override.value_or(in.clusters.value_or(config.default_clusters));
        options.seed = config.seed;
        options.tol = config.tol;
        options.max_iter = config.max_iter;
        options.normalize = config.normalize;
        const Codebook cb = fit(x, options);
        const LabelSequence ids = retag(assign(cb, x), in.name);
        std::set<std::uint32_t> used(ids.symbols().begin(), ids.symbols().end());
        summary.kind = StreamKind::Features;
        summary.dims = x.dims();
        summary.k = cb.k;
        summary.distinct_clusters = static_cast<std::uint32_t>(used.size());
        summary.codebook_digest = codebook_digest(cb);
        summary.iterations = cb.iterations_run;
        summary.distortion = cb.final_distortion;
        labels.push_back(std::move(ids));
      } else {
        const auto& seq = std::get<LabelSequence>(resampled[i]);
        if (seq.rows() != common)
          spdlog::info("truncating stream '{}' from {} to {} frames", in.name, seq.rows(), common);
        summary.kind = StreamKind::Labels;
        labels.push_back(retag(truncate(seq, common), in.name));
      }
      report.streams.push_back(std::move(summary));
    } catch (const Error& e) {
      throw e.with_context("stream '" + in.name + "'");
    }
  }

  const AlignedDataset data(std::move(labels));
  const auto& s = data.streams();
  const LogBase base = config.log_base;
  for (const auto& seq : s) report.entropies.emplace_back(seq.modality_tag(), joint_entropy({seq}, base));

  if (s.size() == 2) {
    const auto& a = s[0];
    const auto& b = s[1];
    report.pairwise.emplace_back(pair_key(a.modality_tag(), b.modality_tag()),
                                 mutual_information(a, b, base));
    report.conditionals.emplace_back(cond_key(a.modality_tag(), b.modality_tag()),
                                     conditional_entropy(a, {b}, base));
    report.conditionals.emplace_back(cond_key(b.modality_tag(), a.modality_tag()),
                                     conditional_entropy(b, {a}, base));
    return report;
  }

  const Roles roles = assign_roles({s[0].modality_tag(), s[1].modality_tag(), s[2].modality_tag()});
  const auto& v = data.stream(roles.v);
  const auto& t = data.stream(roles.t);
  const auto& sp = data.stream(roles.s);
  const InfoQuantities q = info_diagram(v, t, sp, base);
  report.pairwise = {{pair_key(roles.t, roles.v), q.i_tv},
                     {pair_key(roles.t, roles.s), q.i_ts},
                     {pair_key(roles.v, roles.s), q.i_vs}};
  report.conditionals = {{cond_key(roles.s, roles.t), q.h_s_given_t},
                         {cond_key(roles.v, roles.t), q.h_v_given_t},
                         {cond_key(roles.t, roles.s), q.h_t_given_s},
                         {cond_key(roles.t, roles.v), q.h_t_given_v},
                         {cond_key(roles.v, roles.s), q.h_v_given_s},
                         {cond_key(roles.s, roles.v), q.h_s_given_v}};
  report.roles = roles;
  report.diagram = q;
  return report;
}

InfoReport analyze(const Manifest& manifest, const AnalysisConfig& config) {
  return analyze_streams(load_inputs(manifest), config);
}

std::vector<InfoReport> sweep_clusters(const std::vector<StreamInput>& inputs,
                                       const AnalysisConfig& config,
                                       const std::vector<std::uint32_t>& ks) {
  if (ks.empty()) throw Error(ErrorKind::Precondition, "cluster sweep needs at least one k");
  std::vector<InfoReport> reports;
  for (auto k : ks) {
    AnalysisConfig c = config;
    c.clusters_override = k;
    reports.push_back(analyze_streams(inputs, c));
  }
  return reports;
}

std::vector<InfoReport> sweep_clusters(const Manifest& manifest, const AnalysisConfig& config,
                                       const std::vector<std::uint32_t>& ks) {
  if (ks.empty()) throw Error(ErrorKind::Precondition, "cluster sweep needs at least one k");
  return sweep_clusters(load_inputs(manifest), config, ks);
}

}  // namespace modmi
