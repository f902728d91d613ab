#include "modmi/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "modmi/error.hpp"
#include "modmi/pipeline.hpp"
#include "modmi/quantizer.hpp"
#include "modmi/render.hpp"
#include "modmi/rng.hpp"
#include "modmi/synthetic.hpp"

namespace modmi {

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigFlags {
  std::optional<std::uint32_t> clusters;
  std::uint64_t seed = 0;
  std::optional<double> rate;
  std::string base = "2";
  double tol = 1e-4;
  std::uint32_t max_iter = 300;
  bool normalize = false;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--clusters", f.clusters, "Clusters for every continuous stream")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "K-means seed");
  cmd->add_option("--rate", f.rate, "Common frame rate in Hz (default: manifest, else 25)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--base", f.base, "Logarithm base")->check(CLI::IsMember({"2", "e", "10"}));
  cmd->add_option("--tol", f.tol, "Relative distortion tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", f.max_iter, "Maximum Lloyd iterations")->check(CLI::PositiveNumber);
  cmd->add_flag("--normalize", f.normalize, "Z-score each feature dimension before clustering");
}

AnalysisConfig make_config(const ConfigFlags& f, const Manifest& manifest) {
  AnalysisConfig c;
  c.target_rate_hz = f.rate.value_or(manifest.target_rate_hz.value_or(kDefaultRateHz));
  c.clusters_override = f.clusters;
  c.seed = f.seed;
  c.tol = f.tol;
  c.max_iter = f.max_iter;
  c.normalize = f.normalize;
  c.log_base = parse_log_base(f.base);
  return c;
}

void emit(const std::string& content, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << content;
    return;
  }
  std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorKind::Io, "cannot open " + out_path + " for writing");
  file << content;
  if (!file) throw Error(ErrorKind::Io, "write failed: " + out_path);
}

std::string render(const InfoReport& report, const std::string& format) {
  if (format == "json") return to_json(report).dump(2) + "\n";
  if (format == "svg") return render_svg(report);
  return render_table(report);
}

std::vector<std::uint32_t> parse_ks(const std::string& text) {
  std::vector<std::uint32_t> ks;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    std::size_t used = 0;
    unsigned long value = 0;
    try {
      value = std::stoul(token, &used);
    } catch (const std::exception&) {
      throw UsageError("--ks: '" + token + "' is not a cluster count");
    }
    if (used != token.size() || value == 0 || value > UINT32_MAX || token.front() == '-')
      throw UsageError("--ks: '" + token + "' is not a cluster count");
    ks.push_back(static_cast<std::uint32_t>(value));
  }
  if (ks.empty()) throw UsageError("--ks needs at least one cluster count");
  return ks;
}

// --- synth -------------------------------------------------------------------

struct SynthFlags {
  std::string kind;
  std::string out_dir;
  std::uint64_t seed = 1;
  std::size_t copies = 1;
  std::uint32_t centers = 3;
  std::size_t dims = 16;
  double separation = 50.0;
  double stddev = 1.0;
  std::size_t per_center = 1000;
  std::size_t frames = 2000;
  std::uint32_t alphabet = 40;
};

nlohmann::json stream_entry(const std::string& name, const std::string& path, const char* kind) {
  return {{"name", name}, {"path", path}, {"kind", kind}, {"sample_rate_hz", kDefaultRateHz}};
}

void write_manifest(const fs::path& dir, nlohmann::json streams) {
  const nlohmann::json doc = {{"target_rate_hz", kDefaultRateHz}, {"streams", std::move(streams)}};
  const std::string text = doc.dump(2) + "\n";
  emit(text, (dir / "manifest.json").string(), std::cout);
}

int run_synth(const SynthFlags& f, std::ostream& out) {
  const fs::path dir(f.out_dir);
  fs::create_directories(dir);
  if (f.kind == "xor") {
    const auto streams = exhaustive_stream(JointPmf::xor_triple(), f.copies);
    const char* names[] = {"V", "T", "S"};
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < 3; ++i) {
      write_labels_text(streams[i], dir / (std::string(names[i]) + ".txt"));
      entries.push_back(stream_entry(names[i], std::string(names[i]) + ".txt", "labels"));
    }
    write_manifest(dir, std::move(entries));
  } else if (f.kind == "blobs") {
    std::vector<std::vector<double>> centers(f.centers, std::vector<double>(f.dims, 0.0));
    for (std::size_t c = 0; c < centers.size(); ++c)
      centers[c][c % f.dims] = f.separation * f.stddev * static_cast<double>(c / f.dims + 1);
    const auto sample = gen_gaussian_mixture(centers, f.stddev, f.per_center, f.seed);
    write_feature_matrix(sample.features, dir / "S.fmx");
    write_labels_text(sample.components, dir / "T.txt");
    auto s = stream_entry("S", "S.fmx", "features");
    s["clusters"] = f.centers;
    write_manifest(dir, {s, stream_entry("T", "T.txt", "labels")});
  } else if (f.kind == "gaussian") {
    Rng rng(f.seed);
    auto gaussian = [&](const std::string& tag) {
      std::vector<float> values(f.frames * f.dims);
      for (auto& v : values) v = static_cast<float>(rng.normal());
      return FeatureMatrix(f.frames, f.dims, std::move(values), kDefaultRateHz, tag);
    };
    write_feature_matrix(gaussian("S"), dir / "S.fmx");
    write_feature_matrix(gaussian("V"), dir / "V.fmx");
    std::vector<std::uint32_t> text(f.frames);
    for (auto& t : text) t = static_cast<std::uint32_t>(rng.below(f.alphabet));
    write_labels_text(LabelSequence(std::move(text), f.alphabet), dir / "T.txt");
    auto t = stream_entry("T", "T.txt", "labels");
    t["alphabet_size"] = f.alphabet;
    write_manifest(dir, {stream_entry("V", "V.fmx", "features"), t,
                         stream_entry("S", "S.fmx", "features")});
  } else {
    throw UsageError("unknown synth kind '" + f.kind + "'");
  }
  out << "wrote " << (dir / "manifest.json").string() << "\n";
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropy and mutual information of aligned multimodal streams", "modmi"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  // fit
  std::string fit_features, fit_out;
  KMeansOptions fit_options;
  auto* fit_cmd = app.add_subcommand("fit", "Train a K-means codebook on an FMX1 feature file");
  fit_cmd->add_option("features", fit_features, "FMX1 feature file")->required();
  fit_cmd->add_option("--clusters", fit_options.k, "Number of clusters")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fit_options.seed, "Seed");
  fit_cmd->add_option("--tol", fit_options.tol, "Relative distortion tolerance")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iter", fit_options.max_iter, "Maximum Lloyd iterations")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_flag("--normalize", fit_options.normalize, "Z-score features first");
  fit_cmd->add_option("--out", fit_out, "Codebook output (KMC1)")->required();

  // assign
  std::string assign_features, assign_codebook, assign_out;
  bool assign_text = false;
  auto* assign_cmd = app.add_subcommand("assign", "Label feature rows with their nearest centroid");
  assign_cmd->add_option("features", assign_features, "FMX1 feature file")->required();
  assign_cmd->add_option("--codebook", assign_codebook, "KMC1 codebook")->required();
  assign_cmd->add_option("--out", assign_out, "Label output (LBL1 unless --text)")->required();
  assign_cmd->add_flag("--text", assign_text, "Write one label per line instead of LBL1");

  // analyze
  std::string analyze_manifest, analyze_out, analyze_format = "table";
  ConfigFlags analyze_flags;
  auto* analyze_cmd = app.add_subcommand("analyze", "Quantize and compute all quantities");
  analyze_cmd->add_option("manifest", analyze_manifest, "JSON manifest")->required();
  add_config_flags(analyze_cmd, analyze_flags);
  analyze_cmd->add_option("--format", analyze_format, "Output format")
      ->check(CLI::IsMember({"json", "table", "svg"}));
  analyze_cmd->add_option("--out", analyze_out, "Output file (default stdout)");

  // sweep
  std::string sweep_manifest, sweep_out, sweep_ks, sweep_format = "table";
  ConfigFlags sweep_flags;
  auto* sweep_cmd = app.add_subcommand("sweep", "Repeat the analysis for several cluster counts");
  sweep_cmd->add_option("manifest", sweep_manifest, "JSON manifest")->required();
  sweep_cmd->add_option("--ks", sweep_ks, "Comma-separated cluster counts, e.g. 100,200")
      ->required();
  add_config_flags(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--format", sweep_format, "Output format")
      ->check(CLI::IsMember({"json", "table"}));
  sweep_cmd->add_option("--out", sweep_out, "Output file (default stdout)");

  // synth
  SynthFlags synth;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset and its manifest");
  synth_cmd->add_option("kind", synth.kind, "xor | blobs | gaussian")
      ->required()
      ->check(CLI::IsMember({"xor", "blobs", "gaussian"}));
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed, "Seed");
  synth_cmd->add_option("--copies", synth.copies, "xor: repetitions of the 4-frame block")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--centers", synth.centers, "blobs: number of components")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--dims", synth.dims, "blobs/gaussian: feature dimension")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--separation", synth.separation, "blobs: center spacing in stddevs");
  synth_cmd->add_option("--stddev", synth.stddev, "blobs: component stddev")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--per-center", synth.per_center, "blobs: rows per component")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--frames", synth.frames, "gaussian: frames per stream")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--alphabet", synth.alphabet, "gaussian: text alphabet size")
      ->check(CLI::PositiveNumber);

  // report
  std::string report_in, report_out, report_format = "table";
  auto* report_cmd = app.add_subcommand("report", "Re-render a saved JSON report");
  report_cmd->add_option("report", report_in, "InfoReport JSON")->required();
  report_cmd->add_option("--format", report_format, "Output format")
      ->check(CLI::IsMember({"json", "table", "svg"}));
  report_cmd->add_option("--out", report_out, "Output file (default stdout)");

  std::vector<std::string> argv_store{"modmi"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    if (*fit_cmd) {
      const auto x = read_feature_matrix(fit_features);
      const Codebook cb = fit(x, fit_options);
      save_codebook(cb, fit_out);
      out << "k=" << cb.k << " iterations=" << cb.iterations_run
          << " distortion=" << cb.final_distortion << "\n";
      return kOk;
    }
    if (*assign_cmd) {
      const auto cb = load_codebook(assign_codebook);
      const auto labels = assign(cb, read_feature_matrix(assign_features));
      if (assign_text)
        write_labels_text(labels, assign_out);
      else
        write_labels(labels, assign_out);
      return kOk;
    }
    if (*analyze_cmd) {
      const Manifest manifest = load_manifest(analyze_manifest);
      const InfoReport report = analyze(manifest, make_config(analyze_flags, manifest));
      emit(render(report, analyze_format), analyze_out, out);
      return kOk;
    }
    if (*sweep_cmd) {
      const auto ks = parse_ks(sweep_ks);
      const Manifest manifest = load_manifest(sweep_manifest);
      const auto reports = sweep_clusters(manifest, make_config(sweep_flags, manifest), ks);
      if (sweep_format == "json") {
        nlohmann::json all = nlohmann::json::array();
        for (const auto& r : reports) all.push_back(to_json(r));
        emit(all.dump(2) + "\n", sweep_out, out);
      } else {
        emit(render_sweep_table(reports), sweep_out, out);
      }
      return kOk;
    }
    if (*synth_cmd) return run_synth(synth, out);
    if (*report_cmd) {
      const auto bytes = [&] {
        std::ifstream in(report_in, std::ios::binary);
        if (!in) throw Error(ErrorKind::Io, "cannot open " + report_in);
        return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
      }();
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(bytes);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::Parse, report_in + ": invalid JSON: " + e.what());
      }
      emit(render(report_from_json(doc), report_format), report_out, out);
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Infeasible && *fit_cmd) {
      err << "error: infeasible k: " << e.what() << "\n";
      return kUsage;
    }
    err << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace modmi
