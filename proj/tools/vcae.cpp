// vcae: train a linear autoencoder, estimate its latent density with a
// D-vine copula, generate samples, and compare latent distributions.
//
// Subcommands: prepare, train, fit, generate, compare. Every command writes
// its outputs plus a manifest.json under --out; reruns with identical flags
// produce byte-identical artifacts.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <numeric>
#include <string>
#include <vector>

#include "vcae/autoencoder.hpp"
#include "vcae/dataset.hpp"
#include "vcae/error.hpp"
#include "vcae/matrix.hpp"
#include "vcae/metrics.hpp"
#include "vcae/rng.hpp"
#include "vcae/vine.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

constexpr int kExitUsage = 2;
constexpr int kExitShape = 3;
constexpr int kExitNumeric = 4;

// Advisory lock on the output directory; released when the process exits.
class OutputLock {
 public:
  explicit OutputLock(const fs::path& dir) {
    fs::create_directories(dir);
    const fs::path lock_path = dir / ".vcae.lock";
    fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0 || ::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      throw vcae::FormatError("output directory is locked by another vcae process: " +
                              dir.string());
    }
  }
  ~OutputLock() {
    if (fd_ >= 0) ::close(fd_);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  int fd_ = -1;
};

void write_manifest(const fs::path& dir, const json& manifest) {
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << "\n";
  if (!out) throw vcae::FormatError("cannot write manifest in " + dir.string());
}

void require_file(const std::string& flag, const fs::path& path) {
  if (!fs::exists(path)) {
    throw vcae::FormatError(flag + ": file not found: " + path.string());
  }
}

struct TriggerFlags {
  std::size_t height = 4, width = 6;
  std::size_t margin = 2;
  long margin_bottom = -1, margin_right = -1;
  double intensity = 1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--trigger-h", height, "Trigger rectangle height in pixels");
    cmd->add_option("--trigger-w", width, "Trigger rectangle width in pixels");
    cmd->add_option("--trigger-margin", margin, "Margin from the bottom-right corner");
    cmd->add_option("--trigger-margin-bottom", margin_bottom, "Override bottom margin");
    cmd->add_option("--trigger-margin-right", margin_right, "Override right margin");
    cmd->add_option("--trigger-intensity", intensity, "Stamped pixel value in [0,1]");
  }

  vcae::TriggerSpec spec() const {
    vcae::TriggerSpec t;
    t.height = height;
    t.width = width;
    t.margin_bottom = margin_bottom >= 0 ? static_cast<std::size_t>(margin_bottom) : margin;
    t.margin_right = margin_right >= 0 ? static_cast<std::size_t>(margin_right) : margin;
    t.intensity = intensity;
    return t;
  }

  json to_json() const {
    const auto t = spec();
    return {{"height", t.height},
            {"width", t.width},
            {"margin_bottom", t.margin_bottom},
            {"margin_right", t.margin_right},
            {"intensity", t.intensity}};
  }
};

// ---- prepare ---------------------------------------------------------------

struct PrepareArgs {
  bool synthetic = false;
  std::string data, labels;
  std::size_t classes = 10, per_class = 200, rows = 28, cols = 28;
  int target = 0;
  double fraction = 1.0;
  TriggerFlags trigger;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_prepare(const PrepareArgs& args) {
  if (!args.synthetic && (args.data.empty() || args.labels.empty())) {
    std::cerr << "prepare: pass --synthetic or both --data and --labels\n";
    return kExitUsage;
  }

  OutputLock lock{args.out};
  const fs::path out(args.out);

  vcae::LabeledSet clean;
  if (args.synthetic) {
    clean = vcae::synth_digits(args.per_class, args.classes, args.rows, args.cols, args.seed);
  } else {
    require_file("--data", args.data);
    require_file("--labels", args.labels);
    clean = vcae::load_idx(args.data, args.labels);
  }

  vcae::save_idx(clean, out / "clean-images.idx", out / "clean-labels.idx");

  vcae::PoisonPlan plan{args.target, args.fraction, args.trigger.spec()};
  vcae::LabeledSet poisoned = clean;
  const vcae::InjectReport report = vcae::inject_trigger(poisoned, plan, args.seed);
  vcae::save_idx(poisoned, out / "poison-images.idx", out / "poison-labels.idx");

  json manifest = {
      {"command", "prepare"},
      {"version", kVersion},
      {"seed", args.seed},
      {"source", args.synthetic
                     ? json{{"synthetic", true},
                            {"classes", args.classes},
                            {"per_class", args.per_class},
                            {"rows", args.rows},
                            {"cols", args.cols}}
                     : json{{"synthetic", false}, {"data", args.data}, {"labels", args.labels}}},
      {"poison",
       {{"target_class", args.target}, {"fraction", args.fraction}, {"trigger", args.trigger.to_json()}}},
      {"outputs", {"clean-images.idx", "clean-labels.idx", "poison-images.idx", "poison-labels.idx"}},
  };
  write_manifest(out, manifest);

  std::cout << "prepared " << clean.size() << " images (" << clean.image_rows << "x"
            << clean.image_cols << "), attacked " << report.attacked << " of target class "
            << args.target << "\n";
  if (!report.target_present) {
    std::cout << "warning: target class " << args.target << " absent from the data\n";
  }
  return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data, labels;
  long m = -1;
  std::size_t p = 64, n = 5;
  std::size_t epochs = 100;
  double lr = 1e-3;
  std::size_t batch = 128;
  std::uint64_t seed = 1;
  bool relu = false;
  std::string out;
};

int cmd_train(const TrainArgs& args) {
  require_file("--data", args.data);
  require_file("--labels", args.labels);

  OutputLock lock{args.out};
  const fs::path out(args.out);
  const vcae::LabeledSet data = vcae::load_idx(args.data, args.labels);

  if (args.m >= 0 && static_cast<std::size_t>(args.m) != data.pixel_count()) {
    throw vcae::ShapeError("--m=" + std::to_string(args.m) + " but data has " +
                           std::to_string(data.pixel_count()) + " pixels per image");
  }

  vcae::AeConfig config;
  config.input_dim = data.pixel_count();
  config.hidden_dim = args.p;
  config.latent_dim = args.n;
  config.epochs = args.epochs;
  config.learning_rate = args.lr;
  config.batch_size = args.batch;
  config.seed = args.seed;
  config.relu = args.relu;

  const auto [model, report] = vcae::train(data, config);
  vcae::save_model(model, out / "model.bin");

  std::ofstream loss_csv(out / "loss.csv", std::ios::trunc);
  loss_csv << "epoch,loss\n";
  char buf[48];
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e + 1, report.epoch_loss[e]);
    loss_csv << buf;
  }
  if (!loss_csv) throw vcae::FormatError("cannot write loss.csv");

  json manifest = {{"command", "train"},
                   {"version", kVersion},
                   {"data", args.data},
                   {"labels", args.labels},
                   {"config",
                    {{"m", config.input_dim},
                     {"p", config.hidden_dim},
                     {"n", config.latent_dim},
                     {"epochs", config.epochs},
                     {"learning_rate", config.learning_rate},
                     {"batch_size", config.batch_size},
                     {"relu", config.relu},
                     {"seed", config.seed}}},
                   {"outputs", {"model.bin", "loss.csv"}}};
  write_manifest(out, manifest);

  std::cout << "trained " << config.input_dim << "->" << config.hidden_dim << "->"
            << config.latent_dim << " for " << config.epochs << " epochs";
  if (!report.epoch_loss.empty()) {
    std::cout << ", final loss " << report.final_loss;
  }
  std::cout << " (" << report.wall_seconds << " s)\n";
  return 0;
}

// ---- fit -------------------------------------------------------------------

struct FitArgs {
  std::string model, data, labels;
  std::string order = "identity";
  std::size_t sample = 5000;  // 0 = use all rows
  std::size_t bins = 64;
  std::size_t pairwise_k = 50;  // 0 = skip pairwise export
  std::size_t pairwise_mc = 10000;
  std::string scale = "copula";
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_fit(const FitArgs& args) {
  require_file("--model", args.model);
  require_file("--data", args.data);
  require_file("--labels", args.labels);

  OutputLock lock{args.out};
  const fs::path out(args.out);

  const vcae::AutoencoderModel model = vcae::load_model(args.model);
  const vcae::LabeledSet data = vcae::load_idx(args.data, args.labels);
  vcae::Matrix latent = vcae::encode_all(model, data);

  if (args.sample > 0 && args.sample < latent.rows()) {
    std::vector<std::size_t> rows(latent.rows());
    std::iota(rows.begin(), rows.end(), 0);
    vcae::Rng rng(args.seed);
    rng.shuffle(rows);
    rows.resize(args.sample);
    std::sort(rows.begin(), rows.end());
    vcae::Matrix subset(args.sample, latent.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto src = latent.row(rows[i]);
      std::copy(src.begin(), src.end(), subset.row(i).begin());
    }
    latent = std::move(subset);
  }

  const vcae::OrderStrategy strategy = (args.order == "greedy")
                                           ? vcae::OrderStrategy::kGreedyTau
                                           : vcae::OrderStrategy::kIdentity;
  const vcae::DVineModel vine = vcae::fit_dvine(latent, strategy, {}, args.bins);
  vcae::save_vine(vine, out / "vine.txt");

  json families = json::array();
  for (std::size_t t = 0; t < vine.trees.size(); ++t) {
    for (std::size_t e = 0; e < vine.trees[t].size(); ++e) {
      families.push_back({{"tree", t},
                          {"edge", e},
                          {"record", vcae::copula_record(vine.trees[t][e])}});
    }
  }

  if (args.pairwise_k > 0) {
    const vcae::Scale scale =
        (args.scale == "latent") ? vcae::Scale::kLatent : vcae::Scale::kCopula;
    vcae::pairwise_density_export(vcae::LatentDensity{vine}, args.pairwise_k, out / "pairwise",
                                  scale, args.pairwise_mc, args.seed);
  }

  json manifest = {{"command", "fit"},
                   {"version", kVersion},
                   {"model", args.model},
                   {"data", args.data},
                   {"labels", args.labels},
                   {"order", args.order},
                   {"sample", args.sample},
                   {"bins", args.bins},
                   {"pairwise", {{"k", args.pairwise_k}, {"mc_samples", args.pairwise_mc}, {"scale", args.scale}}},
                   {"seed", args.seed},
                   {"rows_used", latent.rows()},
                   {"copulas", families},
                   {"outputs", {"vine.txt", "pairwise/"}}};
  write_manifest(out, manifest);

  std::cout << "fitted D-vine on " << latent.rows() << " x " << latent.cols()
            << " latent rows, " << vine.edge_count() << " pair copulas\n";
  return 0;
}

// ---- generate ----------------------------------------------------------------

struct GenerateArgs {
  std::string model, vine;
  std::size_t g = 64;
  std::uint64_t seed = 1;
  std::string reference_images, reference_labels;
  TriggerFlags trigger;
  std::string out;
};

int cmd_generate(const GenerateArgs& args) {
  require_file("--model", args.model);
  require_file("--vine", args.vine);

  OutputLock lock{args.out};
  const fs::path out(args.out);

  const vcae::AutoencoderModel model = vcae::load_model(args.model);
  const vcae::DVineModel vine = vcae::load_vine(args.vine);
  if (vine.dim() != model.config.latent_dim) {
    throw vcae::ShapeError("vine dimension " + std::to_string(vine.dim()) +
                           " != model latent dimension " +
                           std::to_string(model.config.latent_dim));
  }

  const vcae::Matrix latent = vine.sample(args.g, args.seed);
  vcae::LabeledSet samples;
  samples.image_rows = 1;
  samples.image_cols = model.config.input_dim;
  // keep a square shape when the input is one
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(
      static_cast<double>(model.config.input_dim))));
  if (side * side == model.config.input_dim) {
    samples.image_rows = side;
    samples.image_cols = side;
  }
  for (std::size_t i = 0; i < latent.rows(); ++i) {
    samples.inputs.push_back(model.decode(latent.row(i)));
    samples.labels.push_back(0);
  }
  vcae::save_idx(samples, out / "samples-images.idx", out / "samples-labels.idx");

  json manifest = {{"command", "generate"},
                   {"version", kVersion},
                   {"model", args.model},
                   {"vine", args.vine},
                   {"g", args.g},
                   {"seed", args.seed},
                   {"outputs", {"samples-images.idx", "samples-labels.idx"}}};

  if (!args.reference_images.empty()) {
    require_file("--reference-images", args.reference_images);
    require_file("--reference-labels", args.reference_labels);
    const vcae::LabeledSet ref = vcae::load_idx(args.reference_images, args.reference_labels);
    if (ref.pixel_count() != model.config.input_dim) {
      throw vcae::ShapeError("reference pixel count " + std::to_string(ref.pixel_count()) +
                             " != model input dimension " +
                             std::to_string(model.config.input_dim));
    }
    const auto mask = vcae::trigger_mask(ref.image_rows, ref.image_cols, args.trigger.spec());

    vcae::Matrix decoded(samples.size(), model.config.input_dim);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      std::copy(samples.inputs[i].begin(), samples.inputs[i].end(), decoded.row(i).begin());
    }
    vcae::Matrix reference(ref.size(), ref.pixel_count());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      std::copy(ref.inputs[i].begin(), ref.inputs[i].end(), reference.row(i).begin());
    }
    const double score =
        samples.size() > 0 ? vcae::fingerprint_score(decoded, mask, reference) : 0.0;

    json fingerprint = {{"score", score},
                        {"g", args.g},
                        {"trigger", args.trigger.to_json()},
                        {"reference", args.reference_images}};
    std::ofstream fp(out / "fingerprint.json", std::ios::trunc);
    fp << fingerprint.dump(2) << "\n";
    if (!fp) throw vcae::FormatError("cannot write fingerprint.json");
    manifest["fingerprint"] = fingerprint;
    std::cout << "fingerprint score " << score << " over " << args.g << " samples\n";
  }

  write_manifest(out, manifest);
  std::cout << "generated " << args.g << " samples\n";
  return 0;
}

// ---- compare -----------------------------------------------------------------

struct CompareArgs {
  std::string vine_p, vine_q, vine_r;
  std::string estimator = "grid";
  std::string scale = "copula";
  std::size_t grid_k = 20;
  std::size_t mc_samples = 10000;
  std::uint64_t seed = 1;
  std::string out;
};

json summary_to_json(const vcae::DistributionSummary& s) {
  json j = {{"raw_entropy", s.raw_entropy},
            {"estimator", s.estimator},
            {"scale", vcae::scale_name(s.scale)}};
  if (s.normalized_entropy) j["normalized_entropy"] = *s.normalized_entropy;
  if (s.points_per_dim > 0) j["grid_k"] = s.points_per_dim;
  if (s.sample_count > 0) {
    j["mc_samples"] = s.sample_count;
    j["seed"] = s.seed;
  }
  return j;
}

int cmd_compare(const CompareArgs& args) {
  require_file("--vine-p", args.vine_p);
  require_file("--vine-q", args.vine_q);
  if (!args.vine_r.empty()) require_file("--vine-r", args.vine_r);

  OutputLock lock{args.out};
  const fs::path out(args.out);

  std::vector<std::pair<std::string, vcae::LatentDensity>> densities;
  densities.emplace_back("p", vcae::LatentDensity{vcae::load_vine(args.vine_p)});
  densities.emplace_back("q", vcae::LatentDensity{vcae::load_vine(args.vine_q)});
  if (!args.vine_r.empty()) {
    densities.emplace_back("r", vcae::LatentDensity{vcae::load_vine(args.vine_r)});
  }
  for (const auto& [name, d] : densities) {
    if (d.dim() != densities[0].second.dim()) {
      throw vcae::ShapeError("vine '" + name + "' has dimension " + std::to_string(d.dim()) +
                             ", expected " + std::to_string(densities[0].second.dim()));
    }
  }

  const vcae::Scale scale = (args.scale == "latent") ? vcae::Scale::kLatent : vcae::Scale::kCopula;
  const bool grid = args.estimator != "mc";

  json report = {{"command", "compare"},
                 {"version", kVersion},
                 {"estimator", grid ? "grid" : "monte_carlo"},
                 {"scale", args.scale},
                 {"seed", args.seed}};
  if (grid) {
    report["grid_k"] = args.grid_k;
  } else {
    report["mc_samples"] = args.mc_samples;
  }

  vcae::GridSpec spec;
  spec.points_per_dim = args.grid_k;
  spec.scale = scale;

  json entropy_json;
  std::vector<double> entropies;
  for (const auto& [name, density] : densities) {
    const vcae::DistributionSummary s =
        grid ? vcae::entropy_grid(density, spec)
             : vcae::entropy_mc(density, args.mc_samples, scale, args.seed);
    entropy_json[name] = summary_to_json(s);
    entropies.push_back(grid ? *s.normalized_entropy : s.raw_entropy);
  }
  report["entropy"] = entropy_json;

  json change;
  for (std::size_t i = 1; i < densities.size(); ++i) {
    const double base = entropies[0];
    change[densities[i].first] =
        (base != 0.0) ? (entropies[i] - base) / std::fabs(base) * 100.0 : 0.0;
  }
  report["entropy_change_pct"] = change;

  json kl;
  for (std::size_t i = 1; i < densities.size(); ++i) {
    const double v = grid ? vcae::kl_divergence_grid(densities[0].second, densities[i].second, spec)
                          : vcae::kl_divergence_mc(densities[0].second, densities[i].second,
                                                   args.mc_samples, scale, args.seed);
    kl["p_vs_" + densities[i].first] = v;
  }
  report["kl"] = kl;

  std::ofstream rep(out / "report.json", std::ios::trunc);
  rep << report.dump(2) << "\n";
  if (!rep) throw vcae::FormatError("cannot write report.json");
  write_manifest(out, {{"command", "compare"},
                       {"version", kVersion},
                       {"vine_p", args.vine_p},
                       {"vine_q", args.vine_q},
                       {"vine_r", args.vine_r},
                       {"estimator", args.estimator},
                       {"scale", args.scale},
                       {"grid_k", args.grid_k},
                       {"mc_samples", args.mc_samples},
                       {"seed", args.seed},
                       {"outputs", {"report.json"}}});

  std::cout << "latent space            entropy      change\n";
  for (std::size_t i = 0; i < densities.size(); ++i) {
    std::printf("%-22s  %10.4f", densities[i].first.c_str(), entropies[i]);
    if (i > 0) {
      std::printf("  %+9.2f%%", change[densities[i].first].get<double>());
    }
    std::printf("\n");
  }
  for (auto& [key, value] : kl.items()) {
    std::cout << "KL " << key << " = " << value.get<double>() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vine-copula autoencoder toolkit"};
  app.set_version_flag("--version", std::string("vcae ") + kVersion);
  app.require_subcommand(1);

  PrepareArgs prepare_args;
  auto* prepare = app.add_subcommand("prepare", "Build clean and poisoned data sets");
  prepare->add_flag("--synthetic", prepare_args.synthetic, "Generate the synthetic digit corpus");
  prepare->add_option("--data", prepare_args.data, "IDX image file");
  prepare->add_option("--labels", prepare_args.labels, "IDX label file");
  prepare->add_option("--classes", prepare_args.classes, "Synthetic: class count");
  prepare->add_option("--per-class", prepare_args.per_class, "Synthetic: images per class");
  prepare->add_option("--rows", prepare_args.rows, "Synthetic: image rows");
  prepare->add_option("--cols", prepare_args.cols, "Synthetic: image cols");
  prepare->add_option("--target", prepare_args.target, "Attacked class label");
  prepare->add_option("--fraction", prepare_args.fraction, "Attacked share of the target class");
  prepare_args.trigger.attach(prepare);
  prepare->add_option("--seed", prepare_args.seed, "Random seed");
  prepare->add_option("--out", prepare_args.out, "Output directory")->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train the linear autoencoder");
  train->add_option("--data", train_args.data, "IDX image file")->required();
  train->add_option("--labels", train_args.labels, "IDX label file")->required();
  train->add_option("--m", train_args.m, "Expected input dimension (checked against data)");
  train->add_option("--p", train_args.p, "Hidden dimension");
  train->add_option("--n", train_args.n, "Latent dimension");
  train->add_option("--epochs", train_args.epochs, "Training epochs");
  train->add_option("--lr", train_args.lr, "Adam learning rate");
  train->add_option("--batch", train_args.batch, "Mini-batch size");
  train->add_option("--seed", train_args.seed, "Random seed");
  train->add_flag("--relu", train_args.relu, "Non-linear variant (off by default)");
  train->add_option("--out", train_args.out, "Output directory")->required();

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Fit the D-vine to encoded data");
  fit->add_option("--model", fit_args.model, "Autoencoder model file")->required();
  fit->add_option("--data", fit_args.data, "IDX image file")->required();
  fit->add_option("--labels", fit_args.labels, "IDX label file")->required();
  fit->add_option("--order", fit_args.order, "Variable order: identity or greedy")
      ->check(CLI::IsMember({"identity", "greedy"}));
  fit->add_option("--sample", fit_args.sample, "Encoded rows used for fitting (0 = all)");
  fit->add_option("--bins", fit_args.bins, "Histogram bins per marginal");
  fit->add_option("--pairwise-k", fit_args.pairwise_k, "Pairwise grid size (0 = skip)");
  fit->add_option("--pairwise-mc", fit_args.pairwise_mc, "MC draws for non-adjacent pairs");
  fit->add_option("--scale", fit_args.scale, "Pairwise export scale: copula or latent")
      ->check(CLI::IsMember({"copula", "latent"}));
  fit->add_option("--seed", fit_args.seed, "Random seed");
  fit->add_option("--out", fit_args.out, "Output directory")->required();

  GenerateArgs gen_args;
  auto* generate = app.add_subcommand("generate", "Sample the vine and decode");
  generate->add_option("--model", gen_args.model, "Autoencoder model file")->required();
  generate->add_option("--vine", gen_args.vine, "Vine file")->required();
  generate->add_option("--g", gen_args.g, "Number of samples");
  generate->add_option("--seed", gen_args.seed, "Random seed");
  generate->add_option("--reference-images", gen_args.reference_images,
                       "Reference IDX images for the fingerprint score");
  generate->add_option("--reference-labels", gen_args.reference_labels,
                       "Reference IDX labels");
  gen_args.trigger.attach(generate);
  generate->add_option("--out", gen_args.out, "Output directory")->required();

  CompareArgs cmp_args;
  auto* compare = app.add_subcommand("compare", "Entropy and KL report for fitted vines");
  compare->add_option("--vine-p", cmp_args.vine_p, "Reference (baseline) vine")->required();
  compare->add_option("--vine-q", cmp_args.vine_q, "Comparison vine")->required();
  compare->add_option("--vine-r", cmp_args.vine_r, "Optional third vine");
  compare->add_option("--estimator", cmp_args.estimator, "grid or mc")
      ->check(CLI::IsMember({"grid", "mc"}));
  compare->add_option("--scale", cmp_args.scale, "copula or latent")
      ->check(CLI::IsMember({"copula", "latent"}));
  compare->add_option("--grid-k", cmp_args.grid_k, "Grid points per dimension");
  compare->add_option("--mc-samples", cmp_args.mc_samples, "Monte-Carlo sample count");
  compare->add_option("--seed", cmp_args.seed, "Random seed");
  compare->add_option("--out", cmp_args.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (prepare->parsed()) return cmd_prepare(prepare_args);
    if (train->parsed()) return cmd_train(train_args);
    if (fit->parsed()) return cmd_fit(fit_args);
    if (generate->parsed()) return cmd_generate(gen_args);
    if (compare->parsed()) return cmd_compare(cmp_args);
  } catch (const vcae::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitShape;
  } catch (const vcae::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const vcae::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
