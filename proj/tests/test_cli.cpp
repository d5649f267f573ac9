#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kTool = VCAE_TOOL_PATH;

int run(const std::string& args) {
  const std::string cmd = kTool + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "vcae_cli" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

std::vector<unsigned char> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return json::parse(in);
}

struct Pipeline {
  fs::path data = fresh_dir("data");
  fs::path base_model = fresh_dir("base_model");
  fs::path vine_p = fresh_dir("vine_p");

  void prepare() {
    REQUIRE(run("prepare --synthetic --classes 5 --per-class 40 --rows 16 --cols 16 --target 0 "
                "--seed 7 --out " + data.string()) == 0);
  }
  void train() {
    REQUIRE(run("train --data " + (data / "clean-images.idx").string() + " --labels " +
                (data / "clean-labels.idx").string() +
                " --p 16 --n 3 --epochs 3 --batch 32 --seed 1 --out " + base_model.string()) == 0);
  }
  void fit() {
    REQUIRE(run("fit --model " + (base_model / "model.bin").string() + " --data " +
                (data / "clean-images.idx").string() + " --labels " +
                (data / "clean-labels.idx").string() +
                " --sample 0 --bins 32 --pairwise-k 0 --seed 2 --out " + vine_p.string()) == 0);
  }
};

}  // namespace

TEST_CASE("prepare: synthetic corpus, manifest, byte-identical rerun") {
  const fs::path out = fresh_dir("prepare1");
  const std::string cmd = "prepare --synthetic --classes 5 --per-class 20 --rows 16 --cols 16 "
                          "--target 0 --seed 7 --out " + out.string();
  REQUIRE(run(cmd) == 0);
  for (const char* name : {"clean-images.idx", "clean-labels.idx", "poison-images.idx",
                           "poison-labels.idx", "manifest.json"}) {
    CHECK(fs::exists(out / name));
  }
  const auto first = file_bytes(out / "poison-images.idx");
  const auto manifest_first = file_bytes(out / "manifest.json");

  const fs::path out2 = fresh_dir("prepare2");
  const std::string cmd2 = "prepare --synthetic --classes 5 --per-class 20 --rows 16 --cols 16 "
                           "--target 0 --seed 7 --out " + out2.string();
  REQUIRE(run(cmd2) == 0);
  CHECK(file_bytes(out2 / "poison-images.idx") == first);

  const json manifest = read_json(out / "manifest.json");
  CHECK(manifest["command"] == "prepare");
  CHECK(manifest["poison"]["fraction"] == 1.0);
}

TEST_CASE("prepare: missing input path exits 2 naming the flag") {
  const fs::path out = fresh_dir("prepare_missing");
  CHECK(run("prepare --data /nonexistent/images.idx --labels /nonexistent/labels.idx --out " +
            out.string()) == 2);
  CHECK(run("prepare --out " + out.string()) == 2);  // neither --synthetic nor --data
}

TEST_CASE("train: epoch count drives the loss curve; epochs 0 still saves") {
  Pipeline p;
  p.prepare();
  p.train();
  CHECK(fs::exists(p.base_model / "model.bin"));
  CHECK(line_count(p.base_model / "loss.csv") == 4);  // header + 3 epochs

  const fs::path zero = fresh_dir("train_zero");
  REQUIRE(run("train --data " + (p.data / "clean-images.idx").string() + " --labels " +
              (p.data / "clean-labels.idx").string() +
              " --p 16 --n 3 --epochs 0 --seed 1 --out " + zero.string()) == 0);
  CHECK(fs::exists(zero / "model.bin"));
  CHECK(line_count(zero / "loss.csv") == 1);  // header only
}

TEST_CASE("fit: writes a vine file with the triangular copula records") {
  Pipeline p;
  p.prepare();
  p.train();
  p.fit();
  CHECK(fs::exists(p.vine_p / "vine.txt"));

  std::ifstream in(p.vine_p / "vine.txt");
  std::string line;
  std::size_t records = 0;
  while (std::getline(in, line)) {
    if (line.rfind("copula ", 0) == 0) ++records;
  }
  CHECK(records == 3);  // n=3 -> 3 pair copulas

  const json manifest = read_json(p.vine_p / "manifest.json");
  CHECK(manifest["rows_used"] == 200);
}

TEST_CASE("fit: model/data shape mismatch exits 3") {
  Pipeline p;
  p.prepare();
  p.train();
  const fs::path other = fresh_dir("otherdata");
  REQUIRE(run("prepare --synthetic --classes 3 --per-class 10 --rows 12 --cols 12 --seed 3 "
              "--out " + other.string()) == 0);
  const fs::path out = fresh_dir("fit_mismatch");
  CHECK(run("fit --model " + (p.base_model / "model.bin").string() + " --data " +
            (other / "clean-images.idx").string() + " --labels " +
            (other / "clean-labels.idx").string() + " --out " + out.string()) == 3);
}

TEST_CASE("generate: deterministic samples, fingerprint report, g=0") {
  Pipeline p;
  p.prepare();
  p.train();
  p.fit();

  const fs::path gen1 = fresh_dir("gen1");
  const std::string gen_cmd =
      " --model " + (p.base_model / "model.bin").string() + " --vine " +
      (p.vine_p / "vine.txt").string() + " --g 16 --seed 5 --reference-images " +
      (p.data / "clean-images.idx").string() + " --reference-labels " +
      (p.data / "clean-labels.idx").string() + " --trigger-h 3 --trigger-w 4";
  REQUIRE(run("generate" + gen_cmd + " --out " + gen1.string()) == 0);
  CHECK(fs::exists(gen1 / "samples-images.idx"));
  CHECK(fs::exists(gen1 / "fingerprint.json"));

  const fs::path gen2 = fresh_dir("gen2");
  REQUIRE(run("generate" + gen_cmd + " --out " + gen2.string()) == 0);
  CHECK(file_bytes(gen1 / "samples-images.idx") == file_bytes(gen2 / "samples-images.idx"));

  const fs::path gen0 = fresh_dir("gen0");
  REQUIRE(run("generate --model " + (p.base_model / "model.bin").string() + " --vine " +
              (p.vine_p / "vine.txt").string() + " --g 0 --out " + gen0.string()) == 0);
  const auto bytes = file_bytes(gen0 / "samples-images.idx");
  CHECK(bytes.size() == 16);  // header only, zero images
}

TEST_CASE("generate: latent dimension mismatch exits 3") {
  Pipeline p;
  p.prepare();
  p.train();
  p.fit();
  // model with latent dim 4 against the n=3 vine
  const fs::path other_model = fresh_dir("model_n4");
  REQUIRE(run("train --data " + (p.data / "clean-images.idx").string() + " --labels " +
              (p.data / "clean-labels.idx").string() +
              " --p 16 --n 4 --epochs 1 --seed 1 --out " + other_model.string()) == 0);
  const fs::path out = fresh_dir("gen_mismatch");
  CHECK(run("generate --model " + (other_model / "model.bin").string() + " --vine " +
            (p.vine_p / "vine.txt").string() + " --g 4 --out " + out.string()) == 3);
}

TEST_CASE("compare: P against itself reports zero change and zero KL") {
  Pipeline p;
  p.prepare();
  p.train();
  p.fit();

  const fs::path out = fresh_dir("cmp_self");
  REQUIRE(run("compare --vine-p " + (p.vine_p / "vine.txt").string() + " --vine-q " +
              (p.vine_p / "vine.txt").string() + " --grid-k 8 --seed 4 --out " +
              out.string()) == 0);
  const json report = read_json(out / "report.json");
  CHECK(report["entropy_change_pct"]["q"].get<double>() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(report["kl"]["p_vs_q"].get<double>() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(report["estimator"] == "grid");
}

TEST_CASE("compare: three vines produce a three-row report") {
  Pipeline p;
  p.prepare();
  p.train();
  p.fit();

  // a second vine from poisoned data through the same encoder
  const fs::path vine_q = fresh_dir("vine_q");
  REQUIRE(run("fit --model " + (p.base_model / "model.bin").string() + " --data " +
              (p.data / "poison-images.idx").string() + " --labels " +
              (p.data / "poison-labels.idx").string() +
              " --sample 0 --bins 32 --pairwise-k 0 --seed 2 --out " + vine_q.string()) == 0);

  const fs::path out = fresh_dir("cmp_three");
  REQUIRE(run("compare --vine-p " + (p.vine_p / "vine.txt").string() + " --vine-q " +
              (vine_q / "vine.txt").string() + " --vine-r " + (p.vine_p / "vine.txt").string() +
              " --grid-k 8 --seed 4 --out " + out.string()) == 0);
  const json report = read_json(out / "report.json");
  CHECK(report["entropy"].contains("p"));
  CHECK(report["entropy"].contains("q"));
  CHECK(report["entropy"].contains("r"));
  CHECK(report["kl"].contains("p_vs_q"));
  CHECK(report["kl"].contains("p_vs_r"));
}

TEST_CASE("usage errors exit 2") {
  CHECK(run("") == 2);                       // missing subcommand
  CHECK(run("train --out /tmp/x") == 2);     // missing required flags
  CHECK(run("compare --vine-p /nonexistent --vine-q /nonexistent --out " +
            fresh_dir("cmp_missing").string()) == 2);
}
