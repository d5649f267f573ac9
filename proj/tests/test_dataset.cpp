#include <doctest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "vcae/dataset.hpp"
#include "vcae/error.hpp"

using namespace vcae;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "vcae_dataset_test";
  fs::create_directories(dir);
  return dir;
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void push_u32_be(std::vector<unsigned char>& v, std::uint32_t x) {
  v.push_back(x >> 24);
  v.push_back((x >> 16) & 0xff);
  v.push_back((x >> 8) & 0xff);
  v.push_back(x & 0xff);
}

std::vector<unsigned char> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double mean_l2(const LabeledSet& set, bool same_class) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = i + 1; j < set.size(); ++j) {
      if ((set.labels[i] == set.labels[j]) != same_class) continue;
      double d2 = 0.0;
      for (std::size_t k = 0; k < set.inputs[i].size(); ++k) {
        const double d = set.inputs[i][k] - set.inputs[j][k];
        d2 += d * d;
      }
      total += std::sqrt(d2);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace

TEST_CASE("load_idx: hand-built fixture with known bytes") {
  const auto dir = temp_dir();
  // 4 images, 28x28; pixel (0,0) of image 0 gets byte 200, rest ramps
  std::vector<unsigned char> img;
  push_u32_be(img, 0x00000803);
  push_u32_be(img, 4);
  push_u32_be(img, 28);
  push_u32_be(img, 28);
  for (int i = 0; i < 4; ++i) {
    for (int px = 0; px < 28 * 28; ++px) {
      img.push_back(px == 0 && i == 0 ? 200 : static_cast<unsigned char>((px + i) % 256));
    }
  }
  std::vector<unsigned char> lab;
  push_u32_be(lab, 0x00000801);
  push_u32_be(lab, 4);
  for (unsigned char l : {3, 1, 4, 1}) lab.push_back(l);

  write_bytes(dir / "img.idx", img);
  write_bytes(dir / "lab.idx", lab);

  const LabeledSet set = load_idx(dir / "img.idx", dir / "lab.idx");
  REQUIRE(set.size() == 4);
  CHECK(set.image_rows == 28);
  CHECK(set.image_cols == 28);
  CHECK(set.inputs[0].size() == 784);
  CHECK(set.inputs[0][0] == doctest::Approx(200.0 / 255.0).epsilon(1e-15));
  CHECK(set.labels == std::vector<int>{3, 1, 4, 1});
}

TEST_CASE("load_idx: label magic in the image slot is a format error") {
  const auto dir = temp_dir();
  std::vector<unsigned char> img;
  push_u32_be(img, 0x00000801);  // wrong magic
  push_u32_be(img, 1);
  push_u32_be(img, 8);
  push_u32_be(img, 8);
  img.resize(img.size() + 64, 0);
  std::vector<unsigned char> lab;
  push_u32_be(lab, 0x00000801);
  push_u32_be(lab, 1);
  lab.push_back(0);
  write_bytes(dir / "bad_img.idx", img);
  write_bytes(dir / "lab1.idx", lab);
  CHECK_THROWS_AS(load_idx(dir / "bad_img.idx", dir / "lab1.idx"), FormatError);
}

TEST_CASE("load_idx: empty and truncated files are format errors") {
  const auto dir = temp_dir();
  write_bytes(dir / "empty.idx", {});
  write_bytes(dir / "empty_lab.idx", {});
  CHECK_THROWS_AS(load_idx(dir / "empty.idx", dir / "empty_lab.idx"), FormatError);

  std::vector<unsigned char> img;
  push_u32_be(img, 0x00000803);
  push_u32_be(img, 2);
  push_u32_be(img, 8);
  push_u32_be(img, 8);
  img.resize(img.size() + 64, 7);  // only one image present
  std::vector<unsigned char> lab;
  push_u32_be(lab, 0x00000801);
  push_u32_be(lab, 2);
  lab.push_back(0);
  lab.push_back(1);
  write_bytes(dir / "trunc.idx", img);
  write_bytes(dir / "lab2.idx", lab);
  CHECK_THROWS_AS(load_idx(dir / "trunc.idx", dir / "lab2.idx"), FormatError);

  // count mismatch between the two files
  std::vector<unsigned char> lab3;
  push_u32_be(lab3, 0x00000801);
  push_u32_be(lab3, 3);
  lab3.insert(lab3.end(), {0, 1, 2});
  std::vector<unsigned char> img2;
  push_u32_be(img2, 0x00000803);
  push_u32_be(img2, 2);
  push_u32_be(img2, 8);
  push_u32_be(img2, 8);
  img2.resize(img2.size() + 128, 7);
  write_bytes(dir / "img2.idx", img2);
  write_bytes(dir / "lab3.idx", lab3);
  CHECK_THROWS_AS(load_idx(dir / "img2.idx", dir / "lab3.idx"), FormatError);
}

TEST_CASE("synth_digits: deterministic, distinct classes, quantized pixels") {
  const LabeledSet a = synth_digits(20, 5, 16, 16, 77);
  const LabeledSet b = synth_digits(20, 5, 16, 16, 77);
  REQUIRE(a.size() == 100);
  CHECK(a.inputs == b.inputs);
  CHECK(a.labels == b.labels);

  for (const auto& img : a.inputs) {
    for (double p : img) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }

  CHECK(mean_l2(a, false) > mean_l2(a, true));

  CHECK(synth_digits(0, 3, 16, 16, 1).size() == 0);
  CHECK_THROWS_AS(synth_digits(1, 1, 4, 4, 1), DomainError);
}

TEST_CASE("synth_digits round-trips bit-exactly through IDX") {
  const auto dir = temp_dir();
  const LabeledSet set = synth_digits(10, 3, 12, 12, 5);
  save_idx(set, dir / "s_img.idx", dir / "s_lab.idx");
  const LabeledSet back = load_idx(dir / "s_img.idx", dir / "s_lab.idx");
  REQUIRE(back.size() == set.size());
  CHECK(back.labels == set.labels);
  CHECK(back.inputs == set.inputs);

  save_idx(back, dir / "s_img2.idx", dir / "s_lab2.idx");
  CHECK(file_bytes(dir / "s_img.idx") == file_bytes(dir / "s_img2.idx"));
  CHECK(file_bytes(dir / "s_lab.idx") == file_bytes(dir / "s_lab2.idx"));
}

TEST_CASE("trigger_mask: index arithmetic") {
  TriggerSpec t;
  t.height = 4;
  t.width = 6;
  t.margin_bottom = 2;
  t.margin_right = 2;
  const auto mask = trigger_mask(28, 28, t);
  std::size_t count = 0;
  for (std::size_t r = 0; r < 28; ++r) {
    for (std::size_t c = 0; c < 28; ++c) {
      const bool want = (r >= 22 && r <= 25 && c >= 20 && c <= 25);
      CHECK(mask[r * 28 + c] == want);
      count += mask[r * 28 + c] ? 1 : 0;
    }
  }
  CHECK(count == 24);

  TriggerSpec full{8, 8, 0, 0, 1.0};
  const auto all = trigger_mask(8, 8, full);
  CHECK(std::count(all.begin(), all.end(), true) == 64);

  TriggerSpec one{1, 1, 0, 0, 1.0};
  const auto single = trigger_mask(8, 8, one);
  CHECK(std::count(single.begin(), single.end(), true) == 1);
  CHECK(single[63]);

  TriggerSpec too_big{9, 1, 0, 0, 1.0};
  CHECK_THROWS_AS(trigger_mask(8, 8, too_big), DomainError);
}

TEST_CASE("inject_trigger: full-fraction stamp, idempotence, non-target untouched") {
  LabeledSet set = synth_digits(30, 4, 16, 16, 9);
  const LabeledSet original = set;

  PoisonPlan plan;
  plan.target_class = 2;
  plan.fraction = 1.0;
  plan.trigger = TriggerSpec{3, 4, 1, 1, 1.0};

  const InjectReport report = inject_trigger(set, plan, 13);
  CHECK(report.target_present);
  CHECK(report.attacked == 30);

  const auto mask = trigger_mask(16, 16, plan.trigger);
  double trig_sum = 0.0;
  std::size_t trig_count = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.labels[i] == 2) {
      for (std::size_t k = 0; k < mask.size(); ++k) {
        if (mask[k]) {
          trig_sum += set.inputs[i][k];
          ++trig_count;
        }
      }
    } else {
      CHECK(set.inputs[i] == original.inputs[i]);
    }
  }
  CHECK(trig_sum / static_cast<double>(trig_count) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(set.labels == original.labels);

  LabeledSet twice = set;
  inject_trigger(twice, plan, 13);
  CHECK(twice.inputs == set.inputs);
}

TEST_CASE("inject_trigger: zero fraction and absent target") {
  LabeledSet set = synth_digits(10, 3, 12, 12, 4);
  const LabeledSet original = set;

  PoisonPlan none;
  none.target_class = 1;
  none.fraction = 0.0;
  const InjectReport r0 = inject_trigger(set, none, 3);
  CHECK(r0.attacked == 0);
  CHECK(set.inputs == original.inputs);

  PoisonPlan absent;
  absent.target_class = 99;
  absent.fraction = 1.0;
  const InjectReport r1 = inject_trigger(set, absent, 3);
  CHECK_FALSE(r1.target_present);
  CHECK(r1.attacked == 0);
  CHECK(set.inputs == original.inputs);
}

TEST_CASE("inject_trigger: trigger-region mean equals intensity") {
  LabeledSet set = synth_digits(15, 2, 14, 14, 21);
  PoisonPlan plan;
  plan.target_class = 0;
  plan.fraction = 1.0;
  plan.trigger = TriggerSpec{2, 3, 2, 2, 0.62};
  inject_trigger(set, plan, 8);
  const auto mask = trigger_mask(14, 14, plan.trigger);
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.labels[i] != 0) continue;
    for (std::size_t k = 0; k < mask.size(); ++k) {
      if (mask[k]) CHECK(set.inputs[i][k] == 0.62);
    }
  }
}
