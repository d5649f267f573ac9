#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "vcae/autoencoder.hpp"
#include "vcae/dataset.hpp"
#include "vcae/error.hpp"
#include "vcae/rng.hpp"

using namespace vcae;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "vcae_ae_test";
  fs::create_directories(dir);
  return dir;
}

AutoencoderModel toy_model(std::uint64_t seed, bool relu = false) {
  AutoencoderModel m;
  m.config.input_dim = 6;
  m.config.hidden_dim = 4;
  m.config.latent_dim = 3;
  m.config.relu = relu;
  Rng rng(seed);
  m.w1 = Matrix(6, 4);
  m.w2 = Matrix(4, 3);
  m.w3 = Matrix(3, 4);
  m.w4 = Matrix(4, 6);
  for (Matrix* w : {&m.w1, &m.w2, &m.w3, &m.w4}) {
    for (double& v : w->data()) v = rng.uniform(-0.8, 0.8);
  }
  return m;
}

std::vector<double> naive_two_layer(std::span<const double> x, const Matrix& a, const Matrix& b) {
  std::vector<double> mid(a.cols(), 0.0), out(b.cols(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t k = 0; k < a.rows(); ++k) mid[j] += x[k] * a(k, j);
  }
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t k = 0; k < b.rows(); ++k) out[j] += mid[k] * b(k, j);
  }
  return out;
}

std::vector<unsigned char> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("encode/decode: linearity and triple-loop oracle") {
  const AutoencoderModel m = toy_model(10);
  Rng rng(2);

  const std::vector<double> zero(6, 0.0);
  for (double v : m.encode(zero)) CHECK(v == 0.0);
  const std::vector<double> zero_h(3, 0.0);
  for (double v : m.decode(zero_h)) CHECK(v == 0.0);

  std::vector<double> x(6), y(6);
  for (int i = 0; i < 6; ++i) {
    x[i] = rng.uniform(-1, 1);
    y[i] = rng.uniform(-1, 1);
  }
  const auto hx = m.encode(x);
  auto x2 = x;
  for (double& v : x2) v *= 2.5;
  const auto hx2 = m.encode(x2);
  for (int k = 0; k < 3; ++k) {
    CHECK(hx2[k] == doctest::Approx(2.5 * hx[k]).epsilon(1e-10));
  }

  // additivity of the decoder
  std::vector<double> h1(3), h2(3), hsum(3);
  for (int k = 0; k < 3; ++k) {
    h1[k] = rng.uniform(-1, 1);
    h2[k] = rng.uniform(-1, 1);
    hsum[k] = h1[k] + h2[k];
  }
  const auto d1 = m.decode(h1), d2 = m.decode(h2), ds = m.decode(hsum);
  for (int k = 0; k < 6; ++k) {
    CHECK(ds[k] == doctest::Approx(d1[k] + d2[k]).epsilon(1e-10));
  }

  const auto want_h = naive_two_layer(x, m.w1, m.w2);
  const auto got_h = m.encode(x);
  for (int k = 0; k < 3; ++k) CHECK(got_h[k] == doctest::Approx(want_h[k]).epsilon(1e-12));
  const auto want_r = naive_two_layer(h1, m.w3, m.w4);
  const auto got_r = m.decode(h1);
  for (int k = 0; k < 6; ++k) CHECK(got_r[k] == doctest::Approx(want_r[k]).epsilon(1e-12));

  CHECK_THROWS_AS(m.encode(std::vector<double>(5, 0.0)), ShapeError);
  CHECK_THROWS_AS(m.decode(std::vector<double>(4, 0.0)), ShapeError);
}

TEST_CASE("analytic gradients match central finite differences") {
  for (bool relu : {false, true}) {
    AutoencoderModel m = toy_model(33, relu);
    Rng rng(44);
    Matrix x(2, 6);
    for (double& v : x.data()) v = rng.uniform(0.05, 0.95);

    const AeGradients g = loss_and_gradients(m, x);
    const double eps = 1e-6;

    Matrix* weights[4] = {&m.w1, &m.w2, &m.w3, &m.w4};
    const Matrix* grads[4] = {&g.w1, &g.w2, &g.w3, &g.w4};
    for (int wi = 0; wi < 4; ++wi) {
      for (std::size_t i = 0; i < weights[wi]->size(); ++i) {
        const double saved = weights[wi]->data()[i];
        weights[wi]->data()[i] = saved + eps;
        const double lp = loss_and_gradients(m, x).loss;
        weights[wi]->data()[i] = saved - eps;
        const double lm = loss_and_gradients(m, x).loss;
        weights[wi]->data()[i] = saved;
        const double numeric = (lp - lm) / (2.0 * eps);
        const double analytic = grads[wi]->data()[i];
        const double scale = std::max({std::fabs(numeric), std::fabs(analytic), 1e-8});
        CHECK(std::fabs(numeric - analytic) / scale <= 1e-5);
      }
    }
  }
}

TEST_CASE("train: loss decreases on the synthetic corpus") {
  const LabeledSet data = synth_digits(50, 10, 16, 16, 3);  // 500 images
  AeConfig config;
  config.input_dim = 256;
  config.hidden_dim = 32;
  config.latent_dim = 4;
  config.epochs = 20;
  config.learning_rate = 1e-3;
  config.batch_size = 64;
  config.seed = 5;

  const auto [model, report] = train(data, config);
  REQUIRE(report.epoch_loss.size() == 20);
  CHECK(report.epoch_loss.back() < report.epoch_loss.front());
  CHECK(report.final_loss == report.epoch_loss.back());
  CHECK(model.w1.all_finite());
}

TEST_CASE("train: zero learning rate keeps the loss constant") {
  const LabeledSet data = synth_digits(20, 4, 12, 12, 7);
  AeConfig config;
  config.input_dim = 144;
  config.hidden_dim = 16;
  config.latent_dim = 3;
  config.epochs = 5;
  config.learning_rate = 0.0;
  config.batch_size = 32;
  config.seed = 9;
  const auto [model, report] = train(data, config);
  for (double loss : report.epoch_loss) {
    CHECK(loss == doctest::Approx(report.epoch_loss[0]).epsilon(1e-12));
  }
}

TEST_CASE("train: deterministic given the seed") {
  const LabeledSet data = synth_digits(15, 3, 12, 12, 11);
  AeConfig config;
  config.input_dim = 144;
  config.hidden_dim = 12;
  config.latent_dim = 3;
  config.epochs = 3;
  config.seed = 77;
  config.batch_size = 16;
  const auto [m1, r1] = train(data, config);
  const auto [m2, r2] = train(data, config);
  CHECK(m1.w1.data() == m2.w1.data());
  CHECK(m1.w4.data() == m2.w4.data());
  CHECK(r1.epoch_loss == r2.epoch_loss);
}

TEST_CASE("train: rejects empty data and mismatched shapes") {
  AeConfig config;
  config.input_dim = 144;
  config.hidden_dim = 12;
  config.latent_dim = 3;
  CHECK_THROWS_AS(train(LabeledSet{}, config), DomainError);
  const LabeledSet data = synth_digits(5, 2, 10, 10, 1);
  CHECK_THROWS_AS(train(data, config), ShapeError);

  AeConfig bad = config;
  bad.latent_dim = 50;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("encode_all: rows match per-vector encode") {
  const LabeledSet data = synth_digits(10, 3, 12, 12, 13);
  AeConfig config;
  config.input_dim = 144;
  config.hidden_dim = 12;
  config.latent_dim = 3;
  config.epochs = 2;
  config.seed = 4;
  const auto [model, report] = train(data, config);

  const Matrix h = encode_all(model, data);
  REQUIRE(h.rows() == data.size());
  REQUIRE(h.cols() == 3);
  for (std::size_t i : {std::size_t{0}, std::size_t{7}, std::size_t{29}}) {
    const auto direct = model.encode(data.inputs[i]);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(h(i, k) == doctest::Approx(direct[k]).epsilon(1e-12));
    }
  }

  LabeledSet single;
  single.image_rows = 12;
  single.image_cols = 12;
  single.inputs.push_back(data.inputs[3]);
  single.labels.push_back(data.labels[3]);
  const Matrix h1 = encode_all(model, single);
  const auto direct = model.encode(data.inputs[3]);
  for (std::size_t k = 0; k < 3; ++k) CHECK(h1(0, k) == direct[k]);
}

TEST_CASE("model file: bit-exact round trip") {
  const auto dir = temp_dir();
  const LabeledSet data = synth_digits(10, 3, 12, 12, 17);
  AeConfig config;
  config.input_dim = 144;
  config.hidden_dim = 12;
  config.latent_dim = 3;
  config.epochs = 2;
  config.seed = 21;
  const auto [model, report] = train(data, config);

  save_model(model, dir / "m.bin");
  const AutoencoderModel back = load_model(dir / "m.bin");
  CHECK(back.config.input_dim == 144);
  CHECK(back.w1.data() == model.w1.data());
  CHECK(back.w2.data() == model.w2.data());
  CHECK(back.w3.data() == model.w3.data());
  CHECK(back.w4.data() == model.w4.data());

  save_model(back, dir / "m2.bin");
  CHECK(file_bytes(dir / "m.bin") == file_bytes(dir / "m2.bin"));

  // probe encodes identically to the last bit
  const auto probe = data.inputs[5];
  const auto h_a = model.encode(probe);
  const auto h_b = back.encode(probe);
  CHECK(h_a == h_b);
}

TEST_CASE("model file: corrupted magic and truncation are format errors") {
  const auto dir = temp_dir();
  const LabeledSet data = synth_digits(10, 3, 12, 12, 23);
  AeConfig config;
  config.input_dim = 144;
  config.hidden_dim = 12;
  config.latent_dim = 3;
  config.epochs = 1;
  const auto [model, report] = train(data, config);
  save_model(model, dir / "ok.bin");

  auto bytes = file_bytes(dir / "ok.bin");
  bytes[0] = 'X';
  {
    std::ofstream out(dir / "bad.bin", std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(load_model(dir / "bad.bin"), FormatError);

  bytes = file_bytes(dir / "ok.bin");
  bytes.resize(bytes.size() / 2);
  {
    std::ofstream out(dir / "short.bin", std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(load_model(dir / "short.bin"), FormatError);
}
