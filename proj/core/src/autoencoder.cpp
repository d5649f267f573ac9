#include "vcae/autoencoder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "vcae/error.hpp"
#include "vcae/rng.hpp"

namespace vcae {

namespace {

constexpr char kMagic[8] = {'V', 'C', 'A', 'E', 'A', 'E', 'W', '\0'};
constexpr std::uint32_t kVersion = 1;

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

Matrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix w(rows, cols);
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : w.data()) v = rng.uniform(-bound, bound);
  return w;
}

struct AdamState {
  Matrix m, v;
  explicit AdamState(const Matrix& w) : m(w.rows(), w.cols()), v(w.rows(), w.cols()) {}
};

void adam_step(Matrix& w, const Matrix& grad, AdamState& st, double lr, std::size_t t) {
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double g = grad.data()[i];
    double& m = st.m.data()[i];
    double& v = st.v.data()[i];
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g * g;
    w.data()[i] -= lr * (m / bc1) / (std::sqrt(v / bc2) + kAdamEps);
  }
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& in, const std::string& what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw FormatError("model file: truncated " + what);
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

void write_matrix(std::ostream& out, const Matrix& w) {
  for (double v : w.data()) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
    out.write(reinterpret_cast<const char*>(b), 8);
  }
}

void read_matrix(std::istream& in, Matrix& w, const std::string& what) {
  for (double& v : w.data()) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (in.gcount() != 8) throw FormatError("model file: truncated " + what);
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= std::uint64_t(b[k]) << (8 * k);
    std::memcpy(&v, &bits, 8);
  }
}

}  // namespace

void AeConfig::validate() const {
  if (!(input_dim > hidden_dim && hidden_dim > latent_dim && latent_dim >= 2)) {
    throw DomainError("AeConfig: requires m > p > n >= 2, got m=" + std::to_string(input_dim) +
                      " p=" + std::to_string(hidden_dim) + " n=" + std::to_string(latent_dim));
  }
  if (!(learning_rate >= 0.0)) throw DomainError("AeConfig: learning_rate must be >= 0");
  if (batch_size == 0) throw DomainError("AeConfig: batch_size must be positive");
}

std::vector<double> AutoencoderModel::encode(std::span<const double> x) const {
  if (x.size() != config.input_dim) {
    throw ShapeError("encode: input length " + std::to_string(x.size()) + ", expected " +
                     std::to_string(config.input_dim));
  }
  std::vector<double> hidden(config.hidden_dim);
  row_times_matrix(x, w1, hidden);
  if (config.relu) {
    for (double& v : hidden) v = std::max(0.0, v);
  }
  std::vector<double> latent(config.latent_dim);
  row_times_matrix(hidden, w2, latent);
  return latent;
}

std::vector<double> AutoencoderModel::decode(std::span<const double> h) const {
  if (h.size() != config.latent_dim) {
    throw ShapeError("decode: latent length " + std::to_string(h.size()) + ", expected " +
                     std::to_string(config.latent_dim));
  }
  std::vector<double> hidden(config.hidden_dim);
  row_times_matrix(h, w3, hidden);
  if (config.relu) {
    for (double& v : hidden) v = std::max(0.0, v);
  }
  std::vector<double> out(config.input_dim);
  row_times_matrix(hidden, w4, out);
  return out;
}

AeGradients loss_and_gradients(const AutoencoderModel& model, const Matrix& x) {
  if (x.cols() != model.config.input_dim) {
    throw ShapeError("loss_and_gradients: batch width " + std::to_string(x.cols()) +
                     " != model input dim " + std::to_string(model.config.input_dim));
  }
  const bool relu = model.config.relu;

  Matrix h1 = matmul(x, model.w1);
  if (relu) {
    for (double& v : h1.data()) v = std::max(0.0, v);
  }
  Matrix h = matmul(h1, model.w2);
  Matrix d1 = matmul(h, model.w3);
  if (relu) {
    for (double& v : d1.data()) v = std::max(0.0, v);
  }
  Matrix r = matmul(d1, model.w4);

  const double inv_elems = 1.0 / static_cast<double>(x.size());
  double sq_err = 0.0;
  Matrix dr(x.rows(), x.cols());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double diff = r.data()[i] - x.data()[i];
    sq_err += diff * diff;
    dr.data()[i] = 2.0 * diff * inv_elems;
  }

  AeGradients g;
  g.loss = sq_err * inv_elems;
  g.w4 = matmul(transpose(d1), dr);
  Matrix dd1 = matmul(dr, transpose(model.w4));
  if (relu) {
    for (std::size_t i = 0; i < dd1.size(); ++i) {
      if (d1.data()[i] <= 0.0) dd1.data()[i] = 0.0;
    }
  }
  g.w3 = matmul(transpose(h), dd1);
  Matrix dh = matmul(dd1, transpose(model.w3));
  g.w2 = matmul(transpose(h1), dh);
  Matrix dh1 = matmul(dh, transpose(model.w2));
  if (relu) {
    for (std::size_t i = 0; i < dh1.size(); ++i) {
      if (h1.data()[i] <= 0.0) dh1.data()[i] = 0.0;
    }
  }
  g.w1 = matmul(transpose(x), dh1);
  return g;
}

std::pair<AutoencoderModel, TrainReport> train(const LabeledSet& data, const AeConfig& config) {
  config.validate();
  if (data.size() == 0) throw DomainError("train: empty data set");
  if (data.pixel_count() != config.input_dim) {
    throw ShapeError("train: data has " + std::to_string(data.pixel_count()) +
                     " pixels per image, config.input_dim=" + std::to_string(config.input_dim));
  }

  const auto t_start = std::chrono::steady_clock::now();
  const std::size_t m = config.input_dim, p = config.hidden_dim, n = config.latent_dim;
  const std::size_t count = data.size();

  Rng rng(config.seed);
  AutoencoderModel model;
  model.config = config;
  model.w1 = glorot_init(m, p, rng);
  model.w2 = glorot_init(p, n, rng);
  model.w3 = glorot_init(n, p, rng);
  model.w4 = glorot_init(p, m, rng);

  AdamState s1(model.w1), s2(model.w2), s3(model.w3), s4(model.w4);
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_sq_err = 0.0;

    for (std::size_t start = 0; start < count; start += config.batch_size) {
      const std::size_t bsz = std::min(config.batch_size, count - start);

      Matrix x(bsz, m);
      for (std::size_t b = 0; b < bsz; ++b) {
        const auto& src = data.inputs[order[start + b]];
        std::copy(src.begin(), src.end(), x.row(b).begin());
      }

      const AeGradients g = loss_and_gradients(model, x);
      if (!std::isfinite(g.loss)) {
        throw NumericError("train: loss is not finite at epoch " + std::to_string(epoch + 1) +
                           ", batch " + std::to_string(start / config.batch_size + 1));
      }
      epoch_sq_err += g.loss * static_cast<double>(bsz * m);

      ++step;
      adam_step(model.w1, g.w1, s1, config.learning_rate, step);
      adam_step(model.w2, g.w2, s2, config.learning_rate, step);
      adam_step(model.w3, g.w3, s3, config.learning_rate, step);
      adam_step(model.w4, g.w4, s4, config.learning_rate, step);
    }

    report.epoch_loss.push_back(epoch_sq_err / static_cast<double>(count * m));
  }

  report.final_loss = report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return {std::move(model), std::move(report)};
}

Matrix encode_all(const AutoencoderModel& model, const LabeledSet& data) {
  if (data.pixel_count() != model.config.input_dim) {
    throw ShapeError("encode_all: data pixel count " + std::to_string(data.pixel_count()) +
                     " != model input dim " + std::to_string(model.config.input_dim));
  }
  Matrix h(data.size(), model.config.latent_dim);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto hi = model.encode(data.inputs[i]);
    std::copy(hi.begin(), hi.end(), h.row(i).begin());
  }
  return h;
}

void save_model(const AutoencoderModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("model file: cannot write " + path.string());
  out.write(kMagic, 8);
  write_u32_le(out, kVersion);
  write_u32_le(out, 0);  // reserved
  write_u32_le(out, static_cast<std::uint32_t>(model.config.input_dim));
  write_u32_le(out, static_cast<std::uint32_t>(model.config.hidden_dim));
  write_u32_le(out, static_cast<std::uint32_t>(model.config.latent_dim));
  write_matrix(out, model.w1);
  write_matrix(out, model.w2);
  write_matrix(out, model.w3);
  write_matrix(out, model.w4);
  if (!out) throw FormatError("model file: write failed for " + path.string());
}

AutoencoderModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("model file: cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0) {
    throw FormatError("model file: bad magic in " + path.string());
  }
  const std::uint32_t version = read_u32_le(in, "version");
  if (version != kVersion) {
    throw FormatError("model file: unsupported version " + std::to_string(version));
  }
  read_u32_le(in, "reserved field");

  AutoencoderModel model;
  model.config.input_dim = read_u32_le(in, "input dim");
  model.config.hidden_dim = read_u32_le(in, "hidden dim");
  model.config.latent_dim = read_u32_le(in, "latent dim");
  if (!(model.config.input_dim > model.config.hidden_dim &&
        model.config.hidden_dim > model.config.latent_dim && model.config.latent_dim >= 2)) {
    throw FormatError("model file: invalid dimensions in header");
  }
  model.w1 = Matrix(model.config.input_dim, model.config.hidden_dim);
  model.w2 = Matrix(model.config.hidden_dim, model.config.latent_dim);
  model.w3 = Matrix(model.config.latent_dim, model.config.hidden_dim);
  model.w4 = Matrix(model.config.hidden_dim, model.config.input_dim);
  read_matrix(in, model.w1, "W1");
  read_matrix(in, model.w2, "W2");
  read_matrix(in, model.w3, "W3");
  read_matrix(in, model.w4, "W4");
  return model;
}

}  // namespace vcae
