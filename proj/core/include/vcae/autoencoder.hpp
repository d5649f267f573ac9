#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vcae/dataset.hpp"
#include "vcae/matrix.hpp"

namespace vcae {

struct AeConfig {
  std::size_t input_dim = 784;   // m
  std::size_t hidden_dim = 64;   // p
  std::size_t latent_dim = 5;    // n
  std::size_t epochs = 100;
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;
  std::uint64_t seed = 1;
  bool relu = false;  // off: the model stays purely linear

  void validate() const;
};

// Two linear layers per side: h = (x W1) W2, r = (h W3) W4. No biases.
struct AutoencoderModel {
  AeConfig config;
  Matrix w1, w2, w3, w4;

  std::vector<double> encode(std::span<const double> x) const;
  std::vector<double> decode(std::span<const double> h) const;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean MSE per epoch, one entry per epoch
  double final_loss = 0.0;
  double wall_seconds = 0.0;
};

struct AeGradients {
  double loss = 0.0;  // mean squared error over all batch elements
  Matrix w1, w2, w3, w4;
};

// One forward/backward pass over a batch (rows of x are inputs).
AeGradients loss_and_gradients(const AutoencoderModel& model, const Matrix& x);

// Mini-batch Adam on mean squared reconstruction error. Deterministic per
// config.seed. Throws NumericError naming epoch/batch if the loss goes NaN.
std::pair<AutoencoderModel, TrainReport> train(const LabeledSet& data, const AeConfig& config);

// Rows of the result are encode(inputs[i]) in input order.
Matrix encode_all(const AutoencoderModel& model, const LabeledSet& data);

// Binary weight file; round-trips bit-exactly.
void save_model(const AutoencoderModel& model, const std::filesystem::path& path);
AutoencoderModel load_model(const std::filesystem::path& path);

}  // namespace vcae
