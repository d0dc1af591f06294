#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sparse4d/random.hpp"

namespace sparse4d {

/// Weights of one LSTM direction. Gate blocks are stacked row-wise in the
/// order input, forget, cell, output.
struct LstmWeights {
  Eigen::MatrixXd wx;  // 4H x D
  Eigen::MatrixXd wh;  // 4H x H
  Eigen::MatrixXd b;   // 4H x 1
};

struct BiLstmParams {
  int input_dim = 0;
  int hidden_dim = 0;
  int class_count = 6;
  LstmWeights fwd;
  LstmWeights bwd;
  Eigen::MatrixXd fc_w;  // C x 2H
  Eigen::MatrixXd fc_b;  // C x 1

  static BiLstmParams zeros(int input_dim, int hidden_dim, int class_count = 6);

  /// Uniform(-1/sqrt(H), 1/sqrt(H)) weights, forget-gate bias 1, other biases 0.
  static BiLstmParams initialize(int input_dim, int hidden_dim, int class_count, std::uint64_t seed);

  static constexpr std::array<const char*, 8> kTensorNames = {
      "fwd.wx", "fwd.wh", "fwd.b", "bwd.wx", "bwd.wh", "bwd.b", "fc.w", "fc.b"};
  std::array<Eigen::MatrixXd*, 8> tensors();
  std::array<const Eigen::MatrixXd*, 8> tensors() const;

  bool operator==(const BiLstmParams& o) const;
};

using Gradients = BiLstmParams;

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 40;
  int batch_size = 8;
  double dropout_rate = 0.5;
  std::uint64_t seed = 0;
  double gradient_clip_norm = 5.0;
  int hidden_dim = 32;

  void validate() const;
};

struct ScoreVector {
  Eigen::VectorXd probabilities;

  /// Lowest index among maximal entries.
  int argmax() const;
};

enum class Mode { train, infer };

struct DirectionCache {
  Eigen::MatrixXd gates;  // 4H x T activated gates, processing order
  Eigen::MatrixXd cells;  // H x T
  Eigen::MatrixXd hidden; // H x T
};

struct ForwardResult {
  ScoreVector scores;
  Eigen::VectorXd logits;
  Eigen::VectorXd representation;  // 2H, after dropout
  Eigen::VectorXd dropout_mask;    // 2H, scale factors (all 1 in infer mode)
  DirectionCache fwd;
  DirectionCache bwd;
};

/// Runs both directions over a T x D sequence. In train mode inverted dropout
/// with masks drawn from `rng` is applied to the concatenated final states.
ForwardResult forward(const BiLstmParams& params, const Eigen::MatrixXd& sequence, Mode mode,
                      Rng* rng = nullptr, double dropout_rate = 0.0);

ScoreVector predict_scores(const BiLstmParams& params, const Eigen::MatrixXd& sequence);

struct LabeledSequence {
  Eigen::MatrixXd features;  // T x D
  int label = 0;
};

struct LossAndGradients {
  double loss = 0.0;
  Gradients gradients;
  double gradient_norm = 0.0;  // before clipping
};

/// Mean cross-entropy over the batch with backpropagation through time.
/// Gradients are rescaled to cfg.gradient_clip_norm when their global norm
/// exceeds it.
LossAndGradients loss_and_gradients(const BiLstmParams& params, std::span<const LabeledSequence> batch,
                                    const TrainConfig& cfg, Rng& rng);

struct TrainResult {
  BiLstmParams params;
  std::vector<double> epoch_loss;
};

/// Seeded minibatch SGD.
TrainResult train(std::span<const LabeledSequence> dataset, const TrainConfig& cfg, int class_count = 6);

/// Flat CSV: `tensor,rows,cols,values...` one line per tensor.
std::string format_checkpoint(const BiLstmParams& params);
BiLstmParams parse_checkpoint(const std::string& text, const std::string& source);
void save_checkpoint(const BiLstmParams& params, const std::filesystem::path& path);
BiLstmParams load_checkpoint(const std::filesystem::path& path);

void save_training_log(std::span<const double> epoch_loss, const std::filesystem::path& path);

}  // namespace sparse4d
