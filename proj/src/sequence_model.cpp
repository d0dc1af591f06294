#include "sparse4d/sequence_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "sparse4d/error.hpp"
#include "sparse4d/table_io.hpp"

namespace sparse4d {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

LstmWeights zero_weights(int d, int h) {
  return {MatrixXd::Zero(4 * h, d), MatrixXd::Zero(4 * h, h), MatrixXd::Zero(4 * h, 1)};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

BiLstmParams BiLstmParams::zeros(int input_dim, int hidden_dim, int class_count) {
  if (input_dim < 1 || hidden_dim < 1 || class_count < 2) throw InvalidArgument("bad network dimensions");
  BiLstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.class_count = class_count;
  p.fwd = zero_weights(input_dim, hidden_dim);
  p.bwd = zero_weights(input_dim, hidden_dim);
  p.fc_w = MatrixXd::Zero(class_count, 2 * hidden_dim);
  p.fc_b = MatrixXd::Zero(class_count, 1);
  return p;
}

BiLstmParams BiLstmParams::initialize(int input_dim, int hidden_dim, int class_count, std::uint64_t seed) {
  BiLstmParams p = zeros(input_dim, hidden_dim, class_count);
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  auto fill = [&](MatrixXd& m) {
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
  };
  for (auto* dir : {&p.fwd, &p.bwd}) {
    fill(dir->wx);
    fill(dir->wh);
    dir->b.block(hidden_dim, 0, hidden_dim, 1).setOnes();
  }
  fill(p.fc_w);
  return p;
}

std::array<MatrixXd*, 8> BiLstmParams::tensors() {
  return {&fwd.wx, &fwd.wh, &fwd.b, &bwd.wx, &bwd.wh, &bwd.b, &fc_w, &fc_b};
}

std::array<const MatrixXd*, 8> BiLstmParams::tensors() const {
  return {&fwd.wx, &fwd.wh, &fwd.b, &bwd.wx, &bwd.wh, &bwd.b, &fc_w, &fc_b};
}

bool BiLstmParams::operator==(const BiLstmParams& o) const {
  if (input_dim != o.input_dim || hidden_dim != o.hidden_dim || class_count != o.class_count) return false;
  const auto a = tensors();
  const auto b = o.tensors();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols() || *a[i] != *b[i]) return false;
  return true;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (epochs < 0) throw InvalidArgument("epochs must be nonnegative");
  if (batch_size < 1) throw InvalidArgument("batch_size must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidArgument("dropout_rate must be in [0,1)");
  if (!(gradient_clip_norm > 0.0)) throw InvalidArgument("gradient_clip_norm must be positive");
  if (hidden_dim < 1) throw InvalidArgument("hidden_dim must be positive");
}

int ScoreVector::argmax() const {
  int best = 0;
  for (Index i = 1; i < probabilities.size(); ++i)
    if (probabilities(i) > probabilities(best)) best = static_cast<int>(i);
  return best;
}

namespace {

/// Runs one direction; `reverse` walks the sequence from the last row.
void run_direction(const LstmWeights& w, const MatrixXd& seq, bool reverse, int h, DirectionCache& cache) {
  const Index t_len = seq.rows();
  const MatrixXd input_proj = w.wx * seq.transpose();  // 4H x T, time order
  cache.gates.resize(4 * h, t_len);
  cache.cells.resize(h, t_len);
  cache.hidden.resize(h, t_len);
  VectorXd a(4 * h);
  VectorXd h_prev = VectorXd::Zero(h), c_prev = VectorXd::Zero(h);
  for (Index k = 0; k < t_len; ++k) {
    const Index t = reverse ? t_len - 1 - k : k;
    a.noalias() = input_proj.col(t) + w.b.col(0);
    a.noalias() += w.wh * h_prev;
    for (Index i = 0; i < h; ++i) {
      a(i) = sigmoid(a(i));
      a(h + i) = sigmoid(a(h + i));
      a(2 * h + i) = std::tanh(a(2 * h + i));
      a(3 * h + i) = sigmoid(a(3 * h + i));
    }
    for (Index i = 0; i < h; ++i) {
      const double c = a(h + i) * c_prev(i) + a(i) * a(2 * h + i);
      cache.cells(i, k) = c;
      cache.hidden(i, k) = a(3 * h + i) * std::tanh(c);
    }
    cache.gates.col(k) = a;
    h_prev = cache.hidden.col(k);
    c_prev = cache.cells.col(k);
  }
}

void softmax_into(const VectorXd& logits, VectorXd& probs) {
  const double m = logits.maxCoeff();
  probs = (logits.array() - m).exp();
  probs /= probs.sum();
}

/// Backpropagation through one direction given dL/dh at the final step.
void backprop_direction(const LstmWeights& w, const MatrixXd& seq, bool reverse, int h,
                        const DirectionCache& cache, const VectorXd& dh_final, LstmWeights& grad) {
  const Index t_len = seq.rows();
  MatrixXd da(4 * h, t_len);
  VectorXd dh = dh_final, dc = VectorXd::Zero(h);
  for (Index k = t_len - 1; k >= 0; --k) {
    for (Index i = 0; i < h; ++i) {
      const double ig = cache.gates(i, k), fg = cache.gates(h + i, k);
      const double gg = cache.gates(2 * h + i, k), og = cache.gates(3 * h + i, k);
      const double c = cache.cells(i, k);
      const double c_prev = k > 0 ? cache.cells(i, k - 1) : 0.0;
      const double tc = std::tanh(c);
      const double dct = dc(i) + dh(i) * og * (1.0 - tc * tc);
      da(i, k) = dct * gg * ig * (1.0 - ig);
      da(h + i, k) = dct * c_prev * fg * (1.0 - fg);
      da(2 * h + i, k) = dct * ig * (1.0 - gg * gg);
      da(3 * h + i, k) = dh(i) * tc * og * (1.0 - og);
      dc(i) = dct * fg;
    }
    dh.noalias() = w.wh.transpose() * da.col(k);
  }
  // Inputs and previous hidden states arranged in processing order.
  MatrixXd x_ord(t_len, seq.cols());
  MatrixXd h_prev(t_len, h);
  for (Index k = 0; k < t_len; ++k) {
    x_ord.row(k) = seq.row(reverse ? t_len - 1 - k : k);
    if (k == 0) h_prev.row(k).setZero();
    else h_prev.row(k) = cache.hidden.col(k - 1).transpose();
  }
  grad.wx.noalias() += da * x_ord;
  grad.wh.noalias() += da * h_prev;
  grad.b.col(0) += da.rowwise().sum();
}

void check_sequence(const BiLstmParams& params, const MatrixXd& sequence) {
  if (sequence.rows() < 1) throw ShapeMismatch("sequence must have at least one frame");
  if (sequence.cols() != params.input_dim)
    throw ShapeMismatch("sequence width " + std::to_string(sequence.cols()) + " != input_dim " +
                        std::to_string(params.input_dim));
}

}  // namespace

ForwardResult forward(const BiLstmParams& params, const MatrixXd& sequence, Mode mode, Rng* rng,
                      double dropout_rate) {
  check_sequence(params, sequence);
  const int h = params.hidden_dim;
  ForwardResult r;
  run_direction(params.fwd, sequence, false, h, r.fwd);
  run_direction(params.bwd, sequence, true, h, r.bwd);
  const Index last = sequence.rows() - 1;
  r.representation.resize(2 * h);
  r.representation.head(h) = r.fwd.hidden.col(last);
  r.representation.tail(h) = r.bwd.hidden.col(last);
  r.dropout_mask = VectorXd::Ones(2 * h);
  if (mode == Mode::train && dropout_rate > 0.0) {
    if (!rng) throw InvalidArgument("train-mode dropout needs an rng");
    const double keep_scale = 1.0 / (1.0 - dropout_rate);
    for (Index i = 0; i < 2 * h; ++i) r.dropout_mask(i) = rng->uniform01() < dropout_rate ? 0.0 : keep_scale;
    r.representation.array() *= r.dropout_mask.array();
  }
  r.logits = params.fc_w * r.representation + params.fc_b.col(0);
  softmax_into(r.logits, r.scores.probabilities);
  return r;
}

ScoreVector predict_scores(const BiLstmParams& params, const MatrixXd& sequence) {
  return forward(params, sequence, Mode::infer).scores;
}

LossAndGradients loss_and_gradients(const BiLstmParams& params, std::span<const LabeledSequence> batch,
                                    const TrainConfig& cfg, Rng& rng) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  const int h = params.hidden_dim;
  LossAndGradients out;
  out.gradients = BiLstmParams::zeros(params.input_dim, h, params.class_count);
  auto& g = out.gradients;
  for (const auto& ex : batch) {
    if (ex.label < 0 || ex.label >= params.class_count) throw ShapeMismatch("label out of range");
    const auto fr = forward(params, ex.features, Mode::train, &rng, cfg.dropout_rate);
    out.loss -= std::log(std::max(fr.scores.probabilities(ex.label), std::numeric_limits<double>::min()));
    VectorXd dlogits = fr.scores.probabilities;
    dlogits(ex.label) -= 1.0;
    g.fc_w.noalias() += dlogits * fr.representation.transpose();
    g.fc_b.col(0) += dlogits;
    const VectorXd drep = (params.fc_w.transpose() * dlogits).cwiseProduct(fr.dropout_mask);
    backprop_direction(params.fwd, ex.features, false, h, fr.fwd, drep.head(h), g.fwd);
    backprop_direction(params.bwd, ex.features, true, h, fr.bwd, drep.tail(h), g.bwd);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  double sq = 0.0;
  for (auto* t : g.tensors()) {
    *t *= inv;
    sq += t->squaredNorm();
  }
  out.gradient_norm = std::sqrt(sq);
  if (out.gradient_norm > cfg.gradient_clip_norm) {
    const double s = cfg.gradient_clip_norm / out.gradient_norm;
    for (auto* t : g.tensors()) *t *= s;
  }
  return out;
}

TrainResult train(std::span<const LabeledSequence> dataset, const TrainConfig& cfg, int class_count) {
  cfg.validate();
  if (dataset.empty()) throw DegenerateDataset("training set is empty");
  std::set<int> labels;
  for (const auto& ex : dataset) labels.insert(ex.label);
  if (labels.size() < 2) throw DegenerateDataset("training set has fewer than 2 classes");
  const auto d = static_cast<int>(dataset.front().features.cols());
  for (const auto& ex : dataset)
    if (ex.features.cols() != d) throw ShapeMismatch("training sequences differ in width");

  TrainResult result;
  result.params = BiLstmParams::initialize(d, cfg.hidden_dim, class_count, derive_seed(cfg.seed, {1}));
  Rng rng(derive_seed(cfg.seed, {2}));
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<LabeledSequence> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (auto i = start; i < end; ++i) batch.push_back(dataset[order[i]]);
      const auto lg = loss_and_gradients(result.params, batch, cfg, rng);
      total += lg.loss * static_cast<double>(batch.size());
      const auto gt = lg.gradients.tensors();
      const auto pt = result.params.tensors();
      for (std::size_t k = 0; k < pt.size(); ++k) *pt[k] -= cfg.learning_rate * *gt[k];
    }
    result.epoch_loss.push_back(total / static_cast<double>(dataset.size()));
  }
  return result;
}

// --- checkpoints ----------------------------------------------------------

std::string format_checkpoint(const BiLstmParams& params) {
  std::string out = "tensor,rows,cols,values\n";
  out += "meta,1,3," + std::to_string(params.input_dim) + "," + std::to_string(params.hidden_dim) + "," +
         std::to_string(params.class_count) + "\n";
  const auto ts = params.tensors();
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const auto& m = *ts[k];
    out += std::string(BiLstmParams::kTensorNames[k]) + "," + std::to_string(m.rows()) + "," +
           std::to_string(m.cols());
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) out += "," + format_double(m(i, j));
    out += '\n';
  }
  return out;
}

BiLstmParams parse_checkpoint(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line) || trim(line) != "tensor,rows,cols,values")
    throw MalformedFile(source + ":1: missing checkpoint header");
  auto ctx = [&] { return source + ":" + std::to_string(line_no); };
  ++line_no;
  if (!std::getline(in, line)) throw MalformedFile(ctx() + ": missing meta line");
  auto f = split(trim(line), ',');
  if (f.size() != 6 || f[0] != "meta") throw MalformedFile(ctx() + ": bad meta line");
  BiLstmParams p = BiLstmParams::zeros(static_cast<int>(parse_int(f[3], ctx())),
                                       static_cast<int>(parse_int(f[4], ctx())),
                                       static_cast<int>(parse_int(f[5], ctx())));
  auto ts = p.tensors();
  for (std::size_t k = 0; k < ts.size(); ++k) {
    ++line_no;
    if (!std::getline(in, line)) throw MalformedFile(ctx() + ": missing tensor");
    f = split(trim(line), ',');
    if (f.size() < 3 || f[0] != BiLstmParams::kTensorNames[k])
      throw MalformedFile(ctx() + ": expected tensor " + BiLstmParams::kTensorNames[k]);
    auto& m = *ts[k];
    if (parse_int(f[1], ctx()) != m.rows() || parse_int(f[2], ctx()) != m.cols() ||
        static_cast<Index>(f.size()) != 3 + m.size())
      throw MalformedFile(ctx() + ": tensor shape mismatch");
    std::size_t pos = 3;
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j) m(i, j) = parse_double(f[pos++], ctx());
  }
  return p;
}

void save_checkpoint(const BiLstmParams& params, const std::filesystem::path& path) {
  write_file_atomic(path, format_checkpoint(params));
}

BiLstmParams load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path), path.string());
}

void save_training_log(std::span<const double> epoch_loss, const std::filesystem::path& path) {
  std::string out = "epoch,loss\n";
  for (std::size_t i = 0; i < epoch_loss.size(); ++i)
    out += std::to_string(i + 1) + "," + format_double(epoch_loss[i]) + "\n";
  write_file_atomic(path, out);
}

}  // namespace sparse4d
