#include <cmath>
#include <vector>

#include "doctest.h"
#include "sparse4d/error.hpp"
#include "sparse4d/sequence_model.hpp"
#include "test_util.hpp"

#include "fixtures/lstm_tiny.inc"

using namespace sparse4d;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd from_rows(const std::vector<std::vector<double>>& rows) {
  MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

BiLstmParams tiny_network() {
  BiLstmParams p = BiLstmParams::zeros(2, 2, 6);
  p.fwd = {from_rows(k_fwd_wx), from_rows(k_fwd_wh), from_rows(k_fwd_b)};
  p.bwd = {from_rows(k_bwd_wx), from_rows(k_bwd_wh), from_rows(k_bwd_b)};
  p.fc_w = from_rows(k_fc_w);
  p.fc_b = from_rows(k_fc_b);
  return p;
}

std::vector<LabeledSequence> toy_dataset(Rng& rng, int n, int d, int t, int classes) {
  std::vector<LabeledSequence> out;
  for (int i = 0; i < n; ++i) {
    LabeledSequence ex;
    ex.label = i % classes;
    ex.features = 0.3 * test::random_matrix(rng, t, d);
    ex.features.col(ex.label % d).array() += 1.0;
    out.push_back(std::move(ex));
  }
  return out;
}

TrainConfig exact_gradient_config() {
  TrainConfig cfg;
  cfg.dropout_rate = 0.0;
  cfg.gradient_clip_norm = 1e300;
  return cfg;
}

}  // namespace

TEST_CASE("zero network gives uniform scores") {
  const auto p = BiLstmParams::zeros(3, 4);
  Rng rng(1);
  const auto s = predict_scores(p, test::random_matrix(rng, 5, 3));
  for (int c = 0; c < 6; ++c) CHECK(s.probabilities(c) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(s.argmax() == 0);
}

TEST_CASE("inference is repeatable") {
  const auto p = BiLstmParams::initialize(4, 3, 6, 9);
  Rng rng(2);
  const MatrixXd x = test::random_matrix(rng, 5, 4);
  const auto a = forward(p, x, Mode::infer);
  const auto b = forward(p, x, Mode::infer);
  CHECK(a.logits == b.logits);
  CHECK(a.dropout_mask == VectorXd::Ones(6));
  CHECK(std::abs(a.scores.probabilities.sum() - 1.0) < 1e-9);
}

TEST_CASE("tiny network logits") {
  const auto p = tiny_network();
  const auto r = forward(p, from_rows(k_input), Mode::infer);
  REQUIRE(r.logits.size() == 6);
  for (int c = 0; c < 6; ++c) CHECK(std::abs(r.logits(c) - k_logits[static_cast<std::size_t>(c)]) < 1e-12);
}

TEST_CASE("shape errors") {
  const auto p = BiLstmParams::zeros(3, 2);
  CHECK_THROWS_AS(predict_scores(p, MatrixXd::Zero(4, 2)), ShapeMismatch);
  CHECK_THROWS_AS(predict_scores(p, MatrixXd::Zero(0, 3)), ShapeMismatch);
  Rng rng(3);
  const std::vector<LabeledSequence> bad = {{MatrixXd::Zero(2, 3), 6}};
  CHECK_THROWS_AS(loss_and_gradients(p, bad, TrainConfig{}, rng), ShapeMismatch);
}

TEST_CASE("uniform predictions give ln 6") {
  const auto p = BiLstmParams::zeros(2, 3);
  Rng rng(4);
  const std::vector<LabeledSequence> batch = {{MatrixXd::Ones(3, 2), 2}, {MatrixXd::Zero(1, 2), 5}};
  CHECK(std::abs(loss_and_gradients(p, batch, exact_gradient_config(), rng).loss - std::log(6.0)) < 1e-12);
}

TEST_CASE("duplicated example keeps the loss") {
  const auto p = BiLstmParams::initialize(3, 4, 6, 5);
  Rng data(5);
  const LabeledSequence ex{test::random_matrix(data, 4, 3), 3};
  Rng r1(0), r2(0);
  const std::vector<LabeledSequence> one = {ex};
  const std::vector<LabeledSequence> two = {ex, ex};
  const auto a = loss_and_gradients(p, one, exact_gradient_config(), r1);
  const auto b = loss_and_gradients(p, two, exact_gradient_config(), r2);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));
}

TEST_CASE("gradients match finite differences") {
  Rng rng(6);
  int checked = 0;
  for (int net = 0; net < 4; ++net) {
    const int d = 2 + net % 3, h = 2 + (net + 1) % 3, t = 2 + net;
    auto p = BiLstmParams::initialize(d, h, 6, 100 + static_cast<std::uint64_t>(net));
    for (auto* tensor : p.tensors()) *tensor += 0.3 * test::random_matrix(rng, tensor->rows(), tensor->cols());
    const auto batch = toy_dataset(rng, 3, d, t, 6);
    const auto cfg = exact_gradient_config();
    Rng unused(0);
    const auto g = loss_and_gradients(p, batch, cfg, unused);
    const auto grads = g.gradients.tensors();
    auto tensors = p.tensors();
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      for (int sample = 0; sample < 4; ++sample) {
        auto& m = *tensors[k];
        const auto i = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(m.size())));
        const double orig = m.data()[i];
        const double eps = 1e-5;
        m.data()[i] = orig + eps;
        const double up = loss_and_gradients(p, batch, cfg, unused).loss;
        m.data()[i] = orig - eps;
        const double down = loss_and_gradients(p, batch, cfg, unused).loss;
        m.data()[i] = orig;
        const double numeric = (up - down) / (2 * eps);
        const double analytic = grads[k]->data()[i];
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
        CHECK(std::abs(numeric - analytic) / scale < 1e-4);
        ++checked;
      }
    }
  }
  CHECK(checked >= 100);
}

TEST_CASE("gradient clipping") {
  const auto p = BiLstmParams::initialize(3, 3, 6, 7);
  Rng data(7);
  const auto batch = toy_dataset(data, 4, 3, 3, 6);
  TrainConfig cfg = exact_gradient_config();
  cfg.gradient_clip_norm = 1e-3;
  Rng rng(0);
  const auto g = loss_and_gradients(p, batch, cfg, rng);
  double sq = 0.0;
  for (const auto* t : g.gradients.tensors()) sq += t->squaredNorm();
  CHECK(g.gradient_norm > 1e-3);
  CHECK(std::sqrt(sq) == doctest::Approx(1e-3));
}

TEST_CASE("training reduces the loss") {
  Rng data(8);
  const auto set = toy_dataset(data, 20, 3, 4, 3);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.hidden_dim = 8;
  cfg.dropout_rate = 0.0;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.1;
  cfg.seed = 3;
  const auto r = train(set, cfg, 3);
  REQUIRE(r.epoch_loss.size() == 50);
  CHECK(r.epoch_loss.back() <= 0.5 * r.epoch_loss.front());

  const auto again = train(set, cfg, 3);
  CHECK(again.params == r.params);
  CHECK(again.epoch_loss == r.epoch_loss);
}

TEST_CASE("zero epochs returns the initialization") {
  Rng data(9);
  const auto set = toy_dataset(data, 6, 2, 3, 2);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.hidden_dim = 4;
  cfg.seed = 17;
  const auto r = train(set, cfg, 2);
  CHECK(r.params == BiLstmParams::initialize(2, 4, 2, derive_seed(17, {1})));
  CHECK(r.epoch_loss.empty());
}

TEST_CASE("degenerate training sets") {
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(train(std::vector<LabeledSequence>{}, cfg), DegenerateDataset);
  const std::vector<LabeledSequence> one_class = {{MatrixXd::Ones(2, 2), 1}, {MatrixXd::Zero(2, 2), 1}};
  CHECK_THROWS_AS(train(one_class, cfg), DegenerateDataset);
  cfg.dropout_rate = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("inverted dropout preserves the mean") {
  const auto p = BiLstmParams::initialize(3, 4, 6, 10);
  Rng data(10);
  const MatrixXd x = test::random_matrix(data, 4, 3);
  const VectorXd clean = forward(p, x, Mode::infer).representation;
  VectorXd sum = VectorXd::Zero(clean.size());
  Rng rng(11);
  constexpr int n = 10000;
  for (int i = 0; i < n; ++i) sum += forward(p, x, Mode::train, &rng, 0.5).representation;
  CHECK((sum / n - clean).norm() / clean.norm() < 0.02);
}

TEST_CASE("direction symmetry") {
  auto p = BiLstmParams::initialize(3, 4, 6, 12);
  Rng data(12);
  for (auto* tensor : p.tensors()) *tensor += 0.2 * test::random_matrix(data, tensor->rows(), tensor->cols());
  const MatrixXd x = test::random_matrix(data, 5, 3);

  BiLstmParams q = p;
  std::swap(q.fwd, q.bwd);
  q.fc_w.leftCols(4) = p.fc_w.rightCols(4);
  q.fc_w.rightCols(4) = p.fc_w.leftCols(4);
  const MatrixXd reversed = x.colwise().reverse();

  const auto a = forward(p, x, Mode::infer);
  const auto b = forward(q, reversed, Mode::infer);
  CHECK((a.representation.head(4) - b.representation.tail(4)).norm() < 1e-14);
  CHECK((a.representation.tail(4) - b.representation.head(4)).norm() < 1e-14);
  CHECK((a.logits - b.logits).norm() < 1e-12);
}

TEST_CASE("checkpoint round trip") {
  const auto dir = test::scratch("checkpoint");
  auto p = BiLstmParams::initialize(5, 3, 6, 13);
  p.fc_b(2) = 1.0 / 3.0;
  save_checkpoint(p, dir / "m.ckpt");
  CHECK(load_checkpoint(dir / "m.ckpt") == p);
  CHECK_THROWS_AS(parse_checkpoint("garbage\n", "x"), MalformedFile);
}
