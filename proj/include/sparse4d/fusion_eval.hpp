#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sparse4d/geometry.hpp"
#include "sparse4d/sequence_model.hpp"
#include "sparse4d/sparse_codec.hpp"

namespace sparse4d {

enum class Stream : int { sparse = 0, dense = 1, toplandmarks = 2 };
inline constexpr std::array<Stream, 3> kAllStreams = {Stream::sparse, Stream::dense, Stream::toplandmarks};
const char* stream_name(Stream s);

/// Nonnegative weight per (view, stream), indexed [view][stream].
struct FusionConfig {
  std::array<std::array<double, 3>, 3> weights{{{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}};

  double weight(View v, Stream s) const {
    return weights[static_cast<std::size_t>(v)][static_cast<std::size_t>(s)];
  }
  void validate() const;
};

/// Weighted arithmetic mean of probability vectors, renormalized.
ScoreVector fuse_scores(std::span<const std::pair<ScoreVector, double>> scores);

/// Seeded shuffle, then round-robin assignment of subjects to k folds.
std::vector<std::vector<std::string>> subject_kfold_split(std::vector<std::string> subjects, int k,
                                                          std::uint64_t seed);

struct EvalReport {
  double accuracy = 0.0;
  Eigen::Matrix<long long, kExpressionCount, kExpressionCount> confusion =
      Eigen::Matrix<long long, kExpressionCount, kExpressionCount>::Zero();  // rows true, cols predicted
  std::vector<double> fold_accuracy;

  long long total() const { return confusion.sum(); }
};

/// Tallies (true, predicted) pairs.
EvalReport confusion_and_accuracy(std::span<const std::pair<int, int>> pairs);

// --- cross-validation ---------------------------------------------------------

/// Raw per-frame inputs of one (view, stream) for one sequence. Variant 0 is
/// the unaugmented sequence; further variants are augmented copies used only
/// for training.
struct StreamSamples {
  std::vector<Eigen::MatrixXd> frames;           // dense and landmark streams: T x D per variant
  std::vector<std::vector<SparseCode>> codes;    // sparse stream: per variant, per frame

  std::size_t variant_count() const { return frames.empty() ? codes.size() : frames.size(); }
  bool empty() const { return variant_count() == 0; }
};

struct SequenceRecord {
  std::string id;
  std::string subject;
  int label = 0;
  std::array<std::array<StreamSamples, 3>, 3> streams;  // [view][stream]

  const StreamSamples& at(View v, Stream s) const {
    return streams[static_cast<std::size_t>(v)][static_cast<std::size_t>(s)];
  }
  StreamSamples& at(View v, Stream s) {
    return streams[static_cast<std::size_t>(v)][static_cast<std::size_t>(s)];
  }
};

/// Fold-local reduction and standardization of a stream, fitted on the
/// training fold only.
struct StreamTransform {
  bool from_codes = false;
  std::vector<int> columns;  // selected coordinates (dense) or atoms (sparse); empty keeps all
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  Eigen::MatrixXd apply(const StreamSamples& samples, std::size_t variant) const;
};

std::string format_transform(const StreamTransform& t);
StreamTransform parse_transform(const std::string& text, const std::string& source);

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ScoreVector predict(const Eigen::MatrixXd& sequence) const = 0;
};

class ClassifierFactory {
 public:
  virtual ~ClassifierFactory() = default;
  virtual std::unique_ptr<Classifier> fit(std::span<const LabeledSequence> train, std::uint64_t seed) const = 0;
};

class BiLstmClassifier : public Classifier {
 public:
  explicit BiLstmClassifier(BiLstmParams params, std::vector<double> loss_log = {})
      : params_(std::move(params)), loss_log_(std::move(loss_log)) {}
  ScoreVector predict(const Eigen::MatrixXd& sequence) const override { return predict_scores(params_, sequence); }
  const BiLstmParams& params() const { return params_; }
  const std::vector<double>& loss_log() const { return loss_log_; }

 private:
  BiLstmParams params_;
  std::vector<double> loss_log_;
};

class BiLstmFactory : public ClassifierFactory {
 public:
  explicit BiLstmFactory(TrainConfig cfg) : cfg_(cfg) {}
  std::unique_ptr<Classifier> fit(std::span<const LabeledSequence> train, std::uint64_t seed) const override;

 private:
  TrainConfig cfg_;
};

struct Ablation {
  std::string name;
  bool sparse = false;
  bool dense = false;
  bool toplandmarks = false;

  bool uses(Stream s) const;
};

/// dense, sparse, dense+topl, sparse+topl.
std::vector<Ablation> ablation_grid();
/// Accepts one grid name or "all".
std::vector<Ablation> parse_ablations(const std::string& selector);

struct CvConfig {
  int folds = 10;
  std::uint64_t seed = 0;
  int feature_count = kSparseFeatureCount;
  std::vector<Ablation> ablations = ablation_grid();
  FusionConfig fusion;
  int jobs = 1;
};

struct ModelKey {
  View view;
  Stream stream;
  auto operator<=>(const ModelKey&) const = default;
};

/// (view, stream) pairs that some ablation needs with a positive weight.
std::vector<ModelKey> required_models(const CvConfig& cfg);

/// Counts reads of sequence records by subject during fold fitting.
class AccessAudit {
 public:
  void record(const std::string& subject) { ++reads_[subject]; }
  long long reads_of(std::span<const std::string> subjects) const;
  long long total() const;

 private:
  std::map<std::string, long long> reads_;
};

struct FittedStream {
  StreamTransform transform;
  std::shared_ptr<const Classifier> model;
};

struct FoldFit {
  std::map<ModelKey, FittedStream> models;
};

StreamTransform fit_transform(std::span<const SequenceRecord* const> train, View view, Stream stream,
                              int feature_count);

/// Fits every required model on the given training records.
FoldFit fit_fold(std::span<const SequenceRecord> records, std::span<const std::size_t> train_idx,
                 const CvConfig& cfg, const ClassifierFactory& factory, int fold, AccessAudit* audit = nullptr);

/// Scores of each required model on variant 0 of each test record.
std::vector<std::map<ModelKey, ScoreVector>> predict_fold(const FoldFit& fit, std::span<const SequenceRecord> records,
                                                          std::span<const std::size_t> test_idx);

/// Fused argmax for one ablation.
int fused_prediction(const std::map<ModelKey, ScoreVector>& scores, const Ablation& ablation,
                     const FusionConfig& fusion);

struct FoldAssignment {
  std::vector<std::vector<std::string>> subjects;  // per fold
  std::vector<std::vector<std::size_t>> test;      // record indices per fold
  std::vector<std::vector<std::size_t>> train;
};

FoldAssignment assign_folds(std::span<const SequenceRecord> records, int folds, std::uint64_t seed);

struct CvResult {
  FoldAssignment folds;
  std::map<std::string, EvalReport> reports;  // keyed by ablation name
  std::vector<long long> leakage;             // test-subject reads during fitting, per fold
  std::vector<int> test_count;                // times each record was tested
};

/// Assembles reports from per-fold predictions (shared by the in-memory and
/// staged paths).
CvResult assemble_reports(std::span<const SequenceRecord> records, const FoldAssignment& folds,
                          const std::vector<std::vector<std::map<ModelKey, ScoreVector>>>& fold_scores,
                          const CvConfig& cfg);

CvResult run_cv(std::span<const SequenceRecord> records, const CvConfig& cfg, const ClassifierFactory& factory);

// --- report files -----------------------------------------------------------

std::string format_confusion_csv(const EvalReport& report);
std::string format_summary(const std::string& name, const EvalReport& report);
/// Rows in ablation order: `config,fold_0..fold_{k-1},mean`.
std::string format_ablation_csv(const std::vector<Ablation>& ablations,
                                const std::map<std::string, EvalReport>& reports, int folds);
void write_reports(const CvResult& result, const CvConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace sparse4d
