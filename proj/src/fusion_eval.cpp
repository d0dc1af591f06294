#include "sparse4d/fusion_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "sparse4d/error.hpp"
#include "sparse4d/parallel.hpp"
#include "sparse4d/random.hpp"
#include "sparse4d/table_io.hpp"

namespace sparse4d {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* stream_name(Stream s) {
  switch (s) {
    case Stream::sparse: return "sparse";
    case Stream::dense: return "dense";
    case Stream::toplandmarks: return "toplandmarks";
  }
  return "?";
}

void FusionConfig::validate() const {
  bool any = false;
  for (const auto& row : weights)
    for (double w : row) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("fusion weights must be finite and nonnegative");
      any = any || w > 0.0;
    }
  if (!any) throw AllZeroWeights("all fusion weights are zero");
}

ScoreVector fuse_scores(std::span<const std::pair<ScoreVector, double>> scores) {
  if (scores.empty()) throw InvalidArgument("nothing to fuse");
  double total = 0.0;
  for (const auto& [s, w] : scores) {
    if (!(w >= 0.0)) throw InvalidArgument("fusion weights must be nonnegative");
    if (s.probabilities.size() != scores.front().first.probabilities.size())
      throw ShapeMismatch("score vectors differ in length");
    total += w;
  }
  if (!(total > 0.0)) throw AllZeroWeights("all fusion weights are zero");
  VectorXd acc = VectorXd::Zero(scores.front().first.probabilities.size());
  for (const auto& [s, w] : scores) acc += (w / total) * s.probabilities;
  return ScoreVector{acc / acc.sum()};
}

std::vector<std::vector<std::string>> subject_kfold_split(std::vector<std::string> subjects, int k,
                                                          std::uint64_t seed) {
  std::vector<std::string> unique;
  std::set<std::string> seen;
  for (auto& s : subjects)
    if (seen.insert(s).second) unique.push_back(std::move(s));
  if (k < 2 || static_cast<int>(unique.size()) < k)
    throw TooFewSubjects("need at least k >= 2 distinct subjects for k-fold split");
  Rng rng(seed);
  rng.shuffle(unique);
  std::vector<std::vector<std::string>> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < unique.size(); ++i) folds[i % static_cast<std::size_t>(k)].push_back(unique[i]);
  return folds;
}

EvalReport confusion_and_accuracy(std::span<const std::pair<int, int>> pairs) {
  if (pairs.empty()) throw InvalidArgument("no predictions to tally");
  EvalReport r;
  for (const auto& [t, p] : pairs) {
    if (t < 0 || t >= kExpressionCount || p < 0 || p >= kExpressionCount)
      throw InvalidArgument("class index out of range");
    ++r.confusion(t, p);
  }
  r.accuracy = static_cast<double>(r.confusion.trace()) / static_cast<double>(r.total());
  return r;
}

// --- stream transforms ------------------------------------------------------

MatrixXd StreamTransform::apply(const StreamSamples& samples, std::size_t variant) const {
  MatrixXd x;
  if (from_codes) {
    const auto& frames = samples.codes.at(variant);
    x.resize(static_cast<Index>(frames.size()), static_cast<Index>(columns.size()));
    for (std::size_t t = 0; t < frames.size(); ++t)
      x.row(static_cast<Index>(t)) = reduce_to_sparse_feature(frames[t], columns).transpose();
  } else {
    const auto& raw = samples.frames.at(variant);
    if (columns.empty()) {
      x = raw;
    } else {
      x.resize(raw.rows(), static_cast<Index>(columns.size()));
      for (std::size_t c = 0; c < columns.size(); ++c) x.col(static_cast<Index>(c)) = raw.col(columns[c]);
    }
  }
  if (x.cols() != mean.size()) throw ShapeMismatch("stream width does not match its transform");
  for (Index r = 0; r < x.rows(); ++r) x.row(r) = (x.row(r) - mean.transpose()).cwiseProduct(scale.transpose());
  return x;
}

std::string format_transform(const StreamTransform& t) {
  std::string out = std::string("source,") + (t.from_codes ? "codes" : "frames") + "\n";
  out += "columns";
  for (int c : t.columns) out += "," + std::to_string(c);
  out += "\nmean";
  for (Index i = 0; i < t.mean.size(); ++i) out += "," + format_double(t.mean(i));
  out += "\nscale";
  for (Index i = 0; i < t.scale.size(); ++i) out += "," + format_double(t.scale(i));
  out += "\n";
  return out;
}

StreamTransform parse_transform(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  StreamTransform t;
  auto next = [&](int line_no, const char* key) {
    if (!std::getline(in, line)) throw MalformedFile(source + ":" + std::to_string(line_no) + ": missing " + key);
    auto f = split(trim(line), ',');
    if (f.empty() || f[0] != key)
      throw MalformedFile(source + ":" + std::to_string(line_no) + ": expected " + key);
    f.erase(f.begin());
    if (f.size() == 1 && f[0].empty()) f.clear();
    return f;
  };
  const auto src = next(1, "source");
  if (src.size() != 1 || (src[0] != "codes" && src[0] != "frames"))
    throw MalformedFile(source + ":1: bad source");
  t.from_codes = src[0] == "codes";
  for (const auto& c : next(2, "columns")) t.columns.push_back(static_cast<int>(parse_int(c, source + ":2")));
  const auto m = next(3, "mean");
  const auto s = next(4, "scale");
  if (m.size() != s.size()) throw MalformedFile(source + ": mean/scale length mismatch");
  t.mean.resize(static_cast<Index>(m.size()));
  t.scale.resize(static_cast<Index>(s.size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    t.mean(static_cast<Index>(i)) = parse_double(m[i], source + ":3");
    t.scale(static_cast<Index>(i)) = parse_double(s[i], source + ":4");
  }
  return t;
}

namespace {

void standardize_from(const std::vector<MatrixXd>& blocks, StreamTransform& t) {
  Index cols = blocks.empty() ? 0 : blocks.front().cols();
  VectorXd sum = VectorXd::Zero(cols);
  double n = 0.0;
  for (const auto& b : blocks) {
    sum += b.colwise().sum().transpose();
    n += static_cast<double>(b.rows());
  }
  t.mean = sum / std::max(n, 1.0);
  VectorXd var = VectorXd::Zero(cols);
  for (const auto& b : blocks)
    for (Index r = 0; r < b.rows(); ++r) var += (b.row(r).transpose() - t.mean).cwiseAbs2();
  var /= std::max(n, 1.0);
  t.scale.resize(cols);
  for (Index c = 0; c < cols; ++c) t.scale(c) = var(c) > 1e-24 ? 1.0 / std::sqrt(var(c)) : 1.0;
}

}  // namespace

StreamTransform fit_transform(std::span<const SequenceRecord* const> train, View view, Stream stream,
                              int feature_count) {
  if (train.empty()) throw EmptyCalibrationSet("no training records for transform");
  StreamTransform t;
  t.from_codes = stream == Stream::sparse;
  if (stream == Stream::sparse) {
    std::vector<SparseCode> codes;
    for (const auto* r : train)
      for (const auto& variant : r->at(view, stream).codes)
        codes.insert(codes.end(), variant.begin(), variant.end());
    const auto q = codes.empty() ? 0 : static_cast<int>(codes.front().size());
    t.columns = calibrate_index_set(codes, std::min(feature_count, q));
  } else if (stream == Stream::dense) {
    std::vector<const MatrixXd*> blocks;
    for (const auto* r : train)
      for (const auto& v : r->at(view, stream).frames) blocks.push_back(&v);
    if (blocks.empty()) throw EmptyCalibrationSet("no dense frames");
    const Index d = blocks.front()->cols();
    VectorXd sum = VectorXd::Zero(d);
    double n = 0.0;
    for (const auto* b : blocks) {
      sum += b->colwise().sum().transpose();
      n += static_cast<double>(b->rows());
    }
    const VectorXd mean = sum / n;
    VectorXd var = VectorXd::Zero(d);
    for (const auto* b : blocks)
      for (Index r = 0; r < b->rows(); ++r) var += (b->row(r).transpose() - mean).cwiseAbs2();
    std::vector<int> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return var(a) > var(b); });
    order.resize(static_cast<std::size_t>(std::min<Index>(feature_count, d)));
    t.columns = std::move(order);
  }
  // Standardization statistics over the reduced training frames.
  t.mean = VectorXd::Zero(0);
  StreamTransform identity = t;
  const Index width = stream == Stream::toplandmarks
                          ? train.front()->at(view, stream).frames.at(0).cols()
                          : static_cast<Index>(t.columns.size());
  identity.mean = VectorXd::Zero(width);
  identity.scale = VectorXd::Ones(width);
  std::vector<MatrixXd> reduced;
  for (const auto* r : train) {
    const auto& s = r->at(view, stream);
    for (std::size_t v = 0; v < s.variant_count(); ++v) reduced.push_back(identity.apply(s, v));
  }
  standardize_from(reduced, t);
  return t;
}

// --- classifiers ----------------------------------------------------------

std::unique_ptr<Classifier> BiLstmFactory::fit(std::span<const LabeledSequence> train_set,
                                               std::uint64_t seed) const {
  TrainConfig cfg = cfg_;
  cfg.seed = seed;
  auto result = sparse4d::train(train_set, cfg, kExpressionCount);
  return std::make_unique<BiLstmClassifier>(std::move(result.params), std::move(result.epoch_loss));
}

bool Ablation::uses(Stream s) const {
  switch (s) {
    case Stream::sparse: return sparse;
    case Stream::dense: return dense;
    case Stream::toplandmarks: return toplandmarks;
  }
  return false;
}

std::vector<Ablation> ablation_grid() {
  return {{"dense", false, true, false},
          {"sparse", true, false, false},
          {"dense+topl", false, true, true},
          {"sparse+topl", true, false, true}};
}

std::vector<Ablation> parse_ablations(const std::string& selector) {
  const auto grid = ablation_grid();
  if (selector == "all") return grid;
  for (const auto& a : grid)
    if (a.name == selector) return {a};
  throw ConfigError("unknown ablation '" + selector + "' (expected dense, sparse, dense+topl, sparse+topl or all)");
}

std::vector<ModelKey> required_models(const CvConfig& cfg) {
  std::set<ModelKey> keys;
  for (const auto& a : cfg.ablations)
    for (View v : kAllViews)
      for (Stream s : kAllStreams)
        if (a.uses(s) && cfg.fusion.weight(v, s) > 0.0) keys.insert({v, s});
  return {keys.begin(), keys.end()};
}

long long AccessAudit::reads_of(std::span<const std::string> subjects) const {
  long long n = 0;
  for (const auto& s : subjects)
    if (auto it = reads_.find(s); it != reads_.end()) n += it->second;
  return n;
}

long long AccessAudit::total() const {
  long long n = 0;
  for (const auto& [_, c] : reads_) n += c;
  return n;
}

namespace {

FittedStream fit_stream(std::span<const SequenceRecord> records, std::span<const std::size_t> train_idx,
                        const ModelKey& key, const CvConfig& cfg, const ClassifierFactory& factory, int fold,
                        AccessAudit* audit) {
  std::vector<const SequenceRecord*> train;
  train.reserve(train_idx.size());
  for (auto i : train_idx) {
    const auto& r = records[i];
    if (audit) audit->record(r.subject);
    if (r.at(key.view, key.stream).empty())
      throw InvalidArgument("record " + r.id + " lacks " + stream_name(key.stream) + " data");
    train.push_back(&r);
  }
  FittedStream fs;
  fs.transform = fit_transform(train, key.view, key.stream, cfg.feature_count);
  std::vector<LabeledSequence> samples;
  for (const auto* r : train) {
    const auto& s = r->at(key.view, key.stream);
    for (std::size_t v = 0; v < s.variant_count(); ++v) samples.push_back({fs.transform.apply(s, v), r->label});
  }
  const auto seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(fold), static_cast<std::uint64_t>(key.view),
                                           static_cast<std::uint64_t>(key.stream)});
  fs.model = factory.fit(samples, seed);
  return fs;
}

}  // namespace

FoldFit fit_fold(std::span<const SequenceRecord> records, std::span<const std::size_t> train_idx,
                 const CvConfig& cfg, const ClassifierFactory& factory, int fold, AccessAudit* audit) {
  FoldFit fit;
  for (const auto& key : required_models(cfg))
    fit.models[key] = fit_stream(records, train_idx, key, cfg, factory, fold, audit);
  return fit;
}

std::vector<std::map<ModelKey, ScoreVector>> predict_fold(const FoldFit& fit, std::span<const SequenceRecord> records,
                                                          std::span<const std::size_t> test_idx) {
  std::vector<std::map<ModelKey, ScoreVector>> out(test_idx.size());
  for (std::size_t i = 0; i < test_idx.size(); ++i) {
    const auto& r = records[test_idx[i]];
    for (const auto& [key, fs] : fit.models)
      out[i][key] = fs.model->predict(fs.transform.apply(r.at(key.view, key.stream), 0));
  }
  return out;
}

int fused_prediction(const std::map<ModelKey, ScoreVector>& scores, const Ablation& ablation,
                     const FusionConfig& fusion) {
  std::vector<std::pair<ScoreVector, double>> parts;
  for (const auto& [key, s] : scores) {
    const double w = fusion.weight(key.view, key.stream);
    if (ablation.uses(key.stream) && w > 0.0) parts.emplace_back(s, w);
  }
  if (parts.empty()) throw AllZeroWeights("ablation " + ablation.name + " has no weighted model");
  return fuse_scores(parts).argmax();
}

FoldAssignment assign_folds(std::span<const SequenceRecord> records, int folds, std::uint64_t seed) {
  std::vector<std::string> subjects;
  for (const auto& r : records) subjects.push_back(r.subject);
  FoldAssignment fa;
  fa.subjects = subject_kfold_split(subjects, folds, seed);
  std::map<std::string, std::size_t> fold_of;
  for (std::size_t f = 0; f < fa.subjects.size(); ++f)
    for (const auto& s : fa.subjects[f]) fold_of[s] = f;
  fa.test.resize(fa.subjects.size());
  fa.train.resize(fa.subjects.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto f = fold_of.at(records[i].subject);
    for (std::size_t g = 0; g < fa.subjects.size(); ++g) (g == f ? fa.test[g] : fa.train[g]).push_back(i);
  }
  return fa;
}

CvResult assemble_reports(std::span<const SequenceRecord> records, const FoldAssignment& folds,
                          const std::vector<std::vector<std::map<ModelKey, ScoreVector>>>& fold_scores,
                          const CvConfig& cfg) {
  CvResult result;
  result.folds = folds;
  result.test_count.assign(records.size(), 0);
  for (const auto& t : folds.test)
    for (auto i : t) ++result.test_count[i];
  for (const auto& ablation : cfg.ablations) {
    std::vector<std::pair<int, int>> all;
    std::vector<double> fold_acc;
    for (std::size_t f = 0; f < folds.test.size(); ++f) {
      std::vector<std::pair<int, int>> pairs;
      for (std::size_t i = 0; i < folds.test[f].size(); ++i) {
        const int truth = records[folds.test[f][i]].label;
        pairs.emplace_back(truth, fused_prediction(fold_scores[f][i], ablation, cfg.fusion));
      }
      fold_acc.push_back(pairs.empty() ? 0.0 : confusion_and_accuracy(pairs).accuracy);
      all.insert(all.end(), pairs.begin(), pairs.end());
    }
    auto report = confusion_and_accuracy(all);
    report.fold_accuracy = std::move(fold_acc);
    result.reports[ablation.name] = std::move(report);
  }
  return result;
}

CvResult run_cv(std::span<const SequenceRecord> records, const CvConfig& cfg, const ClassifierFactory& factory) {
  cfg.fusion.validate();
  const auto folds = assign_folds(records, cfg.folds, cfg.seed);
  const auto keys = required_models(cfg);
  const std::size_t nf = folds.test.size();

  // One task per (fold, model); each writes only its own slot.
  std::vector<FittedStream> fitted(nf * keys.size());
  std::vector<AccessAudit> audits(nf * keys.size());
  parallel_for(fitted.size(), cfg.jobs, [&](std::size_t task) {
    const auto f = task / keys.size();
    fitted[task] = fit_stream(records, folds.train[f], keys[task % keys.size()], cfg, factory,
                              static_cast<int>(f), &audits[task]);
  });

  std::vector<std::vector<std::map<ModelKey, ScoreVector>>> fold_scores(nf);
  std::vector<long long> leakage(nf, 0);
  for (std::size_t f = 0; f < nf; ++f) {
    FoldFit fit;
    for (std::size_t k = 0; k < keys.size(); ++k) {
      fit.models[keys[k]] = fitted[f * keys.size() + k];
      leakage[f] += audits[f * keys.size() + k].reads_of(folds.subjects[f]);
    }
    fold_scores[f] = predict_fold(fit, records, folds.test[f]);
  }
  auto result = assemble_reports(records, folds, fold_scores, cfg);
  result.leakage = std::move(leakage);
  return result;
}

// --- report files -------------------------------------------------------------

std::string format_confusion_csv(const EvalReport& report) {
  std::string out = "true\\predicted";
  for (int c = 0; c < kExpressionCount; ++c) out += std::string(",") + expression_name(static_cast<Expression>(c));
  out += '\n';
  for (int r = 0; r < kExpressionCount; ++r) {
    out += expression_name(static_cast<Expression>(r));
    for (int c = 0; c < kExpressionCount; ++c) out += "," + std::to_string(report.confusion(r, c));
    out += '\n';
  }
  return out;
}

std::string format_summary(const std::string& name, const EvalReport& report) {
  std::ostringstream ss;
  ss << name << ": accuracy " << format_double(report.accuracy) << " (" << report.confusion.trace() << "/"
     << report.total() << ")\n  per-fold:";
  for (double a : report.fold_accuracy) ss << ' ' << format_double(a);
  ss << '\n';
  return ss.str();
}

std::string format_ablation_csv(const std::vector<Ablation>& ablations,
                                const std::map<std::string, EvalReport>& reports, int folds) {
  std::string out = "config";
  for (int f = 0; f < folds; ++f) out += ",fold_" + std::to_string(f);
  out += ",mean\n";
  for (const auto& a : ablations) {
    const auto it = reports.find(a.name);
    if (it == reports.end()) continue;
    out += a.name;
    double sum = 0.0;
    for (double acc : it->second.fold_accuracy) {
      out += "," + format_double(acc);
      sum += acc;
    }
    const double mean = it->second.fold_accuracy.empty() ? 0.0 : sum / static_cast<double>(it->second.fold_accuracy.size());
    out += "," + format_double(mean) + "\n";
  }
  return out;
}

void write_reports(const CvResult& result, const CvConfig& cfg, const std::filesystem::path& out_dir) {
  write_file_atomic(out_dir / "ablation.csv", format_ablation_csv(cfg.ablations, result.reports, cfg.folds));
  std::string summary;
  for (const auto& a : cfg.ablations) {
    const auto& rep = result.reports.at(a.name);
    write_file_atomic(out_dir / ("confusion_" + a.name + ".csv"), format_confusion_csv(rep));
    summary += format_summary(a.name, rep);
  }
  write_file_atomic(out_dir / "summary.txt", summary);
}

}  // namespace sparse4d
