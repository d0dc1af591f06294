// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Criteria 8-10 run the default synthetic pipeline twice.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "sparse4d/augment.hpp"
#include "sparse4d/config.hpp"
#include "sparse4d/fusion_eval.hpp"
#include "sparse4d/pipeline.hpp"
#include "sparse4d/random.hpp"
#include "sparse4d/sequence_model.hpp"
#include "sparse4d/sparse_codec.hpp"
#include "sparse4d/synthetic_data.hpp"
#include "sparse4d/toplandmarks.hpp"

namespace fs = std::filesystem;
using namespace sparse4d;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

MatrixXd gaussian(Rng& rng, Eigen::Index r, Eigen::Index c) {
  MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

Dictionary random_dictionary(Rng& rng, int p, int q) {
  MatrixXd a = gaussian(rng, p, q);
  a.colwise().normalize();
  return Dictionary(a);
}

Support random_support(Rng& rng, int q, int size) {
  std::vector<int> idx(static_cast<std::size_t>(q));
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  idx.resize(static_cast<std::size_t>(size));
  std::sort(idx.begin(), idx.end());
  return Support{idx};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double max_dh = 0.0, max_dw = 0.0;
  bool same_sets = true;
  for (int trial = 0; trial < 100; ++trial) {
    const auto dict = random_dictionary(rng, 8, 12);
    const VectorXd x = gaussian(rng, 8, 1);
    const auto prior = default_prior(12, x);
    const auto ref = exact_mmse_oracle(dict, x, prior, 2);
    const auto got = mmse_estimate(dict, x, prior, SearchConfig{SearchMode::beam, 2, 144});
    max_dh = std::max(max_dh, (ref.h_hat - got.h_hat).cwiseAbs().maxCoeff());
    std::map<Support, double> ref_w;
    for (const auto& w : ref.supports) ref_w[w.support] = w.weight;
    same_sets = same_sets && ref.supports.size() == got.supports.size();
    for (const auto& w : got.supports) {
      const auto it = ref_w.find(w.support);
      if (it == ref_w.end()) {
        same_sets = false;
        continue;
      }
      max_dw = std::max(max_dw, std::abs(it->second - w.weight));
    }
  }
  const double secs = seconds_since(t0);
  return {same_sets && max_dh < 1e-10 && max_dw < 1e-9 && secs < 10.0,
          fmt("max|dh|=%.2e max|dw|=%.2e %.2fs", max_dh, max_dw, secs)};
}

Outcome projector_identities() {
  Rng rng(102);
  double annihilate = 0.0, idempotent = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int p = 4 + static_cast<int>(rng.uniform_index(13));
    const int q = p + 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(2 * p)));
    const auto dict = random_dictionary(rng, p, q);
    const Support s = random_support(rng, q, 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(p))));
    const MatrixXd z = complement_projector(dict, s);
    annihilate = std::max(annihilate, (z * support_columns(dict, s)).norm());
    idempotent = std::max(idempotent, (z * z - z).norm());
  }
  return {annihilate < 1e-10 && idempotent < 1e-10, fmt("max|ZA|=%.2e max|ZZ-Z|=%.2e", annihilate, idempotent)};
}

Outcome blue_exactness() {
  Rng rng(103);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto dict = random_dictionary(rng, 16, 32);
    const int k = 1 + static_cast<int>(rng.uniform_index(3));
    const Support s = random_support(rng, 32, k);
    const VectorXd h = gaussian(rng, k, 1);
    const VectorXd x = support_columns(dict, s) * h;
    worst = std::max(worst, (blue_estimate(dict, s, x) - h).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-8, fmt("max coefficient error %.2e", worst)};
}

Outcome support_identification() {
  Rng rng(104);
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const SparseCoder coder(random_dictionary(rng, 16, 32));
    const Support s = random_support(rng, 32, 2);
    VectorXd h(2);
    for (int i = 0; i < 2; ++i) h(i) = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 2.0);
    const VectorXd x = support_columns(coder.dictionary(), s) * h;
    const auto est = coder.estimate(x, default_prior(32, x), SearchConfig{SearchMode::exact, 3, 1});
    const auto best = std::max_element(est.supports.begin(), est.supports.end(),
                                       [](const auto& a, const auto& b) { return a.weight < b.weight; });
    hits += best->support == s;
  }
  return {hits >= 99, fmt("%d/100 generating supports ranked first", hits)};
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  Rng rng(105);
  TrainConfig cfg;
  cfg.dropout_rate = 0.0;
  cfg.gradient_clip_norm = 1e300;
  int checked = 0;
  double worst = 0.0;
  for (int net = 0; net < 8; ++net) {
    const int d = 1 + static_cast<int>(rng.uniform_index(4));
    const int h = 1 + static_cast<int>(rng.uniform_index(4));
    const int t = 1 + static_cast<int>(rng.uniform_index(5));
    auto params = BiLstmParams::initialize(d, h, 6, 500 + static_cast<std::uint64_t>(net));
    for (auto* m : params.tensors()) *m += 0.3 * gaussian(rng, m->rows(), m->cols());
    std::vector<LabeledSequence> batch;
    for (int i = 0; i < 3; ++i) batch.push_back({gaussian(rng, t, d), static_cast<int>(rng.uniform_index(6))});
    Rng unused(0);
    const auto analytic = loss_and_gradients(params, batch, cfg, unused).gradients;
    const auto grads = analytic.tensors();
    auto tensors = params.tensors();
    for (std::size_t k = 0; k < tensors.size(); ++k)
      for (int sample = 0; sample < 2; ++sample) {
        auto& m = *tensors[k];
        const auto i = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(m.size())));
        const double orig = m.data()[i], eps = 1e-5;
        m.data()[i] = orig + eps;
        const double up = loss_and_gradients(params, batch, cfg, unused).loss;
        m.data()[i] = orig - eps;
        const double down = loss_and_gradients(params, batch, cfg, unused).loss;
        m.data()[i] = orig;
        const double num = (up - down) / (2 * eps), ana = grads[k]->data()[i];
        worst = std::max(worst, std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-6}));
        ++checked;
      }
  }
  const double secs = seconds_since(t0);
  return {checked >= 100 && worst < 1e-4 && secs < 60.0,
          fmt("%d entries, max rel err %.2e, %.2fs", checked, worst, secs)};
}

Outcome augmentation_contract() {
  SynthConfig sc;
  sc.subjects = 1;
  sc.frames = 3;
  sc.grid = 48;
  sc.seed = 106;
  const auto seq = generate_dataset(sc)[3];
  const auto mv = multi_view(seq);
  PipelineConfig cfg;
  cfg.seed = 106;
  cfg.render.resolution = 64;
  const auto images = render_view(mv.at(View::left), cfg.render);

  bool counts = true, identical = true;
  const auto dir = fs::temp_directory_path() / "sparse4d_acceptance_aug";
  fs::remove_all(dir);
  for (std::size_t n : {1u, 5u, 25u}) {
    cfg.augment.count = n;
    cfg.augment.capacity = 16;
    const auto a = augment_view(images, cfg, seq.id, View::left);
    const auto b = augment_view(images, cfg, seq.id, View::left);
    counts = counts && a.size() == 3;
    for (std::size_t t = 0; t < a.size(); ++t) {
      counts = counts && a[t].size() == n && b[t].size() == n;
      for (std::size_t g = 0; g < std::min(a[t].size(), b[t].size()); ++g) {
        save_netpbm(a[t][g], dir / "a.ppm");
        save_netpbm(b[t][g], dir / "b.ppm");
        identical = identical && slurp(dir / "a.ppm") == slurp(dir / "b.ppm");
      }
    }
  }
  fs::remove_all(dir);

  RasterImage composite(images.depth[1].width, images.depth[1].height, 3);
  for (std::size_t i = 0; i < images.depth[1].pixel_count(); ++i)
    for (std::size_t c = 0; c < 3; ++c) composite.data[3 * i + c] = images.depth[1].data[i];
  const bool exact_gray = luminance(composite, kStandardWeights).data == images.depth[1].data;
  return {counts && identical && exact_gray,
          fmt("counts %s, reruns %s, gray luminance %s", counts ? "exact" : "WRONG",
              identical ? "byte-identical" : "DIFFER", exact_gray ? "exact" : "INEXACT")};
}

Outcome top_invariances() {
  Rng rng(107);
  double worst = 0.0;
  bool lengths = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 3 + static_cast<int>(rng.uniform_index(20));
    LandmarkSet lm;
    for (int i = 0; i < m; ++i) lm.points.emplace_back(rng.normal(), rng.normal(), rng.normal());
    const VectorXd base = top_descriptor(lm);
    lengths = lengths && base.size() == 3 * m;
    const Point3 shift(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50));
    const double scale = std::exp(rng.uniform(-3.0, 3.0));
    LandmarkSet moved = lm;
    for (auto& p : moved.points) p = scale * p + shift;
    worst = std::max(worst, (top_descriptor(moved) - base).cwiseAbs().maxCoeff());
  }
  return {lengths && worst < 1e-9, fmt("max deviation %.2e, lengths %s", worst, lengths ? "3m" : "WRONG")};
}

struct PipelineRun {
  CvResult result;
  double seconds = 0.0;
  fs::path out;
};

PipelineRun run_default_pipeline(const fs::path& out) {
  fs::remove_all(out);
  PipelineConfig cfg;
  cfg.data.out = out;
  cfg.eval.ablation = "all";
  cfg.validate();
  const auto t0 = Clock::now();
  PipelineRun run{cmd_pipeline(cfg, RunOptions{1, "pipeline"}), 0.0, out};
  run.seconds = seconds_since(t0);
  return run;
}

Outcome cv_protocol(const PipelineRun& run) {
  const auto& folds = run.result.folds;
  std::set<std::string> seen;
  bool disjoint = true;
  for (const auto& group : folds.subjects)
    for (const auto& s : group) disjoint = disjoint && seen.insert(s).second;
  const bool once = std::all_of(run.result.test_count.begin(), run.result.test_count.end(),
                                [](int n) { return n == 1; });
  const long long leaks = std::accumulate(run.result.leakage.begin(), run.result.leakage.end(), 0LL);
  const bool pass = folds.subjects.size() == 10 && disjoint && seen.size() == 10 && once && leaks == 0;
  return {pass, fmt("%zu folds, %zu subjects, disjoint %s, leakage %lld", folds.subjects.size(), seen.size(),
                    disjoint ? "yes" : "NO", leaks)};
}

Outcome end_to_end(const PipelineRun& run) {
  const auto& r = run.result.reports;
  const double sparse_topl = r.at("sparse+topl").accuracy;
  const double dense = r.at("dense").accuracy;
  const bool pass = r.size() == 4 && run.seconds < 1800.0 && sparse_topl >= 0.85 && sparse_topl >= dense;
  return {pass, fmt("sparse+topl %.4f, dense %.4f, sparse %.4f, dense+topl %.4f, %.0fs", sparse_topl, dense,
                    r.at("sparse").accuracy, r.at("dense+topl").accuracy, run.seconds)};
}

Outcome determinism(const PipelineRun& a, const PipelineRun& b) {
  int files = 0, differing = 0;
  for (const auto& e : fs::directory_iterator(a.out / "reports")) {
    ++files;
    const auto other = b.out / "reports" / e.path().filename();
    differing += !fs::exists(other) || slurp(e.path()) != slurp(other);
  }
  return {files > 0 && differing == 0, fmt("%d report files, %d differ", files, differing)};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  int failures = 0;
  const auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "sparse oracle equivalence", oracle_equivalence);
  report(2, "projector identities", projector_identities);
  report(3, "BLUE exactness", blue_exactness);
  report(4, "noiseless support identification", support_identification);
  report(5, "gradient correctness", gradient_check);
  report(6, "augmentation contract", augmentation_contract);
  report(7, "TOP-landmark invariances", top_invariances);

  const fs::path root = fs::temp_directory_path() / "sparse4d_acceptance";
  std::optional<PipelineRun> first, second;
  std::string first_error, second_error;
  try {
    first = run_default_pipeline(root / "run_a");
    second = run_default_pipeline(root / "run_b");
  } catch (const std::exception& e) {
    (first ? second_error : first_error) = std::string("exception: ") + e.what();
  }
  report(8, "subject-independent CV", [&]() -> Outcome {
    return first ? cv_protocol(*first) : Outcome{false, first_error};
  });
  report(9, "end-to-end synthetic run", [&]() -> Outcome {
    return first ? end_to_end(*first) : Outcome{false, first_error};
  });
  report(10, "determinism", [&]() -> Outcome {
    if (!first || !second) return {false, first ? second_error : first_error};
    return determinism(*first, *second);
  });
  fs::remove_all(root);

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
