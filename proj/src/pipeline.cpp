#include "sparse4d/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "sparse4d/augment.hpp"
#include "sparse4d/error.hpp"
#include "sparse4d/feature_extractor.hpp"
#include "sparse4d/parallel.hpp"
#include "sparse4d/random.hpp"
#include "sparse4d/render.hpp"
#include "sparse4d/table_io.hpp"
#include "sparse4d/toplandmarks.hpp"

namespace sparse4d {

namespace fs = std::filesystem;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::string frame_stem(std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%02zu", t + 1);
  return buf;
}

fs::path seq_dir(const PipelineConfig& cfg, const char* stage, View v, const std::string& seq) {
  return cfg.data.out / stage / view_name(v) / seq;
}

fs::path landmark_csv(const PipelineConfig& cfg, View v, const std::string& seq) {
  return cfg.data.out / "landmarks" / view_name(v) / (seq + ".csv");
}

fs::path variant_csv(const PipelineConfig& cfg, const char* stage, View v, const std::string& seq, std::size_t k) {
  return seq_dir(cfg, stage, v, seq) / ("variant_" + std::to_string(k) + ".csv");
}

fs::path model_stem(const PipelineConfig& cfg, std::size_t fold, const ModelKey& key) {
  return cfg.data.out / "train" / ("fold_" + std::to_string(fold)) /
         (std::string(view_name(key.view)) + "_" + stream_name(key.stream));
}

/// Runs fn, tagging failures with the stage name and logging elapsed time.
template <typename Fn>
double timed_stage(const std::string& name, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  spdlog::info("stage {} started", name);
  try {
    fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  spdlog::info("stage {} finished in {:.1f} s", name, secs);
  return secs;
}

SynthConfig synth_config(const PipelineConfig& cfg) {
  SynthConfig sc = cfg.data.synthetic;
  sc.seed = cfg.seed;
  return sc;
}

std::size_t variant_count(const PipelineConfig& cfg) { return 1 + cfg.augment.count; }

MatrixXd feature_rows(const Encoder& enc, const std::vector<const RasterImage*>& images) {
  MatrixXd x(static_cast<Index>(images.size()), enc.dictionary().rows());
  for (std::size_t t = 0; t < images.size(); ++t) x.row(static_cast<Index>(t)) = enc.features(*images[t]).transpose();
  return x;
}

std::vector<SparseCode> code_rows(const Encoder& enc, const MatrixXd& x) {
  std::vector<SparseCode> codes;
  codes.reserve(static_cast<std::size_t>(x.rows()));
  for (Index t = 0; t < x.rows(); ++t) codes.push_back(enc.code(x.row(t).transpose()));
  return codes;
}

void write_matrix_csv(const MatrixXd& m, const std::string& prefix, const fs::path& path) {
  write_numeric_csv(NumericTable{indexed_header(prefix, static_cast<std::size_t>(m.cols())), m}, path);
}

std::string manifest_json(const PipelineConfig& cfg, const RunOptions& opts,
                          const std::vector<std::pair<std::string, double>>& timings) {
  nlohmann::ordered_json j;
  j["command"] = opts.command;
  j["seed"] = cfg.seed;
  j["config_hash"] = config_hash(cfg);
  j["format_version"] = kFormatVersion;
  j["jobs"] = opts.jobs;
  nlohmann::ordered_json t = nlohmann::ordered_json::object();
  for (const auto& [name, secs] : timings) t[name] = secs;
  j["timings_seconds"] = t;
  return j.dump(2) + "\n";
}

void write_run_files(const PipelineConfig& cfg, const RunOptions& opts,
                     const std::vector<std::pair<std::string, double>>& timings) {
  write_file_atomic(cfg.data.out / "config.json", dump_config(cfg));
  write_file_atomic(cfg.data.out / ("run_manifest_" + opts.command + ".json"), manifest_json(cfg, opts, timings));
}

}  // namespace

Viewport fit_sequence_viewport(const Sequence4D& seq, int resolution) {
  Mesh all;
  for (const auto& f : seq.frames) all.vertices.insert(all.vertices.end(), f.mesh.vertices.begin(), f.mesh.vertices.end());
  return fit_viewport(all, resolution);
}

ViewImages render_view(const Sequence4D& view_seq, const RenderSection& cfg) {
  const Viewport vp = fit_sequence_viewport(view_seq, cfg.resolution);
  ViewImages out;
  for (const auto& f : view_seq.frames) {
    out.texture.push_back(quantize8(project_texture(f.mesh, vp)));
    out.depth.push_back(quantize8(project_depth(f.mesh, vp)));
    out.sharp.push_back(quantize8(sharpen_depth(out.depth.back(), cfg.clahe)));
  }
  return out;
}

std::uint64_t augment_seed(std::uint64_t master, const std::string& sequence_id, View view) {
  return derive_seed(master, {0xa0, fnv1a64(sequence_id), static_cast<std::uint64_t>(view)});
}

std::vector<std::vector<RasterImage>> augment_view(const ViewImages& images, const PipelineConfig& cfg,
                                                   const std::string& sequence_id, View view) {
  AugmentConfig ac{augment_seed(cfg.seed, sequence_id, view), cfg.augment.weight_mode, cfg.augment.capacity,
                   cfg.augment.count};
  std::vector<std::vector<RasterImage>> out;
  for (std::size_t t = 0; t < images.texture.size(); ++t) {
    auto imgs = augment_stream(images.texture[t], images.depth[t], images.sharp[t], ac);
    for (auto& img : imgs) img = quantize8(img);
    out.push_back(std::move(imgs));
  }
  return out;
}

Encoder::Encoder(const PipelineConfig& cfg)
    : cfg_(cfg.sparse),
      coder_(build_wavelet_dictionary(cfg.sparse.extractor.pad_to, cfg.sparse.overcompleteness)) {}

VectorXd Encoder::features(const RasterImage& img) const { return extract(img, cfg_.extractor); }

SparseCode Encoder::code(const VectorXd& x) const {
  const auto prior = default_prior(coder_.dictionary().cols(), x, cfg_.sigma2_scale, cfg_.expected_sparsity);
  return to_sparse_code(coder_.estimate(x, prior, cfg_.search));
}

std::set<Stream> needed_streams(const PipelineConfig& cfg) {
  std::set<Stream> out;
  for (const auto& key : required_models(cfg.cv_config(1))) out.insert(key.stream);
  return out;
}

SequenceRecord featurize_sequence(const Sequence4D& seq, const PipelineConfig& cfg, const Encoder& encoder,
                                  const std::set<Stream>& streams) {
  SequenceRecord rec;
  rec.id = seq.id;
  rec.subject = seq.subject_id;
  rec.label = static_cast<int>(seq.label);
  const MultiView mv = multi_view(seq, cfg.render.profile_angle);
  const bool images = streams.count(Stream::sparse) || streams.count(Stream::dense);
  for (View v : kAllViews) {
    const Sequence4D& vs = mv.at(v);
    if (streams.count(Stream::toplandmarks)) rec.at(v, Stream::toplandmarks).frames = {top_descriptor_sequence(vs)};
    if (!images) continue;
    const ViewImages rendered = render_view(vs, cfg.render);
    const auto augmented = augment_view(rendered, cfg, seq.id, v);
    for (std::size_t k = 0; k < variant_count(cfg); ++k) {
      std::vector<const RasterImage*> frames;
      for (std::size_t t = 0; t < vs.frames.size(); ++t)
        frames.push_back(k == 0 ? &rendered.texture[t] : &augmented[t][k - 1]);
      MatrixXd x = feature_rows(encoder, frames);
      if (streams.count(Stream::sparse)) rec.at(v, Stream::sparse).codes.push_back(code_rows(encoder, x));
      if (streams.count(Stream::dense)) rec.at(v, Stream::dense).frames.push_back(std::move(x));
    }
  }
  return rec;
}

std::vector<DatasetEntry> dataset_entries(const PipelineConfig& cfg) {
  const fs::path index = cfg.data.dataset.empty() ? cfg.data.out / "data" / "dataset.tsv" : cfg.data.dataset;
  return load_dataset_index(index);
}

std::vector<Sequence4D> load_or_synthesize(const PipelineConfig& cfg) {
  if (cfg.data.dataset.empty()) return generate_dataset(synth_config(cfg));
  std::vector<Sequence4D> out;
  for (const auto& e : load_dataset_index(cfg.data.dataset)) out.push_back(load_sequence(e));
  return out;
}

DryRunPlan plan_run(const PipelineConfig& cfg) {
  DryRunPlan plan;
  if (cfg.data.dataset.empty()) {
    const auto& sc = cfg.data.synthetic;
    plan.sequences = static_cast<std::size_t>(sc.subjects) * kExpressionCount *
                     static_cast<std::size_t>(sc.sequences_per_class);
    plan.frames = static_cast<std::size_t>(sc.frames);
  } else {
    const auto entries = load_dataset_index(cfg.data.dataset);
    plan.sequences = entries.size();
    plan.frames = entries.empty() ? 0 : load_manifest(entries.front().manifest).size();
  }
  plan.image_streams = plan.sequences * kAllViews.size() * variant_count(cfg);
  const auto cv = cfg.cv_config(1);
  plan.models = required_models(cv).size() * static_cast<std::size_t>(cfg.eval.folds);
  std::ostringstream ss;
  ss << "plan (config " << config_hash(cfg) << ", seed " << cfg.seed << ")\n";
  ss << "  data:       " << plan.sequences << " sequences x " << plan.frames << " frames"
     << (cfg.data.dataset.empty() ? " (synthetic)" : "") << "\n";
  ss << "  render:     " << plan.sequences * kAllViews.size() << " sequence views\n";
  ss << "  augment:    " << plan.image_streams << " image streams (" << plan.sequences << " x " << kAllViews.size()
     << " views x " << variant_count(cfg) << ")\n";
  ss << "  landmarks:  " << plan.sequences * kAllViews.size() << " descriptor sequences\n";
  ss << "  encode:     " << plan.image_streams * plan.frames << " images\n";
  ss << "  train:      " << plan.models << " models (" << cfg.eval.folds << " folds)\n";
  ss << "  eval:       " << cv.ablations.size() << " ablation reports\n";
  plan.text = ss.str();
  return plan;
}

CvResult cmd_pipeline(const PipelineConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  std::vector<std::pair<std::string, double>> timings;
  std::vector<Sequence4D> dataset;
  timings.emplace_back("data", timed_stage("data", [&] { dataset = load_or_synthesize(cfg); }));

  std::vector<SequenceRecord> records(dataset.size());
  timings.emplace_back("featurize", timed_stage("featurize", [&] {
    const Encoder encoder(cfg);
    const auto streams = needed_streams(cfg);
    parallel_for(dataset.size(), opts.jobs, [&](std::size_t i) {
      records[i] = featurize_sequence(dataset[i], cfg, encoder, streams);
      spdlog::debug("featurized {}", dataset[i].id);
    });
  }));
  dataset.clear();

  CvResult result;
  const auto cv = cfg.cv_config(opts.jobs);
  timings.emplace_back("cv", timed_stage("cv", [&] {
    result = run_cv(records, cv, BiLstmFactory(cfg.model));
  }));
  timings.emplace_back("report", timed_stage("report", [&] {
    write_reports(result, cv, cfg.data.out / "reports");
    write_run_files(cfg, opts, timings);
  }));
  for (const auto& a : cv.ablations)
    spdlog::info("{}: accuracy {:.4f}", a.name, result.reports.at(a.name).accuracy);
  return result;
}

std::vector<DatasetEntry> cmd_synth(const PipelineConfig& cfg, const fs::path& out_dir) {
  std::vector<DatasetEntry> entries;
  timed_stage("synth", [&] { entries = write_dataset(generate_dataset(synth_config(cfg)), out_dir); });
  return entries;
}

// --- staged path -----------------------------------------------------------------

void stage_render(const PipelineConfig& cfg, const RunOptions& opts) {
  timed_stage("render", [&] {
    const auto entries = dataset_entries(cfg);
    parallel_for(entries.size(), opts.jobs, [&](std::size_t i) {
      const Sequence4D seq = load_sequence(entries[i]);
      const MultiView mv = multi_view(seq, cfg.render.profile_angle);
      for (View v : kAllViews) {
        const auto images = render_view(mv.at(v), cfg.render);
        const fs::path dir = seq_dir(cfg, "render", v, seq.id);
        for (std::size_t t = 0; t < images.texture.size(); ++t) {
          save_netpbm(images.texture[t], dir / (frame_stem(t) + "_texture.ppm"));
          save_netpbm(images.depth[t], dir / (frame_stem(t) + "_depth.pgm"));
          save_netpbm(images.sharp[t], dir / (frame_stem(t) + "_sharp.pgm"));
        }
      }
    });
  });
}

namespace {

ViewImages load_rendered(const PipelineConfig& cfg, View v, const std::string& seq, std::size_t frames) {
  ViewImages images;
  const fs::path dir = seq_dir(cfg, "render", v, seq);
  for (std::size_t t = 0; t < frames; ++t) {
    images.texture.push_back(load_netpbm(dir / (frame_stem(t) + "_texture.ppm")));
    images.depth.push_back(load_netpbm(dir / (frame_stem(t) + "_depth.pgm")));
    images.sharp.push_back(load_netpbm(dir / (frame_stem(t) + "_sharp.pgm")));
  }
  return images;
}

fs::path augmented_path(const PipelineConfig& cfg, View v, const std::string& seq, std::size_t t, std::size_t k) {
  return cfg.data.out / "augment" /
         (seq + "_" + std::to_string(t + 1) + "_" + view_name(v) + "_" + std::to_string(k) + ".ppm");
}

}  // namespace

void stage_augment(const PipelineConfig& cfg, const RunOptions& opts) {
  timed_stage("augment", [&] {
    const auto entries = dataset_entries(cfg);
    parallel_for(entries.size(), opts.jobs, [&](std::size_t i) {
      const auto& e = entries[i];
      const std::size_t frames = load_manifest(e.manifest).size();
      for (View v : kAllViews) {
        const auto augmented = augment_view(load_rendered(cfg, v, e.sequence_id, frames), cfg, e.sequence_id, v);
        for (std::size_t t = 0; t < frames; ++t)
          for (std::size_t k = 0; k < augmented[t].size(); ++k)
            save_netpbm(augmented[t][k], augmented_path(cfg, v, e.sequence_id, t, k + 1));
      }
    });
  });
}

void stage_landmarks(const PipelineConfig& cfg, const RunOptions& opts) {
  timed_stage("landmarks", [&] {
    const auto entries = dataset_entries(cfg);
    parallel_for(entries.size(), opts.jobs, [&](std::size_t i) {
      const Sequence4D seq = load_sequence(entries[i]);
      const MultiView mv = multi_view(seq, cfg.render.profile_angle);
      for (View v : kAllViews)
        write_matrix_csv(top_descriptor_sequence(mv.at(v)), "top", landmark_csv(cfg, v, seq.id));
    });
  });
}

std::string format_codes_csv(const std::vector<SparseCode>& codes) {
  std::string out = "frame,atom,value\n";
  for (std::size_t t = 0; t < codes.size(); ++t)
    for (SparseCode::InnerIterator it(codes[t]); it; ++it)
      out += std::to_string(t) + "," + std::to_string(it.index()) + "," + format_double(it.value()) + "\n";
  return out;
}

std::vector<SparseCode> parse_codes_csv(const std::string& text, std::size_t frames, Index atoms,
                                        const std::string& source) {
  std::vector<SparseCode> codes(frames, SparseCode(atoms));
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string ctx = source + ":" + std::to_string(line_no);
    if (line_no == 1) {
      if (trim(line) != "frame,atom,value") throw MalformedFile(ctx + ": expected header frame,atom,value");
      continue;
    }
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 3) throw MalformedFile(ctx + ": expected 3 fields");
    const auto t = parse_int(f[0], ctx);
    const auto a = parse_int(f[1], ctx);
    if (t < 0 || static_cast<std::size_t>(t) >= frames || a < 0 || a >= atoms)
      throw MalformedFile(ctx + ": frame or atom out of range");
    codes[static_cast<std::size_t>(t)].coeffRef(a) = parse_double(f[2], ctx);
  }
  if (line_no == 0) throw MalformedFile(source + ": empty codes file");
  return codes;
}

void stage_encode(const PipelineConfig& cfg, const RunOptions& opts) {
  timed_stage("encode", [&] {
    const auto entries = dataset_entries(cfg);
    const Encoder encoder(cfg);
    parallel_for(entries.size(), opts.jobs, [&](std::size_t i) {
      const auto& e = entries[i];
      const std::size_t frames = load_manifest(e.manifest).size();
      for (View v : kAllViews) {
        const fs::path render_dir = seq_dir(cfg, "render", v, e.sequence_id);
        for (std::size_t k = 0; k < variant_count(cfg); ++k) {
          std::vector<RasterImage> imgs;
          for (std::size_t t = 0; t < frames; ++t)
            imgs.push_back(load_netpbm(k == 0 ? render_dir / (frame_stem(t) + "_texture.ppm")
                                              : augmented_path(cfg, v, e.sequence_id, t, k)));
          std::vector<const RasterImage*> ptrs;
          for (const auto& im : imgs) ptrs.push_back(&im);
          const MatrixXd x = feature_rows(encoder, ptrs);
          write_matrix_csv(x, "f", variant_csv(cfg, "features", v, e.sequence_id, k));
          write_file_atomic(variant_csv(cfg, "codes", v, e.sequence_id, k), format_codes_csv(code_rows(encoder, x)));
        }
      }
    });
  });
}

namespace {

/// Records rebuilt from stage files; `variants` limits image streams.
std::vector<SequenceRecord> load_records(const PipelineConfig& cfg, const std::vector<DatasetEntry>& entries,
                                         std::size_t variants, int jobs) {
  const auto streams = needed_streams(cfg);
  const Index atoms = static_cast<Index>(cfg.sparse.extractor.pad_to) * cfg.sparse.overcompleteness;
  std::vector<SequenceRecord> records(entries.size());
  parallel_for(entries.size(), jobs, [&](std::size_t i) {
    const auto& e = entries[i];
    auto& rec = records[i];
    rec.id = e.sequence_id;
    rec.subject = e.subject_id;
    rec.label = static_cast<int>(e.label);
    for (View v : kAllViews) {
      if (streams.count(Stream::toplandmarks))
        rec.at(v, Stream::toplandmarks).frames = {read_numeric_csv(landmark_csv(cfg, v, e.sequence_id)).values};
      for (std::size_t k = 0; k < variants; ++k) {
        if (streams.count(Stream::dense))
          rec.at(v, Stream::dense).frames.push_back(
              read_numeric_csv(variant_csv(cfg, "features", v, e.sequence_id, k)).values);
        if (streams.count(Stream::sparse)) {
          const fs::path p = variant_csv(cfg, "codes", v, e.sequence_id, k);
          const std::size_t frames = load_manifest(e.manifest).size();
          rec.at(v, Stream::sparse).codes.push_back(parse_codes_csv(read_file(p), frames, atoms, p.string()));
        }
      }
    }
  });
  return records;
}

std::string format_folds(const FoldAssignment& folds) {
  std::string out;
  for (std::size_t f = 0; f < folds.subjects.size(); ++f)
    for (const auto& s : folds.subjects[f]) out += std::to_string(f) + '\t' + s + '\n';
  return out;
}

FoldAssignment parse_folds(const fs::path& path, std::span<const SequenceRecord> records) {
  std::istringstream in(read_file(path));
  std::string line;
  int line_no = 0;
  FoldAssignment fa;
  std::map<std::string, std::size_t> fold_of;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string ctx = path.string() + ":" + std::to_string(line_no);
    const auto f = split(trim(line), '\t');
    if (f.size() != 2) throw MalformedFile(ctx + ": expected fold<TAB>subject");
    const auto fold = parse_int(f[0], ctx);
    if (fold < 0 || fold > 10000) throw MalformedFile(ctx + ": fold index out of range");
    if (fa.subjects.size() <= static_cast<std::size_t>(fold)) fa.subjects.resize(static_cast<std::size_t>(fold) + 1);
    fa.subjects[static_cast<std::size_t>(fold)].push_back(f[1]);
    if (!fold_of.emplace(f[1], static_cast<std::size_t>(fold)).second)
      throw MalformedFile(ctx + ": subject " + f[1] + " listed twice");
  }
  fa.test.resize(fa.subjects.size());
  fa.train.resize(fa.subjects.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto it = fold_of.find(records[i].subject);
    if (it == fold_of.end()) throw MalformedFile(path.string() + ": no fold for subject " + records[i].subject);
    for (std::size_t g = 0; g < fa.subjects.size(); ++g) (g == it->second ? fa.test[g] : fa.train[g]).push_back(i);
  }
  return fa;
}

}  // namespace

void stage_train(const PipelineConfig& cfg, const RunOptions& opts) {
  timed_stage("train", [&] {
    const auto entries = dataset_entries(cfg);
    const auto records = load_records(cfg, entries, variant_count(cfg), opts.jobs);
    const auto cv = cfg.cv_config(opts.jobs);
    const auto folds = assign_folds(records, cv.folds, cv.seed);
    write_file_atomic(cfg.data.out / "train" / "folds.tsv", format_folds(folds));
    const BiLstmFactory factory(cfg.model);
    parallel_for(folds.test.size(), opts.jobs, [&](std::size_t f) {
      const FoldFit fit = fit_fold(records, folds.train[f], cv, factory, static_cast<int>(f));
      for (const auto& [key, fs_] : fit.models) {
        const auto* model = dynamic_cast<const BiLstmClassifier*>(fs_.model.get());
        const fs::path stem = model_stem(cfg, f, key);
        write_file_atomic(stem.string() + ".transform.csv", format_transform(fs_.transform));
        save_checkpoint(model->params(), stem.string() + ".ckpt.csv");
        save_training_log(model->loss_log(), stem.string() + ".loss.csv");
      }
    });
  });
}

CvResult stage_eval(const PipelineConfig& cfg, const RunOptions& opts) {
  CvResult result;
  timed_stage("eval", [&] {
    const auto entries = dataset_entries(cfg);
    const auto records = load_records(cfg, entries, 1, opts.jobs);
    const auto cv = cfg.cv_config(opts.jobs);
    const auto folds = parse_folds(cfg.data.out / "train" / "folds.tsv", records);
    std::vector<std::vector<std::map<ModelKey, ScoreVector>>> scores(folds.test.size());
    for (std::size_t f = 0; f < folds.test.size(); ++f) {
      FoldFit fit;
      for (const auto& key : required_models(cv)) {
        const fs::path stem = model_stem(cfg, f, key);
        const std::string tpath = stem.string() + ".transform.csv";
        FittedStream fs_;
        fs_.transform = parse_transform(read_file(tpath), tpath);
        fs_.model = std::make_shared<BiLstmClassifier>(load_checkpoint(stem.string() + ".ckpt.csv"));
        fit.models[key] = std::move(fs_);
      }
      scores[f] = predict_fold(fit, records, folds.test[f]);
    }
    result = assemble_reports(records, folds, scores, cv);
    write_reports(result, cv, cfg.data.out / "reports");
  });
  return result;
}

// --- single-file variants ----------------------------------------------------------

void render_mesh_file(const fs::path& mesh_path, const fs::path& output, int resolution) {
  const Mesh mesh = load_mesh(mesh_path);
  const Viewport vp = fit_viewport(mesh, resolution);
  save_netpbm(quantize8(project_depth(mesh, vp)), output);
  if (mesh.has_colors()) {
    fs::path tex = output;
    tex.replace_extension(".ppm");
    save_netpbm(quantize8(project_texture(mesh, vp)), tex);
  }
}

void landmarks_manifest_file(const fs::path& manifest, const fs::path& output) {
  Sequence4D seq;
  seq.frames = load_frames(manifest);
  write_matrix_csv(top_descriptor_sequence(seq), "top", output);
}

void encode_feature_file(const PipelineConfig& cfg, const fs::path& features, const fs::path& output,
                         const fs::path& index_set) {
  const NumericTable table = read_numeric_csv(features);
  const Encoder encoder(cfg);
  if (table.values.cols() != encoder.dictionary().rows())
    throw DimensionMismatch(features.string() + ": expected " + std::to_string(encoder.dictionary().rows()) +
                            " columns, found " + std::to_string(table.values.cols()));
  const auto codes = code_rows(encoder, table.values);
  const auto idx = index_set.empty() ? calibrate_index_set(codes, cfg.sparse.feature_count) : load_index_set(index_set);
  MatrixXd reduced(table.values.rows(), static_cast<Index>(idx.size()));
  for (std::size_t t = 0; t < codes.size(); ++t)
    reduced.row(static_cast<Index>(t)) = reduce_to_sparse_feature(codes[t], idx).transpose();
  write_matrix_csv(reduced, "s", output);
}

}  // namespace sparse4d
