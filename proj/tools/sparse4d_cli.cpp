// Command-line front end: the full pipeline and each stage on its own.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "sparse4d/config.hpp"
#include "sparse4d/error.hpp"
#include "sparse4d/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sparse4d;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("sparse4d");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] [%^%l%$] %v");
  const char* env = std::getenv("SPARSE4D_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else spdlog::set_level(spdlog::level::info);
}

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool dry_run = false;
  std::optional<std::string> ablation;
  std::optional<std::string> out;
  std::optional<std::string> dataset;
};

PipelineConfig resolve_config(const Globals& g) {
  PipelineConfig cfg = g.config.empty() ? PipelineConfig{} : load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.ablation) cfg.eval.ablation = *g.ablation;
  if (g.out) cfg.data.out = *g.out;
  if (g.dataset) cfg.data.dataset = *g.dataset;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"sparse4d: sparsity-aware 4D facial expression recognition"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "JSON pipeline config")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed, overrides the config");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--dry-run", g.dry_run, "print the stage plan and exit without writing");
  app.add_option("--ablation", g.ablation, "dense, sparse, dense+topl, sparse+topl or all");
  app.add_option("--out", g.out, "output root, overrides data.out");
  app.add_option("--dataset", g.dataset, "dataset index, overrides data.dataset");

  auto* synth = app.add_subcommand("synth", "write the synthetic dataset");
  std::string synth_dir;
  synth->add_option("dir", synth_dir, "output directory (default <out>/data)");

  auto* render = app.add_subcommand("render", "render texture, depth and sharpened depth images");
  std::string mesh_in, render_out;
  render->add_option("--mesh", mesh_in, "render a single mesh file instead of the dataset");
  render->add_option("--output", render_out, "PGM output for --mesh");
  int resolution = 0;
  render->add_option("--resolution", resolution, "raster size for --mesh (default from config)");

  auto* augment = app.add_subcommand("augment", "generate augmented images from rendered channels");

  auto* landmarks = app.add_subcommand("landmarks", "TOP-landmark descriptor sequences");
  std::string manifest_in, landmarks_out;
  landmarks->add_option("--manifest", manifest_in, "describe a single frame manifest");
  landmarks->add_option("--output", landmarks_out, "CSV output for --manifest");

  auto* encode = app.add_subcommand("encode", "feature extraction and sparse coding");
  std::string features_in, encode_out, index_set;
  encode->add_option("--features", features_in, "encode a single feature CSV");
  encode->add_option("--output", encode_out, "reduced CSV output for --features");
  encode->add_option("--index-set", index_set, "fixed index set for --features");

  auto* train = app.add_subcommand("train", "fit per-fold sequence models");
  auto* eval = app.add_subcommand("eval", "evaluate trained models and write reports");
  auto* pipeline = app.add_subcommand("pipeline", "run everything end to end in memory");

  CLI11_PARSE(app, argc, argv);

  try {
    const PipelineConfig cfg = resolve_config(g);
    const RunOptions opts{g.jobs, app.get_subcommands().front()->get_name()};
    if (g.dry_run) {
      std::cout << plan_run(cfg).text;
      return 0;
    }
    if (synth->parsed()) {
      const fs::path dir = synth_dir.empty() ? cfg.data.out / "data" : fs::path(synth_dir);
      const auto entries = cmd_synth(cfg, dir);
      std::cout << entries.size() << " sequences written to " << dir.string() << "\n";
    } else if (render->parsed()) {
      if (!mesh_in.empty()) {
        if (render_out.empty()) throw ConfigError("render --mesh needs --output");
        render_mesh_file(mesh_in, render_out, resolution > 0 ? resolution : cfg.render.resolution);
      } else {
        stage_render(cfg, opts);
      }
    } else if (augment->parsed()) {
      stage_augment(cfg, opts);
    } else if (landmarks->parsed()) {
      if (!manifest_in.empty()) {
        if (landmarks_out.empty()) throw ConfigError("landmarks --manifest needs --output");
        landmarks_manifest_file(manifest_in, landmarks_out);
      } else {
        stage_landmarks(cfg, opts);
      }
    } else if (encode->parsed()) {
      if (!features_in.empty()) {
        if (encode_out.empty()) throw ConfigError("encode --features needs --output");
        encode_feature_file(cfg, features_in, encode_out, index_set);
      } else {
        stage_encode(cfg, opts);
      }
    } else if (train->parsed()) {
      stage_train(cfg, opts);
    } else if (eval->parsed()) {
      const auto result = stage_eval(cfg, opts);
      for (const auto& [name, report] : result.reports) std::cout << format_summary(name, report);
    } else if (pipeline->parsed()) {
      const auto result = cmd_pipeline(cfg, opts);
      for (const auto& a : cfg.cv_config(opts.jobs).ablations)
        std::cout << format_summary(a.name, result.reports.at(a.name));
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
