#include "sparse4d/config.hpp"

#include <cstdio>
#include <functional>
#include <set>

#include "json.hpp"

#include "sparse4d/error.hpp"
#include "sparse4d/random.hpp"
#include "sparse4d/table_io.hpp"

namespace sparse4d {

using nlohmann::json;

namespace {

/// Visits the keys of one JSON object, rejecting any that no handler claims.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }
  void section(const char* key, const std::function<void(Reader&)>& fn) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    Reader sub(j_.at(key), path_ + "." + key);
    fn(sub);
  }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

const char* mode_name(SearchMode m) { return m == SearchMode::exact ? "exact" : "beam"; }
const char* weight_mode_name(WeightMode m) { return m == WeightMode::standard ? "standard" : "random"; }

}  // namespace

void PipelineConfig::validate() const {
  data.synthetic.validate();
  if (render.resolution < 8) throw ConfigError("render.resolution must be at least 8");
  if (!(render.profile_angle > 0.0 && render.profile_angle < 90.0))
    throw ConfigError("render.profile_angle must be in (0, 90)");
  render.clahe.validate();
  AugmentConfig{seed, augment.weight_mode, augment.capacity, augment.count}.validate();
  sparse.extractor.validate();
  if (sparse.overcompleteness < 2) throw ConfigError("sparse.overcompleteness must be at least 2");
  sparse.search.validate();
  if (!(sparse.expected_sparsity > 0.0)) throw ConfigError("sparse.expected_sparsity must be positive");
  if (!(sparse.sigma2_scale > 0.0)) throw ConfigError("sparse.sigma2_scale must be positive");
  if (sparse.feature_count < 1) throw ConfigError("sparse.feature_count must be positive");
  model.validate();
  fusion.validate();
  if (eval.folds < 2) throw ConfigError("eval.folds must be at least 2");
  parse_ablations(eval.ablation);
}

CvConfig PipelineConfig::cv_config(int jobs) const {
  CvConfig cv;
  cv.folds = eval.folds;
  cv.seed = seed;
  cv.feature_count = sparse.feature_count;
  cv.ablations = parse_ablations(eval.ablation);
  cv.fusion = fusion;
  cv.jobs = jobs;
  return cv;
}

PipelineConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig cfg;
  {
    Reader r(root, "config");
    r.get("seed", cfg.seed);
    r.section("data", [&](Reader& d) {
      std::string dataset = cfg.data.dataset.string(), out = cfg.data.out.string();
      d.get("dataset", dataset);
      d.get("out", out);
      cfg.data.dataset = dataset;
      cfg.data.out = out;
      d.section("synthetic", [&](Reader& s) {
        auto& sc = cfg.data.synthetic;
        s.get("subjects", sc.subjects);
        s.get("sequences_per_class", sc.sequences_per_class);
        s.get("frames", sc.frames);
        s.get("grid", sc.grid);
        s.get("noise", sc.noise);
      });
    });
    r.section("render", [&](Reader& s) {
      s.get("resolution", cfg.render.resolution);
      s.get("profile_angle", cfg.render.profile_angle);
      s.section("clahe", [&](Reader& c) {
        c.get("tiles_per_side", cfg.render.clahe.tiles_per_side);
        c.get("clip_limit", cfg.render.clahe.clip_limit);
        c.get("bins", cfg.render.clahe.bins);
      });
    });
    r.section("augment", [&](Reader& s) {
      s.get("count", cfg.augment.count);
      s.get("capacity", cfg.augment.capacity);
      std::string mode = weight_mode_name(cfg.augment.weight_mode);
      s.get("weight_mode", mode);
      if (mode == "standard") cfg.augment.weight_mode = WeightMode::standard;
      else if (mode == "random") cfg.augment.weight_mode = WeightMode::random;
      else throw ConfigError("augment.weight_mode must be 'standard' or 'random'");
    });
    r.section("landmarks", [](Reader&) {});
    r.section("sparse", [&](Reader& s) {
      auto& sp = cfg.sparse;
      s.get("grid", sp.extractor.grid);
      s.get("orientation_bins", sp.extractor.orientation_bins);
      s.get("feature_length", sp.extractor.pad_to);
      s.get("overcompleteness", sp.overcompleteness);
      std::string mode = mode_name(sp.search.mode);
      s.get("search", mode);
      if (mode == "exact") sp.search.mode = SearchMode::exact;
      else if (mode == "beam") sp.search.mode = SearchMode::beam;
      else throw ConfigError("sparse.search must be 'exact' or 'beam'");
      s.get("max_support_size", sp.search.max_support_size);
      s.get("beam_width", sp.search.beam_width);
      s.get("expected_sparsity", sp.expected_sparsity);
      s.get("sigma2_scale", sp.sigma2_scale);
      s.get("feature_count", sp.feature_count);
    });
    r.section("model", [&](Reader& s) {
      s.get("hidden_dim", cfg.model.hidden_dim);
      s.get("learning_rate", cfg.model.learning_rate);
      s.get("epochs", cfg.model.epochs);
      s.get("batch_size", cfg.model.batch_size);
      s.get("dropout_rate", cfg.model.dropout_rate);
      s.get("gradient_clip_norm", cfg.model.gradient_clip_norm);
    });
    r.section("fusion", [&](Reader& s) {
      for (View v : kAllViews)
        s.section(view_name(v), [&](Reader& w) {
          for (Stream st : kAllStreams)
            w.get(stream_name(st), cfg.fusion.weights[static_cast<std::size_t>(v)][static_cast<std::size_t>(st)]);
        });
    });
    r.section("eval", [&](Reader& s) {
      s.get("folds", cfg.eval.folds);
      s.get("ablation", cfg.eval.ablation);
    });
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string dump_config(const PipelineConfig& cfg) {
  json fusion = json::object();
  for (View v : kAllViews)
    for (Stream s : kAllStreams) fusion[view_name(v)][stream_name(s)] = cfg.fusion.weight(v, s);
  const auto& sc = cfg.data.synthetic;
  const json j = {
      {"seed", cfg.seed},
      {"data",
       {{"dataset", cfg.data.dataset.generic_string()},
        {"out", cfg.data.out.generic_string()},
        {"synthetic",
         {{"subjects", sc.subjects},
          {"sequences_per_class", sc.sequences_per_class},
          {"frames", sc.frames},
          {"grid", sc.grid},
          {"noise", sc.noise}}}}},
      {"render",
       {{"resolution", cfg.render.resolution},
        {"profile_angle", cfg.render.profile_angle},
        {"clahe",
         {{"tiles_per_side", cfg.render.clahe.tiles_per_side},
          {"clip_limit", cfg.render.clahe.clip_limit},
          {"bins", cfg.render.clahe.bins}}}}},
      {"augment",
       {{"count", cfg.augment.count},
        {"capacity", cfg.augment.capacity},
        {"weight_mode", weight_mode_name(cfg.augment.weight_mode)}}},
      {"landmarks", json::object()},
      {"sparse",
       {{"grid", cfg.sparse.extractor.grid},
        {"orientation_bins", cfg.sparse.extractor.orientation_bins},
        {"feature_length", cfg.sparse.extractor.pad_to},
        {"overcompleteness", cfg.sparse.overcompleteness},
        {"search", mode_name(cfg.sparse.search.mode)},
        {"max_support_size", cfg.sparse.search.max_support_size},
        {"beam_width", cfg.sparse.search.beam_width},
        {"expected_sparsity", cfg.sparse.expected_sparsity},
        {"sigma2_scale", cfg.sparse.sigma2_scale},
        {"feature_count", cfg.sparse.feature_count}}},
      {"model",
       {{"hidden_dim", cfg.model.hidden_dim},
        {"learning_rate", cfg.model.learning_rate},
        {"epochs", cfg.model.epochs},
        {"batch_size", cfg.model.batch_size},
        {"dropout_rate", cfg.model.dropout_rate},
        {"gradient_clip_norm", cfg.model.gradient_clip_norm}}},
      {"fusion", fusion},
      {"eval", {{"folds", cfg.eval.folds}, {"ablation", cfg.eval.ablation}}},
  };
  return j.dump(2) + "\n";
}

std::string config_hash(const PipelineConfig& cfg) {
  const std::uint64_t h = fnv1a64(dump_config(cfg));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sparse4d
