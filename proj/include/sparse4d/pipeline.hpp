#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sparse4d/config.hpp"
#include "sparse4d/fusion_eval.hpp"
#include "sparse4d/geometry.hpp"
#include "sparse4d/image.hpp"

namespace sparse4d {

inline constexpr int kFormatVersion = 1;

/// Rendered channels of one view of one sequence, quantized to 8 bits.
struct ViewImages {
  std::vector<RasterImage> texture;  // 3 channels per frame
  std::vector<RasterImage> depth;
  std::vector<RasterImage> sharp;
};

/// Viewport covering every frame of a sequence, so the face does not rescale
/// as it deforms.
Viewport fit_sequence_viewport(const Sequence4D& seq, int resolution);

ViewImages render_view(const Sequence4D& view_seq, const RenderSection& cfg);

/// Augmentation seed of one (sequence, view). Every frame of the pair reuses
/// it so an augmented variant is a coherent sequence.
std::uint64_t augment_seed(std::uint64_t master, const std::string& sequence_id, View view);

/// Augmented images of one view, indexed [frame][variant - 1].
std::vector<std::vector<RasterImage>> augment_view(const ViewImages& images, const PipelineConfig& cfg,
                                                   const std::string& sequence_id, View view);

/// Feature extraction plus sparse MMSE coding with the configured dictionary.
class Encoder {
 public:
  explicit Encoder(const PipelineConfig& cfg);
  Eigen::VectorXd features(const RasterImage& img) const;
  SparseCode code(const Eigen::VectorXd& x) const;
  const Dictionary& dictionary() const { return coder_.dictionary(); }

 private:
  SparseSection cfg_;
  SparseCoder coder_;
};

/// Streams needed by the configured ablations and fusion weights.
std::set<Stream> needed_streams(const PipelineConfig& cfg);

/// Builds one record from an in-memory sequence.
SequenceRecord featurize_sequence(const Sequence4D& seq, const PipelineConfig& cfg, const Encoder& encoder,
                                  const std::set<Stream>& streams);

/// Dataset for a run: the configured index, or the synthetic generator.
std::vector<Sequence4D> load_or_synthesize(const PipelineConfig& cfg);
std::vector<DatasetEntry> dataset_entries(const PipelineConfig& cfg);

struct DryRunPlan {
  std::size_t sequences = 0;
  std::size_t frames = 0;       // per sequence
  std::size_t image_streams = 0;  // sequences x views x (1 + augment count)
  std::size_t models = 0;
  std::string text;
};
DryRunPlan plan_run(const PipelineConfig& cfg);

struct RunOptions {
  int jobs = 1;
  std::string command = "pipeline";
};

/// Full in-memory run: featurize, cross-validate, write reports and a run
/// manifest under `<out>/`.
CvResult cmd_pipeline(const PipelineConfig& cfg, const RunOptions& opts);

/// Writes the synthetic dataset to `out_dir`.
std::vector<DatasetEntry> cmd_synth(const PipelineConfig& cfg, const std::filesystem::path& out_dir);

// Staged path. Each stage reads the previous stage's files under `<out>/`.
void stage_render(const PipelineConfig& cfg, const RunOptions& opts);
void stage_augment(const PipelineConfig& cfg, const RunOptions& opts);
void stage_landmarks(const PipelineConfig& cfg, const RunOptions& opts);
void stage_encode(const PipelineConfig& cfg, const RunOptions& opts);
void stage_train(const PipelineConfig& cfg, const RunOptions& opts);
CvResult stage_eval(const PipelineConfig& cfg, const RunOptions& opts);

// Single-file stage variants.
void render_mesh_file(const std::filesystem::path& mesh, const std::filesystem::path& output, int resolution);
void landmarks_manifest_file(const std::filesystem::path& manifest, const std::filesystem::path& output);
/// Encodes every row of a feature CSV and reduces it to the index set, which
/// is calibrated on the file itself when `index_set` is empty.
void encode_feature_file(const PipelineConfig& cfg, const std::filesystem::path& features,
                         const std::filesystem::path& output, const std::filesystem::path& index_set);

/// Sparse codes as `frame,atom,value` rows.
std::string format_codes_csv(const std::vector<SparseCode>& codes);
std::vector<SparseCode> parse_codes_csv(const std::string& text, std::size_t frames, Eigen::Index atoms,
                                        const std::string& source);

}  // namespace sparse4d
